"""Pure-Python car-following kernel; arithmetic twin of `_speedup.pyx`.

Both implementations must perform the same floating-point operations in the
same order so a simulation is bit-identical whichever backend is active.
"""

from math import sqrt

INFINITY = float("inf")


def idm_acceleration(v, v_desired, gap, dv, a_max=2.6, b_comfort=4.5,
                     s_zero=2.5, headway=1.0, b_emergency=9.0):
    """Car-following acceleration: free-road term minus interaction term.

    `gap` is bumper-to-bumper distance to the leader (inf when unobstructed),
    `dv` the closing speed. The desired gap is floored at the standstill
    distance, and the result is clamped to [-b_emergency, a_max].
    """
    r = v / v_desired
    r2 = r * r
    a = a_max * (1.0 - r2 * r2)
    if gap != INFINITY:
        if gap < 1e-3:
            gap = 1e-3
        dynamic = v * headway + v * dv / (2.0 * sqrt(a_max * b_comfort))
        if dynamic < 0.0:
            dynamic = 0.0
        s_star = s_zero + dynamic
        q = s_star / gap
        a = a_max * (1.0 - r2 * r2 - q * q)
    if a < -b_emergency:
        a = -b_emergency
    elif a > a_max:
        a = a_max
    return a


def advance_queue(offsets, speeds, out_offsets, out_speeds, v_max, dt,
                  head_gap, head_leader_speed, head_max_advance,
                  veh_length, min_sep, a_max, b_comfort, s_zero, headway,
                  b_emergency):
    """One ballistic step for a single-edge queue (front vehicle first).

    Accelerations come from the pre-step snapshot; positions then update and
    are clamped front-to-back so no follower ends closer than min_sep behind
    its leader's rear bumper. The front vehicle never advances more than
    head_max_advance (inf when it is free to leave the edge).
    """
    n = len(offsets)
    for i in range(n):
        v = speeds[i]
        if i == 0:
            gap = head_gap
            dv = v - head_leader_speed
        else:
            gap = offsets[i - 1] - offsets[i] - veh_length
            dv = v - speeds[i - 1]
        a = idm_acceleration(v, v_max, gap, dv, a_max, b_comfort, s_zero,
                             headway, b_emergency)
        v_new = v + a * dt
        if v_new < 0.0:
            v_new = 0.0
        elif v_new > v_max:
            v_new = v_max
        out_offsets[i] = offsets[i] + 0.5 * (v + v_new) * dt
        out_speeds[i] = v_new
    if n > 0 and head_max_advance != INFINITY:
        limit = offsets[0] + head_max_advance
        if out_offsets[0] > limit:
            out_offsets[0] = limit
            out_speeds[0] = 0.0
    for i in range(1, n):
        limit = out_offsets[i - 1] - veh_length - min_sep
        if out_offsets[i] > limit:
            if limit >= offsets[i]:
                out_offsets[i] = limit
                if out_speeds[i] > out_speeds[i - 1]:
                    out_speeds[i] = out_speeds[i - 1]
            else:
                out_offsets[i] = offsets[i]
                out_speeds[i] = 0.0
