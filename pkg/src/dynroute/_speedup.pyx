# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled car-following kernel; arithmetic twin of `_kernels_py.py`.

Operation order matches the pure-Python module exactly (no fast-math, no
reassociation) so results are bit-identical across backends. The queue update
works directly on Python lists: at simulation queue sizes the list boundary
is cheaper than converting through arrays.
"""

from libc.math cimport INFINITY, sqrt


cdef inline double _idm(double v, double v_desired, double gap, double dv,
                        double a_max, double b_comfort, double s_zero,
                        double headway, double b_emergency) nogil:
    cdef double r = v / v_desired
    cdef double r2 = r * r
    cdef double a = a_max * (1.0 - r2 * r2)
    cdef double dynamic, s_star, q
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


cpdef double idm_acceleration(double v, double v_desired, double gap, double dv,
                              double a_max=2.6, double b_comfort=4.5,
                              double s_zero=2.5, double headway=1.0,
                              double b_emergency=9.0):
    """Car-following acceleration; see the pure-Python twin for semantics."""
    return _idm(v, v_desired, gap, dv, a_max, b_comfort, s_zero, headway,
                b_emergency)


cpdef advance_queue(list offsets, list speeds,
                    list out_offsets, list out_speeds,
                    double v_max, double dt,
                    double head_gap, double head_leader_speed,
                    double head_max_advance,
                    double veh_length, double min_sep,
                    double a_max, double b_comfort, double s_zero,
                    double headway, double b_emergency):
    """One ballistic step for a single-edge queue; twin of the pure kernel."""
    cdef Py_ssize_t n = len(offsets)
    cdef Py_ssize_t i
    cdef double v, gap, dv, a, v_new, limit
    for i in range(n):
        v = <double>speeds[i]
        if i == 0:
            gap = head_gap
            dv = v - head_leader_speed
        else:
            gap = <double>offsets[i - 1] - <double>offsets[i] - veh_length
            dv = v - <double>speeds[i - 1]
        a = _idm(v, v_max, gap, dv, a_max, b_comfort, s_zero, headway,
                 b_emergency)
        v_new = v + a * dt
        if v_new < 0.0:
            v_new = 0.0
        elif v_new > v_max:
            v_new = v_max
        out_offsets[i] = <double>offsets[i] + 0.5 * (v + v_new) * dt
        out_speeds[i] = v_new
    if n > 0 and head_max_advance != INFINITY:
        limit = <double>offsets[0] + head_max_advance
        if <double>out_offsets[0] > limit:
            out_offsets[0] = limit
            out_speeds[0] = 0.0
    for i in range(1, n):
        limit = <double>out_offsets[i - 1] - veh_length - min_sep
        if <double>out_offsets[i] > limit:
            if limit >= <double>offsets[i]:
                out_offsets[i] = limit
                if <double>out_speeds[i] > <double>out_speeds[i - 1]:
                    out_speeds[i] = out_speeds[i - 1]
            else:
                out_offsets[i] = offsets[i]
                out_speeds[i] = 0.0
