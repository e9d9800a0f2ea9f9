"""Kernel backend selection: the compiled extension when importable, else the
pure-Python twin. Set DYNROUTE_PURE=1 to force the fallback.

Both backends produce bit-identical results; the compiled one is only faster.
`benchmarks/bench_kernels.py` compares them.
"""

from __future__ import annotations

import os

from . import _kernels_py

_compiled = None
if os.environ.get("DYNROUTE_PURE") != "1":
    try:
        from . import _speedup as _compiled_mod

        _compiled = _compiled_mod
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

INFINITY = _kernels_py.INFINITY


def idm_acceleration(v, v_desired, gap, dv, a_max=2.6, b_comfort=4.5,
                     s_zero=2.5, headway=1.0, b_emergency=9.0):
    """IDM acceleration via the active backend."""
    impl = _compiled.idm_acceleration if _compiled else _kernels_py.idm_acceleration
    return impl(v, v_desired, gap, dv, a_max, b_comfort, s_zero, headway,
                b_emergency)


def advance_queue(offsets, speeds, v_max, dt, head_gap, head_leader_speed,
                  head_max_advance, veh_length, min_sep, a_max, b_comfort,
                  s_zero, headway, b_emergency):
    """Advance one edge queue; returns (new_offsets, new_speeds) as lists."""
    n = len(offsets)
    out_off = [0.0] * n
    out_sp = [0.0] * n
    impl = _compiled.advance_queue if _compiled else _kernels_py.advance_queue
    impl(offsets, speeds, out_off, out_sp, v_max, dt, head_gap,
         head_leader_speed, head_max_advance, veh_length, min_sep, a_max,
         b_comfort, s_zero, headway, b_emergency)
    return out_off, out_sp
