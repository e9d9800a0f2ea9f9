"""Benchmark: compiled car-following kernel vs the pure-Python twin.

Times the per-edge queue update on synthetic queues of several sizes, then an
end-to-end congested simulation under each backend (subprocess with
DYNROUTE_PURE toggled). Run from the repo root:

    python benchmarks/bench_kernels.py
"""

import os
import random
import subprocess
import sys
import time

from dynroute import _kernels_py

try:
    from dynroute import _speedup
except ImportError:
    _speedup = None

IDM = (2.6, 4.5, 2.5, 1.0, 9.0)
INF = float("inf")


def synth_queue(rng, n):
    offsets = []
    pos = 50.0 * n
    for _ in range(n):
        offsets.append(pos)
        pos -= rng.uniform(8.0, 40.0)
    speeds = [rng.uniform(0.0, 15.0) for _ in range(n)]
    return offsets, speeds


def bench_pure(queues, reps):
    start = time.perf_counter()
    for _ in range(reps):
        for offsets, speeds in queues:
            n = len(offsets)
            out_o, out_s = [0.0] * n, [0.0] * n
            _kernels_py.advance_queue(offsets, speeds, out_o, out_s, 15.0, 1.0,
                                      INF, 0.0, INF, 5.0, 0.1, *IDM)
    return time.perf_counter() - start


def bench_compiled(queues, reps):
    start = time.perf_counter()
    for _ in range(reps):
        for offsets, speeds in queues:
            n = len(offsets)
            out_o, out_s = [0.0] * n, [0.0] * n
            _speedup.advance_queue(offsets, speeds, out_o, out_s, 15.0, 1.0,
                                   INF, 0.0, INF, 5.0, 0.1, *IDM)
    return time.perf_counter() - start


def bench_end_to_end():
    script = (
        "from dynroute.sim import ScenarioConfig\n"
        "from dynroute import metrics, kernels\n"
        "cfg = ScenarioConfig(network={'generator': 'manhattan', 'rows': 4, 'cols': 4},\n"
        "                     vehicles=150, rate=1.0,\n"
        "                     od={'start_edge': 'right0D0', 'end_edge': 'A2left2'},\n"
        "                     penetration_rate=0.1, seed=1, max_steps=7200,\n"
        "                     method='dynamicroutegpt', reanchor_global=True)\n"
        "import time; t0 = time.perf_counter()\n"
        "metrics.run_scenario(cfg)\n"
        "print(f'{kernels.BACKEND}: {time.perf_counter() - t0:.3f}s')\n"
    )
    for pure in ("0", "1"):
        env = dict(os.environ, DYNROUTE_PURE=pure)
        out = subprocess.run([sys.executable, "-c", script], env=env,
                             capture_output=True, text=True, check=True)
        print("  " + out.stdout.strip())


def main():
    rng = random.Random(99)
    print("queue-update kernel (vehicle-steps per second):")
    for n in (4, 16, 64, 256):
        queues = [synth_queue(rng, n) for _ in range(32)]
        reps = max(1, 20000 // (n * len(queues)) * 10)
        updates = reps * len(queues) * n
        t_py = bench_pure(queues, reps)
        line = f"  n={n:4d}: python {updates / t_py:12.0f}/s"
        if _speedup is not None:
            t_c = bench_compiled(queues, reps)
            line += f"   compiled {updates / t_c:12.0f}/s   speedup x{t_py / t_c:5.1f}"
        else:
            line += "   (compiled kernel not built)"
        print(line)
    print("end-to-end congested scenario (150 vehicles):")
    bench_end_to_end()


if __name__ == "__main__":
    main()
