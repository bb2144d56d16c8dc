"""Time the hot kernels with and without numba.

The backend is chosen once at import from GAPSPEC_NUMBA, so each
configuration runs in a fresh subprocess and reports its timings as JSON
on stdout. The parent prints a small comparison table.

Run from the repository root:

    python3 benchmarks/bench_kernels.py
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _time_best(fn, repeat):
    # one warm call first so jit compilation never lands in a timing
    fn()
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _worker(repeat):
    import math

    import gapspec as gs
    from gapspec import wave_sim as ws

    op = gs.half_line(gs.sphere(2, 20.0))

    def shots():
        gs.find_gap_eigenvalues(op, scans=False, threshold=False)

    mu2 = gs.find_gap_eigenvalues(op, scans=False,
                                  threshold=False).eigenvalues[0].mu2
    period = 2.0 * math.pi / math.sqrt(mu2)

    def wave():
        state = ws.init_state(gs.sphere(2, 20.0), 40.0, 4096,
                              ws.GapEigenmode(mu2=mu2))
        ws.run(state, 2.0 * period)

    out = {
        "backend": "numba" if __import__("gapspec._kernels",
                                         fromlist=["USE_NUMBA"]).USE_NUMBA
        else "numpy",
        "certify eigenvalue": _time_best(shots, repeat),
        "wave leapfrog": _time_best(wave, repeat),
    }
    json.dump(out, sys.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare numba and numpy kernel timings")
    parser.add_argument("--repeat", type=int, default=3,
                        help="timed repetitions per kernel (best is kept)")
    parser.add_argument("--worker", action="store_true",
                        help=argparse.SUPPRESS)
    args = parser.parse_args(argv)
    if args.worker:
        _worker(args.repeat)
        return

    results = {}
    for flag in ("0", "1"):
        env = dict(os.environ, GAPSPEC_NUMBA=flag)
        proc = subprocess.run(
            [sys.executable, os.path.abspath(__file__), "--worker",
             "--repeat", str(args.repeat)],
            env=env, capture_output=True, text=True, check=True)
        results[flag] = json.loads(proc.stdout)

    if results["1"]["backend"] == "numpy":
        print("numba unavailable, both runs used the numpy fallback")
    names = [k for k in results["0"] if k != "backend"]
    width = max(len(n) for n in names)
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  speedup")
    for name in names:
        t0, t1 = results["0"][name], results["1"][name]
        print(f"{name:<{width}}  {t0:>9.4f}s  {t1:>9.4f}s  "
              f"{t0 / t1:>6.2f}x")


if __name__ == "__main__":
    main()
