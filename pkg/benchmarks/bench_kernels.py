"""Benchmark the counting kernels: numba backend vs. pure numpy.

The backend is chosen at import time from the DEFLAB_PURE_NUMPY
environment flag, so the comparison spawns one subprocess per backend
(each warms the JIT before timing) and merges the results into a table.

    python benchmarks/bench_kernels.py            # compare both backends
    python benchmarks/bench_kernels.py --json     # machine-readable output
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

WORKLOADS = [
    ("prime_flags(10^7)", "prime_flags", (10**7,)),
    ("splitting_counts(5, 10^6)", "splitting_counts", (5, 10**6)),
    ("cyclic_degree_one_counts(5, 11, 10^6)", "cyclic_degree_one_counts", (5, 11, 10**6)),
    ("curve_point_count(0, -2, 99991)", "curve_point_count", (0, -2, 99991)),
]

REPEATS = 3


def run_backend() -> dict:
    """Time every workload on the backend selected by the environment."""
    from deflab import kernels

    results = {"backend": kernels.BACKEND, "timings": {}}
    for label, fn_name, fn_args in WORKLOADS:
        fn = getattr(kernels, fn_name)
        fn(*fn_args)  # warm-up: triggers JIT compilation on the numba path
        best = min(
            _timed(fn, fn_args) for _ in range(REPEATS)
        )
        results["timings"][label] = best
    return results


def _timed(fn, fn_args) -> float:
    t0 = time.perf_counter()
    fn(*fn_args)
    return time.perf_counter() - t0


def _spawn(pure_numpy: bool) -> dict:
    env = dict(os.environ)
    env["DEFLAB_PURE_NUMPY"] = "1" if pure_numpy else "0"
    out = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--single"],
        env=env,
        capture_output=True,
        text=True,
        check=True,
    )
    return json.loads(out.stdout)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--single", action="store_true",
                    help="time the current backend only (internal)")
    ap.add_argument("--json", action="store_true")
    args = ap.parse_args()

    if args.single:
        print(json.dumps(run_backend()))
        return 0

    fast = _spawn(pure_numpy=False)
    slow = _spawn(pure_numpy=True)
    rows = []
    for label, _, _ in WORKLOADS:
        a, b = fast["timings"][label], slow["timings"][label]
        rows.append({
            "workload": label,
            fast["backend"]: round(a, 4),
            "numpy": round(b, 4),
            "speedup": round(b / a, 2) if a > 0 else float("inf"),
        })
    if args.json:
        print(json.dumps({"primary_backend": fast["backend"], "rows": rows},
                         indent=2))
        return 0
    if fast["backend"] == "numpy":
        print("numba unavailable; both runs used the numpy backend\n")
    width = max(len(r["workload"]) for r in rows)
    print(f"{'workload':<{width}}  {fast['backend']:>9}  {'numpy':>9}  speedup")
    for r in rows:
        print(f"{r['workload']:<{width}}  {r[fast['backend']]:>9.4f}  "
              f"{r['numpy']:>9.4f}  {r['speedup']:>6.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
