"""Benchmark the compiled simulator kernels against the NumPy fallback.

Runs the two hot kernels (encoder log-weights, typicality masks) and a full
seeded trial batch under each backend and prints a timing table.

    python benchmarks/bench_backends.py [--cells 4096] [--n 12] [--repeat 50]

The full-pipeline row re-imports the package in a subprocess with
SDWTC_FORCE_PY=1, since the backend is fixed at import time.
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from sdwtc.sim import _kernels_py

try:
    from sdwtc.sim import _kernels as compiled
except ImportError:
    compiled = None

_PIPELINE_SNIPPET = """
import time
from tests_helper import report_fingerprint
t0 = time.time()
report_fingerprint()
print(time.time() - t0)
"""


def time_kernels(mod, cells, n, repeat, rng):
    logq = np.log(np.maximum(rng.dirichlet(np.ones(3), size=16), 1e-12)).reshape(-1)
    uv = rng.integers(0, 16, size=(cells, n)).astype(np.int64)
    s = rng.integers(0, 3, size=n).astype(np.int64)
    q = rng.dirichlet(np.ones(16 * 3))
    y = rng.integers(0, 3, size=n).astype(np.int64)

    t0 = time.perf_counter()
    for _ in range(repeat):
        mod.cell_log_weights(logq, uv, s, 3)
    t_weights = (time.perf_counter() - t0) / repeat

    t0 = time.perf_counter()
    for _ in range(repeat):
        mod.typical_cells(uv, y, 3, q, 0.3)
    t_typ = (time.perf_counter() - t0) / repeat
    return t_weights, t_typ


def time_pipeline(force_py: bool) -> float:
    env = dict(os.environ)
    tests_dir = os.path.join(os.path.dirname(__file__), "..", "tests")
    env["PYTHONPATH"] = os.path.abspath(tests_dir)
    if force_py:
        env["SDWTC_FORCE_PY"] = "1"
    else:
        env.pop("SDWTC_FORCE_PY", None)
    out = subprocess.run(
        [sys.executable, "-c", _PIPELINE_SNIPPET], capture_output=True, text=True, env=env
    )
    if out.returncode != 0:
        raise RuntimeError(out.stderr)
    return float(out.stdout.strip().splitlines()[-1])


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--cells", type=int, default=4096)
    parser.add_argument("--n", type=int, default=12)
    parser.add_argument("--repeat", type=int, default=50)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    rows = []
    w_py, t_py = time_kernels(_kernels_py, args.cells, args.n, args.repeat, rng)
    rows.append(("numpy", w_py, t_py))
    if compiled is not None:
        w_c, t_c = time_kernels(compiled, args.cells, args.n, args.repeat, rng)
        rows.append(("cython", w_c, t_c))

    print(f"kernel timings ({args.cells} cells, n={args.n}, mean of {args.repeat}):")
    print(f"{'backend':>8} {'log-weights':>14} {'typicality':>14}")
    for name, w, t in rows:
        print(f"{name:>8} {w * 1e6:>11.1f} us {t * 1e6:>11.1f} us")
    if compiled is not None:
        print(f"speedup: log-weights x{w_py / w_c:.1f}, typicality x{t_py / t_c:.1f}")

    print("\nfull seeded trial batch (subprocess, includes import):")
    t_pipeline_py = time_pipeline(force_py=True)
    print(f"{'numpy':>8} {t_pipeline_py:>11.3f} s")
    if compiled is not None:
        t_pipeline_c = time_pipeline(force_py=False)
        print(f"{'cython':>8} {t_pipeline_c:>11.3f} s")


if __name__ == "__main__":
    main()
