"""Time the numba-jitted hot kernels against the pure-numpy fallback.

Run twice, once per backend:

    WMRELAX_BACKEND=numba python benchmarks/bench_backends.py
    WMRELAX_BACKEND=numpy python benchmarks/bench_backends.py

or let the script spawn both (default, no args).
"""

import os
import subprocess
import sys
import time

import numpy as np


def _bench_current():
    import wmrelax
    from wmrelax import hot
    from wmrelax.quadrature import gauss_legendre, geom_breaks, osc_breaks

    gx, gw = gauss_legendre(12)
    px, pw = gauss_legendre(24)
    rb = np.concatenate(([0.0], geom_breaks(1e-3, 3e3, 12)))

    results = {}

    t = 1e7
    br = osc_breaks(0.0, 0.25, 2 * np.pi / t, 2)
    hot.v2_sum(t, 1.0, 2.0, 0, 0, br, gx, gw)  # warm any jit
    t0 = time.perf_counter()
    for _ in range(3):
        hot.v2_sum(t, 1.0, 2.0, 0, 0, br, gx, gw)
    results["v2_sum(t=1e7)"] = (time.perf_counter() - t0) / 3

    hot.kernel_K_sum(2.0, 0.3, rb, gx, gw, px, pw)
    t0 = time.perf_counter()
    for _ in range(20):
        hot.kernel_K_sum(2.0, 0.3, rb, gx, gw, px, pw)
    results["kernel_K(2, 0.3)"] = (time.perf_counter() - t0) / 20

    hot.d2_kernel_K_sum(1.0, 0.2, rb, gx, gw, px, pw)
    t0 = time.perf_counter()
    for _ in range(20):
        hot.d2_kernel_K_sum(1.0, 0.2, rb, gx, gw, px, pw)
    results["d2K(1, 0.2)"] = (time.perf_counter() - t0) / 20

    t0 = time.perf_counter()
    hot.v2ip_sum(1e6, 0.01, 2.0, osc_breaks(0.0, 0.25, 2 * np.pi / 1e6, 2),
                 gx, gw)
    results["v2ip_sum(t=1e6)"] = time.perf_counter() - t0

    name = wmrelax.backend_name()
    print(f"backend = {name}")
    for k, v in results.items():
        print(f"  {k:24s} {v * 1e3:10.2f} ms")
    return 0


def main():
    if os.environ.get("WMRELAX_BACKEND"):
        return _bench_current()
    for backend in ("numba", "numpy"):
        env = dict(os.environ, WMRELAX_BACKEND=backend)
        subprocess.run([sys.executable, __file__], env=env, check=True)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
