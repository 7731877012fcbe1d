"""Compare the numba and numpy backends on the hot kernels.

    python3 benchmarks/bench_accel.py [--repeat 5]

Timings exclude the first (compiling) call.  Outputs of both backends are
checked for agreement before timing.
"""
import argparse
import time

import numpy as np

from coherent_rbf import _accel
from coherent_rbf.coherent import level_segments, sample_function
from coherent_rbf.domain import cylinder, regular_grid, torus
from coherent_rbf.kernels import gradient_matrix, laplacian_matrix, value_matrix


def cases():
    T, C = torus(), cylinder()
    Y = regular_grid(T, (40, 40))
    Yc = regular_grid(C, (50, 50), 1e-6)
    g = sample_function(T, lambda x, y: np.sin(x) * np.cos(y) + 0.3 * np.sin(3 * x + y), 200)
    return {
        "value_matrix 1600x1600": lambda: value_matrix("psi64", 0.4, Y, Y, T),
        "laplacian_matrix 1600x1600": lambda: laplacian_matrix("psi64", 0.4, Y, Y, T),
        "gradient_matrix 100x2500 (cyl)": lambda: gradient_matrix("psi64", 2.0, Yc[:100], Yc, C),
        "marching squares 200x200 x 20 levels": lambda: [level_segments(g, v)
                                                         for v in np.linspace(-1, 1, 22)[1:-1]],
    }


def timed(fn, repeat):
    fn()
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def same(a, b):
    if isinstance(a, list):
        return all(same(x, y) for x, y in zip(a, b))
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) or np.allclose(x, y, rtol=0, atol=1e-12) for x, y in zip(a, b))
    return np.allclose(a, b, rtol=0, atol=1e-12)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"{'case':40s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        _accel.set_backend("numpy")
        ref = fn()
        t_np = timed(fn, args.repeat)
        _accel.set_backend("numba")
        out = fn()
        t_nb = timed(fn, args.repeat)
        ok = "" if same(ref, out) else "  MISMATCH"
        print(f"{name:40s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}{ok}")


if __name__ == "__main__":
    main()
