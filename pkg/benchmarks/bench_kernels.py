"""Compare the compiled kernel backend against the pure-numpy fallback.

Run after installing the package:

    python benchmarks/bench_kernels.py

Times the fused per-mode step kernels and the lattice Green-function sum at
representative problem sizes and prints the speedup of the compiled
extension (if it built).
"""

import time

import numpy as np

from sg2d import _kernels_py

try:
    from sg2d import _fused
except ImportError:
    _fused = None


def timeit(fn, repeats):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(repeats):
            fn()
        best = min(best, (time.perf_counter() - t0) / repeats)
    return best


def bench_wave(impl, m, repeats=200):
    rng = np.random.default_rng(0)

    def cplx():
        return rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))

    u, v, f, nu, nv = cplx(), cplx(), cplx(), cplx(), cplx()
    tabs = [np.ascontiguousarray(rng.standard_normal((m, m))) for _ in range(5)]
    ou = np.empty((m, m), complex)
    ov = np.empty((m, m), complex)
    return timeit(lambda: impl.wave_step(u, v, *tabs, f, nu, nv, ou, ov), repeats)


def bench_heat(impl, m, repeats=200):
    rng = np.random.default_rng(0)
    u = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    f = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    nu = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    a = np.ascontiguousarray(rng.standard_normal((m, m)))
    w = np.ascontiguousarray(rng.standard_normal((m, m)))
    out = np.empty((m, m), complex)
    return timeit(lambda: impl.heat_step(u, a, w, f, nu, out), repeats)


def bench_lattice(impl, cutoff, npts=64, repeats=3):
    rng = np.random.default_rng(0)
    span = np.arange(-cutoff, cutoff + 1)
    n1, n2 = np.meshgrid(span, span, indexing="ij")
    n1 = n1.ravel().astype(float)
    n2 = n2.ravel().astype(float)
    w = rng.standard_normal(n1.size)
    x1 = rng.uniform(0, 2 * np.pi, npts)
    x2 = rng.uniform(0, 2 * np.pi, npts)
    return timeit(lambda: impl.lattice_cos_sum(x1, x2, n1, n2, w), repeats)


def main():
    rows = []
    for m in (32, 64, 128):
        rows.append((f"wave_step M={m}", bench_wave(_kernels_py, m),
                     bench_wave(_fused, m) if _fused else None))
        rows.append((f"heat_step M={m}", bench_heat(_kernels_py, m),
                     bench_heat(_fused, m) if _fused else None))
    for n in (32, 128):
        rows.append((f"lattice N={n} (64 pts)", bench_lattice(_kernels_py, n),
                     bench_lattice(_fused, n) if _fused else None))
    print(f"{'kernel':26s} {'python':>12s} {'compiled':>12s} {'speedup':>8s}")
    for name, tp, tc in rows:
        if tc is None:
            print(f"{name:26s} {tp * 1e6:10.1f}us {'n/a':>12s} {'n/a':>8s}")
        else:
            print(f"{name:26s} {tp * 1e6:10.1f}us {tc * 1e6:10.1f}us {tp / tc:7.2f}x")
    if _fused is None:
        print("\ncompiled extension not available; showing fallback only")


if __name__ == "__main__":
    main()
