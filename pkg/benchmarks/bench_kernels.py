"""Compare the compiled and numpy Jacobi eigensolvers on batches of Hermitian
real embeddings (the shape used by every Levi sweep).

    python benchmarks/bench_kernels.py [--batch 10000] [--dim 4] [--repeat 5]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from pscvx.kernels import available_backends


def hermitian_embeddings(batch, dim, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(batch, dim, dim)) + 1j * rng.normal(size=(batch, dim, dim))
    h = 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))
    a, b = h.real, h.imag
    return np.block([[a, -b], [b, a]])


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--batch", type=int, default=10_000)
    p.add_argument("--dim", type=int, default=2, help="complex dimension of the forms")
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args(argv)

    a = hermitian_embeddings(args.batch, args.dim)
    ref = np.linalg.eigvalsh(a)
    backends = available_backends()
    print(f"batch={args.batch} real size={2 * args.dim}")
    timings = {}
    for name, mod in backends.items():
        w, _, sweeps = mod.jacobi_eigh_batch(a)
        err = float(np.max(np.abs(np.sort(w, axis=-1) - ref)))
        timings[name] = best_of(lambda: mod.jacobi_eigh_batch(a), args.repeat)
        print(f"{name:>8}: {timings[name] * 1e3:9.2f} ms  max |w - eigvalsh| = {err:.1e}  "
              f"max sweeps = {int(np.max(sweeps))}")
    if "cython" in timings:
        print(f"speedup: {timings['python'] / timings['cython']:.1f}x")
    else:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
