"""Compare the compiled aggregation kernel against the numpy fallback.

Times csr_spmm on random CSR matrices of increasing size and prints a small
table.  Both backends are called directly in-process so the comparison is not
polluted by import-time dispatch; outputs are cross-checked before timing.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --rows 200000 --degree 20 --dim 64
"""

import argparse
import time

import numpy as np

from hetcf.kernels import HAVE_EXT, csr_spmm_numpy

if HAVE_EXT:
    from hetcf._spmm import csr_spmm as csr_spmm_ext


def random_csr(rng, rows, cols, avg_degree):
    counts = rng.poisson(avg_degree, size=rows)
    indptr = np.zeros(rows + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    nnz = int(indptr[-1])
    indices = rng.integers(0, cols, size=nnz, dtype=np.int64)
    data = rng.uniform(0.1, 1.0, size=nnz)
    return indptr, indices, data


def best_of(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=None,
                    help="single problem size instead of the default ladder")
    ap.add_argument("--degree", type=float, default=12.0)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    sizes = [args.rows] if args.rows else [2_000, 20_000, 100_000]

    if not HAVE_EXT:
        print("compiled kernel not available; timing the fallback only")

    header = f"{'rows':>8} {'nnz':>9} {'dim':>4} {'numpy':>10}"
    if HAVE_EXT:
        header += f" {'ext':>10} {'speedup':>8}"
    print(header)

    for rows in sizes:
        indptr, indices, data = random_csr(rng, rows, rows, args.degree)
        dense = rng.normal(size=(rows, args.dim))

        ref = csr_spmm_numpy(indptr, indices, data, dense)
        if HAVE_EXT:
            got = csr_spmm_ext(indptr, indices, data, dense)
            np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)

        t_np = best_of(lambda: csr_spmm_numpy(indptr, indices, data, dense),
                       args.repeats)
        line = f"{rows:>8} {indices.size:>9} {args.dim:>4} {t_np * 1e3:>8.2f}ms"
        if HAVE_EXT:
            t_ext = best_of(lambda: csr_spmm_ext(indptr, indices, data, dense),
                            args.repeats)
            line += f" {t_ext * 1e3:>8.2f}ms {t_np / t_ext:>7.2f}x"
        print(line)


if __name__ == "__main__":
    main()
