"""Benchmark the numba kernels against the pure-numpy fallback.

Run from the repo root:

    python3 benchmarks/bench_kernels.py           # full sizes
    python3 benchmarks/bench_kernels.py --quick   # smaller sizes

The dispatch backend follows INVCLT_NO_NUMBA; this script times both
implementations explicitly, so it reports a comparison regardless of the
flag (numba rows are skipped when numba is unavailable).
"""

import argparse
import time

import numpy as np

from invclt import _kernels, rng as rngmod
from invclt.arrays import standardize, validate_and_symmetrize
from invclt.coupling import square_bias_table
from invclt.involutions import draw_choices, involution_matrix


def timeit(fn, *args, repeat=5):
    fn(*args)  # warm-up (and JIT compile for the numba path)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(name, numba_fn, numpy_fn, *args):
    t_np = timeit(numpy_fn, *args)
    if _kernels._HAVE_NUMBA:
        t_nb = timeit(numba_fn, *args)
        print(f"{name:<28} numba {t_nb*1e3:9.2f} ms   numpy {t_np*1e3:9.2f} ms   "
              f"speedup {t_np/t_nb:6.1f}x")
    else:
        print(f"{name:<28} numba       n/a      numpy {t_np*1e3:9.2f} ms")


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args()

    m = 20_000 if args.quick else 200_000
    n = 64 if args.quick else 128
    gen = rngmod.derive_stream(1, 1)
    choices = draw_choices(n, m, gen)
    print(f"match_pairs: {m} draws at n={n}")
    bench("match_pairs", _kernels.match_pairs, _kernels.match_pairs_fallback, choices, n)

    D = standardize(validate_and_symmetrize(gen.standard_normal((n, n)), symmetrize=True))
    images = _kernels.match_pairs_fallback(choices, n)
    bench("y_batch", _kernels.y_batch, _kernels.y_batch_fallback, D.entries, images)

    quads = np.stack(
        [gen.permutation(n)[:4] for _ in range(m)], axis=0
    ).astype(np.int64)
    bench("case_terms", _kernels.case_terms, _kernels.case_terms_fallback,
          D.entries, images, quads)

    ng = 8 if args.quick else 10
    gen2 = rngmod.derive_stream(2, 2)
    Dg = standardize(
        validate_and_symmetrize(gen2.standard_normal((ng, ng)), symmetrize=True)
    )
    qs, probs = square_bias_table(Dg).support()
    invs = involution_matrix(ng)
    print(f"exact_gap: {invs.shape[0]} involutions x {qs.shape[0]} quadruples (n={ng})")
    bench("exact_gap", _kernels.exact_gap, _kernels.exact_gap_fallback,
          Dg.entries, invs, qs, probs)


if __name__ == "__main__":
    main()
