"""Time the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--k 100000] [--repeat 20]

Both paths are called directly, so DIVRATE_DISABLE_NUMBA does not matter
here as long as numba is importable.
"""
import argparse
import timeit

import numpy as np

from divrate import _kernels as K
from divrate.distributions import make_worst_case_pair, rng_from_seed, sample_histogram
from divrate.estimators import EstimatorConfig, cross_weights, entropy_weights


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def _value(out):
    return np.asarray(out[0] if isinstance(out, tuple) else out, dtype=np.float64)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    if not K.HAS_NUMBA:
        raise SystemExit("numba is unavailable or disabled; nothing to compare")

    k = args.k
    pair = make_worst_case_pair(k, 5)
    rng = rng_from_seed(0)
    m, n = 2 * k, 10 * k
    M = sample_histogram(pair.p, m, rng).counts
    N = sample_histogram(pair.q, n, rng).counts
    cfg = EstimatorConfig()
    thr = cfg.c2 * np.log(k)
    wq, oq = cross_weights(k, n, cfg)
    wp = entropy_weights(k, m, cfg)
    Mf, Nf = M.astype(np.float64), N.astype(np.float64)

    cases = {
        "opt_terms": (lambda: K.np_opt_terms(M, M, N, N, m, n, thr, thr, wq, oq, wp),
                      lambda: K.nb_opt_terms(M, M, N, N, float(m), float(n), thr, thr, wq, oq, wp)),
        "aplugin": (lambda: K.np_aplugin(Mf, Nf, m, n, 1.0),
                    lambda: K.nb_aplugin(Mf, Nf, float(m), float(n), 1.0)),
        "ffpoly": (lambda: K.np_falling_factorial_poly(wq, oq, Nf),
                   lambda: K.nb_falling_factorial_poly(wq, oq, Nf)),
    }
    print(f"k={k}, best of {args.repeat}")
    print(f"{'kernel':<10} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, (f_np, f_nb) in cases.items():
        a, b = _value(f_np()), _value(f_nb())  # the first numba call compiles
        if not np.allclose(a, b, rtol=1e-10, atol=1e-10):
            raise SystemExit(f"{name}: numpy and numba disagree")
        t_np, t_nb = best_of(f_np, args.repeat), best_of(f_nb, args.repeat)
        print(f"{name:<10} {1e3 * t_np:>10.3f} {1e3 * t_nb:>10.3f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
