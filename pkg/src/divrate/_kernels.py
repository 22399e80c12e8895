"""Hot per-bin kernels, compiled with numba when available.

Set ``DIVRATE_DISABLE_NUMBA=1`` to force the pure-numpy implementations.
Both paths compute identical quantities; ``benchmarks/bench_kernels.py``
compares their speed.
"""
import os

import numpy as np

_DISABLED = os.environ.get("DIVRATE_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def np_falling_factorial_poly(weights, offset, counts):
    """Evaluate ``sum_r weights[r] * (x)_r + offset`` for every x in counts.

    Returns the values and a boolean flag that is True on overflow.
    """
    x = np.asarray(counts, dtype=np.float64)
    out = np.full(x.shape, float(offset))
    ff = np.ones_like(x)
    with np.errstate(over="ignore", invalid="ignore"):
        for r in range(len(weights)):
            if r > 0:
                ff = ff * np.maximum(x - (r - 1), 0.0)
            w = weights[r]
            if w != 0.0:
                out = out + w * ff
    overflow = not np.all(np.isfinite(out))
    return out, overflow


def np_opt_terms(M, Msel, N, Nsel, m, n, thr_q, thr_p, wq, oq, wp):
    """Per-side sums of the minimax-optimal divergence estimator.

    Returns ``(d1, d2, poly_p, poly_q, overflow)`` where d1 estimates
    sum P log P and d2 estimates sum P log Q.
    """
    M = np.asarray(M, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    Msel = np.asarray(Msel, dtype=np.float64)
    Nsel = np.asarray(Nsel, dtype=np.float64)
    ph = M / m
    poly_q = Nsel <= thr_q
    poly_p = Msel <= thr_p

    overflow = False
    d2_terms = np.zeros_like(ph)
    plug_q = ~poly_q
    d2_terms[plug_q] = ph[plug_q] * (np.log((N[plug_q] + 1.0) / n) - 0.5 / (N[plug_q] + 1.0))
    use = poly_q & (M > 0)
    if use.any():
        g, of = np_falling_factorial_poly(wq, oq, N[use])
        overflow |= of
        d2_terms[use] = ph[use] * g

    d1_terms = np.zeros_like(ph)
    plug_p = ~poly_p
    with np.errstate(divide="ignore", invalid="ignore"):
        xlogx = np.where(ph > 0, ph * np.log(ph), 0.0)
    d1_terms[plug_p] = xlogx[plug_p] - 0.5 / m
    use = poly_p & (M > 0)
    if use.any():
        g, of = np_falling_factorial_poly(wp, 0.0, M[use])
        overflow |= of
        d1_terms[use] = g

    return (float(np.sum(d1_terms)), float(np.sum(d2_terms)),
            int(poly_p.sum()), int(poly_q.sum()), overflow)


def np_aplugin(M, N, m, n, c):
    M = np.asarray(M, dtype=np.float64)
    N = np.asarray(N, dtype=np.float64)
    k = M.shape[-1]
    ph = M / m
    qh = (N + c) / (n + k * c)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(ph > 0, ph * np.log(ph / qh), 0.0)
    return t.sum(axis=-1)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def _nb_ffpoly_scalar(weights, offset, x):
        out = offset
        ff = 1.0
        for r in range(weights.shape[0]):
            if r > 0:
                d = x - (r - 1)
                if d <= 0.0:
                    break
                ff *= d
            out += weights[r] * ff
        return out

    @njit(cache=True)
    def nb_falling_factorial_poly(weights, offset, counts):
        x = counts.astype(np.float64)
        out = np.empty(x.shape[0])
        overflow = False
        for i in range(x.shape[0]):
            v = _nb_ffpoly_scalar(weights, offset, x[i])
            if not np.isfinite(v):
                overflow = True
            out[i] = v
        return out, overflow

    @njit(cache=True)
    def nb_opt_terms(M, Msel, N, Nsel, m, n, thr_q, thr_p, wq, oq, wp):
        d1 = 0.0
        d2 = 0.0
        poly_p = 0
        poly_q = 0
        overflow = False
        for i in range(M.shape[0]):
            mi = float(M[i])
            ni = float(N[i])
            ph = mi / m
            if Nsel[i] <= thr_q:
                poly_q += 1
                if mi > 0.0:
                    g = _nb_ffpoly_scalar(wq, oq, ni)
                    if not np.isfinite(g):
                        overflow = True
                    d2 += ph * g
            else:
                d2 += ph * (np.log((ni + 1.0) / n) - 0.5 / (ni + 1.0))
            if Msel[i] <= thr_p:
                poly_p += 1
                if mi > 0.0:
                    g = _nb_ffpoly_scalar(wp, 0.0, mi)
                    if not np.isfinite(g):
                        overflow = True
                    d1 += g
            else:
                if ph > 0.0:
                    d1 += ph * np.log(ph)
                d1 -= 0.5 / m
        return d1, d2, poly_p, poly_q, overflow

    @njit(cache=True)
    def nb_aplugin(M, N, m, n, c):
        k = M.shape[0]
        denom = n + k * c
        total = 0.0
        for i in range(k):
            if M[i] > 0:
                ph = M[i] / m
                total += ph * np.log(ph / ((N[i] + c) / denom))
        return total


def falling_factorial_poly(weights, offset, counts):
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    counts = np.atleast_1d(np.asarray(counts, dtype=np.float64))
    if HAS_NUMBA:
        return nb_falling_factorial_poly(weights, float(offset), counts)
    return np_falling_factorial_poly(weights, offset, counts)


def opt_terms(M, Msel, N, Nsel, m, n, thr_q, thr_p, wq, oq, wp):
    if HAS_NUMBA:
        d1, d2, pp, pq, of = nb_opt_terms(
            np.ascontiguousarray(M, dtype=np.int64), np.ascontiguousarray(Msel, dtype=np.int64),
            np.ascontiguousarray(N, dtype=np.int64), np.ascontiguousarray(Nsel, dtype=np.int64),
            float(m), float(n), float(thr_q), float(thr_p),
            np.ascontiguousarray(wq, dtype=np.float64), float(oq),
            np.ascontiguousarray(wp, dtype=np.float64))
        return float(d1), float(d2), int(pp), int(pq), bool(of)
    return np_opt_terms(M, Msel, N, Nsel, m, n, thr_q, thr_p, wq, oq, wp)


def aplugin(M, N, m, n, c):
    if HAS_NUMBA and np.ndim(M) == 1:
        return float(nb_aplugin(np.ascontiguousarray(M, dtype=np.float64),
                                np.ascontiguousarray(N, dtype=np.float64),
                                float(m), float(n), float(c)))
    return np_aplugin(M, N, m, n, c)
