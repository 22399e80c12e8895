"""Plug-in, augmented plug-in and minimax-optimal KL divergence estimators."""
from __future__ import annotations

import functools
import math
import threading
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import _kernels
from .approx import glprime_coefficients, gl_coefficients, drop_zero_degree, remez_xlogx, rescale_gamma
from .distributions import INF, InvalidParameterError, SampleHistogram, SplitMode, SplitSamples


@dataclass(frozen=True)
class EstimatorConfig:
    c: float = 1.0
    c0: float = 1.2
    c1: float = 0.2
    c2: float = 0.1
    c0_prime: float | None = None
    c1_prime: float | None = None
    c2_prime: float | None = None
    clip_bound_f: float | None = None
    split_mode: SplitMode = SplitMode.MULTINOMIAL_REUSE

    def __post_init__(self):
        object.__setattr__(self, "split_mode", SplitMode(self.split_mode))
        for name in ("c0_prime", "c1_prime", "c2_prime"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, getattr(self, name[:2]))
        for name in ("c", "c0", "c1", "c2", "c0_prime", "c1_prime", "c2_prime"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.c2 > self.c1 or self.c2_prime > self.c1_prime:
            raise InvalidParameterError("need c2 <= c1 (and c2' <= c1')")
        if self.clip_bound_f is not None and not self.clip_bound_f >= 1:
            raise InvalidParameterError("clip bound f must be >= 1")

    def degree(self, k: int, prime=False) -> int:
        """L = max(floor(c0 log k), 1)."""
        c0 = self.c0_prime if prime else self.c0
        return max(int(math.floor(c0 * math.log(k))) if k > 1 else 0, 1)

    @classmethod
    def from_mapping(cls, values: dict) -> EstimatorConfig:
        known = {f.name for f in fields(cls)}
        out = {}
        for key, raw in values.items():
            key = key.strip()
            if key not in known:
                raise InvalidParameterError(f"unknown config key {key!r}")
            raw = str(raw).strip()
            if key == "split_mode":
                out[key] = SplitMode(raw)
            elif raw.lower() in ("", "none"):
                out[key] = None
            else:
                out[key] = float(raw)
        return cls(**out)

    @classmethod
    def from_file(cls, path) -> EstimatorConfig:
        """Parse ``key=value`` lines; '#' starts a comment."""
        values = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InvalidParameterError(f"{path}:{lineno}: expected key=value")
            key, val = line.split("=", 1)
            values[key.strip()] = val.strip()
        return cls.from_mapping(values)


@dataclass(frozen=True)
class DivergenceEstimate:
    value: float
    d1_part: float
    d2_part: float
    clipped: bool
    poly_branch_p: int
    plugin_branch_p: int
    poly_branch_q: int
    plugin_branch_q: int

    @property
    def raw(self) -> float:
        return self.d1_part - self.d2_part

    @property
    def branch_counts(self):
        return ((self.poly_branch_p, self.plugin_branch_p),
                (self.poly_branch_q, self.plugin_branch_q))


def _check_alphabets(*hists):
    sizes = {h.alphabet_size for h in hists}
    if len(sizes) != 1:
        raise InvalidParameterError(f"histograms have different alphabet sizes: {sorted(sizes)}")
    return sizes.pop()


# ---------------------------------------------------------------------------
# plug-in estimators
# ---------------------------------------------------------------------------


def plugin_kl(M: SampleHistogram, N: SampleHistogram) -> float:
    """D(P_hat || Q_hat); ``inf`` when some bin has M_i > 0 = N_i."""
    _check_alphabets(M, N)
    m, n = M.size, N.size
    if m < 1 or n < 1:
        raise InvalidParameterError("plug-in needs non-empty samples")
    mc, nc = M.counts, N.counts
    s = mc > 0
    if np.any(nc[s] == 0):
        return INF
    ph = mc[s] / m
    return math.fsum(ph * np.log(ph / (nc[s] / n)))


def aplugin_kl(M: SampleHistogram, N: SampleHistogram, config: EstimatorConfig | None = None) -> float:
    """Plug-in with the Q side smoothed to (N_i + c) / (n + k c)."""
    config = config or EstimatorConfig()
    _check_alphabets(M, N)
    if M.size < 1:
        raise InvalidParameterError("augmented plug-in needs m >= 1")
    return float(_kernels.aplugin(M.counts, N.counts, M.size, N.size, config.c))


def plugin_entropy(M: SampleHistogram) -> float:
    if M.size < 1:
        raise InvalidParameterError("plug-in entropy needs m >= 1")
    ph = M.counts[M.counts > 0] / M.size
    return max(0.0, -math.fsum(ph * np.log(ph)))


# ---------------------------------------------------------------------------
# minimax-optimal estimator
# ---------------------------------------------------------------------------

_cache_lock = threading.Lock()


@functools.lru_cache(maxsize=256)
def _cross_weights(k, n, L, c1):
    base = remez_xlogx(L)
    fc = gl_coefficients(drop_zero_degree(rescale_gamma(base, n, k, c1)), n, k, c1)
    return fc.weights, fc.offset


@functools.lru_cache(maxsize=256)
def _entropy_weights(k, m, L, c1p):
    return glprime_coefficients(remez_xlogx(L), m, k, c1p).weights


def cross_weights(k, n, config: EstimatorConfig):
    """Cached g_L weights and offset for the P log Q side."""
    with _cache_lock:
        return _cross_weights(k, n, config.degree(k), config.c1)


def entropy_weights(k, m, config: EstimatorConfig):
    with _cache_lock:
        return _entropy_weights(k, m, config.degree(k, prime=True), config.c1_prime)


_EMPTY = np.zeros(1)


def _opt_raw(M, Msel, N, Nsel, m, n, k, config):
    """Returns (d1, d2, poly_p, poly_q) for aligned count vectors."""
    thr_q = config.c2 * math.log(k)
    thr_p = config.c2_prime * math.log(k)
    Ma = np.asarray(M)
    # weights are only needed when some bin with M_i > 0 lands in a polynomial branch
    need_q = bool(np.any((np.asarray(Nsel) <= thr_q) & (Ma > 0)))
    need_p = bool(np.any((np.asarray(Msel) <= thr_p) & (Ma > 0)))
    wq, oq = cross_weights(k, n, config) if need_q else (_EMPTY, 0.0)
    wp = entropy_weights(k, m, config) if need_p else _EMPTY
    d1, d2, pp, pq, overflow = _kernels.opt_terms(M, Msel, N, Nsel, m, n, thr_q, thr_p, wq, oq, wp)
    if overflow:
        raise OverflowError("falling-factorial evaluation overflowed in the polynomial branch")
    return d1, d2, pp, pq


def opt_cross_part(M: SampleHistogram, N: SampleHistogram, N_select: SampleHistogram | None = None,
                   config: EstimatorConfig | None = None, n: int | None = None, k: int | None = None):
    """Estimate of sum_i P_i log Q_i. Returns ``(value, poly_branch, plugin_branch)``."""
    config = config or EstimatorConfig()
    N_select = N if N_select is None else N_select
    kk = _check_alphabets(M, N, N_select)
    k = kk if k is None else k
    n = N.size if n is None else n
    if not M.counts.any():
        # every term carries M_i / m
        pq = int(np.count_nonzero(N_select.counts <= config.c2 * math.log(k)))
        return 0.0, pq, kk - pq
    _, d2, _, pq = _opt_raw(M.counts, M.counts, N.counts, N_select.counts, M.size, n, k, config)
    return d2, pq, kk - pq


def opt_entropy_part(M: SampleHistogram, M_select: SampleHistogram | None = None,
                     config: EstimatorConfig | None = None, m: int | None = None, k: int | None = None):
    """Estimate of sum_i P_i log P_i (minus the entropy). Returns ``(value, poly, plugin)``."""
    config = config or EstimatorConfig()
    M_select = M if M_select is None else M_select
    kk = _check_alphabets(M, M_select)
    k = kk if k is None else k
    m = M.size if m is None else m
    thr_p = config.c2_prime * math.log(k)
    need_p = bool(np.any((M_select.counts <= thr_p) & (M.counts > 0)))
    wp = entropy_weights(k, m, config) if need_p else _EMPTY
    # dummy Q side: a negative threshold sends every bin to the (discarded) plug-in branch
    ones = np.ones(kk, dtype=np.int64)
    d1, _, pp, _, overflow = _kernels.opt_terms(M.counts, M_select.counts, ones, ones,
                                                m, 1, -1.0, thr_p, _EMPTY, 0.0, wp)
    if overflow:
        raise OverflowError("falling-factorial evaluation overflowed in the polynomial branch")
    return d1, pp, kk - pp


def _as_split(x):
    if isinstance(x, SplitSamples):
        return x
    return SplitSamples.reuse(x)


def opt_kl(P_samples, Q_samples, config: EstimatorConfig | None = None, k: int | None = None
           ) -> DivergenceEstimate:
    """Minimax-optimal estimate of D(P||Q).

    ``P_samples`` and ``Q_samples`` are either histograms (the estimation
    sample doubles as the branch selector) or :class:`SplitSamples`.
    """
    config = config or EstimatorConfig()
    ps, qs = _as_split(P_samples), _as_split(Q_samples)
    kk = _check_alphabets(ps.first, ps.second, qs.first, qs.second)
    k = kk if k is None else k
    m, n = ps.first.size, qs.first.size
    if m < 1 or n < 1:
        raise InvalidParameterError("optimal estimator needs m, n >= 1")
    d1, d2, pp, pq = _opt_raw(ps.first.counts, ps.second.counts, qs.first.counts, qs.second.counts,
                              m, n, k, config)
    value = d1 - d2
    clipped = False
    if config.clip_bound_f is not None:
        hi = math.log(config.clip_bound_f)
        if value < 0.0 or value > hi:
            clipped = True
            value = min(max(value, 0.0), hi)
    return DivergenceEstimate(value, d1, d2, clipped, pp, kk - pp, pq, kk - pq)


def clip(value: float, f: float) -> float:
    return min(max(value, 0.0), math.log(f))


def with_clipping(config: EstimatorConfig, f: float | None) -> EstimatorConfig:
    return replace(config, clip_bound_f=f)


METHODS = ("plugin", "aplugin", "opt")


def estimate(method: str, M, N, config: EstimatorConfig | None = None, k=None) -> float:
    """Dispatch by method name; returns the point estimate only."""
    config = config or EstimatorConfig()
    if method == "plugin":
        return plugin_kl(M, N)
    if method == "aplugin":
        return aplugin_kl(M, N, config)
    if method == "opt":
        return opt_kl(M, N, config, k).value
    raise InvalidParameterError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
