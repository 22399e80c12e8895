"""Exact moments of estimators by enumeration, and evaluable risk-rate formulas.

Everything here is independent of the sampling code: expectations come
from explicit probability mass functions, never from random draws.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from itertools import combinations_with_replacement

import numpy as np
from scipy.special import gammaln
from scipy.stats import binom, poisson

from .approx import FactorialCoeffs
from .distributions import BoundedRatioPair, InvalidParameterError, SampleHistogram, kl_divergence
from .estimators import EstimatorConfig, aplugin_kl, cross_weights, entropy_weights, opt_kl, plugin_kl

TAIL = 1e-14
MAX_OUTCOME_PAIRS = 10**7


class EnumerationTooLarge(ValueError):
    def __init__(self, outcomes):
        super().__init__(f"enumeration needs {outcomes:.3g} outcome pairs (limit {MAX_OUTCOME_PAIRS:.0e})")
        self.outcomes = outcomes


class RateKind(str, Enum):
    APLUGIN = "aplugin_rate"
    MINIMAX = "minimax_rate"


@dataclass(frozen=True)
class RiskRate:
    bias_sq_term: float
    variance_m_term: float
    variance_n_term: float
    kind: RateKind

    @property
    def total(self) -> float:
        return self.bias_sq_term + self.variance_m_term + self.variance_n_term


def _check_positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise InvalidParameterError(f"{name} must be positive, got {v!r}")


def rate_aplugin(k, m, n, f, c_bias=1.0, c_m=1.0, c_n=1.0) -> RiskRate:
    """(k f/n + k/m)^2 + log^2 f / m + f / n, each term scaled by its constant."""
    _check_positive(k=k, m=m, n=n, f=f)
    return RiskRate(c_bias * (k * f / n + k / m) ** 2, c_m * math.log(f) ** 2 / m, c_n * f / n,
                    RateKind.APLUGIN)


def rate_minimax(k, m, n, f, c_bias=1.0, c_m=1.0, c_n=1.0) -> RiskRate:
    """(k/(m log k) + k f/(n log k))^2 + log^2 f / m + f / n."""
    _check_positive(k=k, m=m, n=n, f=f)
    if k < 2:
        raise InvalidParameterError("minimax rate needs k >= 2")
    lk = math.log(k)
    return RiskRate(c_bias * (k / (m * lk) + k * f / (n * lk)) ** 2, c_m * math.log(f) ** 2 / m,
                    c_n * f / n, RateKind.MINIMAX)


# ---------------------------------------------------------------------------
# exact moments
# ---------------------------------------------------------------------------


class Estimator(str, Enum):
    PLUGIN = "plugin"
    APLUGIN = "aplugin"
    OPT = "opt"
    TRUTH = "truth"  # constant D(P||Q); a stub with zero bias and variance


class Sampling(str, Enum):
    MULTINOMIAL = "multinomial"
    POISSONIZED = "poissonized"


@dataclass(frozen=True)
class ExactMoments:
    expectation: float
    second_moment: float
    truncation_mass_dropped: float
    infinite_probability: float = 0.0

    @property
    def variance(self) -> float:
        return max(self.second_moment - self.expectation ** 2, 0.0)


def poisson_support(lam, tail=TAIL):
    """Counts 0..hi with P(X > hi) < tail, and their probabilities."""
    hi = int(poisson.isf(tail, lam)) + 1 if lam > 0 else 0
    x = np.arange(hi + 1)
    pmf = poisson.pmf(x, lam) if lam > 0 else np.array([1.0])
    return x, pmf, float(poisson.sf(hi, lam)) if lam > 0 else 0.0


def exact_gl_expectation(fc: FactorialCoeffs, q: float, n: int, tail=TAIL) -> float:
    """sum_N Poi(nq; N) g(N), truncated once the Poisson tail is below ``tail``."""
    if not 0 < q <= 1 or n * q > 1e4:
        raise InvalidParameterError("need 0 < q <= 1 and n q <= 1e4")
    x, pmf, _ = poisson_support(n * q, tail)
    g = _direct_ff_eval(fc, x)
    return math.fsum(pmf * g)


def _direct_ff_eval(fc, x):
    """Falling-factorial sum by explicit products; independent of the kernel path."""
    out = np.full(x.size, float(fc.offset))
    for idx, c in enumerate(x):
        ff = 1.0
        acc = 0.0
        for r, w in enumerate(fc.weights):
            if r > 0:
                ff *= (c - r + 1)
            acc += w * ff
        out[idx] += acc
    return out


def compositions(total, parts):
    """All non-negative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        yield (total,)
        return
    for bars in combinations_with_replacement(range(total + 1), parts - 1):
        prev = 0
        out = []
        for b in bars:
            out.append(b - prev)
            prev = b
        out.append(total - prev)
        yield tuple(out)


def _multinomial_table(total, probs):
    """(outcomes, probabilities) of Multinomial(total, probs), log-space pmf."""
    outcomes = np.array(list(compositions(total, probs.size)), dtype=np.int64)
    with np.errstate(divide="ignore"):
        logp = np.log(probs)
    terms = np.where(outcomes > 0, outcomes * logp, 0.0)
    logpmf = gammaln(total + 1) - gammaln(outcomes + 1).sum(axis=1) + terms.sum(axis=1)
    return outcomes, np.exp(logpmf)


def n_compositions(total, parts):
    return math.comb(total + parts - 1, parts - 1)


def _pairwise_moments(values, weights, inf_mask=None):
    """(E, E2, P(inf)) of a discrete variable, finite part conditioned on finiteness."""
    if inf_mask is not None and inf_mask.any():
        p_inf = float(weights[inf_mask].sum())
        w = weights[~inf_mask]
        v = values[~inf_mask]
        mass = w.sum()
        return (float(np.sum(w * v) / mass), float(np.sum(w * v * v) / mass), p_inf)
    return float(np.sum(weights * values)), float(np.sum(weights * values ** 2)), 0.0


def _brute_multinomial(pair, m, n, estimator, config):
    k = pair.k
    outcomes = n_compositions(m, k) * n_compositions(n, k)
    if outcomes > MAX_OUTCOME_PAIRS:
        raise EnumerationTooLarge(outcomes)
    Mo, Mw = _multinomial_table(m, pair.p.probs)
    No, Nw = _multinomial_table(n, pair.q.probs)
    vals = np.empty((Mo.shape[0], No.shape[0]))
    for a, mc in enumerate(Mo):
        M = SampleHistogram(mc)
        for b, nc in enumerate(No):
            N = SampleHistogram(nc)
            if estimator is Estimator.PLUGIN:
                vals[a, b] = plugin_kl(M, N)
            elif estimator is Estimator.APLUGIN:
                vals[a, b] = aplugin_kl(M, N, config)
            else:
                vals[a, b] = opt_kl(M, N, config).value
    w = np.outer(Mw, Nw).ravel()
    v = vals.ravel()
    inf = ~np.isfinite(v)
    e, e2, p_inf = _pairwise_moments(v, w, inf)
    return ExactMoments(e, e2, abs(1.0 - Mw.sum() * Nw.sum()), p_inf)


def _aplugin_multinomial(pair, m, n, c):
    """Exact moments of the augmented plug-in using independence of M and N.

    D_hat = A(M) - sum_i (M_i/m) B_i(N) with B_i = log((N_i + c)/(n + k c)).
    Only the M side is fully enumerated; the N side needs marginal and
    pairwise (trinomial) laws, which keeps large n tractable.
    """
    k = pair.k
    P, Q = pair.p.probs, pair.q.probs
    if n_compositions(m, k) > MAX_OUTCOME_PAIRS:
        raise EnumerationTooLarge(n_compositions(m, k))
    Mo, Mw = _multinomial_table(m, P)
    ph = Mo / m
    with np.errstate(divide="ignore", invalid="ignore"):
        A = np.where(ph > 0, ph * np.log(ph), 0.0).sum(axis=1)

    denom = math.log(n + k * c)
    nn = np.arange(n + 1)
    logB = np.log(nn + c) - denom
    EB = np.array([np.sum(binom.pmf(nn, n, Q[i]) * logB) for i in range(k)])
    # E[B_i B_j]: diagonal from binomial marginals, off-diagonal from the trinomial law
    EBB = np.empty((k, k))
    for i in range(k):
        EBB[i, i] = np.sum(binom.pmf(nn, n, Q[i]) * logB ** 2)
        for j in range(i + 1, k):
            # N_i ~ Bin(n, Q_i); N_j | N_i ~ Bin(n - N_i, Q_j / (1 - Q_i))
            pi = binom.pmf(nn, n, Q[i])
            rest = Q[j] / (1.0 - Q[i]) if Q[i] < 1 else 0.0
            acc = 0.0
            for a in np.flatnonzero(pi > 0):
                nj = np.arange(n - a + 1)
                acc += pi[a] * logB[a] * np.sum(binom.pmf(nj, n - a, rest) * logB[nj])
            EBB[i, j] = EBB[j, i] = acc

    cross = ph @ EB                    # E[sum_i ph_i B_i | M]
    cross2 = np.einsum("ai,ij,aj->a", ph, EBB, ph)
    e = np.sum(Mw * (A - cross))
    e2 = np.sum(Mw * (A * A - 2 * A * cross + cross2))
    return ExactMoments(float(e), float(e2), abs(1.0 - Mw.sum()))


def _per_bin_poisson(pair, m, n, estimator, config, tail):
    """Bins are independent under Poissonization; sum per-bin means and variances."""
    k = pair.k
    mean = 0.0
    var = 0.0
    dropped = 0.0
    for i in range(k):
        mx, mw, md = poisson_support(m * pair.p.probs[i], tail)
        nx, nw, nd = poisson_support(n * pair.q.probs[i], tail)
        dropped += md + nd
        vals = _bin_terms(estimator, mx, nx, m, n, k, config)
        w = np.outer(mw, nw)
        mu = np.sum(w * vals)
        mean += mu
        var += np.sum(w * vals ** 2) - mu ** 2
    return ExactMoments(float(mean), float(var + mean ** 2), float(dropped))


def _bin_terms(estimator, mx, nx, m, n, k, config):
    """Per-bin contribution matrix over (M_i, N_i) count grids."""
    M = mx[:, None].astype(float)
    N = nx[None, :].astype(float)
    ph = M / m
    with np.errstate(divide="ignore", invalid="ignore"):
        xlx = np.where(ph > 0, ph * np.log(np.where(ph > 0, ph, 1.0)), 0.0)
    if estimator is Estimator.APLUGIN:
        return xlx - ph * np.log((N + config.c) / (n + k * config.c))
    if estimator is Estimator.OPT:
        thr_q = config.c2 * math.log(k)
        thr_p = config.c2_prime * math.log(k)
        wq, oq = cross_weights(k, n, config)
        wp = entropy_weights(k, m, config)
        gq = _direct_ff_eval(FactorialCoeffs(wq, oq), nx.astype(float))
        gp = _direct_ff_eval(FactorialCoeffs(wp, 0.0), mx.astype(float))
        d2 = np.where(N <= thr_q, ph * gq[None, :],
                      ph * (np.log((N + 1) / n) - 0.5 / (N + 1)))
        d1 = np.where(M <= thr_p, gp[:, None], xlx - 0.5 / m)
        return d1 - d2
    raise InvalidParameterError(f"per-bin Poisson oracle does not support {estimator.value}")


def exact_estimator_moments(pair: BoundedRatioPair, m: int, n: int, estimator="aplugin",
                            config: EstimatorConfig | None = None, sampling="multinomial",
                            tail=TAIL) -> ExactMoments:
    """Exact E[D_hat] and E[D_hat^2] over the sampling law of (M, N).

    Multinomial sampling enumerates outcomes; the augmented plug-in uses an
    exact factorized route that only enumerates the P side. Poissonized
    sampling (reuse selection) sums per-bin moments over truncated supports.
    Plug-in outcomes at infinity are reported in ``infinite_probability``
    and excluded from the (conditional) moments.
    """
    config = config or EstimatorConfig()
    estimator = Estimator(estimator)
    sampling = Sampling(sampling)
    if estimator is Estimator.TRUTH:
        d = kl_divergence(pair.p, pair.q)
        return ExactMoments(d, d * d, 0.0)
    if sampling is Sampling.MULTINOMIAL:
        if estimator is Estimator.APLUGIN:
            return _aplugin_multinomial(pair, m, n, config.c)
        return _brute_multinomial(pair, m, n, estimator, config)
    if estimator is Estimator.PLUGIN:
        raise InvalidParameterError("plug-in under Poissonization has a random normalizer; not supported")
    return _per_bin_poisson(pair, m, n, estimator, config, tail)


def brute_force_moments(pair, m, n, estimator="aplugin", config=None) -> ExactMoments:
    """Full outcome-pair enumeration, for cross-checking the factorized routes."""
    return _brute_multinomial(pair, m, n, Estimator(estimator), config or EstimatorConfig())
