"""Discrete distributions, adversarial pair constructions and samplers.

All logarithms are natural. Sampling uses numpy's ``Generator`` on a
``PCG64`` bit generator, which produces the same stream on every platform
for a given seed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

SUM_TOL = 1e-12
INF = math.inf


class InvalidParameterError(ValueError):
    """Raised when an argument falls outside an operation's domain."""


def _as_readonly(a, dtype):
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DiscreteDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise InvalidParameterError("probability vector must be 1-d and non-empty")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InvalidParameterError("probabilities must be finite and non-negative")
        s = math.fsum(p)
        if abs(s - 1.0) > SUM_TOL:
            raise InvalidParameterError(f"probabilities sum to {s!r}, not 1")
        object.__setattr__(self, "probs", _as_readonly(p, np.float64))

    @classmethod
    def normalized(cls, weights) -> DiscreteDistribution:
        """Build a distribution by dividing non-negative weights by their sum."""
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise InvalidParameterError("weights must be a non-empty finite non-negative vector")
        s = math.fsum(w)
        if s <= 0:
            raise InvalidParameterError("weights must have positive mass")
        p = w / s
        # one more pass absorbs the rounding of the first division
        return cls(p / math.fsum(p))

    @property
    def k(self) -> int:
        return int(self.probs.size)

    def __len__(self):
        return self.k

    def __eq__(self, other):
        if not isinstance(other, DiscreteDistribution):
            return NotImplemented
        return np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash(self.probs.tobytes())


@dataclass(frozen=True)
class BoundedRatioPair:
    """A pair (P, Q) on a common alphabet with ``P_i <= f * Q_i`` for all i."""

    p: DiscreteDistribution
    q: DiscreteDistribution
    ratio_bound: float

    def __post_init__(self):
        if self.p.k != self.q.k:
            raise InvalidParameterError(f"alphabet mismatch: {self.p.k} vs {self.q.k}")
        if not self.ratio_bound >= 1:
            raise InvalidParameterError("ratio bound must be >= 1")
        # relative slack absorbs rounding in the constructors
        if np.any(self.p.probs > self.ratio_bound * self.q.probs * (1 + 1e-12)):
            worst = density_ratio_max(self.p, self.q)
            raise InvalidParameterError(
                f"density ratio {worst!r} exceeds bound {self.ratio_bound!r}")

    @property
    def k(self) -> int:
        return self.p.k

    def divergence(self) -> float:
        return kl_divergence(self.p, self.q)


@dataclass(frozen=True)
class RawPair:
    """A (P, Q) pair with no ratio bound; used where the bound is deliberately broken."""

    p: DiscreteDistribution
    q: DiscreteDistribution

    def divergence(self) -> float:
        return kl_divergence(self.p, self.q)


@dataclass(frozen=True)
class SampleHistogram:
    """Bin counts of a sample.

    ``nominal_size`` is the sample size the estimators divide by. It equals
    ``total`` for multinomial draws and the Poisson mean for Poissonized draws.
    """

    counts: np.ndarray
    nominal_size: int | None = None
    total: int = field(init=False)

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 1 or c.size < 1:
            raise InvalidParameterError("counts must be a non-empty 1-d vector")
        if not np.all(np.equal(np.mod(c, 1), 0)) or np.any(c < 0):
            raise InvalidParameterError("counts must be non-negative integers")
        c = _as_readonly(c, np.int64)
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "total", int(c.sum()))
        if self.nominal_size is not None and self.nominal_size < 0:
            raise InvalidParameterError("nominal size must be non-negative")

    @property
    def alphabet_size(self) -> int:
        return int(self.counts.size)

    @property
    def size(self) -> int:
        """Sample size used for normalization by the estimators."""
        return self.total if self.nominal_size is None else int(self.nominal_size)

    def permuted(self, perm) -> SampleHistogram:
        return SampleHistogram(self.counts[np.asarray(perm)], self.nominal_size)


class SplitMode(str, Enum):
    MULTINOMIAL_REUSE = "multinomial-reuse"
    POISSONIZED_SPLIT = "poissonized-split"


@dataclass(frozen=True)
class SplitSamples:
    """Estimation histogram ``first`` and branch-selection histogram ``second``."""

    first: SampleHistogram
    second: SampleHistogram
    mode: SplitMode

    def __post_init__(self):
        if self.first.alphabet_size != self.second.alphabet_size:
            raise InvalidParameterError("split histograms have different alphabet sizes")
        if self.mode is SplitMode.MULTINOMIAL_REUSE and self.first is not self.second:
            raise InvalidParameterError("multinomial-reuse requires one shared histogram")

    @classmethod
    def reuse(cls, hist: SampleHistogram) -> SplitSamples:
        return cls(hist, hist, SplitMode.MULTINOMIAL_REUSE)


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------


def _check_k(k, minimum=1):
    if int(k) != k or k < minimum:
        raise InvalidParameterError(f"alphabet size must be an integer >= {minimum}, got {k!r}")
    return int(k)


def make_uniform(k: int) -> DiscreteDistribution:
    k = _check_k(k)
    return DiscreteDistribution(np.full(k, 1.0 / k))


def make_zipf(k: int, alpha: float) -> DiscreteDistribution:
    """Zipf law on {1..k}: P_i proportional to i^-alpha."""
    k = _check_k(k)
    if alpha < 0:
        raise InvalidParameterError("Zipf exponent must be non-negative")
    return DiscreteDistribution.normalized(np.arange(1, k + 1, dtype=np.float64) ** -float(alpha))


def _residual_pair(k, small_p, small_q, f):
    p = np.full(k, small_p)
    q = np.full(k, small_q)
    p[-1] = 1.0 - (k - 1) * small_p
    q[-1] = 1.0 - (k - 1) * small_q
    return BoundedRatioPair(DiscreteDistribution.normalized(p),
                            DiscreteDistribution.normalized(q), float(f))


def make_worst_case_pair_bias_I(k: int, f: float) -> BoundedRatioPair:
    """P uniform, Q puts 10/(k f) on the first k-1 bins and the rest on the last.

    Valid only for f >= 10, where the last Q mass is at least 1/k.
    """
    k = _check_k(k)
    if not f >= 10:
        raise InvalidParameterError(f"construction requires f >= 10, got {f!r}")
    return _residual_pair(k, 1.0 / k, 10.0 / (k * f), f)


def make_worst_case_pair(k: int, f: float) -> BoundedRatioPair:
    """Benchmark worst-case pair: P uniform, Q_i = 1/(k f) except a heavy last bin.

    The ratio P_i/Q_i equals f on all but the last bin. Valid for any f >= 1.
    """
    k = _check_k(k)
    if not f >= 1:
        raise InvalidParameterError("ratio bound must be >= 1")
    return _residual_pair(k, 1.0 / k, 1.0 / (k * f), f)


def make_worst_case_pair_bias_II(k: int, n: int, f: float, strict: bool = True) -> BoundedRatioPair:
    """P_i = f/(4n), Q_i = 1/(4n) on the first k-1 bins, residual mass on the last.

    ``strict`` enforces the sample-size condition n >= 10 k f under which the
    pair is adversarial; the construction itself only needs (k-1) f < 4n.
    """
    k = _check_k(k)
    if not f >= 1:
        raise InvalidParameterError("ratio bound must be >= 1")
    if not strict and (k - 1) * f >= 4 * n:
        raise InvalidParameterError("need (k-1) f < 4 n for a valid distribution")
    if strict and n < 10 * k * f:
        raise InvalidParameterError(f"requires n >= 10 k f = {10 * k * f}, got n={n}")
    return _residual_pair(k, f / (4.0 * n), 1.0 / (4.0 * n), f)


def _checked_pair(p, q, f):
    P = DiscreteDistribution.normalized(p)
    Q = DiscreteDistribution.normalized(q)
    r = density_ratio_max(P, Q)
    if r > f * (1 + 1e-12):
        raise InvalidParameterError(f"density ratio {r:.6g} exceeds f = {f!r} for these parameters")
    return BoundedRatioPair(P, Q, float(f))


def make_twopoint_variance_m(k: int, f: float, m: int):
    """Two pairs sharing Q whose P differ by an eps = 1/sqrt(m) perturbation."""
    k = _check_k(k, 2)
    if m < 9:
        raise InvalidParameterError("m must be >= 9 so that eps <= 1/3")
    if not f >= 1:
        raise InvalidParameterError("ratio bound must be >= 1")
    eps = 1.0 / math.sqrt(m)
    h = 3.0 * (k - 1)
    q = np.full(k, 1.0 / (h * f))
    q[-1] = 1.0 - 1.0 / (3.0 * f)
    p1 = np.full(k, 1.0 / h)
    p1[-1] = 2.0 / 3.0
    p2 = np.full(k, (1.0 - eps) / h)
    p2[-1] = (2.0 + eps) / 3.0
    return _checked_pair(p1, q, f), _checked_pair(p2, q, f)


def make_twopoint_variance_n(k: int, f: float, n: int):
    """Two pairs sharing P whose Q alternate by a factor (1 -+ eps), eps = sqrt(f/n).

    P puts 1/(3(k-1)) on every other leading bin and 5/6 on the last; the
    k-1 leading bins must pair up, so k-1 has to be even.
    """
    k = _check_k(k, 3)
    if (k - 1) % 2:
        raise InvalidParameterError("construction needs k-1 even")
    if not f >= 1:
        raise InvalidParameterError("ratio bound must be >= 1")
    eps = math.sqrt(f / n)
    if eps >= 1.0 / 3.0:
        raise InvalidParameterError(f"eps = sqrt(f/n) = {eps:.4g} must be < 1/3")
    h = k - 1
    p = np.zeros(k)
    p[0:h:2] = 1.0 / (3 * h)
    p[-1] = 5.0 / 6.0
    base = 1.0 / (2.0 * h * f)
    q1 = np.full(k, base)
    q2 = np.full(k, base)
    q2[0:h:2] *= 1 - eps
    q2[1:h:2] *= 1 + eps
    q1[-1] = q2[-1] = 1.0 - 1.0 / (2.0 * f)
    return _checked_pair(p, q1, f), _checked_pair(p, q2, f)


def make_inconsistency_pair(s: float):
    """k=2 pairs with P = (1/2, 1/2) and Q^(1) = (e^-s, .), Q^(2) = (1/(2s), .)."""
    if not s > 0.5:
        raise InvalidParameterError("s must exceed 1/2")
    P = make_uniform(2)
    e = math.exp(-s)
    q1 = DiscreteDistribution(np.array([e, 1.0 - e]))
    q2 = DiscreteDistribution(np.array([0.5 / s, 1.0 - 0.5 / s]))
    return RawPair(P, q1), RawPair(P, q2)


# ---------------------------------------------------------------------------
# functionals
# ---------------------------------------------------------------------------


def _probs(d):
    return d.probs if isinstance(d, DiscreteDistribution) else np.asarray(d, dtype=np.float64)


def kl_divergence(p, q) -> float:
    """D(P||Q) in nats; ``math.inf`` when P is not absolutely continuous w.r.t. Q."""
    pp, qq = _probs(p), _probs(q)
    if pp.shape != qq.shape:
        raise InvalidParameterError(f"alphabet mismatch: {pp.size} vs {qq.size}")
    s = pp > 0
    if np.any(qq[s] == 0):
        return INF
    return math.fsum(pp[s] * np.log(pp[s] / qq[s]))


def entropy(p) -> float:
    pp = _probs(p)
    s = pp > 0
    return max(0.0, -math.fsum(pp[s] * np.log(pp[s])))


def density_ratio_max(p, q) -> float:
    pp, qq = _probs(p), _probs(q)
    if pp.shape != qq.shape:
        raise InvalidParameterError(f"alphabet mismatch: {pp.size} vs {qq.size}")
    s = pp > 0
    if np.any(qq[s] == 0):
        return INF
    return float(np.max(pp[s] / qq[s]))


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def rng_from_seed(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFF_FFFF_FFFF_FFFF))


def sample_histogram(p: DiscreteDistribution, sample_size: int, rng_seed) -> SampleHistogram:
    """Multinomial(sample_size, p) bin counts."""
    if sample_size < 0:
        raise InvalidParameterError("sample size must be non-negative")
    rng = rng_from_seed(rng_seed)
    counts = rng.multinomial(int(sample_size), p.probs)
    return SampleHistogram(counts)


def sample_poissonized(p: DiscreteDistribution, mean_size: int, rng_seed) -> SampleHistogram:
    """Independent Poisson(mean_size * p_i) bin counts."""
    if mean_size < 0:
        raise InvalidParameterError("mean size must be non-negative")
    rng = rng_from_seed(rng_seed)
    counts = rng.poisson(float(mean_size) * p.probs)
    return SampleHistogram(counts, nominal_size=int(mean_size))


def make_split(p: DiscreteDistribution, mean_size: int, mode, rng_seed) -> SplitSamples:
    mode = SplitMode(mode)
    if mode is SplitMode.MULTINOMIAL_REUSE:
        return SplitSamples.reuse(sample_histogram(p, mean_size, rng_seed))
    if isinstance(rng_seed, np.random.Generator):
        rng = rng_seed
    else:
        seq = rng_seed if isinstance(rng_seed, np.random.SeedSequence) else np.random.SeedSequence(
            int(rng_seed) & 0xFFFF_FFFF_FFFF_FFFF)
        rng = rng_from_seed(seq.spawn(1)[0])
    first = sample_poissonized(p, mean_size, rng)
    second = sample_poissonized(p, mean_size, rng)
    return SplitSamples(first, second, mode)


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def _data_lines(path):
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            yield line


def read_distribution(path) -> DiscreteDistribution:
    """Read newline-delimited probabilities; '#' lines are comments."""
    vals = [float(x) for x in _data_lines(path)]
    return DiscreteDistribution.normalized(vals) if vals else DiscreteDistribution(vals)


def write_distribution(dist: DiscreteDistribution, path, comment: str | None = None) -> None:
    lines = [f"# {c}" for c in comment.splitlines()] if comment else []
    lines += [repr(float(x)) for x in dist.probs]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_histogram(path) -> SampleHistogram:
    vals = []
    for line in _data_lines(path):
        v = int(line)
        vals.append(v)
    return SampleHistogram(np.array(vals, dtype=np.int64))


def write_histogram(hist: SampleHistogram, path) -> None:
    Path(path).write_text("\n".join(str(int(c)) for c in hist.counts) + "\n", encoding="utf-8")
