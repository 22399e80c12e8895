"""Best uniform polynomial approximation of x log x and the estimator weights built on it.

The Remez solver works in a Chebyshev basis on [0, 1] and converts to
monomial coefficients only when building :class:`ApproxPolynomial`.
Residual extrema are located on a dense Chebyshev grid and polished by
bounded golden-section search, since x log x has an unbounded derivative
at the origin.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy.optimize import minimize_scalar
from scipy.special import xlogy

from . import _kernels

GRID_POINTS = 100_000
MAX_DEGREE = 64
MAX_ITER = 100
CONV_TOL = 1e-10


class ConvergenceError(RuntimeError):
    """Remez iteration failed to level the error; ``last`` holds the final iterate."""

    def __init__(self, msg, last=None):
        super().__init__(msg)
        self.last = last


class DomainWarning(UserWarning):
    """Rescaled interval [0, a] does not shrink (a >= 1)."""


def xlogx(x):
    x = np.asarray(x, dtype=np.float64)
    return xlogy(x, x)


def chebyshev_grid(npts=GRID_POINTS, lo=0.0, hi=1.0):
    """Chebyshev-extrema points on [lo, hi], ascending, endpoints included."""
    j = np.arange(npts)
    t = -np.cos(np.pi * j / (npts - 1))
    x = lo + (hi - lo) * (t + 1.0) / 2.0
    x[0], x[-1] = lo, hi
    return x


@dataclass(frozen=True)
class ApproxPolynomial:
    coeffs: np.ndarray
    degree: int
    interval: tuple
    sup_error: float
    cheb: Chebyshev
    reference: np.ndarray
    iterations: int = 0

    def __call__(self, x):
        return self.cheb(np.asarray(x, dtype=np.float64))

    def residual(self, x):
        return self(x) - xlogx(x)

    def grid_sup_error(self, npts=GRID_POINTS):
        lo, hi = self.interval
        return float(np.max(np.abs(self.residual(chebyshev_grid(npts, lo, hi)))))


def _solve_leveled(ref, degree):
    """Polynomial p and level E with p(x_j) - f(x_j) = -(-1)^j E on the reference."""
    n = degree + 2
    t = 2.0 * ref - 1.0
    A = np.empty((n, n))
    A[:, :degree + 1] = np.polynomial.chebyshev.chebvander(t, degree)
    A[:, -1] = (-1.0) ** np.arange(n)
    sol = np.linalg.solve(A, xlogx(ref))
    return Chebyshev(sol[:-1], domain=[0.0, 1.0]), float(sol[-1])


def _refine(resid, grid, i, sign):
    """Golden-section polish of the local extremum of sign*resid near grid[i]."""
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, grid.size - 1)]
    best_x, best_v = grid[i], sign * resid(grid[i])
    if hi > lo:
        res = minimize_scalar(lambda x: -sign * resid(x), bounds=(lo, hi), method="bounded",
                              options={"xatol": max(1e-15, 1e-12 * (hi - lo))})
        if res.success and -res.fun > best_v:
            best_x, best_v = float(res.x), -float(res.fun)
    return best_x, sign * best_v


def _alternating_extrema(poly, grid):
    """Largest |residual| in each maximal same-sign run of the grid, polished."""
    r = poly(grid) - xlogx(grid)
    s = np.sign(r)
    s[s == 0] = 1.0
    breaks = np.flatnonzero(np.diff(s) != 0) + 1
    starts = np.concatenate(([0], breaks))
    ends = np.concatenate((breaks, [grid.size]))

    def resid(x):
        return float(poly(x) - xlogx(x))

    xs, vs = [], []
    for a, b in zip(starts, ends):
        i = a + int(np.argmax(np.abs(r[a:b])))
        x, v = _refine(resid, grid, i, s[i])
        xs.append(x)
        vs.append(v)
    return np.array(xs), np.array(vs)


def _prune(xs, vs, n):
    """Drop points, keeping sign alternation, until n remain."""
    xs, vs = list(xs), list(vs)
    while len(xs) > n:
        a = np.abs(vs)
        j = int(np.argmin(a))
        if j == 0 or j == len(xs) - 1 or len(xs) - n == 1:
            # remove an end point: the smaller one when only one excess point is left
            j = 0 if abs(vs[0]) <= abs(vs[-1]) else len(xs) - 1
            del xs[j], vs[j]
        else:
            k = j - 1 if a[j - 1] < a[j + 1] else j + 1
            for idx in sorted((j, k), reverse=True):
                del xs[idx], vs[idx]
    return np.array(xs), np.array(vs)


def _to_monomial(cheb):
    return cheb.convert(kind=Polynomial, domain=[0.0, 1.0], window=[0.0, 1.0]).coef


@functools.lru_cache(maxsize=None)
def remez_xlogx(degree: int) -> ApproxPolynomial:
    """Degree-L best uniform approximation of x log x on [0, 1]."""
    L = int(degree)
    if L != degree or not 1 <= L <= MAX_DEGREE:
        raise ValueError(f"degree must be an integer in [1, {MAX_DEGREE}], got {degree!r}")
    n = L + 2
    grid = chebyshev_grid()
    ref = (1.0 - np.cos(np.pi * np.arange(n) / (n - 1))) / 2.0
    poly = None
    for it in range(1, MAX_ITER + 1):
        poly, level = _solve_leveled(ref, L)
        xs, vs = _alternating_extrema(poly, grid)
        if xs.size < n:
            raise ConvergenceError(
                f"only {xs.size} alternating extrema for degree {L}", last=poly)
        peak = float(np.max(np.abs(vs)))
        if abs(level) > 0 and (peak - abs(level)) / abs(level) < CONV_TOL:
            break
        ref, _ = _prune(xs, vs, n)
    else:
        raise ConvergenceError(f"Remez did not converge in {MAX_ITER} iterations", last=poly)

    ref, vs = _prune(xs, vs, n)
    sup = max(peak, float(np.max(np.abs(poly(grid) - xlogx(grid)))))
    coeffs = _to_monomial(poly)
    coeffs = np.concatenate((coeffs, np.zeros(L + 1 - coeffs.size)))
    bound = 2.0 / math.e * 2.0 ** (3 * L)
    if np.any(np.abs(coeffs) > bound):
        raise ConvergenceError(f"coefficient magnitude exceeds 2 e^-1 2^(3L) at L={L}", last=poly)
    coeffs.setflags(write=False)
    ref.setflags(write=False)
    return ApproxPolynomial(coeffs, L, (0.0, 1.0), sup, poly, ref, it)


def equioscillation(ap: ApproxPolynomial):
    """Residual values at the final reference points."""
    return ap.residual(ap.reference)


def chebyshev_interpolant_error(degree: int, npts=GRID_POINTS) -> float:
    """Sup error of interpolating x log x at degree+1 Chebyshev points on [0, 1]."""
    c = Chebyshev.interpolate(xlogx, degree, domain=[0.0, 1.0])
    x = chebyshev_grid(npts)
    return float(np.max(np.abs(c(x) - xlogx(x))))


# ---------------------------------------------------------------------------
# interval rescaling
# ---------------------------------------------------------------------------


class PolyKind(str, Enum):
    GAMMA = "gamma"
    MU = "mu"


@dataclass(frozen=True)
class RescaledPoly:
    """Monomial polynomial approximating x log x on [0, a]."""

    coeffs: np.ndarray
    interval: tuple
    kind: PolyKind
    base_error: float

    @property
    def a(self) -> float:
        return self.interval[1]

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, x):
        return Polynomial(self.coeffs)(np.asarray(x, dtype=np.float64))

    def residual(self, x):
        return self(x) - xlogx(x)

    def grid_sup_error(self, npts=GRID_POINTS):
        return float(np.max(np.abs(self.residual(chebyshev_grid(npts, 0.0, self.a)))))


def rescale_to_interval(base: ApproxPolynomial, a: float) -> RescaledPoly:
    """Carry the [0, 1] approximation to [0, a] via x log x = a (x/a) log(x/a) + x log a."""
    if tuple(base.interval) != (0.0, 1.0):
        raise ValueError("base approximation must live on [0, 1]")
    if not a > 0:
        raise ValueError(f"interval end must be positive, got {a!r}")
    if a >= 1:
        warnings.warn(f"rescaled interval [0, {a:.4g}] is not inside [0, 1]", DomainWarning,
                      stacklevel=3)
    j = np.arange(base.degree + 1)
    coeffs = base.coeffs * a ** (1.0 - j)
    coeffs[1] += math.log(a)
    coeffs.setflags(write=False)
    return RescaledPoly(coeffs, (0.0, float(a)), PolyKind.GAMMA, a * base.sup_error)


def interval_end(n, k, c1) -> float:
    """a = c1 log k / n."""
    return c1 * math.log(k) / n


def rescale_gamma(base: ApproxPolynomial, n: int, k: int, c1: float) -> RescaledPoly:
    if n < 1 or k < 2 or not c1 > 0:
        raise ValueError("need n >= 1, k >= 2 and c1 > 0")
    return rescale_to_interval(base, interval_end(n, k, c1))


def drop_zero_degree(gamma: RescaledPoly) -> RescaledPoly:
    if gamma.kind is not PolyKind.GAMMA:
        raise ValueError("expected a gamma-form polynomial")
    coeffs = np.array(gamma.coeffs)
    coeffs[0] = 0.0
    coeffs.setflags(write=False)
    return RescaledPoly(coeffs, gamma.interval, PolyKind.MU, gamma.base_error)


# ---------------------------------------------------------------------------
# factorial-moment estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorialCoeffs:
    """g(x) = sum_r weights[r] * (x)_r + offset, with (x)_r the falling factorial."""

    weights: np.ndarray
    offset: float = 0.0
    source: RescaledPoly | None = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    def __call__(self, count):
        return eval_factorial_estimator(self, count)


def gl_coefficients(mu: RescaledPoly, n: int, k=None, c1=None) -> FactorialCoeffs:
    """Unbiased estimator of mu(Q)/Q from N ~ Poi(n Q).

    mu(x)/x = sum_{j>=1} mu_j x^(j-1) and E[(N)_r] = (nQ)^r, so the weight on
    (N)_(j-1) is mu_j / n^(j-1). The log-scale term of mu_1 becomes the offset.
    """
    if mu.kind is not PolyKind.MU:
        raise ValueError("expected a mu-form polynomial (no constant term)")
    a = mu.a
    if k is not None and c1 is not None and not math.isclose(a, interval_end(n, k, c1), rel_tol=1e-12):
        raise ValueError("polynomial interval does not match (n, k, c1)")
    L = mu.degree
    r = np.arange(L)
    weights = mu.coeffs[1:] / float(n) ** r
    offset = math.log(a)
    weights[0] -= offset
    return FactorialCoeffs(weights, offset, mu)


def glprime_coefficients(base: ApproxPolynomial, m: int, k: int, c1_prime: float) -> FactorialCoeffs:
    """Unbiased estimator of the constant-free rescaled polynomial at P from M ~ Poi(m P).

    g'(M) = (1/m) sum_j a_j (M)_j / (c1' log k)^(j-1) - (M/m) log(m / (c1' log k)).
    """
    mu = drop_zero_degree(rescale_gamma(base, m, k, c1_prime))
    L = mu.degree
    weights = np.zeros(L + 1)
    weights[1:] = mu.coeffs[1:] / float(m) ** np.arange(1, L + 1)
    return FactorialCoeffs(weights, 0.0, mu)


def eval_factorial_estimator(fc: FactorialCoeffs, count):
    """Evaluate g at one count or an array of counts."""
    scalar = np.ndim(count) == 0
    c = np.atleast_1d(np.asarray(count))
    if np.any(c < 0):
        raise ValueError("counts must be non-negative")
    vals, overflow = _kernels.falling_factorial_poly(fc.weights, fc.offset, c)
    if overflow:
        bad = c[~np.isfinite(vals)]
        raise OverflowError(
            f"falling-factorial sum overflowed at count {int(bad[0])} "
            f"(degree {fc.weights.size - 1} term)")
    return float(vals[0]) if scalar else vals
