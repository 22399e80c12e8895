"""Monte Carlo RMSE sweeps over sample size or alphabet size, written as CSV."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .distributions import (BoundedRatioPair, RawPair, density_ratio_max,
                            make_split, make_worst_case_pair, make_worst_case_pair_bias_I, make_zipf)
from .estimators import METHODS, EstimatorConfig, aplugin_kl, opt_kl, plugin_kl

CSV_HEADER = ("method", "sweep_value", "rmse", "mean_bias", "infinite_count", "trials", "wall_seconds")
DEFAULT_BUDGET = 10**12


class BudgetExceeded(RuntimeError):
    pass


class Family(str, Enum):
    WORST_CASE_I = "worst_case_I"   # benchmark pair, Q_i = 1/(k f)
    BIAS_I = "bias_I"               # Q_i = 10/(k f), needs f >= 10
    ZIPF_PAIR = "zipf_pair"
    CUSTOM = "custom"


class Sweep(str, Enum):
    VARY_M = "vary_m"
    VARY_K = "vary_k"


DEFAULT_RHO = {Family.WORST_CASE_I: 3.0, Family.BIAS_I: 3.0, Family.ZIPF_PAIR: 0.5, Family.CUSTOM: 3.0}


@dataclass
class ExperimentSpec:
    family: Family = Family.WORST_CASE_I
    sweep: Sweep = Sweep.VARY_M
    k: int = 1000
    f: float = 5.0
    alpha_p: float = 1.0
    alpha_q: float = 0.8
    grid: tuple = (1000, 10_000, 100_000)
    rho: float | None = None
    trials: int = 30
    methods: tuple = METHODS
    seed: int = 0
    config: EstimatorConfig = field(default_factory=EstimatorConfig)
    custom_pair: tuple | None = None
    budget: float = DEFAULT_BUDGET
    timing: bool = True

    def __post_init__(self):
        self.family = Family(self.family)
        self.sweep = Sweep(self.sweep)
        self.grid = tuple(int(g) for g in self.grid)
        self.methods = tuple(self.methods)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.grid or any(b <= a for a, b in zip(self.grid, self.grid[1:])) or self.grid[0] < 1:
            raise ValueError("sweep grid must be non-empty, positive and strictly increasing")
        for meth in self.methods:
            if meth not in METHODS:
                raise ValueError(f"unknown method {meth!r}")
        if self.rho is None:
            self.rho = DEFAULT_RHO[self.family]
        if self.family is Family.CUSTOM and self.custom_pair is None:
            raise ValueError("custom family needs a (P, Q) pair")


@dataclass(frozen=True)
class RmseRow:
    method: str
    sweep_value: int
    rmse: float
    mean_bias: float
    infinite_count: int
    trials: int
    wall_seconds: float


def family_pair(spec: ExperimentSpec, k: int):
    if spec.family is Family.WORST_CASE_I:
        return make_worst_case_pair(k, spec.f)
    if spec.family is Family.BIAS_I:
        return make_worst_case_pair_bias_I(k, spec.f)
    if spec.family is Family.ZIPF_PAIR:
        return RawPair(make_zipf(k, spec.alpha_p), make_zipf(k, spec.alpha_q))
    p, q = spec.custom_pair
    return RawPair(p, q)


def _ratio(spec, pair):
    if isinstance(pair, BoundedRatioPair) and spec.family is not Family.CUSTOM:
        return pair.ratio_bound
    return density_ratio_max(pair.p, pair.q)


def sweep_points(spec: ExperimentSpec):
    """Yield (sweep_value, pair, m, n) for each grid point."""
    for g in spec.grid:
        if spec.sweep is Sweep.VARY_M:
            pair = family_pair(spec, spec.k)
            f = _ratio(spec, pair)
            yield g, pair, g, int(math.ceil(spec.rho * f * g))
        else:
            if g < 2:
                raise ValueError("alphabet sweep needs k >= 2")
            pair = family_pair(spec, g)
            f = _ratio(spec, pair)
            lk = math.log(g)
            yield g, pair, int(math.ceil(2 * g / lk)), int(math.ceil(g * f / lk))


def trial_seed(seed: int, point_index: int, trial_index: int, method_index: int) -> np.random.SeedSequence:
    """Per-trial seed: numpy SeedSequence hashing of the four indices."""
    return np.random.SeedSequence([seed & 0xFFFF_FFFF_FFFF_FFFF, point_index, trial_index, method_index])


def estimated_cost(spec: ExperimentSpec) -> float:
    return sum(pair.p.k * max(m, n) * spec.trials for _, pair, m, n in sweep_points(spec))


def _one_estimate(method, pair, m, n, config, seq):
    rng = np.random.Generator(np.random.PCG64(seq))
    ps = make_split(pair.p, m, config.split_mode, rng)
    qs = make_split(pair.q, n, config.split_mode, rng)
    if method == "plugin":
        return plugin_kl(ps.first, qs.first)
    if method == "aplugin":
        return aplugin_kl(ps.first, qs.first, config)
    return opt_kl(ps, qs, config).value


def run_experiment(spec: ExperimentSpec) -> list:
    cost = estimated_cost(spec)
    if cost > spec.budget:
        raise BudgetExceeded(f"experiment cost k*max(m,n)*trials = {cost:.3g} exceeds budget {spec.budget:.3g}")
    rows = []
    for pi, (value, pair, m, n) in enumerate(sweep_points(spec)):
        truth = pair.divergence()
        for meth in spec.methods:
            mi = METHODS.index(meth)
            t0 = time.perf_counter()
            errs = []
            n_inf = 0
            for ti in range(spec.trials):
                est = _one_estimate(meth, pair, m, n, spec.config, trial_seed(spec.seed, pi, ti, mi))
                if math.isinf(est):
                    n_inf += 1
                else:
                    errs.append(est - truth)
            wall = time.perf_counter() - t0 if spec.timing else 0.0
            if errs:
                rmse = math.sqrt(math.fsum(e * e for e in errs) / len(errs))
                bias = math.fsum(errs) / len(errs)
            else:
                rmse = bias = math.nan
            rows.append(RmseRow(meth, value, rmse, bias, n_inf, spec.trials, wall))
    return rows


def _fmt(x):
    return format(x, ".17g") if isinstance(x, float) else str(x)


def format_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in rows:
        w.writerow([r.method, r.sweep_value, _fmt(float(r.rmse)), _fmt(float(r.mean_bias)),
                    r.infinite_count, r.trials, _fmt(float(r.wall_seconds))])
    return buf.getvalue()


def write_csv(rows, destination) -> None:
    path = Path(destination)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            fh.write(format_csv(rows))
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc.strerror or exc}") from exc


def read_csv(source) -> list:
    with Path(source).open(encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [RmseRow(r["method"], int(r["sweep_value"]), float(r["rmse"]), float(r["mean_bias"]),
                        int(r["infinite_count"]), int(r["trials"]), float(r["wall_seconds"]))
                for r in reader]
