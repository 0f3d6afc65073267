"""Scaling-regime experiments for the Gaussian limit of externalities.

The normalized externality (centered by its exact mean, scaled by
sqrt(lam * eta_2)) converges, as the arrival rate grows, to the integral of a
time-shifted Wiener process, whose marginal at x is N(0, x^2 v + x^3 / 3).
This module checks the easy-to-verify sufficient conditions on a finite
parameter sequence, simulates the normalized externality and compensated
compound Poisson processes, and quantifies closeness to the limit with
Kolmogorov-Smirnov statistics and covariance matching.

A finite prefix of a sequence can never certify a limit; the condition flags
reported here are trend indicators, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .analytics import mean_externality
from .busy_period import count_moments_closed_form
from .distributions import Fixed, ModelParams, ServiceDistribution
from .errors import DomainError
from .simulate import sample_externality_paths

__all__ = [
    "ScalingSequence",
    "ConditionReport",
    "ExperimentReport",
    "JumpLaw",
    "condition_check",
    "limit_marginal_variance",
    "limit_covariance",
    "scaled_externality_experiment",
    "cpp_gaussian_experiment",
]


@dataclass(frozen=True)
class ScalingSequence:
    """Finite prefix of a model sequence (lam_n, dist_n) with common v."""

    lams: tuple[float, ...]
    dists: tuple[ServiceDistribution, ...]
    v: float = 0.0

    def __post_init__(self):
        if len(self.lams) != len(self.dists):
            raise DomainError("lams and dists must have equal length")
        if self.v < 0:
            raise DomainError("v must be nonnegative")

    def __len__(self):
        return len(self.lams)


@dataclass(frozen=True)
class ConditionReport:
    lams: tuple[float, ...]
    rhos: tuple[float, ...]
    eta2: tuple[float, ...]
    eta3: tuple[float, ...]
    ratio_iii: tuple[float, ...]  # eta3 / sqrt(lam * eta2^3)
    lam3_mu3: tuple[float, ...]
    lam2_mu2: tuple[float, ...]
    lam_gap: tuple[float, ...]  # lam * (1 - rho)
    cond_i_increasing: bool
    cond_ii_stable_tail: bool
    cond_iii_ratio_decreasing: bool
    set1_flag: bool
    set2_flag: bool


def _tail(values, frac=0.5):
    n = len(values)
    return values[max(1, int(n * frac)) :] if n > 1 else values


def _decreasing(values) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def _increasing(values) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


def _bounded(values, slack=1.5) -> bool:
    tail = _tail(values)
    return max(tail) <= slack * max(values[: len(values) - len(tail)] or tail)


def condition_check(seq: ScalingSequence) -> ConditionReport:
    """Evaluate the convergence conditions over a finite sequence prefix.

    The flags are indicative trends over the supplied entries, not limits.
    """
    if len(seq) < 3:
        raise DomainError("need at least 3 sequence entries")
    lams = list(seq.lams)
    rhos, eta2s, eta3s, ratios, l3m3, l2m2, gaps = [], [], [], [], [], [], []
    for lam, dist in zip(seq.lams, seq.dists):
        mu1 = dist.moment(1)
        rho = lam * mu1
        rhos.append(rho)
        l3m3.append(lam**3 * dist.moment(3))
        l2m2.append(lam**2 * dist.moment(2))
        gaps.append(lam * (1.0 - rho))
        if rho < 1.0:
            _, e2, e3 = count_moments_closed_form(lam, dist)
            eta2s.append(e2)
            eta3s.append(e3)
            ratios.append(e3 / math.sqrt(lam * e2**3))
        else:
            eta2s.append(math.nan)
            eta3s.append(math.nan)
            ratios.append(math.nan)

    stable = [r for r in _tail(rhos)]
    cond_i = _increasing(lams)
    cond_ii = all(r < 1.0 for r in stable)
    finite_ratios = [r for r in ratios if not math.isnan(r)]
    cond_iii = len(finite_ratios) >= 2 and _decreasing(finite_ratios)
    set1 = cond_i and max(stable) < 1.0 and _bounded(l3m3)
    set2 = (
        cond_i
        and cond_ii
        and min(_tail(l2m2)) > 0.0
        and _bounded(l3m3)
        and _increasing(_tail(gaps))
    )
    return ConditionReport(
        lams=tuple(lams),
        rhos=tuple(rhos),
        eta2=tuple(eta2s),
        eta3=tuple(eta3s),
        ratio_iii=tuple(ratios),
        lam3_mu3=tuple(l3m3),
        lam2_mu2=tuple(l2m2),
        lam_gap=tuple(gaps),
        cond_i_increasing=cond_i,
        cond_ii_stable_tail=cond_ii,
        cond_iii_ratio_decreasing=cond_iii,
        set1_flag=set1,
        set2_flag=set2,
    )


def limit_marginal_variance(v: float, x: float) -> float:
    """Variance of the limiting marginal at x: x^2 v + x^3 / 3."""
    return x * x * v + x**3 / 3.0


def limit_covariance(v: float, x1: float, x2: float) -> float:
    """Covariance of the limit process: double integral of v + min(s, t)."""
    a, b = min(x1, x2), max(x1, x2)
    return v * a * b + a * a * b / 2.0 - a**3 / 6.0


@dataclass(frozen=True)
class ExperimentReport:
    reps: int
    ks_stat: dict = field(default_factory=dict)
    ks_pvalue: dict = field(default_factory=dict)
    empirical_mean: dict = field(default_factory=dict)
    empirical_cov: dict = field(default_factory=dict)
    theoretical_cov: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)


def scaled_externality_experiment(
    seq: ScalingSequence,
    x_grid,
    n_index: int,
    reps: int,
    rng: np.random.Generator,
) -> ExperimentReport:
    """Simulate the normalized externality at one sequence index and test its
    marginals and pair covariances against the Gaussian limit."""
    x_grid = np.asarray(x_grid, dtype=float)
    lam = seq.lams[n_index]
    dist = seq.dists[n_index]
    v = seq.v
    params = ModelParams(lam, dist, Fixed(v))
    _, eta2, _ = count_moments_closed_form(lam, dist)
    scale = math.sqrt(lam * eta2)

    raw = sample_externality_paths(params, x_grid, reps, rng)
    centered = np.empty_like(raw)
    for j, x in enumerate(x_grid):
        centered[:, j] = (raw[:, j] - mean_externality(lam, dist, Fixed(v), x)) / scale

    ks_stat, ks_p, means = {}, {}, {}
    for j, x in enumerate(x_grid):
        if x == 0.0:
            continue  # degenerate marginal
        sd = math.sqrt(limit_marginal_variance(v, x))
        res = stats.kstest(centered[:, j], "norm", args=(0.0, sd))
        ks_stat[x] = float(res.statistic)
        ks_p[x] = float(res.pvalue)
        means[x] = float(centered[:, j].mean())
    emp_cov, theo_cov = {}, {}
    for i in range(len(x_grid)):
        for j in range(i + 1, len(x_grid)):
            x1, x2 = x_grid[i], x_grid[j]
            if x1 == 0.0:
                continue
            emp_cov[(x1, x2)] = float(
                np.cov(centered[:, i], centered[:, j])[0, 1]
            )
            theo_cov[(x1, x2)] = limit_covariance(v, x1, x2)
    return ExperimentReport(
        reps=reps,
        ks_stat=ks_stat,
        ks_pvalue=ks_p,
        empirical_mean=means,
        empirical_cov=emp_cov,
        theoretical_cov=theo_cov,
        diagnostics={"lam": lam, "eta2": eta2, "scale": scale},
    )


@dataclass(frozen=True)
class JumpLaw:
    """Jump distribution for the compound Poisson experiment: a sampler plus
    the exact second moment and third absolute moment."""

    sampler: object  # callable (rng, size) -> draws
    mean: float
    second_moment: float
    third_abs_moment: float

    def __post_init__(self):
        if not self.second_moment > 0:
            raise DomainError("second moment must be positive")


def cpp_gaussian_experiment(
    lam: float,
    jump_law: JumpLaw,
    horizon: float,
    reps: int,
    rng: np.random.Generator,
) -> ExperimentReport:
    """Endpoint and disjoint-increment normality check for a normalized
    compensated compound Poisson process.

    The process value at time t is the sum of Poisson(lam*t) jumps minus
    the exact compensator lam * t * E[jump], all divided by
    sqrt(lam * second_moment).
    """
    if horizon <= 0:
        raise DomainError("horizon must be positive")
    scale = math.sqrt(lam * jump_law.second_moment)
    mean_jump = jump_law.mean

    def draw_increment(t: float) -> np.ndarray:
        counts = rng.poisson(lam * t, reps)
        out = np.zeros(reps)
        total = int(counts.sum())
        if total:
            jumps = np.asarray(jump_law.sampler(rng, total), dtype=float)
            idx = np.repeat(np.arange(reps), counts)
            np.add.at(out, idx, jumps)
        return out

    half = horizon / 2.0
    inc1 = (draw_increment(half) - lam * half * mean_jump) / scale
    inc2 = (draw_increment(horizon - half) - lam * (horizon - half) * mean_jump) / scale
    endpoint = inc1 + inc2

    res_end = stats.kstest(endpoint, "norm", args=(0.0, math.sqrt(horizon)))
    res_inc1 = stats.kstest(inc1, "norm", args=(0.0, math.sqrt(half)))
    res_inc2 = stats.kstest(inc2, "norm", args=(0.0, math.sqrt(horizon - half)))
    ratio = jump_law.third_abs_moment / math.sqrt(lam * jump_law.second_moment**3)
    return ExperimentReport(
        reps=reps,
        ks_stat={
            "endpoint": float(res_end.statistic),
            "increment_1": float(res_inc1.statistic),
            "increment_2": float(res_inc2.statistic),
        },
        ks_pvalue={
            "endpoint": float(res_end.pvalue),
            "increment_1": float(res_inc1.pvalue),
            "increment_2": float(res_inc2.pvalue),
        },
        empirical_mean={"endpoint": float(endpoint.mean())},
        empirical_cov={"endpoint_var": float(endpoint.var())},
        theoretical_cov={"endpoint_var": horizon},
        diagnostics={"condition_ii_ratio": ratio, "mean_jump": mean_jump},
    )
