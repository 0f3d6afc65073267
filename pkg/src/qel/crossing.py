"""Level-crossing times of the externality right-derivative started empty.

With zero initial workload the derivative process jumps by one busy-period
count at each arrival burst, so the first x at which it reaches level y is a
sum of upsilon(y) iid exponential gaps, where upsilon(y) is the absorption
time of a skip-free-upward Markov chain on {0, ..., ceil(y)} whose transition
probabilities are the busy-period count pmf.  Wald's identity then gives the
mean crossing "time" (in units of marginal service), and the standard
second-moment hitting recursion gives the variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .busy_period import BusyPeriodLaw
from .errors import DomainError
from .simulate import simulate_busy_counts

__all__ = [
    "CrossingReport",
    "crossing_report",
    "crossing_mean",
    "crossing_variance",
    "simulate_crossing_times",
    "enumerate_mean_cycles",
]


@dataclass(frozen=True)
class CrossingReport:
    y: float
    psi0: float  # expected number of busy cycles until the level is reached
    mean_crossing: float  # psi0 / lam
    var_upsilon: float
    var_crossing: float  # (psi0 + var_upsilon) / lam**2


def _check_level(law: BusyPeriodLaw, y: float) -> int:
    if y <= 0:
        raise DomainError(f"y must be > 0, got {y}")
    c = math.ceil(y)
    if c >= 2 and law.s_max < c - 1:
        raise DomainError(
            f"pmf truncated at s_max={law.s_max}, need at least {c - 1} for y={y}"
        )
    return c


def _cycle_mean(law: BusyPeriodLaw, c: int) -> tuple[float, np.ndarray]:
    """psi_0 and psi_1..psi_{c-1} for the chain absorbed at level c."""
    pmf = law.pmf
    psi = np.ones(c)  # psi[k] for transient states k = 0..c-1
    for k in range(c - 2, 0, -1):
        psi[k] = 1.0 + sum(pmf[i - k - 1] * psi[i] for i in range(k + 1, c))
    psi[0] = 1.0 + sum(pmf[k - 1] * psi[k] for k in range(1, c))
    return float(psi[0]), psi


def _cycle_second_moment(law: BusyPeriodLaw, c: int, psi: np.ndarray) -> float:
    """m2(0) = E[upsilon(y)^2] via the absorbing-chain second-moment recursion
    m2(k) = 1 + 2 sum_i p_ki psi_i + sum_i p_ki m2(i) over transient i."""
    pmf = law.pmf
    m2 = np.ones(c)
    for k in range(c - 1, -1, -1):
        acc = 1.0
        for i in range(k + 1, c):
            p = pmf[i - k - 1]
            acc += p * (2.0 * psi[i] + m2[i])
        m2[k] = acc
    return float(m2[0])


def crossing_report(law: BusyPeriodLaw, y: float) -> CrossingReport:
    """Mean and variance of the crossing time of level y (v = 0)."""
    lam = law.lam
    c = _check_level(law, y)
    if c <= 1:
        # a single busy cycle always reaches level 1
        return CrossingReport(
            y=y,
            psi0=1.0,
            mean_crossing=1.0 / lam,
            var_upsilon=0.0,
            var_crossing=1.0 / lam**2,
        )
    psi0, psi = _cycle_mean(law, c)
    m2 = _cycle_second_moment(law, c, psi)
    var_u = m2 - psi0 * psi0
    return CrossingReport(
        y=y,
        psi0=psi0,
        mean_crossing=psi0 / lam,
        var_upsilon=var_u,
        var_crossing=(psi0 + var_u) / lam**2,
    )


def crossing_mean(lam, dist, law: BusyPeriodLaw, y: float) -> float:
    return crossing_report(law, y).mean_crossing


def crossing_variance(lam, dist, law: BusyPeriodLaw, y: float) -> float:
    return crossing_report(law, y).var_crossing


def simulate_crossing_times(lam, dist, y, reps, rng):
    """Pathwise oracle: simulate busy cycles until the cumulative busy-period
    count reaches ceil(y).  Returns (crossing_times, cycle_counts)."""
    if y <= 0:
        raise DomainError(f"y must be > 0, got {y}")
    c = math.ceil(y)
    times = np.zeros(reps)
    cycles = np.zeros(reps, dtype=np.int64)
    total = np.zeros(reps, dtype=np.int64)
    active = np.arange(reps)
    while active.size:
        times[active] += rng.exponential(1.0 / lam, active.size)
        total[active] += simulate_busy_counts(lam, dist, active.size, rng)
        cycles[active] += 1
        active = active[total[active] < c]
    return times, cycles


def enumerate_mean_cycles(law: BusyPeriodLaw, y: float, mass_tol: float = 1e-10):
    """Brute-force E[upsilon(y)] by exhaustive enumeration of chain paths.

    Explores all trajectories of partial sums of busy-period counts until the
    unexplored probability mass drops below ``mass_tol``.  Only practical for
    small ceil(y); used as an independent check of the recursion.
    """
    c = _check_level(law, y)
    if c <= 1:
        return 1.0
    pmf = law.pmf
    tail_from = np.concatenate([[1.0], 1.0 - np.cumsum(pmf)])  # P(N >= s+1)
    mean = 0.0
    # frontier: map level -> probability of being there after `steps` cycles
    frontier = {0: 1.0}
    steps = 0
    while frontier:
        steps += 1
        nxt: dict[int, float] = {}
        for level, prob in frontier.items():
            # absorb with probability P(N >= c - level)
            absorb = float(tail_from[min(c - level - 1, len(tail_from) - 1)])
            mean += steps * prob * absorb
            for jump in range(1, c - level):
                p = prob * pmf[jump - 1]
                if p > 0.0:
                    nxt[level + jump] = nxt.get(level + jump, 0.0) + p
        frontier = {k: p for k, p in nxt.items() if p > mass_tol / c}
        if sum(frontier.values()) < mass_tol:
            # remaining mass absorbs eventually; bound its contribution out
            break
    return mean
