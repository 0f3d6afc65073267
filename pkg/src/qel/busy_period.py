"""Law of the number of customers served in one M/G/1 busy period.

The generating function of the count solves the fixed point
``y = z * b(lam * (1 - y))``; repeated differentiation of the fixed point at
zero gives a pmf recursion and a moment recursion, both driven by incomplete
Bell polynomials.  The pmf recursion is carried in ratio-normalized form
(Bell values divided by k! and multiplied by m!) so that no factorial is ever
materialized; the poissonized LST derivative factors supplied by the
distribution objects are bounded in m for every supported family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import ServiceDistribution
from .errors import DomainError, NumericalError

__all__ = [
    "BusyPeriodLaw",
    "bell_incomplete",
    "pgf_fixed_point",
    "count_lst",
    "count_pmf",
    "count_moment",
    "count_moments_closed_form",
]

DEFAULT_S_MAX = 200
TAIL_STOP = 1e-9
NEGATIVE_PROB_TOL = 1e-9
FIXED_POINT_TOL = 1e-13


@dataclass(frozen=True)
class BusyPeriodLaw:
    """Truncated pmf of the per-busy-period customer count, plus moments.

    ``pmf[i]`` is N(i+1) for i = 0..s_max-1; ``tail_mass`` is the probability
    not covered by the truncation.  ``moments[j]`` is eta_{j+1}.
    """

    lam: float
    dist: ServiceDistribution
    pmf: np.ndarray
    tail_mass: float
    moments: tuple[float, ...]

    @property
    def s_max(self) -> int:
        return len(self.pmf)

    @property
    def support(self) -> np.ndarray:
        return np.arange(1, self.s_max + 1)

    def sampler_probabilities(self) -> np.ndarray:
        """Truncated pmf renormalized for sampling (tail mass resampled)."""
        return self.pmf / self.pmf.sum()

    def sample(self, rng: np.random.Generator, size=None):
        return rng.choice(self.support, size=size, p=self.sampler_probabilities())


def bell_incomplete(k: int, m: int, xs) -> float:
    """Incomplete Bell polynomial B_{k,m}[x_1, ..., x_{k-m+1}].

    Uses the recurrence
    B_{k,m} = sum_i C(k-1, i-1) x_i B_{k-i, m-1}.
    """
    if m < 1 or m > k:
        raise DomainError(f"need 1 <= m <= k, got k={k}, m={m}")
    xs = list(xs)
    if len(xs) < k - m + 1:
        raise DomainError(
            f"need at least {k - m + 1} arguments for B_{{{k},{m}}}, got {len(xs)}"
        )
    # table[j][l] = B_{j,l}; only l <= j needed
    table = [[0.0] * (m + 1) for _ in range(k + 1)]
    table[0][0] = 1.0
    for j in range(1, k + 1):
        # only entries with j - l <= k - m can contribute to B_{k,m}
        for l in range(max(1, j - (k - m)), min(j, m) + 1):
            acc = 0.0
            for i in range(1, j - l + 2):
                acc += math.comb(j - 1, i - 1) * xs[i - 1] * table[j - i][l - 1]
            table[j][l] = acc
    return table[k][m]


def pgf_fixed_point(lam: float, dist: ServiceDistribution, z: float) -> float:
    """Unique y in (0,1) with y = z * b(lam * (1 - y)).

    Solved by bisection: g(y) = y - z*b(lam*(1-y)) satisfies g(0) < 0 and
    g(1) > 0 for z in (0,1), so the bracket is guaranteed.
    """
    if not 0.0 < z < 1.0:
        raise DomainError(f"z must be in (0,1), got {z}")
    lo, hi = 0.0, 1.0
    while hi - lo > FIXED_POINT_TOL:
        mid = 0.5 * (lo + hi)
        if mid - z * dist.lst(lam * (1.0 - mid)) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def count_lst(lam: float, dist: ServiceDistribution, alpha: float) -> float:
    """LST of the busy-period count: sum_s e^{-alpha s} N(s), alpha > 0."""
    if alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    return pgf_fixed_point(lam, dist, math.exp(-alpha))


def count_pmf(
    lam: float,
    dist: ServiceDistribution,
    s_max: int = DEFAULT_S_MAX,
    n_moments: int = 3,
) -> BusyPeriodLaw:
    """Exact truncated pmf N(1..s_max) plus moments eta_1..eta_n_moments.

    N(1) = b(lam); for s >= 2 the Bell-polynomial recursion is evaluated in
    the normalized variables D_{k,m} = m! B_{k,m}[1! N(1), ..., ] / k!, which
    satisfy D_{k,m} = (m/k) sum_i i N(i) D_{k-i,m-1} and give
    N(s) = sum_m g_m D_{s-1,m} with g_m the poissonized LST derivatives.
    Truncation stops early once the tail mass drops below 1e-9.
    """
    if s_max < 1:
        raise DomainError(f"s_max must be >= 1, got {s_max}")
    rho = lam * dist.moment(1)
    if not rho < 1.0:
        raise DomainError(f"unstable model: rho = {rho} must be < 1")

    g = dist.poissonized_lst_derivatives(lam, s_max - 1)
    pmf = np.zeros(s_max)
    pmf[0] = dist.lst(lam)

    # rows[k][m] = D_{k,m}; row k is appended once N(1..k) is known
    rows: list[np.ndarray] = [np.array([1.0])]
    cum = pmf[0]
    used = 1
    for s in range(2, s_max + 1):
        k = s - 1
        row = np.zeros(k + 1)
        for i in range(1, k + 1):
            prev = rows[k - i]  # D_{k-i, 0..k-i}
            row[1 : k - i + 2] += (i * pmf[i - 1]) * prev
        row *= np.arange(k + 1) / k
        rows.append(row)
        val = float(np.dot(g[1 : k + 1], row[1:]))
        if val < 0.0:
            if val < -NEGATIVE_PROB_TOL:
                raise NumericalError(
                    f"pmf recursion unstable: N({s}) = {val} < -{NEGATIVE_PROB_TOL}"
                )
            val = 0.0
        pmf[s - 1] = val
        cum += val
        used = s
        if 1.0 - cum < TAIL_STOP:
            break

    pmf = pmf[:used]
    tail = max(1.0 - float(pmf.sum()), 0.0)
    moments = tuple(count_moment(lam, dist, n) for n in range(1, n_moments + 1))
    return BusyPeriodLaw(lam=lam, dist=dist, pmf=pmf, tail_mass=tail, moments=moments)


def count_moment(lam: float, dist: ServiceDistribution, n: int) -> float:
    """n-th moment eta_n of the busy-period count, by the LST recursion."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    rho = lam * dist.moment(1)
    if not rho < 1.0:
        raise DomainError(f"unstable model: rho = {rho} must be < 1")
    etas: list[float] = []
    for nn in range(1, n + 1):
        etas.append(_next_moment(lam, dist, nn, etas))
    return etas[-1]


def _signed_etas(etas, count):
    # arguments (-1)^i eta_i fed to the Bell polynomials
    return [(-1.0) ** i * etas[i - 1] for i in range(1, count + 1)]


def _next_moment(lam, dist, n, etas):
    rho = lam * dist.moment(1)
    total = (-1.0) ** n
    for k in range(1, n):
        inner = 0.0
        for m in range(1, k + 1):
            xs = _signed_etas(etas, k - m + 1)
            inner += lam**m * dist.moment(m) * bell_incomplete(k, m, xs)
        total += math.comb(n, k) * (-1.0) ** (n - k) * inner
    for m in range(2, n + 1):
        xs = _signed_etas(etas, n - m + 1)
        total += lam**m * dist.moment(m) * bell_incomplete(n, m, xs)
    return (-1.0) ** n / (1.0 - rho) * total


def count_moments_closed_form(lam: float, dist: ServiceDistribution):
    """(eta_1, eta_2, eta_3) in closed form, in terms of mu_1..mu_3."""
    mu1, mu2, mu3 = dist.moment(1), dist.moment(2), dist.moment(3)
    rho = lam * mu1
    if not rho < 1.0:
        raise DomainError(f"unstable model: rho = {rho} must be < 1")
    one = 1.0 - rho
    eta1 = 1.0 / one
    eta2 = eta1 * (1.0 + 2.0 * rho / one + lam**2 * mu2 / one**2)
    eta3 = eta1 * (
        1.0
        + 3.0 * rho / one
        + 3.0 * (rho * eta2 + lam**2 * mu2 / one**2)
        + 3.0 * lam**2 * mu2 * eta2 / one
        + lam**3 * mu3 / one**3
    )
    return eta1, eta2, eta3
