"""Closed-form moments and finite-dimensional LSTs of the externality process.

All formulas are driven by the busy-period count moments eta_1, eta_2 and, for
random initial workload, by the mean and variance of that workload.  The
finite-dimensional LST multiplies one prefactor (the workload LST evaluated at
a fixed-point transform value) with one unit-interval integral per increment;
the integrals are smooth and evaluated by Gauss-Legendre quadrature with a
bisection refinement check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .busy_period import count_moments_closed_form, pgf_fixed_point
from .distributions import (
    InitialWorkload,
    ServiceDistribution,
    initial_workload_mean,
    initial_workload_variance,
    workload_lst,
)
from .errors import DomainError, NumericalError

__all__ = [
    "MomentReport",
    "mean_externality",
    "variance_externality",
    "autocovariance",
    "autocorrelation",
    "moment_report",
    "finite_dim_lst",
    "finite_dim_lst_detailed",
]

QUADRATURE_NODES = 64
QUADRATURE_TOL = 1e-8


def mean_externality(lam, dist, init, x) -> float:
    """E[E_v(x)] = lam * x * (E[v] + x/2) * eta_1."""
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    eta1, _, _ = count_moments_closed_form(lam, dist)
    ev = initial_workload_mean(init, lam, dist)
    return lam * x * (ev + 0.5 * x) * eta1


def variance_externality(lam, dist, init, x) -> float:
    """Var[E_v(x)]; the Var(v) term vanishes for a fixed initial workload."""
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    eta1, eta2, _ = count_moments_closed_form(lam, dist)
    ev = initial_workload_mean(init, lam, dist)
    vv = initial_workload_variance(init, lam, dist)
    return (lam * x * eta1) ** 2 * vv + lam * eta2 * x * x * (ev + x / 3.0)


def autocovariance(lam, dist, init, x1, x2) -> float:
    """Cov[E_v(x1), E_v(x1 + x2)]."""
    if x1 < 0 or x2 < 0:
        raise DomainError("x1 and x2 must be nonnegative")
    eta1, eta2, _ = count_moments_closed_form(lam, dist)
    ev = initial_workload_mean(init, lam, dist)
    vv = initial_workload_variance(init, lam, dist)
    base = (lam * eta2 / 2.0) * (
        (2.0 * x1**3 + 6.0 * ev * x1**2 + 3.0 * x1**2 * x2 + 6.0 * ev * x1 * x2) / 3.0
    )
    return base + lam**2 * eta1**2 * x1 * (x1 + x2) * vv


def autocorrelation(lam, dist, init, x1, x2) -> float:
    """Corr[E_v(x1), E_v(x1 + x2)].

    For a fixed initial workload this is invariant with respect to the
    arrival rate and the service distribution.
    """
    if x1 <= 0:
        raise DomainError(f"x1 must be > 0 (degenerate otherwise), got {x1}")
    cov = autocovariance(lam, dist, init, x1, x2)
    s1 = variance_externality(lam, dist, init, x1)
    s2 = variance_externality(lam, dist, init, x1 + x2)
    return cov / math.sqrt(s1 * s2)


@dataclass(frozen=True)
class MomentReport:
    lam: float
    dist: ServiceDistribution
    init: InitialWorkload
    x1: float
    x2: float
    mean: float
    variance: float
    covariance: float
    correlation: float


def moment_report(lam, dist, init, x1, x2=0.0) -> MomentReport:
    """Mean/variance at x1 plus covariance/correlation of (x1, x1 + x2)."""
    return MomentReport(
        lam=lam,
        dist=dist,
        init=init,
        x1=x1,
        x2=x2,
        mean=mean_externality(lam, dist, init, x1),
        variance=variance_externality(lam, dist, init, x1),
        covariance=autocovariance(lam, dist, init, x1, x2),
        correlation=autocorrelation(lam, dist, init, x1, x2) if x1 > 0 else math.nan,
    )


# ---------------------------------------------------------------------------
# Finite-dimensional LST
# ---------------------------------------------------------------------------


def _transform_arguments(xs: np.ndarray, alphas: np.ndarray):
    """Scalars of the joint transform: the prefactor argument w and, for each l,
    the affine-in-u quadrature arguments s_l(u) = a_l * u + c_l."""
    cumx = np.cumsum(xs)
    w = float(np.dot(alphas, cumx))
    k = len(xs)
    a = np.empty(k)
    c = np.empty(k)
    for l in range(k):
        tail = alphas[l:].sum()
        a[l] = xs[l] * tail
        c[l] = float(np.dot(alphas[l + 1 :], cumx[l + 1 :] - cumx[l]))
    return w, a, c


def _gauss_legendre_01(n: int):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    return 0.5 * (nodes + 1.0), 0.5 * weights


def finite_dim_lst_detailed(lam, dist, init, xs, alphas):
    """Joint LST E[exp(-sum_l alpha_l E_v(x_1+...+x_l))].

    Returns (value, quadrature_error) where the error is the largest
    disagreement between the single-panel and bisected quadratures of any
    factor.  Disagreement above 1e-8 raises NumericalError.
    """
    xs = np.asarray(xs, dtype=float)
    alphas = np.asarray(alphas, dtype=float)
    if xs.shape != alphas.shape or xs.ndim != 1 or xs.size == 0:
        raise DomainError("xs and alphas must be equal-length nonempty vectors")
    if np.any(xs <= 0) or np.any(alphas <= 0):
        raise DomainError("all xs and alphas must be positive")
    rho = lam * dist.moment(1)
    if not rho < 1.0:
        raise DomainError(f"unstable model: rho = {rho} must be < 1")

    cache: dict[float, float] = {}

    def n_tilde(alpha: float) -> float:
        got = cache.get(alpha)
        if got is None:
            got = pgf_fixed_point(lam, dist, math.exp(-alpha))
            cache[alpha] = got
        return got

    w, a, c = _transform_arguments(xs, alphas)
    prefactor = workload_lst(init, lam, dist, lam * (1.0 - n_tilde(w)))

    u1, w1 = _gauss_legendre_01(QUADRATURE_NODES)
    value = prefactor
    worst = 0.0
    for l in range(len(xs)):

        def integrand(u):
            return np.array(
                [math.exp(lam * xs[l] * (n_tilde(a[l] * uu + c[l]) - 1.0)) for uu in u]
            )

        coarse = float(np.dot(w1, integrand(u1)))
        fine = 0.5 * float(np.dot(w1, integrand(0.5 * u1))) + 0.5 * float(
            np.dot(w1, integrand(0.5 + 0.5 * u1))
        )
        disagreement = abs(coarse - fine)
        if disagreement > QUADRATURE_TOL:
            raise NumericalError(
                f"quadrature did not converge for factor {l}: "
                f"refinement disagreement {disagreement}"
            )
        worst = max(worst, disagreement)
        value *= fine
    return value, worst


def finite_dim_lst(lam, dist, init, xs, alphas) -> float:
    """Joint LST value (see finite_dim_lst_detailed)."""
    return finite_dim_lst_detailed(lam, dist, init, xs, alphas)[0]
