"""Parametric service-time and initial-workload laws.

Each service distribution exposes exactly the functionals the closed-form
machinery needs: sampling, the Laplace-Stieltjes transform (LST)
``b(s) = E[exp(-s B)]``, its derivatives, and raw moments.  All four
supported families have analytic LST derivatives of every order, which keeps
the busy-period recursions exact rather than numeric.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "ServiceDistribution",
    "Exponential",
    "Deterministic",
    "Erlang",
    "HyperExponential",
    "InitialWorkload",
    "Fixed",
    "RandomWorkload",
    "Stationary",
    "ModelParams",
    "lst",
    "lst_derivative",
    "moment",
    "sample_service",
    "sample_initial_workload",
    "workload_lst",
    "dist_from_config",
    "dist_to_config",
    "init_from_config",
    "init_to_config",
]

_WEIGHT_TOL = 1e-12


class ServiceDistribution:
    """Base class for job-size laws with closed-form LST derivatives."""

    def lst(self, s: float) -> float:
        raise NotImplementedError

    def lst_derivative(self, m: int, s: float) -> float:
        """m-th derivative of the LST: integral of (-t)^m e^{-st} dB(t)."""
        raise NotImplementedError

    def moment(self, k: int) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        raise NotImplementedError

    def sample_equilibrium(self, rng: np.random.Generator, size=None):
        """Draw from the integrated-tail (equilibrium) distribution of B."""
        raise NotImplementedError

    def poissonized_lst_derivatives(self, lam: float, m_max: int) -> np.ndarray:
        """Array of g_m = (-lam)^m b^(m)(lam) / m! for m = 0..m_max.

        These factors are bounded in m for every supported family, whereas
        b^(m)(lam) itself grows like m!.  The busy-period pmf recursion is
        phrased in terms of g_m to avoid factorial overflow.
        """
        raise NotImplementedError


def _check_positive(name: str, value: float) -> None:
    if not value > 0:
        raise DomainError(f"{name} must be strictly positive, got {value}")


@dataclass(frozen=True)
class Exponential(ServiceDistribution):
    rate: float

    def __post_init__(self):
        _check_positive("rate", self.rate)

    def lst(self, s):
        if s < 0:
            raise DomainError(f"s must be >= 0, got {s}")
        return self.rate / (self.rate + s)

    def lst_derivative(self, m, s):
        if m < 0 or s < 0:
            raise DomainError("m and s must be nonnegative")
        mu = self.rate
        return (-1.0) ** m * math.factorial(m) * mu / (mu + s) ** (m + 1)

    def moment(self, k):
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        return math.factorial(k) / self.rate**k

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def sample_equilibrium(self, rng, size=None):
        # memoryless: equilibrium law equals the law itself
        return rng.exponential(1.0 / self.rate, size)

    def poissonized_lst_derivatives(self, lam, m_max):
        mu = self.rate
        r = lam / (mu + lam)
        return (mu / (mu + lam)) * r ** np.arange(m_max + 1)


@dataclass(frozen=True)
class Deterministic(ServiceDistribution):
    d: float

    def __post_init__(self):
        _check_positive("d", self.d)

    def lst(self, s):
        if s < 0:
            raise DomainError(f"s must be >= 0, got {s}")
        return math.exp(-s * self.d)

    def lst_derivative(self, m, s):
        if m < 0 or s < 0:
            raise DomainError("m and s must be nonnegative")
        return (-self.d) ** m * math.exp(-s * self.d)

    def moment(self, k):
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        return self.d**k

    def sample(self, rng, size=None):
        if size is None:
            return self.d
        return np.full(size, self.d)

    def sample_equilibrium(self, rng, size=None):
        return rng.uniform(0.0, self.d, size)

    def poissonized_lst_derivatives(self, lam, m_max):
        # g_m is the Poisson(lam*d) pmf at m
        out = np.empty(m_max + 1)
        out[0] = math.exp(-lam * self.d)
        for m in range(1, m_max + 1):
            out[m] = out[m - 1] * lam * self.d / m
        return out


@dataclass(frozen=True)
class Erlang(ServiceDistribution):
    shape: int
    rate: float

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise DomainError(f"shape must be a positive integer, got {self.shape}")
        _check_positive("rate", self.rate)

    def lst(self, s):
        if s < 0:
            raise DomainError(f"s must be >= 0, got {s}")
        return (self.rate / (self.rate + s)) ** self.shape

    def lst_derivative(self, m, s):
        if m < 0 or s < 0:
            raise DomainError("m and s must be nonnegative")
        n, mu = self.shape, self.rate
        coeff = math.prod(range(n, n + m))  # (n)(n+1)...(n+m-1)
        return (-1.0) ** m * coeff * mu**n / (mu + s) ** (n + m)

    def moment(self, k):
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        n = self.shape
        return math.prod(range(n, n + k)) / self.rate**k

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, 1.0 / self.rate, size)

    def sample_equilibrium(self, rng, size=None):
        # integrated tail of Erlang(n) is the equal-weight mixture of
        # Erlang(1..n) with the same rate
        j = rng.integers(1, self.shape + 1, size)
        return rng.gamma(j, 1.0 / self.rate, size)

    def poissonized_lst_derivatives(self, lam, m_max):
        n, mu = self.shape, self.rate
        r = lam / (mu + lam)
        out = np.empty(m_max + 1)
        out[0] = (mu / (mu + lam)) ** n
        for m in range(1, m_max + 1):
            out[m] = out[m - 1] * (n + m - 1) / m * r
        return out


@dataclass(frozen=True)
class HyperExponential(ServiceDistribution):
    weights: tuple[float, ...]
    rates: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(self.weights))
        object.__setattr__(self, "rates", tuple(self.rates))
        if len(self.weights) != len(self.rates) or not self.weights:
            raise DomainError("weights and rates must be equal-length, nonempty")
        for w in self.weights:
            if w < 0:
                raise DomainError(f"weights must be nonnegative, got {w}")
        for mu in self.rates:
            _check_positive("rate", mu)
        if abs(sum(self.weights) - 1.0) > _WEIGHT_TOL:
            raise DomainError(f"weights must sum to 1, got {sum(self.weights)}")

    def lst(self, s):
        if s < 0:
            raise DomainError(f"s must be >= 0, got {s}")
        return sum(w * mu / (mu + s) for w, mu in zip(self.weights, self.rates))

    def lst_derivative(self, m, s):
        if m < 0 or s < 0:
            raise DomainError("m and s must be nonnegative")
        fact = math.factorial(m)
        return (-1.0) ** m * fact * sum(
            w * mu / (mu + s) ** (m + 1) for w, mu in zip(self.weights, self.rates)
        )

    def moment(self, k):
        if k < 1:
            raise DomainError(f"k must be >= 1, got {k}")
        return math.factorial(k) * sum(
            w / mu**k for w, mu in zip(self.weights, self.rates)
        )

    def sample(self, rng, size=None):
        if size is None:
            i = rng.choice(len(self.rates), p=self.weights)
            return rng.exponential(1.0 / self.rates[i])
        i = rng.choice(len(self.rates), size=size, p=self.weights)
        return rng.exponential(1.0 / np.asarray(self.rates)[i])

    def sample_equilibrium(self, rng, size=None):
        # integrated tail is again hyperexponential with reweighted components
        mu1 = self.moment(1)
        eq_w = np.array(
            [w / (mu * mu1) for w, mu in zip(self.weights, self.rates)]
        )
        eq_w /= eq_w.sum()
        if size is None:
            i = rng.choice(len(self.rates), p=eq_w)
            return rng.exponential(1.0 / self.rates[i])
        i = rng.choice(len(self.rates), size=size, p=eq_w)
        return rng.exponential(1.0 / np.asarray(self.rates)[i])

    def poissonized_lst_derivatives(self, lam, m_max):
        m = np.arange(m_max + 1)
        out = np.zeros(m_max + 1)
        for w, mu in zip(self.weights, self.rates):
            out += w * (mu / (mu + lam)) * (lam / (mu + lam)) ** m
        return out


# ---------------------------------------------------------------------------
# Initial workload
# ---------------------------------------------------------------------------


class InitialWorkload:
    """Base class for the workload present when the tagged customer arrives."""


@dataclass(frozen=True)
class Fixed(InitialWorkload):
    v: float

    def __post_init__(self):
        if self.v < 0:
            raise DomainError(f"v must be nonnegative, got {self.v}")


@dataclass(frozen=True)
class RandomWorkload(InitialWorkload):
    """Generic random initial workload given by a sampler and its LST."""

    sampler: object = field(compare=False)  # callable (rng, size=None) -> draws
    lst: object = field(compare=False)  # callable t -> E[exp(-t v)]
    mean: float = 0.0
    variance: float = 0.0

    def __post_init__(self):
        if self.mean < 0 or self.variance < 0:
            raise DomainError("mean and variance must be nonnegative")


@dataclass(frozen=True)
class Stationary(InitialWorkload):
    """Workload drawn from the stationary M/G/1 law of the same (lam, dist)."""


def stationary_workload_mean(lam: float, dist: ServiceDistribution) -> float:
    rho = lam * dist.moment(1)
    return lam * dist.moment(2) / (2.0 * (1.0 - rho))


def stationary_workload_variance(lam: float, dist: ServiceDistribution) -> float:
    rho = lam * dist.moment(1)
    m = stationary_workload_mean(lam, dist)
    # second moment of the stationary workload (Takacs):
    # E W^2 = lam mu3 / (3(1-rho)) + 2 m^2
    ew2 = lam * dist.moment(3) / (3.0 * (1.0 - rho)) + 2.0 * m * m
    return ew2 - m * m


@dataclass(frozen=True)
class ModelParams:
    lam: float
    dist: ServiceDistribution
    init: InitialWorkload

    def __post_init__(self):
        _check_positive("lam", self.lam)
        if not self.rho < 1.0:
            raise DomainError(
                f"unstable model: rho = lam * mu1 = {self.rho} must be < 1"
            )

    @property
    def rho(self) -> float:
        return self.lam * self.dist.moment(1)

    def init_mean(self) -> float:
        return initial_workload_mean(self.init, self.lam, self.dist)

    def init_variance(self) -> float:
        return initial_workload_variance(self.init, self.lam, self.dist)


def initial_workload_mean(init, lam, dist) -> float:
    if isinstance(init, Fixed):
        return init.v
    if isinstance(init, RandomWorkload):
        return init.mean
    if isinstance(init, Stationary):
        return stationary_workload_mean(lam, dist)
    raise DomainError(f"unknown initial workload {init!r}")


def initial_workload_variance(init, lam, dist) -> float:
    if isinstance(init, Fixed):
        return 0.0
    if isinstance(init, RandomWorkload):
        return init.variance
    if isinstance(init, Stationary):
        return stationary_workload_variance(lam, dist)
    raise DomainError(f"unknown initial workload {init!r}")


# ---------------------------------------------------------------------------
# Operation-style wrappers
# ---------------------------------------------------------------------------


def lst(dist: ServiceDistribution, s: float) -> float:
    return dist.lst(s)


def lst_derivative(dist: ServiceDistribution, m: int, s: float) -> float:
    return dist.lst_derivative(m, s)


def moment(dist: ServiceDistribution, k: int) -> float:
    return dist.moment(k)


def sample_service(dist: ServiceDistribution, rng, size=None):
    return dist.sample(rng, size)


def sample_initial_workload(init, lam, dist, rng, size=None):
    """Draw the workload seen by the tagged customer on arrival.

    The Stationary variant uses the Pollaczek-Khinchine representation:
    a geometric(rho) number of iid equilibrium-distribution draws, which is
    exact (no burn-in).
    """
    if isinstance(init, Fixed):
        if size is None:
            return init.v
        return np.full(size, init.v)
    if isinstance(init, RandomWorkload):
        return init.sampler(rng, size) if size is not None else init.sampler(rng)
    if isinstance(init, Stationary):
        rho = lam * dist.moment(1)
        if size is None:
            k = rng.geometric(1.0 - rho) - 1
            if k == 0:
                return 0.0
            return float(np.sum(dist.sample_equilibrium(rng, k)))
        k = rng.geometric(1.0 - rho, size) - 1
        out = np.zeros(size)
        total = int(k.sum())
        if total:
            draws = dist.sample_equilibrium(rng, total)
            idx = np.repeat(np.arange(k.size), k)
            np.add.at(out, idx, draws)
        return out
    raise DomainError(f"unknown initial workload {init!r}")


def workload_lst(init, lam, dist, t: float) -> float:
    """LST of the initial workload, E[exp(-t v)]; the limit t -> 0 is 1."""
    if t < 0:
        raise DomainError(f"t must be >= 0, got {t}")
    if t == 0:
        return 1.0
    if isinstance(init, Fixed):
        return math.exp(-t * init.v)
    if isinstance(init, RandomWorkload):
        return init.lst(t)
    if isinstance(init, Stationary):
        rho = lam * dist.moment(1)
        return (1.0 - rho) * t / (t - lam * (1.0 - dist.lst(t)))
    raise DomainError(f"unknown initial workload {init!r}")


# ---------------------------------------------------------------------------
# JSON config round trip
# ---------------------------------------------------------------------------


def dist_from_config(cfg: dict) -> ServiceDistribution:
    kind = cfg.get("type")
    if kind == "exponential":
        return Exponential(rate=cfg["rate"])
    if kind == "deterministic":
        return Deterministic(d=cfg["d"])
    if kind == "erlang":
        return Erlang(shape=cfg["shape"], rate=cfg["rate"])
    if kind == "hyperexp":
        return HyperExponential(
            weights=tuple(cfg["weights"]), rates=tuple(cfg["rates"])
        )
    raise DomainError(f"unknown service distribution type {kind!r}")


def dist_to_config(dist: ServiceDistribution) -> dict:
    if isinstance(dist, Exponential):
        return {"type": "exponential", "rate": dist.rate}
    if isinstance(dist, Deterministic):
        return {"type": "deterministic", "d": dist.d}
    if isinstance(dist, Erlang):
        return {"type": "erlang", "shape": dist.shape, "rate": dist.rate}
    if isinstance(dist, HyperExponential):
        return {
            "type": "hyperexp",
            "weights": list(dist.weights),
            "rates": list(dist.rates),
        }
    raise DomainError(f"unknown service distribution {dist!r}")


def init_from_config(cfg: dict) -> InitialWorkload:
    kind = cfg.get("type")
    if kind == "fixed":
        return Fixed(v=cfg["v"])
    if kind == "stationary":
        return Stationary()
    raise DomainError(f"unknown initial workload type {kind!r}")


def init_to_config(init: InitialWorkload) -> dict:
    if isinstance(init, Fixed):
        return {"type": "fixed", "v": init.v}
    if isinstance(init, Stationary):
        return {"type": "stationary"}
    raise DomainError(f"initial workload {init!r} has no config form")
