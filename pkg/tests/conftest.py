"""Shared fixtures plus a terminal summary of the acceptance checks."""

import numpy as np
import pytest

from qel import Erlang, Exponential, HyperExponential, make_stream

_acceptance_results: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid and report.when == "call":
        name = report.nodeid.split("::")[-1]
        _acceptance_results[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(_acceptance_results, key=_criterion_key):
        terminalreporter.write_line(f"{_acceptance_results[name]} {name}")


def _criterion_key(name: str):
    digits = "".join(ch for ch in name if ch.isdigit())
    return (int(digits) if digits else 0, name)


@pytest.fixture
def rng():
    return make_stream(20260823)


@pytest.fixture(
    params=[
        Exponential(rate=2.0),
        Erlang(shape=3, rate=3.0),
        HyperExponential(weights=(0.4, 0.6), rates=(1.0, 3.0)),
    ],
    ids=["exp", "erlang", "hyperexp"],
)
def service_dist(request):
    return request.param


def lam_for_rho(dist, rho: float) -> float:
    return rho / dist.moment(1)


@pytest.fixture
def rho_grid():
    return (0.3, 0.6, 0.9)


def sample_variance_se(x: np.ndarray) -> float:
    """Standard error of the sample variance via the fourth central moment."""
    n = len(x)
    c = x - x.mean()
    m2 = np.mean(c**2)
    m4 = np.mean(c**4)
    return np.sqrt(max(m4 - m2**2, 0.0) / n)


def sample_cov_se(x: np.ndarray, y: np.ndarray) -> float:
    """Standard error of the sample covariance via the product moments."""
    n = len(x)
    p = (x - x.mean()) * (y - y.mean())
    return np.sqrt(p.var() / n)
