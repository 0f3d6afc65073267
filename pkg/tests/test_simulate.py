"""Simulator self-consistency: two pathwise routes, counts, decompositions."""

import math

import numpy as np
import pytest
from scipy import stats

from qel import (
    DomainError,
    Exponential,
    Fixed,
    ModelParams,
    Stationary,
    TruncationError,
    count_pmf,
    derivative_process,
    externality_from_path,
    make_stream,
    simulate_path,
    split_streams,
)
from qel.simulate import (
    ArrivalStream,
    count_initial_jumps,
    direct_externality,
    sample_decomposition_batch,
    sample_externality_paths,
    sample_increment_batch,
    simulate_busy_counts,
)


def _params(lam=0.5, rate=1.0, v=1.0):
    return ModelParams(lam, Exponential(rate=rate), Fixed(v))


def test_two_routes_agree_pathwise(rng):
    """The coupled-workload sum and the busy-cycle identity are the same
    random variable on a shared arrival stream."""
    params = _params()
    x = 2.0
    worst = 0.0
    for _ in range(300):
        stream = ArrivalStream(params.lam, params.dist, rng)
        path = simulate_path(params, x, rng, stream=stream, v=1.0)
        a = externality_from_path(path, x)
        b = direct_externality(params, 1.0, x, stream)
        worst = max(worst, abs(a - b) / max(abs(b), 1.0))
    assert worst < 1e-9


def test_externality_is_zero_at_zero(rng):
    path = simulate_path(_params(), 1.0, rng)
    assert externality_from_path(path, 0.0) == 0.0


def test_derivative_integrates_to_externality(rng):
    """Piecewise-exact integration of the step derivative recovers E_v(x)."""
    params = _params()
    x = 1.5
    path = simulate_path(params, x, rng)
    breaks = np.concatenate([[0.0], np.cumsum(path.idle_gaps)])
    breaks = np.concatenate([breaks[breaks < x], [x]])
    integral = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        integral += derivative_process(path, a) * (b - a)
    assert integral == pytest.approx(externality_from_path(path, x), abs=1e-12)


def test_externality_path_is_convex_nondecreasing(rng):
    params = _params()
    path = simulate_path(params, 3.0, rng)
    grid = np.linspace(0.0, 3.0, 31)
    vals = np.array([externality_from_path(path, x) for x in grid])
    diffs = np.diff(vals)
    assert np.all(diffs >= -1e-12)
    assert np.all(np.diff(diffs) >= -1e-12)


def test_horizon_and_truncation_guards(rng):
    params = _params()
    path = simulate_path(params, 1.0, rng)
    with pytest.raises(DomainError):
        externality_from_path(path, 2.0)
    tiny = simulate_path(params, 1.0, rng, max_events=2)
    assert tiny.truncated
    with pytest.raises(TruncationError):
        externality_from_path(tiny, 0.5)


def test_busy_counts_match_pmf(rng):
    lam, dist = 1.0, Exponential(rate=2.0)
    law = count_pmf(lam, dist, 200)
    counts = simulate_busy_counts(lam, dist, 100_000, rng)
    emp = np.bincount(counts, minlength=law.s_max + 1)[1:] / len(counts)
    tv = 0.5 * np.abs(emp[: law.s_max] - law.pmf).sum()
    assert tv < 0.01


def test_initial_jump_counts_match_paths(rng):
    """count_initial_jumps agrees in law with the M recorded by simulate_path."""
    params = _params(lam=0.7, rate=1.0, v=2.0)
    fast = count_initial_jumps(np.full(4000, 2.0), params.lam, params.dist, rng)
    slow = np.array(
        [simulate_path(params, 0.5, rng, v=2.0).M for _ in range(4000)]
    )
    res = stats.ks_2samp(fast, slow)
    assert res.pvalue > 0.01
    assert count_initial_jumps(np.zeros(5), params.lam, params.dist, rng).sum() == 0


def test_vectorized_paths_match_scalar_paths(rng):
    """sample_externality_paths agrees in law with per-path simulation."""
    params = _params(lam=0.5, rate=1.0, v=1.0)
    x = 1.0
    batch = sample_externality_paths(params, [x], 5000, rng)[:, 0]
    single = np.array(
        [externality_from_path(simulate_path(params, x, rng), x) for _ in range(5000)]
    )
    res = stats.ks_2samp(batch, single)
    assert res.pvalue > 0.01


def test_vectorized_paths_stationary_init(rng):
    params = ModelParams(0.5, Exponential(rate=1.0), Stationary())
    vals = sample_externality_paths(params, [1.0], 2000, rng)
    assert vals.shape == (2000, 1)
    assert np.all(vals >= 0.0)


def test_decomposition_matches_closed_form_moments(rng):
    from qel import autocovariance, mean_externality, variance_externality

    params = _params(lam=0.5, rate=1.0, v=1.0)
    law = count_pmf(params.lam, params.dist, 400)
    xs = [1.0, 1.0]
    draws = sample_decomposition_batch(params, xs, law, 200_000, rng)
    m1 = mean_externality(params.lam, params.dist, params.init, 1.0)
    m2 = mean_externality(params.lam, params.dist, params.init, 2.0)
    v1 = variance_externality(params.lam, params.dist, params.init, 1.0)
    cov = autocovariance(params.lam, params.dist, params.init, 1.0, 1.0)
    n = len(draws)
    assert abs(draws[:, 0].mean() - m1) < 4 * draws[:, 0].std() / math.sqrt(n)
    assert abs(draws[:, 1].mean() - m2) < 4 * draws[:, 1].std() / math.sqrt(n)
    prod = (draws[:, 0] - m1) * (draws[:, 1] - m2)
    assert abs(np.cov(draws.T)[0, 1] - cov) < 4 * prod.std() / math.sqrt(n)
    c = draws[:, 0] - m1
    se_var = math.sqrt(np.mean(c**4) / n)
    assert abs(draws[:, 0].var() - v1) < 4 * se_var


def test_increment_sampler_matches_difference_law(rng):
    params = _params(lam=0.5, rate=1.0, v=1.0)
    law = count_pmf(params.lam, params.dist, 400)
    inc = sample_increment_batch(params, 1.0, 1.0, law, 20_000, rng)
    joint = sample_decomposition_batch(params, [1.0, 1.0], law, 20_000, rng)
    res = stats.ks_2samp(inc, joint[:, 1] - joint[:, 0])
    assert res.pvalue > 0.01


def test_streams_are_reproducible_and_independent():
    a1 = make_stream(42).standard_normal(5)
    a2 = make_stream(42).standard_normal(5)
    assert np.array_equal(a1, a2)
    s1, s2 = split_streams(42, 2)
    assert not np.array_equal(s1.standard_normal(5), s2.standard_normal(5))
