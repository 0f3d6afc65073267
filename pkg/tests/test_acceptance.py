"""End-to-end acceptance checks.

One test per criterion; each prints a single PASS/FAIL line (also collected
into the terminal summary by conftest).  Tolerances are fixed up front; the
Monte-Carlo checks run on fixed seeds derived from one master seed.
"""

import math

import numpy as np
import pytest
from scipy import stats

from qel import (
    Deterministic,
    Erlang,
    Exponential,
    Fixed,
    HyperExponential,
    JumpLaw,
    ModelParams,
    ScalingSequence,
    Stationary,
    autocovariance,
    autocorrelation,
    count_lst,
    count_moment,
    count_moments_closed_form,
    count_pmf,
    cpp_gaussian_experiment,
    crossing_report,
    derivative_process,
    externality_from_path,
    finite_dim_lst,
    mean_externality,
    scaled_externality_experiment,
    simulate_crossing_times,
    simulate_path,
    split_streams,
    variance_externality,
)
from qel.crossing import enumerate_mean_cycles
from qel.simulate import (
    ArrivalStream,
    direct_externality,
    sample_decomposition_batch,
    sample_externality_paths,
    sample_increment_batch,
    simulate_busy_counts,
)

MASTER_SEED = 20260823
STREAMS = split_streams(MASTER_SEED, 16)

FOUR_DISTS = [
    Exponential(rate=1.0),
    Deterministic(d=1.0),
    Erlang(shape=3, rate=3.0),
    HyperExponential(weights=(0.4, 0.6), rates=(0.5, 2.0)),
]


def report(name: str, ok: bool, detail: str = ""):
    line = f"{'PASS' if ok else 'FAIL'} {name}"
    if detail:
        line += f"  [{detail}]"
    print(line)
    assert ok, line


def test_criterion_01_pathwise_identity():
    """Two routes to the externality agree to 1e-9 on shared randomness."""
    rng = STREAMS[1]
    params = ModelParams(0.5, Exponential(rate=1.0), Fixed(1.0))
    x = 2.0
    worst = 0.0
    for _ in range(10_000):
        stream = ArrivalStream(params.lam, params.dist, rng)
        path = simulate_path(params, x, rng, stream=stream, v=1.0)
        a = externality_from_path(path, x)
        b = direct_externality(params, 1.0, x, stream)
        worst = max(worst, abs(a - b) / max(abs(b), 1.0))
    report("criterion 1: pathwise identity", worst < 1e-9, f"max rel err {worst:.2e}")


def test_criterion_02_integral_representation():
    """Piecewise-exact integral of the derivative process equals the
    externality path; the path is convex."""
    rng = STREAMS[2]
    params = ModelParams(0.5, Exponential(rate=1.0), Fixed(1.0))
    x_max = 2.0
    grid = np.linspace(0.0, x_max, 10)
    worst = 0.0
    min_second_diff = np.inf
    for _ in range(1000):
        path = simulate_path(params, x_max, rng)
        breaks = np.concatenate([[0.0], np.cumsum(path.idle_gaps), grid])
        breaks = np.unique(breaks[breaks <= x_max])
        seg_int = np.concatenate(
            [
                [0.0],
                np.cumsum(
                    [
                        derivative_process(path, a) * (b - a)
                        for a, b in zip(breaks[:-1], breaks[1:])
                    ]
                ),
            ]
        )
        vals = np.empty(len(grid))
        for j, x in enumerate(grid):
            i = int(np.searchsorted(breaks, x))
            vals[j] = seg_int[i]
            worst = max(worst, abs(vals[j] - externality_from_path(path, x)))
        min_second_diff = min(min_second_diff, float(np.diff(vals, 2).min()))
    ok = worst < 1e-12 and min_second_diff >= -1e-12
    report(
        "criterion 2: integral representation and convexity",
        ok,
        f"max err {worst:.2e}, min 2nd diff {min_second_diff:.2e}",
    )


def test_criterion_03_moment_recursion():
    worst = 0.0
    for dist in FOUR_DISTS:
        for rho in (0.3, 0.6, 0.9):
            lam = rho / dist.moment(1)
            closed = count_moments_closed_form(lam, dist)
            for n in (1, 2, 3):
                rec = count_moment(lam, dist, n)
                worst = max(worst, abs(rec - closed[n - 1]) / abs(closed[n - 1]))
    report("criterion 3: moment recursion", worst < 1e-10, f"max rel err {worst:.2e}")


def test_criterion_04_pmf_correctness():
    rng = STREAMS[4]
    lam, dist = 1.0, Exponential(rate=2.0)
    law = count_pmf(lam, dist, 200)
    exact_ok = (
        abs(law.pmf[0] - 2.0 / 3.0) < 1e-12 and abs(law.pmf[1] - 4.0 / 27.0) < 1e-12
    )
    counts = simulate_busy_counts(lam, dist, 1_000_000, rng)
    emp = np.bincount(counts, minlength=law.s_max + 1)[1 : law.s_max + 1] / len(counts)
    tv = 0.5 * (np.abs(emp - law.pmf).sum() + law.tail_mass)
    report(
        "criterion 4: pmf correctness",
        exact_ok and tv < 0.005,
        f"TV {tv:.4f}",
    )


def test_criterion_05_transform_closed_form():
    lam, mu = 1.0, 2.0
    dist = Exponential(rate=mu)
    worst = 0.0
    for alpha in (0.01, 0.1, 1.0):
        z = math.exp(-alpha)
        root = ((lam + mu) - math.sqrt((lam + mu) ** 2 - 4 * lam * mu * z)) / (2 * lam)
        worst = max(worst, abs(count_lst(lam, dist, alpha) - root) / root)
    report("criterion 5: transform vs closed form", worst < 1e-10, f"{worst:.2e}")


def test_criterion_06_moment_formulas_vs_monte_carlo():
    rng = STREAMS[6]
    triples = [
        (0.3, Exponential(rate=1.0), 1.0),
        (0.6, Erlang(shape=2, rate=2.0), 0.5),
        (0.9, HyperExponential(weights=(0.4, 0.6), rates=(0.5, 2.0)), 1.0),
    ]
    worst_z = 0.0
    for rho, dist, v in triples:
        lam = rho / dist.moment(1)
        params = ModelParams(lam, dist, Fixed(v))
        draws = sample_externality_paths(params, [1.0, 2.0], 100_000, rng)
        n = len(draws)
        m = mean_externality(lam, dist, params.init, 1.0)
        z = abs(draws[:, 0].mean() - m) / (draws[:, 0].std() / math.sqrt(n))
        worst_z = max(worst_z, z)
        var = variance_externality(lam, dist, params.init, 1.0)
        c = draws[:, 0] - draws[:, 0].mean()
        se_var = math.sqrt(max(np.mean(c**4) - np.mean(c**2) ** 2, 0.0) / n)
        worst_z = max(worst_z, abs(draws[:, 0].var() - var) / se_var)
        cov = autocovariance(lam, dist, params.init, 1.0, 1.0)
        prod = (draws[:, 0] - m) * (
            draws[:, 1] - mean_externality(lam, dist, params.init, 2.0)
        )
        se_cov = prod.std() / math.sqrt(n)
        worst_z = max(worst_z, abs(np.cov(draws.T)[0, 1] - cov) / se_cov)
    report(
        "criterion 6: moment formulas vs Monte Carlo",
        worst_z < 3.0,
        f"worst z {worst_z:.2f}",
    )


def test_criterion_07_correlation_invariance():
    vals = []
    for dist in [Exponential(rate=1.0), Deterministic(d=1.0), Erlang(shape=3, rate=3.0)]:
        for lam in (0.2, 0.8 / dist.moment(1)):
            vals.append(autocorrelation(lam, dist, Fixed(1.0), 1.0, 2.0))
    spread = max(vals) - min(vals)
    report("criterion 7: correlation invariance", spread < 1e-12, f"spread {spread:.2e}")


def test_criterion_08_decomposition_in_law():
    rng = STREAMS[8]
    params = ModelParams(0.5, Exponential(rate=1.0), Fixed(1.0))
    law = count_pmf(params.lam, params.dist, 400)
    paths = sample_externality_paths(params, [1.0, 2.0], 10_000, rng)
    decomp = sample_decomposition_batch(params, [1.0, 1.0], law, 10_000, rng)
    res_e = stats.ks_2samp(paths[:, 0], decomp[:, 0])
    inc_paths = paths[:, 1] - paths[:, 0]
    inc_decomp = sample_increment_batch(params, 1.0, 1.0, law, 10_000, rng)
    res_i = stats.ks_2samp(inc_paths, inc_decomp)
    ok = res_e.pvalue > 0.01 and res_i.pvalue > 0.01
    report(
        "criterion 8: decomposition equality in law",
        ok,
        f"p_E {res_e.pvalue:.3f}, p_inc {res_i.pvalue:.3f}",
    )


def test_criterion_09_finite_dimensional_lst():
    rng = STREAMS[9]
    lam, dist, init = 0.5, Exponential(rate=1.0), Fixed(1.0)
    params = ModelParams(lam, dist, init)
    xs, alphas = [1.0, 1.0], [0.4, 0.3]
    analytic = finite_dim_lst(lam, dist, init, xs, alphas)
    draws = sample_externality_paths(params, [1.0, 2.0], 100_000, rng)
    emp = np.exp(-alphas[0] * draws[:, 0] - alphas[1] * draws[:, 1])
    z = abs(emp.mean() - analytic) / (emp.std() / math.sqrt(len(emp)))

    h = 1e-5
    f_h = finite_dim_lst(lam, dist, init, [2.0], [h])
    f_2h = finite_dim_lst(lam, dist, init, [2.0], [2.0 * h])
    mean_fd = (3.0 - 4.0 * f_h + f_2h) / (2.0 * h)
    expected = mean_externality(lam, dist, init, 2.0)
    rel = abs(mean_fd - expected) / expected
    report(
        "criterion 9: finite-dimensional transform",
        z < 3.0 and rel < 1e-4,
        f"z {z:.2f}, fd rel err {rel:.2e}",
    )


def test_criterion_10_stationary_mean_reduction():
    lam, dist = 0.5, Erlang(shape=2, rate=4.0)
    rho = lam * dist.moment(1)
    mu2 = dist.moment(2)
    worst = 0.0
    for x in (0.25, 0.5, 1.0, 2.0, 4.0):
        lhs = mean_externality(lam, dist, Stationary(), x)
        rhs = (lam * x / (2.0 * (1.0 - rho))) * (lam * mu2 / (1.0 - rho) + x)
        worst = max(worst, abs(lhs - rhs) / rhs)
    report("criterion 10: stationary mean reduction", worst < 1e-12, f"{worst:.2e}")


def test_criterion_11_crossing_times():
    rng = STREAMS[11]
    lam, dist = 1.0, Exponential(rate=2.0)
    law = count_pmf(lam, dist, 400)
    rep1 = crossing_report(law, 0.7)
    exact_ok = rep1.mean_crossing == 1.0 / lam and rep1.var_crossing == 1.0 / lam**2

    worst_z = 0.0
    for y in (2.0, 5.0, 20.0):
        times, _ = simulate_crossing_times(lam, dist, y, 100_000, rng)
        rep = crossing_report(law, y)
        n = len(times)
        worst_z = max(
            worst_z, abs(times.mean() - rep.mean_crossing) / (times.std() / math.sqrt(n))
        )
        c = times - times.mean()
        se_var = math.sqrt(max(np.mean(c**4) - np.mean(c**2) ** 2, 0.0) / n)
        worst_z = max(worst_z, abs(times.var() - rep.var_crossing) / se_var)

    worst_enum = 0.0
    for y in (2.0, 3.5, 6.0):
        brute = enumerate_mean_cycles(law, y, mass_tol=1e-12)
        worst_enum = max(
            worst_enum, abs(crossing_report(law, y).psi0 - brute) / brute
        )
    ok = exact_ok and worst_z < 3.0 and worst_enum < 1e-10
    report(
        "criterion 11: crossing times",
        ok,
        f"worst z {worst_z:.2f}, enum err {worst_enum:.2e}",
    )


def test_criterion_12_gaussian_limit():
    lams = (10.0, 100.0, 1000.0)
    seq = ScalingSequence(lams, tuple(Exponential(rate=2 * l) for l in lams), v=1.0)
    ks = []
    p_final = None
    streams = split_streams(MASTER_SEED + 12, 3)
    for n in range(3):
        rep = scaled_externality_experiment(seq, [1.0], n, 10_000, streams[n])
        ks.append(rep.ks_stat[1.0])
        p_final = rep.ks_pvalue[1.0]
    inversions = sum(b >= a for a, b in zip(ks, ks[1:]))
    ok = p_final > 0.01 and inversions <= 1
    report(
        "criterion 12: Gaussian limit",
        ok,
        f"p {p_final:.3f}, ks {['%.4f' % k for k in ks]}",
    )


def test_criterion_13_negative_control():
    rng = STREAMS[13]

    def skewed(r, size):
        # heavy one-sided jumps: mostly tiny, rarely enormous
        u = r.uniform(0.0, 1.0, size)
        return np.where(u < 0.999, 0.01, 100.0)

    mean = 0.999 * 0.01 + 0.001 * 100.0
    second = 0.999 * 0.01**2 + 0.001 * 100.0**2
    third = 0.999 * 0.01**3 + 0.001 * 100.0**3
    law = JumpLaw(sampler=skewed, mean=mean, second_moment=second, third_abs_moment=third)
    rep = cpp_gaussian_experiment(1.0, law, 1.0, 10_000, rng)
    report(
        "criterion 13: negative control rejects",
        rep.ks_pvalue["endpoint"] < 0.01,
        f"p {rep.ks_pvalue['endpoint']:.2e}",
    )
