"""Pathwise-exact simulation of the externalities of an extra M/G/1 customer.

Two independent routes to the same quantity are provided:

* ``direct_externality`` runs the pair of coupled reflected workload
  processes (started at v and v + x) on a shared arrival stream and sums the
  workload differences seen by every arrival -- the defining expression.
* ``simulate_path`` + ``externality_from_path`` record the busy-cycle
  skeleton (initial jump count M, idle gaps I_k, busy-period counts N_k) and
  evaluate the closed combinatorial identity
  ``E_v(x) = x M + sum_k N_k (x - I_1 - ... - I_k)^+``.

On a common arrival stream the two routes agree pathwise to rounding error.
Distribution-level samplers (Poisson-compound decompositions with uniform
thinning) are provided as a third, simulation-free route.

The simulation is event-driven on arrival epochs only; between arrivals the
workload decays linearly at unit rate, so no time discretization is involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .busy_period import BusyPeriodLaw
from .distributions import Fixed, ModelParams, sample_initial_workload
from .errors import DomainError, TruncationError

__all__ = [
    "ArrivalStream",
    "PathRealization",
    "simulate_path",
    "externality_from_path",
    "derivative_process",
    "direct_externality",
    "sample_decomposition",
    "sample_decomposition_batch",
    "sample_increment",
    "sample_increment_batch",
    "simulate_busy_counts",
    "count_initial_jumps",
    "sample_externality_paths",
]

DEFAULT_MAX_EVENTS = 10**7
DECOMPOSITION_TAIL_TOL = 1e-6
_BLOCK = 512


class ArrivalStream:
    """Lazy, memoized Poisson arrival stream with iid service-size marks.

    Both the path recorder and the brute-force coupled simulation pull from
    the same stream, which is what makes the pathwise-identity test exact.
    """

    def __init__(self, lam: float, dist, rng: np.random.Generator):
        self.lam = lam
        self.dist = dist
        self.rng = rng
        self._times = np.empty(0)
        self._sizes = np.empty(0)

    def _ensure(self, n: int) -> None:
        while len(self._times) <= n:
            gaps = self.rng.exponential(1.0 / self.lam, _BLOCK)
            sizes = np.asarray(self.dist.sample(self.rng, _BLOCK), dtype=float)
            start = self._times[-1] if len(self._times) else 0.0
            self._times = np.concatenate([self._times, start + np.cumsum(gaps)])
            self._sizes = np.concatenate([self._sizes, sizes])

    def time(self, i: int) -> float:
        self._ensure(i)
        return float(self._times[i])

    def size(self, i: int) -> float:
        self._ensure(i)
        return float(self._sizes[i])


@dataclass(frozen=True)
class PathRealization:
    """Busy-cycle skeleton of one simulated workload path."""

    v: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    M: int
    idle_gaps: np.ndarray
    busy_counts: np.ndarray
    coupling_time: float
    x_max: float
    truncated: bool


def simulate_path(
    params: ModelParams,
    x_max: float,
    rng: np.random.Generator,
    max_events: int = DEFAULT_MAX_EVENTS,
    stream: ArrivalStream | None = None,
    v: float | None = None,
) -> PathRealization:
    """Simulate the workload path started at (sampled) v and record its
    busy-cycle skeleton until the accumulated idle time exceeds ``x_max``.

    Hitting ``max_events`` sets the ``truncated`` flag instead of raising.
    """
    if x_max <= 0:
        raise DomainError(f"x_max must be > 0, got {x_max}")
    if max_events < 1:
        raise DomainError("max_events must be >= 1")
    lam, dist = params.lam, params.dist
    if v is None:
        v = float(sample_initial_workload(params.init, lam, dist, rng))
    if stream is None:
        stream = ArrivalStream(lam, dist, rng)

    events = 0
    idx = 0
    truncated = False

    def run_busy_period(t: float, w: float) -> tuple[float, int, bool]:
        # returns (hit time of 0, jumps counted, truncated?)
        nonlocal idx, events
        count = 0
        while True:
            arrival = stream.time(idx)
            if arrival - t >= w:
                return t + w, count, False
            w -= arrival - t
            w += stream.size(idx)
            t = arrival
            idx += 1
            count += 1
            events += 1
            if events >= max_events:
                return t + w, count, True

    tau, M, truncated = run_busy_period(0.0, v)
    idle_gaps: list[float] = []
    busy_counts: list[int] = []
    cum_idle = 0.0
    coupling_time = math.nan
    while not truncated:
        arrival = stream.time(idx)
        gap = arrival - tau
        if cum_idle + gap > x_max:
            coupling_time = tau + (x_max - cum_idle)
        idle_gaps.append(gap)
        cum_idle += gap
        t = arrival
        w = stream.size(idx)
        idx += 1
        events += 1
        tau, n, truncated = run_busy_period(t, w)
        busy_counts.append(n + 1)
        if cum_idle > x_max:
            break

    return PathRealization(
        v=v,
        jump_times=stream._times[:idx].copy(),
        jump_sizes=stream._sizes[:idx].copy(),
        M=M,
        idle_gaps=np.asarray(idle_gaps),
        busy_counts=np.asarray(busy_counts, dtype=np.int64),
        coupling_time=coupling_time,
        x_max=x_max,
        truncated=truncated,
    )


def externality_from_path(path: PathRealization, x: float) -> float:
    """Evaluate E_v(x) = x M + sum_k N_k (x - I_1 - ... - I_k)^+ exactly."""
    _check_path_x(path, x)
    if x == 0.0:
        return 0.0
    cum = np.cumsum(path.idle_gaps)
    weights = np.clip(x - cum, 0.0, None)
    return float(x * path.M + np.dot(path.busy_counts, weights))


def derivative_process(path: PathRealization, x: float) -> int:
    """Right derivative of the externality path at x: M + sum_{k<=xi(x)} N_k.

    Right-continuous: a cycle whose cumulative idle time equals x exactly is
    already counted.
    """
    _check_path_x(path, x)
    cum = np.cumsum(path.idle_gaps)
    xi = int(np.searchsorted(cum, x, side="right"))
    return int(path.M + path.busy_counts[:xi].sum())


def _check_path_x(path: PathRealization, x: float) -> None:
    if x < 0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x > path.x_max:
        raise DomainError(f"x = {x} exceeds the path horizon x_max = {path.x_max}")
    if path.truncated:
        raise TruncationError("path was truncated before covering its horizon")


def direct_externality(
    params: ModelParams,
    v_draw: float,
    x: float,
    arrivals: ArrivalStream,
    max_events: int = DEFAULT_MAX_EVENTS,
) -> float:
    """Brute-force oracle: run both reflected workload processes on the
    shared arrival stream and sum the per-arrival waiting-time differences
    until the paths couple.
    """
    if v_draw < 0 or x < 0:
        raise DomainError("v_draw and x must be nonnegative")
    w1 = v_draw
    w2 = v_draw + x
    t = 0.0
    total = 0.0
    i = 0
    while True:
        arrival = arrivals.time(i)
        dt = arrival - t
        w1 = max(w1 - dt, 0.0)
        w2 = max(w2 - dt, 0.0)
        if w2 <= w1:
            return total  # coupled: no further contributions
        total += w2 - w1
        size = arrivals.size(i)
        w1 += size
        w2 += size
        t = arrival
        i += 1
        if i >= max_events:
            raise TruncationError(
                f"no coupling within {max_events} events (x={x}, v={v_draw})"
            )


# ---------------------------------------------------------------------------
# Vectorized building blocks
# ---------------------------------------------------------------------------


def simulate_busy_counts(
    lam: float, dist, reps: int, rng: np.random.Generator
) -> np.ndarray:
    """Simulate ``reps`` iid busy-period customer counts pathwise.

    Uses the random-walk characterization: the count is the first n at which
    the sum of n interarrival gaps reaches the sum of the first n services.
    """
    counts = np.zeros(reps, dtype=np.int64)
    slack = np.zeros(reps)  # cumulative gaps minus cumulative services
    active = np.arange(reps)
    while active.size:
        g = rng.exponential(1.0 / lam, active.size)
        s = np.asarray(dist.sample(rng, active.size), dtype=float)
        slack[active] += g - s
        counts[active] += 1
        active = active[slack[active] < 0.0]
    return counts


def count_initial_jumps(
    v, lam: float, dist, rng: np.random.Generator
) -> np.ndarray:
    """Vectorized draw of M: arrivals during the busy period started at v."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    counts = np.zeros(v.shape, dtype=np.int64)
    remaining = v.copy()
    active = np.flatnonzero(remaining > 0.0)
    while active.size:
        g = rng.exponential(1.0 / lam, active.size)
        hit = g >= remaining[active]
        landed = active[~hit]
        if landed.size:
            s = np.asarray(dist.sample(rng, landed.size), dtype=float)
            remaining[landed] += s - g[~hit]
            counts[landed] += 1
        active = landed
    return counts


def sample_externality_paths(
    params: ModelParams,
    x_grid,
    reps: int,
    rng: np.random.Generator,
    max_cycles: int = 10**7,
) -> np.ndarray:
    """Simulate ``reps`` independent paths and return E_v(x) on a grid.

    Vectorized across replications: each busy cycle is one round of array
    operations.  Returns an array of shape (reps, len(x_grid)).
    """
    x_grid = np.asarray(x_grid, dtype=float)
    if x_grid.ndim != 1 or x_grid.size == 0 or np.any(x_grid < 0):
        raise DomainError("x_grid must be a nonempty 1-d array of nonnegative x")
    x_max = float(x_grid.max())
    lam, dist = params.lam, params.dist
    v = np.asarray(
        sample_initial_workload(params.init, lam, dist, rng, size=reps), dtype=float
    )
    m = count_initial_jumps(v, lam, dist, rng)
    out = np.outer(m.astype(float), x_grid)
    cum_idle = np.zeros(reps)
    active = np.arange(reps)
    cycles = 0
    while active.size:
        cycles += 1
        if cycles > max_cycles:
            raise TruncationError(f"exceeded {max_cycles} busy cycles")
        gaps = rng.exponential(1.0 / lam, active.size)
        cum_idle[active] += gaps
        n = simulate_busy_counts(lam, dist, active.size, rng)
        weights = np.clip(x_grid[None, :] - cum_idle[active, None], 0.0, None)
        out[active] += n[:, None] * weights
        active = active[cum_idle[active] <= x_max]
    return out


# ---------------------------------------------------------------------------
# Distributional samplers (compound-Poisson decompositions)
# ---------------------------------------------------------------------------


def _compound_sums(law: BusyPeriodLaw, counts: np.ndarray, rng, thinned: bool):
    """Per-row sums of `counts[r]` iid busy-period-count draws, optionally
    multiplied by iid uniform marks."""
    if thinned:
        return _paired_compound_sums(law, counts, rng)[1]
    return _paired_compound_sums(law, counts, rng, thinned=False)[0]


def _paired_compound_sums(
    law: BusyPeriodLaw, counts: np.ndarray, rng, thinned: bool = True
):
    """Per-row (plain sum, uniformly thinned sum) over the *same* draws.

    Sharing the draws between the two sums is what carries the dependence
    between an increment (where a boundary cycle counts partially) and later
    increments (where the same cycle counts fully).
    """
    total = int(counts.sum())
    plain = np.zeros(counts.shape)
    thin = np.zeros(counts.shape)
    if total == 0:
        return plain, thin
    draws = law.sample(rng, total).astype(float)
    idx = np.repeat(np.arange(counts.size), counts)
    np.add.at(plain, idx, draws)
    if thinned:
        np.add.at(thin, idx, draws * rng.uniform(0.0, 1.0, total))
    return plain, thin


def _require_decomposable(law: BusyPeriodLaw) -> None:
    if law.tail_mass >= DECOMPOSITION_TAIL_TOL:
        raise DomainError(
            f"busy-period pmf tail mass {law.tail_mass} too large for "
            f"decomposition sampling (needs < {DECOMPOSITION_TAIL_TOL})"
        )


def sample_decomposition_batch(
    params: ModelParams,
    xs,
    law: BusyPeriodLaw,
    reps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Joint draws of (E_v(x_1), E_v(x_1+x_2), ..., E_v(x_1+...+x_k)).

    Implements the iid-array decomposition: independent Poisson counts (one
    per increment, plus one for the initial workload), iid busy-period-count
    draws, and uniform thinning of the boundary column.  Shape: (reps, k).
    """
    if not isinstance(params.init, Fixed):
        raise DomainError("decomposition sampling requires a Fixed initial workload")
    _require_decomposable(law)
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size == 0 or np.any(xs <= 0):
        raise DomainError("xs must be a nonempty list of positive increments")
    lam = params.lam
    k = xs.size
    rates = np.concatenate([[params.init.v], xs]) * lam  # xi_1 .. xi_{k+1}
    counts = rng.poisson(rates[None, :], size=(reps, k + 1))
    plain = np.empty((reps, k + 1))
    thin = np.empty((reps, k))
    plain[:, 0] = _paired_compound_sums(law, counts[:, 0], rng, thinned=False)[0]
    for j in range(1, k + 1):
        # the boundary column of increment j reappears in full in all later
        # increments, so the plain and thinned sums must share their draws
        plain[:, j], thin[:, j - 1] = _paired_compound_sums(law, counts[:, j], rng)
    prefix = np.cumsum(plain, axis=1)[:, :k]  # sum over columns 1..j
    increments = xs[None, :] * (prefix + thin)
    return np.cumsum(increments, axis=1)


def sample_decomposition(params, xs, law, rng) -> np.ndarray:
    """One joint draw of the externality vector (see the batch version)."""
    return sample_decomposition_batch(params, xs, law, 1, rng)[0]


def sample_increment_batch(
    params: ModelParams,
    x1: float,
    x2: float,
    law: BusyPeriodLaw,
    reps: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draws of the increment E_v(x1+x2) - E_v(x1) as the three-compound sum
    x2 * (Poi(lam v)-compound + Poi(lam x1)-compound + thinned Poi(lam x2)-compound).
    """
    if not isinstance(params.init, Fixed):
        raise DomainError("decomposition sampling requires a Fixed initial workload")
    _require_decomposable(law)
    if x1 < 0 or x2 < 0:
        raise DomainError("x1 and x2 must be nonnegative")
    lam = params.lam
    c1 = rng.poisson(lam * params.init.v, reps)
    c2 = rng.poisson(lam * x1, reps)
    c3 = rng.poisson(lam * x2, reps)
    total = (
        _compound_sums(law, c1, rng, thinned=False)
        + _compound_sums(law, c2, rng, thinned=False)
        + _compound_sums(law, c3, rng, thinned=True)
    )
    return x2 * total


def sample_increment(params, x1, x2, law, rng) -> float:
    """One draw of the increment (see the batch version)."""
    return float(sample_increment_batch(params, x1, x2, law, 1, rng)[0])
