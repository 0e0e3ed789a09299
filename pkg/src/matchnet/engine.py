"""Event-driven simulation of the matching dynamics.

One trajectory is simulated jump by jump: the next event time is exponential
in the total outflow rate (arrivals plus aggregate reneging), and a single
uniform draw both picks the event type and, through its residual, the class
involved.  Reneging uses the aggregate rate ``gamma(i) * x(i)`` with the
departing item chosen by that residual; by memorylessness this is
distributionally identical to tracking one exponential clock per stored item
and keeps every event O(1).

Trajectories are reproducible bit for bit: a run consumes a single random
stream keyed on the config seed, and ensemble run ``i`` re-seeds with
``derive_seed(cfg.seed, i)``, so results are independent of worker count and
scheduling order.
"""

from __future__ import annotations

import math
from array import array
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError, MatchnetError
from .model import ModelSpec, is_admissible, validate
from .policy import PolicyKind, choose_match
from .rng import derive_seed, stream

__all__ = [
    "ArrivalMatched",
    "ArrivalStored",
    "Reneged",
    "SimConfig",
    "TrajectoryRecord",
    "EnsembleSummary",
    "step",
    "run",
    "run_ensemble",
    "summarize",
    "time_average",
    "value_at",
    "batch_means",
    "record_to_csv",
]

SERIES = ("max_queue", "total_items", "cum_reward", "cum_departures", "cum_reneged")


@dataclass(frozen=True)
class ArrivalMatched:
    """Arriving ``j`` item matched a stored ``i`` item; both left immediately."""

    j: int
    i: int


@dataclass(frozen=True)
class ArrivalStored:
    """Arriving ``j`` item found no nonempty compatible queue and was stored."""

    j: int


@dataclass(frozen=True)
class Reneged:
    """One stored ``i`` item abandoned at the end of its patience."""

    i: int


@dataclass(frozen=True)
class SimConfig:
    """One trajectory's full description; equal configs give identical records."""

    spec: ModelSpec
    policy: PolicyKind
    horizon: float
    initial_state: tuple[int, ...] | None = None
    seed: int = 0
    sample_grid: float | None = None
    max_events: int = 10**9

    def initial_vector(self) -> np.ndarray:
        if self.initial_state is None:
            return np.zeros(self.spec.n, dtype=np.int64)
        return np.asarray(self.initial_state, dtype=np.int64).copy()


@dataclass(frozen=True)
class TrajectoryRecord:
    """Piecewise-constant observable paths of one run.

    All arrays share one time axis ``event_times`` that starts with a
    synthetic row at t=0 and ends with one at the horizon; the rows in
    between are the post-event values, so paths are right-continuous and
    ``event_count`` equals ``len(event_times) - 2``.
    """

    event_times: np.ndarray
    max_queue_path: np.ndarray
    total_items_path: np.ndarray
    cum_reward: np.ndarray
    cum_departures: np.ndarray
    cum_reneged: np.ndarray
    final_state: np.ndarray
    event_count: int
    horizon: float
    truncated: bool = False

    def series(self, name: str) -> np.ndarray:
        try:
            return {
                "max_queue": self.max_queue_path,
                "total_items": self.total_items_path,
                "cum_reward": self.cum_reward,
                "cum_departures": self.cum_departures,
                "cum_reneged": self.cum_reneged,
            }[name]
        except KeyError:
            raise InputError(f"unknown series {name!r} (expected one of {SERIES})") from None


def step(
    spec: ModelSpec,
    policy: PolicyKind,
    x: Sequence[int],
    rng: np.random.Generator,
) -> tuple[float, ArrivalMatched | ArrivalStored | Reneged, np.ndarray]:
    """Simulate a single transition out of state ``x``.

    Returns the exponential holding time, the event, and the next state.
    The total jump rate is ``lam(V) + sum_i gamma(i) x(i)``; conditionally on
    a jump, it is an arrival with probability proportional to ``lam(V)``
    (class by arrival intensity, then the policy decides store versus match)
    and a reneging of class ``i`` with probability proportional to
    ``gamma(i) x(i)``.
    """
    x = np.asarray(x, dtype=np.int64)
    if not is_admissible(spec, x):
        raise InputError("queue state violates admissibility")
    lam_total = spec.lambda_total
    reneg_rate = float(np.dot(spec.gamma, x))
    total = lam_total + reneg_rate
    dt = float(rng.standard_exponential()) / total
    u = float(rng.random()) * total
    y = x.copy()
    if u < lam_total:
        cum = np.cumsum(spec.lam)
        j = min(int(np.searchsorted(cum, u, side="right")), spec.n - 1)
        i = choose_match(policy, spec, x, j, rng)
        if i is None:
            y[j] += 1
            return dt, ArrivalStored(j), y
        y[i] -= 1
        return dt, ArrivalMatched(j, i), y
    r = u - lam_total
    acc = 0.0
    pick = -1
    for i in range(spec.n):
        w = float(spec.gamma[i]) * int(x[i])
        if w > 0.0:
            pick = i
            acc += w
            if r < acc:
                break
    if pick < 0:
        raise MatchnetError("reneging event drawn with zero aggregate reneging rate")
    y[pick] -= 1
    return dt, Reneged(pick), y


def run(cfg: SimConfig, validate_states: bool = False) -> TrajectoryRecord:
    """Simulate one trajectory up to the horizon (or the event cap).

    Identical configs produce byte-identical records.  ``validate_states``
    turns on per-event admissibility assertions for debugging.
    """
    spec = cfg.spec
    problems = validate(spec)
    if problems:
        raise InputError("; ".join(problems))
    if cfg.horizon <= 0.0:
        raise InputError(f"horizon must be positive, got {cfg.horizon}")
    x0 = cfg.initial_vector()
    if not is_admissible(spec, x0):
        raise InputError("initial state violates admissibility")

    n = spec.n
    lam = [float(v) for v in spec.lam]
    gamma = [float(v) for v in spec.gamma]
    lam_total = sum(lam)
    cum_lam = list(np.cumsum(lam))
    neigh = [sorted(spec.graph.adj[j]) for j in range(n)]
    w_by_j = [[spec.rewards[(j, i)] for i in neigh[j]] for j in range(n)]
    # noise per (j, candidate slot): (atom, lower, width, is point mass)
    noise_by_j = []
    for j in range(n):
        row = []
        for i in neigh[j]:
            ns = spec.noise[(j, i)]
            row.append((ns.atom, ns.a, ns.b - ns.a, ns.is_dirac))
        noise_by_j.append(row)
    kind = cfg.policy
    is_ml = kind is PolicyKind.MATCH_LONGEST
    is_prio = kind is PolicyKind.PRIORITY

    rng = stream(cfg.seed, "trajectory")
    exponential = rng.standard_exponential
    uniform = rng.random

    x = [int(v) for v in x0]
    cur_tot = sum(x)
    cur_max = max(x)
    reneg_rate = sum(g * v for g, v in zip(gamma, x))
    cur_reward = 0.0
    cur_dep = 0
    cur_reneg = 0
    horizon = float(cfg.horizon)

    times = array("d", [0.0])
    maxs = array("q", [cur_max])
    tots = array("q", [cur_tot])
    rewards_path = array("d", [0.0])
    deps = array("q", [0])
    renegs = array("q", [0])

    t = 0.0
    n_events = 0
    truncated = False
    while True:
        if n_events >= cfg.max_events:
            truncated = True
            break
        total_rate = lam_total + reneg_rate
        t_next = t + float(exponential()) / total_rate
        if t_next > horizon:
            break
        t = t_next
        n_events += 1
        u = float(uniform()) * total_rate
        if u < lam_total:
            j = bisect_right(cum_lam, u)
            if j >= n:
                j = n - 1
            cands = [i for i in neigh[j] if x[i] > 0]
            if not cands:
                x[j] += 1
                cur_tot += 1
                if x[j] > cur_max:
                    cur_max = x[j]
                reneg_rate += gamma[j]
                changed = j
            else:
                if is_ml:
                    best = -1
                    arg = []
                    for i in cands:
                        xi = x[i]
                        if xi > best:
                            best = xi
                            arg = [i]
                        elif xi == best:
                            arg.append(i)
                elif is_prio:
                    bestw = -1.0
                    arg = []
                    wrow = spec.rewards
                    for i in cands:
                        wi = wrow[(j, i)]
                        if wi > bestw:
                            bestw = wi
                            arg = [i]
                        elif wi == bestw:
                            arg.append(i)
                else:
                    bests = -math.inf
                    arg = []
                    nrow = noise_by_j[j]
                    wrow = w_by_j[j]
                    row = neigh[j]
                    for col, i in enumerate(row):
                        if x[i] <= 0:
                            continue
                        atom, lo, width, dirac = nrow[col]
                        unoise = atom if dirac else lo + width * float(uniform())
                        s = x[i] + unoise
                        if s < 0.0:
                            s = 0.0
                        s += wrow[col]
                        if s > bests:
                            bests = s
                            arg = [i]
                        elif s == bests:
                            arg.append(i)
                i = arg[0] if len(arg) == 1 else arg[int(rng.integers(len(arg)))]
                old = x[i]
                x[i] = old - 1
                cur_tot -= 1
                reneg_rate -= gamma[i]
                if old == cur_max:
                    cur_max = max(x)
                cur_reward += spec.rewards[(j, i)]
                cur_dep += 2
                changed = i
        else:
            r = u - lam_total
            acc = 0.0
            pick = -1
            for i in range(n):
                if x[i] > 0:
                    w = gamma[i] * x[i]
                    if w > 0.0:
                        pick = i
                        acc += w
                        if r < acc:
                            break
            if pick < 0:
                # float drift in the incremental rate produced a phantom
                # reneging draw; refresh the rate and skip the event.
                reneg_rate = sum(g * v for g, v in zip(gamma, x))
                n_events -= 1
                continue
            old = x[pick]
            x[pick] = old - 1
            cur_tot -= 1
            reneg_rate -= gamma[pick]
            if old == cur_max:
                cur_max = max(x)
            cur_reneg += 1
            changed = pick

        if reneg_rate < 0.0:
            reneg_rate = 0.0
        if n_events % 65536 == 0:
            reneg_rate = sum(g * v for g, v in zip(gamma, x))
        if validate_states and x[changed] > 0:
            for nb in neigh[changed]:
                if x[nb] > 0:
                    raise MatchnetError(
                        f"admissibility violated at t={t}: classes {changed} and {nb}"
                    )
        times.append(t)
        maxs.append(cur_max)
        tots.append(cur_tot)
        rewards_path.append(cur_reward)
        deps.append(cur_dep)
        renegs.append(cur_reneg)

    times.append(horizon)
    maxs.append(cur_max)
    tots.append(cur_tot)
    rewards_path.append(cur_reward)
    deps.append(cur_dep)
    renegs.append(cur_reneg)

    final = np.array(x, dtype=np.int64)
    if validate_states and not is_admissible(spec, final):
        raise MatchnetError("final state violates admissibility")
    return TrajectoryRecord(
        event_times=np.array(times, dtype=np.float64),
        max_queue_path=np.array(maxs, dtype=np.int64),
        total_items_path=np.array(tots, dtype=np.int64),
        cum_reward=np.array(rewards_path, dtype=np.float64),
        cum_departures=np.array(deps, dtype=np.int64),
        cum_reneged=np.array(renegs, dtype=np.int64),
        final_state=final,
        event_count=n_events,
        horizon=horizon,
        truncated=truncated,
    )


@dataclass(frozen=True)
class EnsembleSummary:
    """Order-independent aggregate of an ensemble's terminal observables."""

    n_runs: int
    terminal_max: np.ndarray
    terminal_total: np.ndarray
    terminal_reward: np.ndarray
    terminal_departures: np.ndarray
    terminal_reneged: np.ndarray
    quantiles: dict[str, float]
    histogram_values: np.ndarray
    histogram_counts: np.ndarray

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "terminal_max": [int(v) for v in self.terminal_max],
            "terminal_total": [int(v) for v in self.terminal_total],
            "terminal_reward": [float(v) for v in self.terminal_reward],
            "terminal_departures": [int(v) for v in self.terminal_departures],
            "terminal_reneged": [int(v) for v in self.terminal_reneged],
            "quantiles": {k: float(v) for k, v in self.quantiles.items()},
            "histogram": {
                "values": [int(v) for v in self.histogram_values],
                "counts": [int(v) for v in self.histogram_counts],
            },
        }


def summarize(records: Iterable[TrajectoryRecord]) -> EnsembleSummary:
    """Terminal statistics, box-plot quantiles and a histogram of the max queue."""
    records = list(records)
    tmax = np.array([int(r.max_queue_path[-1]) for r in records])
    ttot = np.array([int(r.total_items_path[-1]) for r in records])
    trew = np.array([float(r.cum_reward[-1]) for r in records])
    tdep = np.array([int(r.cum_departures[-1]) for r in records])
    tren = np.array([int(r.cum_reneged[-1]) for r in records])
    qs = np.percentile(tmax, [0, 25, 50, 75, 100])
    counts = np.bincount(tmax)
    return EnsembleSummary(
        n_runs=len(records),
        terminal_max=tmax,
        terminal_total=ttot,
        terminal_reward=trew,
        terminal_departures=tdep,
        terminal_reneged=tren,
        quantiles={"min": qs[0], "q1": qs[1], "median": qs[2], "q3": qs[3], "max": qs[4]},
        histogram_values=np.arange(len(counts)),
        histogram_counts=counts,
    )


def run_ensemble(
    cfg: SimConfig, n_runs: int, parallelism: int = 1
) -> tuple[list[TrajectoryRecord], EnsembleSummary]:
    """Independent replications of ``cfg`` with derived per-run seeds.

    Run ``i`` is exactly ``run(replace(cfg, seed=derive_seed(cfg.seed, i)))``,
    so the ensemble is reproducible for any ``parallelism``; records are
    returned in run order and the summary is aggregation-order independent.
    """
    if n_runs < 1:
        raise InputError(f"n_runs must be >= 1, got {n_runs}")
    cfgs = [replace(cfg, seed=derive_seed(cfg.seed, i)) for i in range(n_runs)]
    if parallelism > 1 and n_runs > 1:
        chunk = max(1, n_runs // (parallelism * 4))
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(run, cfgs, chunksize=chunk))
    else:
        records = [run(c) for c in cfgs]
    return records, summarize(records)


def _integral_prefix(record: TrajectoryRecord, series: str) -> tuple[np.ndarray, np.ndarray]:
    t = record.event_times
    v = record.series(series).astype(float)
    prefix = np.concatenate([[0.0], np.cumsum(v[:-1] * np.diff(t))])
    return t, prefix


def time_average(record: TrajectoryRecord, series: str = "max_queue") -> float:
    """Exact time average of a piecewise-constant path over [0, horizon]."""
    _, prefix = _integral_prefix(record, series)
    return float(prefix[-1] / record.horizon)


def value_at(record: TrajectoryRecord, t: float, series: str = "max_queue") -> float:
    """Path value at time ``t`` (right-continuous lookup)."""
    if t < 0.0:
        raise InputError(f"t must be >= 0, got {t}")
    idx = int(np.searchsorted(record.event_times, t, side="right")) - 1
    idx = min(max(idx, 0), len(record.event_times) - 1)
    return float(record.series(series)[idx])


def batch_means(
    record: TrajectoryRecord, series: str = "max_queue", n_batches: int = 20
) -> tuple[float, float]:
    """Time average plus a batch-means standard error.

    The horizon is split into ``n_batches`` equal windows, each window's
    exact time average is one batch observation, and the standard error is
    the sample deviation of the batches over ``sqrt(n_batches)``.
    """
    if n_batches < 2:
        raise InputError("need at least 2 batches")
    t, prefix = _integral_prefix(record, series)
    v = record.series(series).astype(float)
    bounds = np.linspace(0.0, record.horizon, n_batches + 1)
    idx = np.clip(np.searchsorted(t, bounds, side="right") - 1, 0, len(t) - 1)
    integral_at = prefix[idx] + v[idx] * (bounds - t[idx])
    batch = np.diff(integral_at) / (record.horizon / n_batches)
    mean = float(batch.mean())
    se = float(batch.std(ddof=1) / math.sqrt(n_batches))
    return mean, se


def _grid_rows(record: TrajectoryRecord, grid: float) -> list[int]:
    if grid <= 0.0:
        raise InputError(f"sample grid must be positive, got {grid}")
    ticks = np.arange(0.0, record.horizon, grid)
    ticks = np.concatenate([ticks, [record.horizon]])
    return list(np.clip(np.searchsorted(record.event_times, ticks, side="right") - 1, 0,
                        len(record.event_times) - 1))


def record_to_csv(record: TrajectoryRecord, path: str, grid: float | None = None) -> None:
    """Write the trajectory as CSV (optionally downsampled onto a time grid).

    Downsampling evaluates the stored piecewise-constant paths; it never
    re-simulates.  Output formatting is deterministic: times and rewards use
    shortest round-trip representation, counts are plain integers.
    """
    if grid is None:
        rows = range(len(record.event_times))
        times = record.event_times
    else:
        rows = _grid_rows(record, grid)
        ticks = np.arange(0.0, record.horizon, grid)
        times = np.concatenate([ticks, [record.horizon]])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,max_queue,total_items,cum_reward,cum_departures,cum_reneged\n")
        for out_t, k in zip(times, rows):
            fh.write(
                f"{float(out_t)!r},{int(record.max_queue_path[k])},"
                f"{int(record.total_items_path[k])},{float(record.cum_reward[k])!r},"
                f"{int(record.cum_departures[k])},{int(record.cum_reneged[k])}\n"
            )
