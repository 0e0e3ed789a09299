import math

import numpy as np
import pytest
import scipy.stats

from matchnet import (
    ModelSpec,
    PolicyKind,
    SimConfig,
    batch_means,
    record_to_csv,
    run,
    run_ensemble,
    step,
    time_average,
    value_at,
)
from matchnet.engine import ArrivalMatched, ArrivalStored, Reneged, TrajectoryRecord, summarize
from matchnet.errors import InputError
from matchnet.rng import derive_seed, stream

from conftest import random_connected_graph

ML = PolicyKind.MATCH_LONGEST


def test_step_empty_buffer_stores(k3_uniform):
    rng = stream(1)
    for _ in range(50):
        dt, event, y = step(k3_uniform, ML, [0, 0, 0], rng)
        assert isinstance(event, ArrivalStored)
        assert y.sum() == 1 and y[event.j] == 1
        assert dt > 0


def test_step_unique_candidate_matches(k3_uniform):
    rng = stream(2)
    seen_match = False
    for _ in range(200):
        dt, event, y = step(k3_uniform, ML, [5, 0, 0], rng)
        if isinstance(event, ArrivalMatched):
            seen_match = True
            assert event.i == 0 and event.j in (1, 2)
            assert list(y) == [4, 0, 0]
        else:
            assert isinstance(event, ArrivalStored) and event.j == 0
            assert list(y) == [6, 0, 0]
    assert seen_match


def test_step_reneging_rate_ratio(p2):
    # from x=(3,0) with unit reneging, a reneging event has probability
    # 3 / (lam(V) + 3) per jump
    spec = ModelSpec.create(p2, [2.0, 1.0], [1.0, 1.0])
    rng = stream(3)
    m = 40_000
    reneged = 0
    for _ in range(m):
        _, event, _ = step(spec, ML, [3, 0], rng)
        reneged += isinstance(event, Reneged)
    want = 3.0 / (3.0 + 3.0)
    assert reneged / m == pytest.approx(want, abs=0.01)


def test_step_rejects_inadmissible(k3_uniform):
    with pytest.raises(InputError):
        step(k3_uniform, ML, [1, 1, 0], stream(1))


def test_run_deterministic(k3_uniform, tmp_path):
    cfg = SimConfig(spec=k3_uniform, policy=ML, horizon=200.0, seed=42)
    a = run(cfg)
    b = run(cfg)
    np.testing.assert_array_equal(a.event_times, b.event_times)
    np.testing.assert_array_equal(a.max_queue_path, b.max_queue_path)
    np.testing.assert_array_equal(a.final_state, b.final_state)
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    record_to_csv(a, str(pa))
    record_to_csv(b, str(pb))
    assert pa.read_bytes() == pb.read_bytes()


def test_run_seed_sensitivity(k3_uniform):
    a = run(SimConfig(spec=k3_uniform, policy=ML, horizon=50.0, seed=1))
    b = run(SimConfig(spec=k3_uniform, policy=ML, horizon=50.0, seed=2))
    assert not np.array_equal(a.event_times, b.event_times)


def test_run_tiny_horizon(k3):
    spec = ModelSpec.create(k3, [1e-3, 1e-3, 1e-3])
    rec = run(SimConfig(spec=spec, policy=ML, horizon=0.001, seed=0))
    assert rec.event_count == 0
    np.testing.assert_array_equal(rec.final_state, [0, 0, 0])
    assert list(rec.event_times) == [0.0, 0.001]


def test_run_prefix_determinism(p2):
    # a longer horizon extends the same trajectory, so the shorter run's
    # final state equals the longer run's path value at that time
    spec = ModelSpec.create(p2, [2.0, 1.0])
    short = run(SimConfig(spec=spec, policy=ML, horizon=40.0, seed=11))
    long = run(SimConfig(spec=spec, policy=ML, horizon=80.0, seed=11))
    assert short.total_items_path[-1] == value_at(long, 40.0, "total_items")


def test_conservation_identity():
    rng = stream(31)
    for trial in range(8):
        g = random_connected_graph(rng, 6, 0.45)
        gamma = np.where(rng.random(6) < 0.5, rng.uniform(0.3, 1.5, 6), 0.0)
        spec = ModelSpec.create(g, rng.uniform(0.5, 4.0, 6), gamma)
        x0 = np.zeros(6, dtype=int)
        x0[int(rng.integers(6))] = 3
        rec = run(SimConfig(spec=spec, policy=ML, horizon=200.0, seed=trial,
                            initial_state=tuple(x0)))
        arrivals = rec.event_count - int(rec.cum_reneged[-1])
        assert arrivals == (
            int(rec.cum_departures[-1])
            + int(rec.cum_reneged[-1])
            + int(rec.total_items_path[-1])
            - int(x0.sum())
        )
        # matches remove exactly one stored item and departures count both
        assert int(rec.cum_departures[-1]) % 2 == 0


def test_paths_are_consistent(k3_uniform):
    rec = run(SimConfig(spec=k3_uniform, policy=ML, horizon=300.0, seed=4))
    assert np.all(np.diff(rec.event_times) >= 0)
    assert np.all(np.diff(rec.cum_reward) >= 0)
    assert np.all(np.diff(rec.cum_departures) >= 0)
    assert np.all(np.diff(rec.cum_reneged) >= 0)
    assert np.all(rec.max_queue_path <= rec.total_items_path)
    assert rec.event_count == len(rec.event_times) - 2


def test_admissibility_along_trajectories():
    # per-event invariant assertions stay silent over a large event budget
    rng = stream(32)
    total_events = 0
    trial = 0
    while total_events < 1_000_000:
        g = random_connected_graph(rng, int(rng.integers(3, 9)), 0.5)
        gamma = np.where(rng.random(g.n) < 0.3, rng.uniform(0.2, 1.0, g.n), 0.0)
        spec = ModelSpec.create(g, rng.uniform(0.5, 4.0, g.n), gamma)
        rec = run(
            SimConfig(spec=spec, policy=ML, horizon=20_000.0, seed=trial),
            validate_states=True,
        )
        total_events += rec.event_count
        trial += 1


def test_time_average_matches_stationary_mean(k3_uniform):
    rec = run(SimConfig(spec=k3_uniform, policy=ML, horizon=20_000.0, seed=5))
    # stationary mean of the max queue is 3/2 (solved chain, see oracle tests)
    assert time_average(rec, "max_queue") == pytest.approx(1.5, abs=0.05)


def test_unstable_instance_grows(p2):
    spec = ModelSpec.create(p2, [2.0, 1.0])
    rec = run(SimConfig(spec=spec, policy=ML, horizon=2000.0, seed=6))
    # deficit of the violating set {0} is 1, so growth is linear at rate ~1
    assert 0.5 * 2000 <= rec.total_items_path[-1] <= 1.5 * 2000


def test_max_events_truncation(k3_uniform):
    rec = run(SimConfig(spec=k3_uniform, policy=ML, horizon=1e9, max_events=500, seed=7))
    assert rec.truncated
    assert rec.event_count == 500
    assert rec.event_times[-1] == 1e9  # closing row still written


def test_handmade_record_helpers():
    rec = TrajectoryRecord(
        event_times=np.array([0.0, 1.0, 3.0, 4.0]),
        max_queue_path=np.array([0, 2, 1, 1]),
        total_items_path=np.array([0, 2, 1, 1]),
        cum_reward=np.array([0.0, 0.0, 1.0, 1.0]),
        cum_departures=np.array([0, 0, 2, 2]),
        cum_reneged=np.array([0, 0, 0, 0]),
        final_state=np.array([1, 0]),
        event_count=2,
        horizon=4.0,
    )
    # integral: 0*1 + 2*2 + 1*1 = 5 over horizon 4
    assert time_average(rec, "max_queue") == pytest.approx(5 / 4)
    assert value_at(rec, 0.5, "max_queue") == 0
    assert value_at(rec, 1.0, "max_queue") == 2
    assert value_at(rec, 3.5, "max_queue") == 1
    assert value_at(rec, 99.0, "max_queue") == 1
    mean, se = batch_means(rec, "max_queue", n_batches=2)
    # batch averages: [0,2] -> 1.0, [2,4] -> 1.5
    assert mean == pytest.approx(1.25)
    assert se == pytest.approx(np.std([1.0, 1.5], ddof=1) / math.sqrt(2))


def test_batch_means_covers_long_run_mean(k3_uniform):
    rec = run(SimConfig(spec=k3_uniform, policy=ML, horizon=30_000.0, seed=8))
    mean, se = batch_means(rec, "max_queue", n_batches=20)
    assert mean == pytest.approx(time_average(rec, "max_queue"), rel=1e-12)
    assert abs(mean - 1.5) <= 4 * se


def test_ensemble_single_run_matches_derived_seed(k3_uniform):
    cfg = SimConfig(spec=k3_uniform, policy=ML, horizon=50.0, seed=9)
    records, summary = run_ensemble(cfg, 1)
    direct = run(SimConfig(spec=k3_uniform, policy=ML, horizon=50.0,
                           seed=derive_seed(9, 0)))
    assert summary.n_runs == 1
    assert summary.terminal_max[0] == direct.max_queue_path[-1]
    np.testing.assert_array_equal(records[0].event_times, direct.event_times)


def test_ensemble_parallel_equals_serial(k3_uniform):
    cfg = SimConfig(spec=k3_uniform, policy=ML, horizon=100.0, seed=10)
    _, serial = run_ensemble(cfg, 40, parallelism=1)
    _, parallel = run_ensemble(cfg, 40, parallelism=8)
    assert serial.to_dict() == parallel.to_dict()


def test_ensemble_terminal_law_matches_stationary(k3_uniform):
    # terminal max-queue law at t=100 from empty start is already within
    # Monte Carlo resolution of the stationary law of the solved chain:
    # P(0)=1/4 and P(n)=(3/4) 2^-n for n >= 1
    cfg = SimConfig(spec=k3_uniform, policy=ML, horizon=100.0, seed=12)
    _, summary = run_ensemble(cfg, 500, parallelism=4)
    law = [0.25] + [0.75 * 0.5**n for n in range(1, 6)]
    law.append(1.0 - sum(law))  # tail bin: n >= 6
    counts = np.zeros(7)
    for v, c in zip(summary.histogram_values, summary.histogram_counts):
        counts[min(int(v), 6)] += c
    chi2, pvalue = scipy.stats.chisquare(counts, 500 * np.array(law))
    assert pvalue > 0.001


def test_summary_quantiles_and_histogram():
    recs = []
    for terminal in (0, 1, 1, 3):
        recs.append(
            TrajectoryRecord(
                event_times=np.array([0.0, 1.0]),
                max_queue_path=np.array([terminal, terminal]),
                total_items_path=np.array([terminal, terminal]),
                cum_reward=np.array([0.0, 0.0]),
                cum_departures=np.array([0, 0]),
                cum_reneged=np.array([0, 0]),
                final_state=np.array([terminal]),
                event_count=0,
                horizon=1.0,
            )
        )
    summary = summarize(recs)
    assert summary.quantiles["min"] == 0 and summary.quantiles["max"] == 3
    assert summary.quantiles["median"] == 1
    assert list(summary.histogram_counts) == [1, 2, 0, 1]


def test_record_to_csv_format(tmp_path, k3_uniform):
    rec = run(SimConfig(spec=k3_uniform, policy=ML, horizon=5.0, seed=13))
    path = tmp_path / "traj.csv"
    record_to_csv(rec, str(path))
    lines = path.read_text().splitlines()
    assert lines[0] == "t,max_queue,total_items,cum_reward,cum_departures,cum_reneged"
    assert lines[1] == "0.0,0,0,0.0,0,0"
    assert len(lines) == len(rec.event_times) + 1
    # grid downsampling evaluates the paths, never re-simulates
    record_to_csv(rec, str(path), grid=1.0)
    lines = path.read_text().splitlines()
    assert len(lines) == 7  # header + t=0..4 + horizon row
    t, mx = lines[3].split(",")[:2]
    assert float(t) == 2.0
    assert int(mx) == value_at(rec, 2.0, "max_queue")
