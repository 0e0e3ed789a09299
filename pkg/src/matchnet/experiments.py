"""Experiment presets: randomized instances, paired policy comparisons, histograms.

Each preset samples instances from fixed distributions (Erdos-Renyi graph,
uniform arrival rates on [0, 10], Bernoulli(1/2) reneging at unit rate,
symmetric uniform rewards on [0, 10]), rejecting graphs that are not
connected and arrival vectors that fail the subcriticality check, so every
simulated system is stable by construction under max-weight.  All sampling
and run seeds are derived from the preset seed, which makes a preset's whole
artifact directory reproducible byte for byte at any worker count.

Two scales are built in: ``paper`` (30 vertices, edge probability 0.1,
100 or 500 runs to time 100) and the faster ``desk`` scale used by the
acceptance suite.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import svgplot
from .bounds import bounds_report
from .engine import SimConfig, record_to_csv, run, run_ensemble, summarize
from .errors import InputError
from .graph import erdos_renyi, is_connected
from .model import ModelSpec, find_stabilizing_lambda, is_stabilizable
from .policy import PolicyKind
from .rng import derive_seed, stream

__all__ = ["PRESETS", "PresetConfig", "preset_config", "sample_matching_instance", "run_preset"]

PRESETS = ("mw_vs_priority", "boxplot", "histogram_ml", "histogram_noisy")

_SCALES = {
    "paper": {
        "mw_vs_priority": dict(n_vertices=30, p=0.1, n_runs=100, horizon=100.0, replicas=1),
        "boxplot": dict(n_vertices=30, p=0.1, n_runs=100, horizon=100.0, replicas=1),
        "histogram_ml": dict(n_vertices=30, p=0.1, n_runs=500, horizon=100.0, replicas=1),
        "histogram_noisy": dict(n_vertices=30, p=0.1, n_runs=500, horizon=100.0, replicas=1),
    },
    "desk": {
        "mw_vs_priority": dict(n_vertices=12, p=0.25, n_runs=30, horizon=200.0, replicas=5),
        "boxplot": dict(n_vertices=12, p=0.25, n_runs=30, horizon=100.0, replicas=1),
        "histogram_ml": dict(n_vertices=12, p=0.25, n_runs=100, horizon=100.0, replicas=1),
        "histogram_noisy": dict(n_vertices=12, p=0.25, n_runs=100, horizon=100.0, replicas=1),
    },
}


@dataclass(frozen=True)
class PresetConfig:
    """Fully resolved parameters of one preset invocation."""

    name: str
    n_vertices: int
    p: float
    n_runs: int
    horizon: float
    seed: int
    replicas: int = 1
    reneging_rate: float = 1.0


def preset_config(name: str, scale: str = "desk", seed: int = 0, **overrides) -> PresetConfig:
    """Resolve a preset name and scale into a config, applying overrides."""
    if name not in PRESETS:
        raise InputError(f"unknown preset {name!r} (expected one of {PRESETS})")
    if scale not in _SCALES:
        raise InputError(f"unknown scale {scale!r} (expected one of {tuple(_SCALES)})")
    params = dict(_SCALES[scale][name])
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in params and key != "reneging_rate":
            raise InputError(f"unknown preset parameter {key!r}")
        params[key] = value
    return PresetConfig(name=name, seed=seed, **params)


def sample_matching_instance(
    seed_parts: tuple,
    n: int,
    p: float,
    reneging: bool,
    random_rewards: bool,
    noisy: bool,
    reneging_rate: float = 1.0,
    max_graph_tries: int = 1000,
    lambda_tries: int = 2000,
) -> ModelSpec:
    """Draw one stable instance from the preset distributions.

    Graphs are redrawn until connected and stabilizable; arrival rates until
    the subcriticality check passes.  Reneging rates are ``reneging_rate``
    with probability 1/2 and zero otherwise (the Bernoulli drives only which
    classes renege; the magnitude is this explicit knob).  Rewards, when
    randomized, are symmetric per edge.
    """
    rng = stream(*seed_parts)
    from .noise import DIRAC_ZERO, NoiseSpec

    for _ in range(max_graph_tries):
        g = erdos_renyi(n, p, rng)
        if not is_connected(g):
            continue
        if reneging:
            gamma = np.where(rng.random(n) < 0.5, reneging_rate, 0.0)
        else:
            gamma = np.zeros(n)
        if not is_stabilizable(g, gamma):
            continue
        lam = find_stabilizing_lambda(g, gamma, rng, max_tries=lambda_tries)
        if lam is None:
            continue
        rewards: dict | float
        if random_rewards:
            rewards = {}
            for i, j in g.edges:
                w = float(rng.uniform(0.0, 10.0))
                rewards[(i, j)] = w
                rewards[(j, i)] = w
        else:
            rewards = 0.0
        noise = NoiseSpec.uniform(-1.0, 1.0) if noisy else DIRAC_ZERO
        return ModelSpec.create(g, lam, gamma, rewards, noise)
    raise InputError(
        f"failed to sample a stable instance in {max_graph_tries} graph draws"
    )


def _run_many(cfgs: list[SimConfig], jobs: int):
    if jobs > 1 and len(cfgs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run, cfgs, chunksize=max(1, len(cfgs) // (jobs * 4))))
    return [run(c) for c in cfgs]


def _write_json(data: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _paired_policy_runs(pc: PresetConfig, jobs: int):
    """Sample instances and run max-weight and priority on each, paired."""
    specs = [
        sample_matching_instance(
            (pc.seed, "instance", k),
            pc.n_vertices,
            pc.p,
            reneging=True,
            random_rewards=True,
            noisy=False,
            reneging_rate=pc.reneging_rate,
        )
        for k in range(pc.n_runs)
    ]
    policies = (PolicyKind.MAX_WEIGHT, PolicyKind.PRIORITY)
    cfgs = []
    for k, spec in enumerate(specs):
        for policy in policies:
            for r in range(pc.replicas):
                cfgs.append(
                    SimConfig(
                        spec=spec,
                        policy=policy,
                        horizon=pc.horizon,
                        seed=derive_seed(pc.seed, "run", k, r, policy.value),
                    )
                )
    records = _run_many(cfgs, jobs)
    by_key = {}
    idx = 0
    for k in range(pc.n_runs):
        for policy in policies:
            for r in range(pc.replicas):
                by_key[(k, policy, r)] = records[idx]
                idx += 1
    return specs, by_key


def run_mw_vs_priority(pc: PresetConfig, out_dir: str, jobs: int = 1) -> dict:
    """Paired comparison of max-weight and priority on shared random instances.

    Emits per-pair trajectories (first replica of each policy), a flat CSV of
    terminal observables, box/line figures, and a summary with per-pair
    medians, the count of pairs where max-weight's median terminal max queue
    does not exceed priority's, and aggregate departure/reward ratios.
    """
    specs, by_key = _paired_policy_runs(pc, jobs)
    policies = (PolicyKind.MAX_WEIGHT, PolicyKind.PRIORITY)
    os.makedirs(os.path.join(out_dir, "trajectories"), exist_ok=True)

    pair_rows = []
    pairs_summary = []
    totals = {p: {"departures": 0.0, "reward": 0.0} for p in policies}
    wins = 0
    for k, spec in enumerate(specs):
        entry: dict = {"pair": k, "n_edges": len(spec.graph.edges)}
        medians = {}
        for policy in policies:
            terminal_max = []
            for r in range(pc.replicas):
                rec = by_key[(k, policy, r)]
                terminal_max.append(int(rec.max_queue_path[-1]))
                totals[policy]["departures"] += int(rec.cum_departures[-1])
                totals[policy]["reward"] += float(rec.cum_reward[-1])
                pair_rows.append(
                    (k, policy.value, r, int(rec.max_queue_path[-1]),
                     int(rec.total_items_path[-1]), float(rec.cum_reward[-1]),
                     int(rec.cum_departures[-1]), int(rec.cum_reneged[-1]))
                )
            medians[policy] = float(np.median(terminal_max))
            entry[f"median_terminal_max_{policy.value}"] = medians[policy]
            rec0 = by_key[(k, policy, 0)]
            record_to_csv(
                rec0,
                os.path.join(out_dir, "trajectories", f"pair{k:03d}_{policy.value}.csv"),
                grid=None if pc.horizon <= 200 else pc.horizon / 2000,
            )
        entry["mw_not_worse"] = medians[PolicyKind.MAX_WEIGHT] <= medians[PolicyKind.PRIORITY]
        wins += entry["mw_not_worse"]
        pairs_summary.append(entry)

    with open(os.path.join(out_dir, "pairs.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("pair,policy,replica,terminal_max,terminal_total,"
                 "cum_reward,cum_departures,cum_reneged\n")
        for row in pair_rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v) for v in row) + "\n")

    mw_med = [e["median_terminal_max_max_weight"] for e in pairs_summary]
    pr_med = [e["median_terminal_max_priority"] for e in pairs_summary]
    def _q(vals):
        q = np.percentile(vals, [0, 25, 50, 75, 100])
        return {"min": q[0], "q1": q[1], "median": q[2], "q3": q[3], "max": q[4]}
    svgplot.box_chart(
        [("max-weight", _q(mw_med)), ("priority", _q(pr_med))],
        os.path.join(out_dir, "terminal_max_box.svg"),
        title="terminal max queue (per-pair medians)",
        ylabel="max queue",
    )
    for series_name, fname in (("max_queue", "pair000_max_queue.svg"),
                               ("cum_reward", "pair000_cum_reward.svg"),
                               ("cum_departures", "pair000_cum_departures.svg")):
        svgplot.line_chart(
            [
                (by_key[(0, p, 0)].event_times, by_key[(0, p, 0)].series(series_name), p.value)
                for p in policies
            ],
            os.path.join(out_dir, fname),
            title=f"{series_name} (pair 0)",
            ylabel=series_name,
        )

    summary = {
        "preset": asdict(pc),
        "pairs": pairs_summary,
        "mw_not_worse_count": int(wins),
        "n_pairs": pc.n_runs,
        "departures_ratio_mw_over_priority": totals[PolicyKind.MAX_WEIGHT]["departures"]
        / max(totals[PolicyKind.PRIORITY]["departures"], 1.0),
        "reward_ratio_mw_over_priority": totals[PolicyKind.MAX_WEIGHT]["reward"]
        / max(totals[PolicyKind.PRIORITY]["reward"], 1e-12),
    }
    _write_json(summary, os.path.join(out_dir, "summary.json"))
    return summary


def run_boxplot(pc: PresetConfig, out_dir: str, jobs: int = 1) -> dict:
    """Distribution of the terminal max queue under both policies, as box plots."""
    specs, by_key = _paired_policy_runs(pc, jobs)
    policies = (PolicyKind.MAX_WEIGHT, PolicyKind.PRIORITY)
    samples = {
        policy: [int(by_key[(k, policy, 0)].max_queue_path[-1]) for k in range(pc.n_runs)]
        for policy in policies
    }
    with open(os.path.join(out_dir, "samples.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("iteration,policy,terminal_max\n")
        for k in range(pc.n_runs):
            for policy in policies:
                fh.write(f"{k},{policy.value},{samples[policy][k]}\n")
    def _q(vals):
        q = np.percentile(vals, [0, 25, 50, 75, 100])
        return {"min": q[0], "q1": q[1], "median": q[2], "q3": q[3], "max": q[4]}
    quantiles = {policy.value: _q(samples[policy]) for policy in policies}
    svgplot.box_chart(
        [(policy.value, quantiles[policy.value]) for policy in policies],
        os.path.join(out_dir, "terminal_max_box.svg"),
        title=f"terminal max queue at t={pc.horizon:g}",
        ylabel="max queue",
    )
    summary = {"preset": asdict(pc), "quantiles": quantiles,
               "samples": {k.value: v for k, v in samples.items()}}
    _write_json(summary, os.path.join(out_dir, "summary.json"))
    return summary


def run_histogram(pc: PresetConfig, out_dir: str, jobs: int = 1) -> dict:
    """Terminal max-queue histogram of one fixed instance, with bound markers.

    ``histogram_ml`` draws a bare instance (no rewards, exact measurements)
    and runs the longest-queue rule; ``histogram_noisy`` adds symmetric
    random rewards and uniform measurement noise on [-1, 1] and runs
    max-weight.  The stationary-mean bounds of the sampled instance are
    reported and drawn as vertical lines (the upper bound only when it is
    informative, which excludes the noisy variant).
    """
    noisy = pc.name == "histogram_noisy"
    spec = sample_matching_instance(
        (pc.seed, "instance"),
        pc.n_vertices,
        pc.p,
        reneging=False,
        random_rewards=noisy,
        noisy=noisy,
    )
    policy = PolicyKind.MAX_WEIGHT if noisy else PolicyKind.MATCH_LONGEST
    cfg = SimConfig(spec=spec, policy=policy, horizon=pc.horizon,
                    seed=derive_seed(pc.seed, "ensemble"))
    records, summary_stats = run_ensemble(cfg, pc.n_runs, parallelism=jobs)
    report = bounds_report(spec)

    with open(os.path.join(out_dir, "histogram.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write("terminal_max,count\n")
        for v, c in zip(summary_stats.histogram_values, summary_stats.histogram_counts):
            fh.write(f"{int(v)},{int(c)}\n")

    vlines = []
    if report.lower_mean is not None:
        vlines.append((report.lower_mean, f"lower {report.lower_mean:.3g}"))
    if report.upper_mean is not None and not noisy:
        vlines.append((report.upper_mean, f"upper {report.upper_mean:.3g}"))
    svgplot.histogram_chart(
        summary_stats.histogram_values,
        summary_stats.histogram_counts,
        os.path.join(out_dir, "histogram.svg"),
        title=f"terminal max queue over {pc.n_runs} runs at t={pc.horizon:g}",
        xlabel="max queue",
        vlines=vlines,
    )
    empirical_mean = float(np.mean(summary_stats.terminal_max))
    summary = {
        "preset": asdict(pc),
        "policy": policy.value,
        "instance": spec.to_dict(),
        "bounds": report.to_dict(),
        "empirical_mean_terminal_max": empirical_mean,
        "within_bounds": (
            report.lower_mean is not None
            and report.upper_mean is not None
            and report.lower_mean <= empirical_mean <= report.upper_mean
        ),
        "ensemble": summary_stats.to_dict(),
    }
    _write_json(summary, os.path.join(out_dir, "summary.json"))
    return summary


def run_preset(pc: PresetConfig, out_dir: str, jobs: int = 1) -> dict:
    """Dispatch a preset and write its artifact directory."""
    os.makedirs(out_dir, exist_ok=True)
    _write_json({"preset": asdict(pc)}, os.path.join(out_dir, "manifest.json"))
    if pc.name == "mw_vs_priority":
        return run_mw_vs_priority(pc, out_dir, jobs)
    if pc.name == "boxplot":
        return run_boxplot(pc, out_dir, jobs)
    if pc.name in ("histogram_ml", "histogram_noisy"):
        return run_histogram(pc, out_dir, jobs)
    raise InputError(f"unknown preset {pc.name!r}")
