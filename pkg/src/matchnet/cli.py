"""Command-line front end.

Subcommands: ``check`` (stability verdict, exit code 0 stable / 2 unstable),
``bounds``, ``simulate``, ``ensemble``, ``oracle``, ``experiment`` and
``gen-graph``.  Every command is deterministic given its inputs and seed,
including under any ``--jobs`` value; malformed input exits with code 1 and
a message on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import experiments, oracle as oracle_mod, svgplot
from .bounds import bounds_report
from .engine import SimConfig, record_to_csv, run, run_ensemble
from .errors import InputError, MatchnetError
from .graph import Graph, erdos_renyi, is_bipartite, is_connected
from .model import check_ncond, is_stabilizable, load_model
from .policy import PolicyKind
from .rng import stream

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSTABLE = 2


def _jobs_default() -> int:
    raw = os.environ.get("MATCHNET_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _dump_json(data: dict, out: str | None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _resolve_policy(flag: str | None, from_file: str | None) -> PolicyKind:
    name = flag or from_file or PolicyKind.MAX_WEIGHT.value
    return PolicyKind.parse(name)


def _cmd_check(args) -> int:
    spec, _ = load_model(args.model)
    connected = is_connected(spec.graph)
    bipartite, _parts = is_bipartite(spec.graph)
    verdict = None
    stabilizable = None
    if connected:
        stabilizable = is_stabilizable(spec.graph, spec.gamma)
        verdict = check_ncond(spec)
    data = {
        "connected": connected,
        "bipartite": bipartite,
        "stabilizable": stabilizable,
        "ncond_holds": verdict.holds if verdict else None,
        "eta": verdict.eta if verdict else None,
        "witness": sorted(verdict.witness) if verdict and verdict.witness else None,
    }
    if args.format == "json":
        _dump_json(data, None)
    else:
        print(f"connected:     {str(connected).lower()}")
        print(f"bipartite:     {str(bipartite).lower()}")
        print(f"stabilizable:  {str(stabilizable).lower()}")
        if verdict is None:
            print("stability:     n/a (graph not connected)")
        elif verdict.holds:
            print(f"stability:     holds (eta={verdict.eta:.6g})")
            if verdict.witness:
                print(f"tightest set:  {sorted(verdict.witness)}")
        else:
            print(f"stability:     VIOLATED (slack {verdict.eta:.6g})")
            print(f"witness:       {sorted(verdict.witness)}")
    if verdict is None:
        return EXIT_ERROR
    return EXIT_OK if verdict.holds else EXIT_UNSTABLE


def _cmd_bounds(args) -> int:
    spec, _ = load_model(args.model)
    report = bounds_report(spec, kappa=args.kappa)
    data = report.to_dict()
    if args.format == "json" or args.out:
        _dump_json(data, args.out)
    else:
        def show(name, value):
            if value is None:
                print(f"{name:16s} n/a ({report.notes.get(name, 'not available')})")
            else:
                print(f"{name:16s} {value:.6g}")
        print(f"{'ncond_holds':16s} {str(report.ncond_holds).lower()}")
        show("eta", report.eta)
        show("kappa", report.kappa)
        show("u_kappa", report.u_kappa)
        show("w_check", report.w_check)
        show("noise_bound", report.noise_bound)
        print(f"{'rho_tilde':16s} {[round(v, 6) for v in report.rho_tilde]}")
        show("lower_mean", report.lower_mean)
        show("upper_mean", report.upper_mean)
        show("upper_variance", report.upper_variance)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    spec, file_policy = load_model(args.model)
    policy = _resolve_policy(args.policy, file_policy)
    cfg = SimConfig(
        spec=spec,
        policy=policy,
        horizon=args.horizon,
        seed=args.seed,
        sample_grid=args.grid,
        max_events=args.max_events,
    )
    record = run(cfg)
    out = args.out or "trajectory.csv"
    record_to_csv(record, out, grid=args.grid)
    if args.svg:
        svgplot.line_chart(
            [
                (record.event_times, record.max_queue_path, "max queue"),
                (record.event_times, record.total_items_path, "total items"),
            ],
            args.svg,
            title=f"trajectory (policy={policy.value}, seed={args.seed})",
        )
    print(f"wrote {out} ({record.event_count} events"
          f"{', truncated' if record.truncated else ''})")
    return EXIT_OK


def _cmd_ensemble(args) -> int:
    spec, file_policy = load_model(args.model)
    policy = _resolve_policy(args.policy, file_policy)
    cfg = SimConfig(spec=spec, policy=policy, horizon=args.horizon, seed=args.seed)
    _records, summary = run_ensemble(cfg, args.runs, parallelism=args.jobs)
    _dump_json(summary.to_dict(), args.out)
    if args.hist_csv:
        with open(args.hist_csv, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("terminal_max,count\n")
            for v, c in zip(summary.histogram_values, summary.histogram_counts):
                fh.write(f"{int(v)},{int(c)}\n")
    if args.svg:
        svgplot.histogram_chart(
            summary.histogram_values,
            summary.histogram_counts,
            args.svg,
            title=f"terminal max queue over {args.runs} runs",
            xlabel="max queue",
        )
    return EXIT_OK


def _cmd_oracle(args) -> int:
    spec, file_policy = load_model(args.model)
    policy = _resolve_policy(args.policy, file_policy)
    data = oracle_mod.report(spec, policy, args.trunc)
    if args.format == "json" or args.out:
        _dump_json(data, args.out)
    else:
        for key in ("states", "N", "mean_max", "var_max", "mean_total", "residual"):
            value = data[key]
            print(f"{key:12s} {value:.9g}" if isinstance(value, float) else f"{key:12s} {value}")
    return EXIT_OK


def _cmd_experiment(args) -> int:
    pc = experiments.preset_config(
        args.preset,
        scale=args.scale,
        seed=args.seed,
        n_vertices=args.n,
        p=args.p,
        n_runs=args.runs,
        horizon=args.horizon,
        replicas=args.replicas,
    )
    summary = experiments.run_preset(pc, args.out_dir, jobs=args.jobs)
    print(f"wrote {args.out_dir} ({args.preset}, {pc.n_runs} runs)")
    if args.preset == "mw_vs_priority":
        print(f"max-weight not worse in {summary['mw_not_worse_count']}/{pc.n_runs} pairs; "
              f"departures ratio {summary['departures_ratio_mw_over_priority']:.4f}")
    return EXIT_OK


def _cmd_gen_graph(args) -> int:
    rng = stream(args.seed, "gen-graph")
    for attempt in range(args.max_tries):
        g = erdos_renyi(args.n, args.p, rng)
        if not args.connected or is_connected(g):
            data = g.to_dict()
            _dump_json(data, args.out)
            return EXIT_OK
    print(f"no connected graph found in {args.max_tries} draws", file=sys.stderr)
    return EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="matchnet",
        description="simulate and analyze stochastic matching networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_format(p):
        p.add_argument("--format", choices=("pretty", "json"), default="pretty")

    p = sub.add_parser("check", help="stability verdict for a model file")
    p.add_argument("model")
    add_format(p)
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("bounds", help="stationary bounds for a model file")
    p.add_argument("model")
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--out", default=None)
    add_format(p)
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("simulate", help="one trajectory to CSV")
    p.add_argument("model")
    p.add_argument("--policy", choices=[k.value for k in PolicyKind], default=None)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=float, default=None,
                   help="downsample output onto this time grid")
    p.add_argument("--max-events", type=int, default=10**9)
    p.add_argument("--out", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("ensemble", help="independent replications, summary JSON")
    p.add_argument("model")
    p.add_argument("--policy", choices=[k.value for k in PolicyKind], default=None)
    p.add_argument("--runs", type=int, required=True)
    p.add_argument("--horizon", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=_jobs_default())
    p.add_argument("--out", default=None)
    p.add_argument("--hist-csv", default=None)
    p.add_argument("--svg", default=None)
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("oracle", help="exact truncated-chain stationary analysis")
    p.add_argument("model")
    p.add_argument("--policy", choices=[k.value for k in PolicyKind], default=None)
    p.add_argument("--trunc", type=int, required=True, help="truncation level N")
    p.add_argument("--out", default=None)
    add_format(p)
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("experiment", help="run a named experiment preset")
    p.add_argument("preset", choices=experiments.PRESETS)
    p.add_argument("--scale", choices=("desk", "paper"), default="desk")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=_jobs_default())
    p.add_argument("--n", dest="n", type=int, default=None)
    p.add_argument("--p", dest="p", type=float, default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--horizon", type=float, default=None)
    p.add_argument("--replicas", type=int, default=None)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("gen-graph", help="sample a random graph to JSON")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--connected", action="store_true",
                   help="redraw until the sample is connected")
    p.add_argument("--max-tries", type=int, default=1000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_gen_graph)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MatchnetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
