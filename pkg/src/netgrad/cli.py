"""Command-line interface: run, experiment, sweep, validate, report.

Every command is deterministic given its config and seed; outputs embed the
root seed, per-run seeds, config fingerprint, and the stream-derivation
version so any artifact can be reproduced byte for byte. Exit codes: 0 on
success (a diverged run is data, not failure), 2 for configuration problems,
3 for I/O problems.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path

import numpy as np

from . import analysis, engine, output, report
from .config import ConfigError, ExperimentConfig
from .engine import ConfigurationError
from .noise import STREAM_VERSION, derive_run_seed


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netgrad",
        description="simulate distributed gradient methods over communication graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="TOML or JSON config file")
            p.add_argument("--set", dest="overrides", action="append", default=[],
                           metavar="PATH=VALUE", help="override a config value")
            p.add_argument("--seed", type=int, default=None,
                           help="override the root seed")
            p.add_argument("--jobs", type=int, default=None,
                           help="parallel worker count for experiments")
            p.add_argument("--allow-offschedule", action="store_true",
                           help="downgrade schedule/topology assumption failures "
                                "to warnings")
        p.add_argument("--out", default=None, help="output directory")

    p_run = sub.add_parser("run", help="one seeded simulation (or flow / density demo)")
    add_common(p_run)
    p_exp = sub.add_parser("experiment", help="Monte Carlo over derived per-run seeds")
    add_common(p_exp)
    p_sweep = sub.add_parser("sweep", help="repeat an experiment over parameter values")
    add_common(p_sweep)
    p_sweep.add_argument("--param", required=True, help="dotted config path to vary")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values for the parameter")
    p_val = sub.add_parser("validate", help="check a config without running")
    add_common(p_val)
    p_rep = sub.add_parser("report", help="render figures for produced output files")
    p_rep.add_argument("--from", dest="src", required=True,
                       help="directory holding run/experiment outputs")
    p_rep.add_argument("--out", default=None, help="directory for figures")
    return parser


def _load(args) -> ExperimentConfig:
    return ExperimentConfig.load(args.config, args.overrides)


def _strictness(exp: ExperimentConfig, args) -> bool:
    if args.allow_offschedule:
        return False
    return exp.run["validation"] == "strict"


def _validate_or_fail(exp: ExperimentConfig, args) -> None:
    if exp.mode not in ("dsgd", "dgf"):
        return
    seed = args.seed if args.seed is not None else exp.run["seed"]
    report_ = exp.build_sim_config(seed).validate(strict=_strictness(exp, args))
    for msg in report_.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    if not report_.ok:
        raise ConfigError("; ".join(report_.errors))


def _out_dir(exp: ExperimentConfig, args) -> Path:
    if args.out:
        base = Path(args.out)
    elif exp.out_dir:
        base = Path(exp.out_dir)
    else:
        base = Path("netgrad-out") / exp.name
    base.mkdir(parents=True, exist_ok=True)
    return base


def _meta(exp: ExperimentConfig, root_seed: int) -> dict:
    return {
        "name": exp.name,
        "root_seed": int(root_seed),
        "config_fingerprint": exp.fingerprint(),
        "stream_version": STREAM_VERSION,
    }


def _experiment_worker(cfg_data: dict, root_seed: int, index: int):
    exp = ExperimentConfig(cfg_data)
    seed = derive_run_seed(root_seed, index)
    return engine.run(exp.build_sim_config(seed), seed)


def run_experiment(exp: ExperimentConfig, root_seed: int, jobs: int = 1):
    """Execute the configured number of runs; aggregation is ordered by run
    index, so the summary is independent of worker scheduling."""
    runs = exp.run["runs"]
    worker = partial(_experiment_worker, exp.data, root_seed)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            trajectories = list(pool.map(worker, range(runs)))
    else:
        trajectories = [worker(i) for i in range(runs)]
    anchors = exp.anchors()
    if not anchors:
        raise ConfigError("analysis.anchors must be set for experiments")
    summary = analysis.aggregate(trajectories, anchors, exp.radius)
    records = []
    for i, traj in enumerate(trajectories):
        basin = analysis.classify_trajectory(traj, anchors, exp.radius)
        records.append({
            "run": i,
            "seed": traj.seed,
            "mean": traj.final_states.mean(axis=0),
            "basin": basin.label,
            "consensus": analysis.consensus_error(traj.final_states),
            "diverged": traj.diverged,
        })
    return summary, records


def _cmd_run(args) -> int:
    exp = _load(args)
    _validate_or_fail(exp, args)
    out = _out_dir(exp, args)
    seed = args.seed if args.seed is not None else exp.run["seed"]
    if exp.mode == "gf":
        return _run_gf(exp, seed, out)
    if exp.mode == "dgf":
        return _run_dgf(exp, seed, out)
    if exp.mode == "gibbs":
        return _run_gibbs(exp, out)

    sim = exp.build_sim_config(seed)
    traj = engine.run(sim, seed)
    n, d = sim.graph.n_vertices, sim.objectives.dimension
    output.write_trajectory_csv(out / "trajectory.csv", traj, n, d)
    anchors = exp.anchors()
    basin = None
    if anchors:
        basin = analysis.classify_trajectory(traj, anchors, exp.radius)
    payload = _meta(exp, seed) | {
        "seed": traj.seed,
        "sim_fingerprint": traj.fingerprint,
        "steps_completed": traj.steps,
        "diverged": traj.diverged,
        "diverged_at": traj.diverged_at,
        "final_states": traj.final_states,
        "final_mean": traj.final_states.mean(axis=0),
        "final_consensus_error": analysis.consensus_error(traj.final_states),
        "basin": None if basin is None else
            {"label": basin.label, "distance": basin.distance},
    }
    output.write_json(out / "run_summary.json", payload)
    label = basin.label if basin else "-"
    print(f"run seed={seed} steps={traj.steps} diverged={traj.diverged} "
          f"basin={label} -> {out}")
    return 0


def _run_gf(exp: ExperimentConfig, seed: int, out: Path) -> int:
    bundle = exp.build_objectives(1)
    x0 = exp.initial_states(1, bundle.dimension, seed)[0]
    flow_cfg = exp.data["flow"]
    flow = engine.gf_integrate(bundle.total, x0, flow_cfg["t_end"], flow_cfg["h"])
    output.write_flow_csv(out / "flow.csv", flow)
    output.write_json(out / "flow_summary.json", _meta(exp, seed) | {
        "final_state": flow.states[-1],
        "t_final": float(flow.times[-1]),
        "diverged": flow.diverged,
        "diverged_at": flow.diverged_at,
    })
    print(f"flow t_end={flow.times[-1]:g} diverged={flow.diverged} -> {out}")
    return 0


def _run_dgf(exp: ExperimentConfig, seed: int, out: Path) -> int:
    sim = exp.build_sim_config(seed)
    flow_cfg = exp.data["flow"]
    flow = engine.dgf_integrate(sim, flow_cfg["t0"], flow_cfg["t_end"], flow_cfg["h"])
    cons = [analysis.consensus_error(s) for s in flow.states]
    output.write_flow_csv(out / "dgf.csv", flow, n_agents=sim.graph.n_vertices,
                          dim=sim.objectives.dimension, consensus=cons)
    output.write_json(out / "dgf_summary.json", _meta(exp, seed) | {
        "final_states": flow.states[-1],
        "t_final": float(flow.times[-1]),
        "final_consensus_error": cons[-1],
        "diverged": flow.diverged,
        "diverged_at": flow.diverged_at,
    })
    print(f"network flow t_end={flow.times[-1]:g} diverged={flow.diverged} -> {out}")
    return 0


def _run_gibbs(exp: ExperimentConfig, out: Path) -> int:
    bundle = exp.build_objectives(1)
    if bundle.dimension != 1:
        raise ConfigError("gibbs mode needs a one-dimensional objective")
    cfg = exp.data["gibbs"]
    densities = {}
    masses = {}
    xs = None
    for eps in cfg["epsilons"]:
        xs, density = analysis.gibbs_measure_1d(bundle.total, eps,
                                                cfg["lo"], cfg["hi"], cfg["step"])
        densities[eps] = density
        if bundle.total.vectorized:
            fs = np.asarray(bundle.total.value(xs[:, None]))
        else:
            fs = np.array([float(bundle.total.value(np.array([x]))) for x in xs])
        center = float(xs[int(np.argmin(fs))])
        masses[f"{eps:g}"] = {
            "center": center,
            "mass": analysis.mass_within(xs, density, center, cfg["mass_radius"]),
        }
    output.write_density_csv(out / "density.csv", xs, densities)
    output.write_json(out / "gibbs_summary.json", _meta(exp, exp.run["seed"]) | {
        "mass_radius": cfg["mass_radius"],
        "concentration": masses,
    })
    print(f"gibbs densities for {len(densities)} epsilon(s) -> {out}")
    return 0


def _cmd_experiment(args) -> int:
    exp = _load(args)
    if exp.mode != "dsgd":
        raise ConfigError("experiment requires mode = 'dsgd'")
    _validate_or_fail(exp, args)
    out = _out_dir(exp, args)
    root_seed = args.seed if args.seed is not None else exp.run["seed"]
    jobs = args.jobs if args.jobs is not None else exp.run["jobs"]
    summary, records = run_experiment(exp, root_seed, jobs)
    dim = exp.build_objectives(exp.build_graph().n_vertices).dimension
    output.write_runs_csv(out / "runs.csv", records, dim)
    output.write_json(out / "experiment_summary.json", _meta(exp, root_seed) | {
        "runs": summary.runs,
        "counts": summary.counts,
        "seeds": summary.seeds,
        "mean_final_consensus_error": summary.mean_final_consensus_error,
        "max_final_consensus_error": summary.max_final_consensus_error,
        "anchors": [{"point": list(map(float, p)), "label": lbl}
                    for p, lbl in exp.anchors()],
        "radius": exp.radius,
    })
    counts = " ".join(f"{k}={v}" for k, v in sorted(summary.counts.items()))
    print(f"experiment runs={summary.runs} {counts} -> {out}")
    return 0


def _cmd_sweep(args) -> int:
    exp = _load(args)
    if exp.mode != "dsgd":
        raise ConfigError("sweep requires mode = 'dsgd'")
    out = _out_dir(exp, args)
    from .config import parse_override_value
    values = [parse_override_value(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs at least one value")
    rows = []
    for value in values:
        variant = exp.with_override(args.param, value)
        _validate_or_fail(variant, args)
        root_seed = args.seed if args.seed is not None else variant.run["seed"]
        jobs = args.jobs if args.jobs is not None else variant.run["jobs"]
        summary, _ = run_experiment(variant, root_seed, jobs)
        n = summary.runs
        rows.append([value,
                     summary.count("global") / n,
                     summary.count("local") / n,
                     summary.count(analysis.LABEL_DIVERGED) / n,
                     summary.count(analysis.LABEL_UNRESOLVED) / n,
                     summary.mean_final_consensus_error])
        print(f"sweep {args.param}={value}: "
              + " ".join(f"{k}={v}" for k, v in sorted(summary.counts.items())))
    output.write_sweep_csv(out / "sweep.csv", args.param, rows)
    print(f"sweep table -> {out / 'sweep.csv'}")
    return 0


def _cmd_validate(args) -> int:
    exp = _load(args)
    if exp.mode in ("dsgd", "dgf"):
        seed = args.seed if args.seed is not None else exp.run["seed"]
        report_ = exp.build_sim_config(seed).validate(strict=_strictness(exp, args))
        for msg in report_.warnings:
            print(f"warning: {msg}")
        if not report_.ok:
            for msg in report_.errors:
                print(f"error: {msg}", file=sys.stderr)
            return 2
    else:
        exp.build_objectives(1)
    print(f"config ok: {exp.name} (fingerprint {exp.fingerprint()})")
    return 0


def _cmd_report(args) -> int:
    src = Path(args.src)
    if not src.is_dir():
        raise ConfigError(f"not a directory: {src}")
    written = report.render_dir(src, args.out)
    if not written:
        print(f"no renderable output files found in {src}", file=sys.stderr)
        return 0
    for path in written:
        print(f"figure -> {path}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "experiment": _cmd_experiment,
    "sweep": _cmd_sweep,
    "validate": _cmd_validate,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, ConfigurationError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
