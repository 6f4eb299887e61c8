"""Command-line interface: ``hybridsea <verb> [options]``.

Verbs operate on JSON and CSV files so steps can be chained::

    hybridsea waves --hs 1 --wp 1 --duration 500 --seed 1 -o waves.json
    hybridsea simulate --waves waves.json --duration 500 -o hf.csv
    hybridsea extract-delta --trajectory hf.csv --waves waves.json --model A -o hf_delta.csv
    hybridsea train --trajectory hf_delta.csv -o net.json
    hybridsea predict --net net.json --waves test.json --duration 1000 --model A -o pred.csv
    hybridsea metrics --pred pred.csv --ref ref.csv

Exit codes: 0 success, 2 configuration, 3 data, 4 solver, 5 training.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, duffing, eigen, experiments, vessel
from .errors import ConfigError, HybridSeaError
from .integrator import IntegratorConfig
from .metrics import REPORT_COLUMNS, compare_trajectories, write_report_rows
from .network import CorrectorNet, NetCorrector, StencilSpec, TrainConfig, build_dataset, duffing_channels, train
from .trajectory import StateTrajectory
from .waves import SpectrumSpec, WaveRealization, elevation, sample_realization, write_elevation_csv

log = logging.getLogger("hybridsea")


def _load_config(path):
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a JSON object")
    return cfg


def _params(cfg):
    try:
        return duffing.DuffingParams(**cfg.get("params", {}))
    except TypeError as exc:
        raise ConfigError(f"invalid params: {exc}") from exc


def _out_path(args, default_name):
    if args.output:
        return Path(args.output)
    root = experiments.output_root(args.out_dir)
    root.mkdir(parents=True, exist_ok=True)
    return root / default_name


def _vessel_parts(args, cfg):
    model = vessel.VesselModel.load(args.vessel) if args.vessel else vessel.assemble_vessel(
        alpha=cfg.get("damping_fraction", 0.1))
    exc = vessel.ExcitationModel.from_dict({"speed": model.speed, **cfg.get("excitation", {})})
    gains = vessel.OracleNonlinearity(**cfg.get("oracle", {}))
    return model, exc, gains


# -- verbs --------------------------------------------------------------------------


def cmd_waves(args, cfg):
    if args.tp is not None:
        spec = SpectrumSpec.jonswap(args.hs, args.tp, args.gamma)
    else:
        spec = SpectrumSpec.bretschneider(args.hs, args.wp)
    real = sample_realization(spec, args.duration, 0 if args.seed is None else args.seed)
    out = _out_path(args, "waves.json")
    real.save(out)
    if args.csv:
        t = np.arange(0.0, args.duration, args.dt)
        write_elevation_csv(args.csv, t, elevation(real, t))
    print(out)


def cmd_simulate(args, cfg):
    waves = WaveRealization.load(args.waves)
    dt = args.dt or cfg.get("dt", 0.1)
    if args.system == "duffing":
        traj = duffing.solve_high_fidelity(_params(cfg), waves, args.duration, dt,
                                           transient_cutoff=args.cutoff if args.cutoff is not None else duffing.TRANSIENT)
    else:
        model, exc, gains = _vessel_parts(args, cfg)
        traj = vessel.synthetic_high_fidelity(model, exc, waves, gains, args.duration, dt,
                                              transient_cutoff=args.cutoff if args.cutoff is not None else 50.0)
    traj.meta.update(waves=str(args.waves), seed=waves.seed)
    out = _out_path(args, "trajectory.csv")
    traj.to_csv(out)
    print(out)


def cmd_extract_delta(args, cfg):
    traj = StateTrajectory.from_csv(args.trajectory)
    waves = WaveRealization.load(args.waves)
    if args.system == "duffing":
        d = duffing.extract_delta(args.model, _params(cfg), traj, waves)[:, None]
    else:
        model, exc, _ = _vessel_parts(args, cfg)
        d = vessel.extract_delta(model, exc, waves, traj)
    traj.delta = d
    traj.meta["delta_model"] = args.model if args.system == "duffing" else "fds-linear"
    out = _out_path(args, "trajectory_delta.csv")
    traj.to_csv(out)
    print(out)


def cmd_train(args, cfg):
    traj = StateTrajectory.from_csv(args.trajectory)
    if not np.any(traj.delta):
        raise ConfigError("trajectory carries no correction; run extract-delta first")
    features = tuple(args.features.split(",")) if args.features else (
        duffing_channels() if traj.ndof == 1 else experiments.FDS_CHANNELS)
    spec = StencilSpec(args.k, features, traj.dt)
    tcfg = TrainConfig(**{**cfg.get("train", {}), **({"seed": args.seed} if args.seed is not None else {}),
                          **({"epochs": args.epochs} if args.epochs else {})})
    layers = [int(x) for x in args.layers.split(",")]
    dofs = [int(x) for x in args.dofs.split(",")] if args.dofs else list(range(traj.ndof)) if traj.ndof == 1 else [2, 4]
    out = _out_path(args, "net.json")
    paths = []
    for dof in dofs:
        ds = build_dataset(traj, traj.delta[:, [dof]], spec, transient_cutoff=args.cutoff)
        net = train(ds, layers, tcfg)
        p = out if len(dofs) == 1 else out.with_name(f"{out.stem}_dof{dof}{out.suffix}")
        net.save(p)
        paths.append(p)
        log.info("dof %d: %d rows, best validation mse %.3e", dof, len(ds.inputs),
                 net.meta["best_validation_mse"])
    print("\n".join(map(str, paths)))


def cmd_predict(args, cfg):
    waves = WaveRealization.load(args.waves)
    nets = [CorrectorNet.load(p) for p in args.net] if args.net else []
    corrector = NetCorrector(nets) if nets else None
    dt = args.dt or (nets[0].spec.dt if nets else cfg.get("dt", 0.1))
    if args.system == "duffing":
        traj = duffing.predict(args.model, _params(cfg), waves, args.duration, dt, corrector,
                               transient_cutoff=args.cutoff if args.cutoff is not None else duffing.TRANSIENT)
    else:
        model, exc, _ = _vessel_parts(args, cfg)
        traj = vessel.linear_response(model, exc, waves, args.duration, dt, corrector,
                                      transient_cutoff=args.cutoff if args.cutoff is not None else 50.0)
    traj.meta["models"] = [n.sha256() for n in nets]
    out = _out_path(args, "prediction.csv")
    traj.to_csv(out)
    print(out)


def cmd_metrics(args, cfg):
    pred = StateTrajectory.from_csv(args.pred)
    ref = StateTrajectory.from_csv(args.ref)
    dofs = range(ref.ndof) if args.dof is None else [args.dof]
    rows = []
    for d in dofs:
        for q in args.quantities.split(","):
            rep = compare_trajectories(pred, ref, f"{q}{d}", cutoff=args.cutoff)
            rows.append({"Hs": args.hs, "Tp_or_wp": args.tp_or_wp, "model_id": args.model_id,
                         "dof": ref.dof_names[d], "quantity": q, "l2": rep.l2, "linf": rep.linf,
                         "jsd": rep.jsd, "n_samples": rep.n_samples})
    if args.output:
        write_report_rows(args.output, rows)
    w = sys.stdout
    w.write(",".join(REPORT_COLUMNS) + "\n")
    for r in rows:
        w.write(",".join(str(r[c]) for c in REPORT_COLUMNS) + "\n")


def cmd_eigen(args, cfg):
    params = _params(cfg)
    reports = eigen.all_reports(params, args.a1)
    if args.phase_csv:
        eigen.write_phase_csv(args.phase_csv, eigen.phase_field(args.phase_model, params, args.a1))
    text = json.dumps([r.to_dict() for r in reports], indent=2)
    if args.output:
        Path(args.output).write_text(text)
    print(text)


def cmd_study(args, cfg):
    study = experiments.parse_study(args.name)
    if cfg:
        plan = experiments.ExperimentPlan.from_dict({"study": study.value, **cfg})
    else:
        plan = experiments.default_plan(study)
    if args.seed is not None:
        plan = replace(plan, train_seeds=(args.seed,))
    rows = experiments.run_study(plan, out_dir=args.out_dir, threads=args.threads,
                                 export_trajectories=args.export_trajectories)
    root = experiments.output_root(args.out_dir or plan.out_dir) / plan.study.value
    print(f"{len(rows)} rows -> {root / 'results.csv'}")


# -- parser -------------------------------------------------------------------------


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--config", help="JSON file with defaults (params, train, dt, study plan)")
    g.add_argument("--seed", type=int, help="random seed")
    g.add_argument("--out-dir", help=f"output root (default ${experiments.OUT_ENV} or ./results)")
    g.add_argument("--threads", type=int, default=1, help="worker processes for studies")
    g.add_argument("--export-trajectories", action="store_true", help="write study trajectories")
    g.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hybridsea", description=__doc__.split("\n")[0],
                                epilog="Global options are accepted after the verb.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="verb", required=True)

    def verb(name, fn, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.set_defaults(func=fn)
        sp.add_argument("-o", "--output", help="output file")
        return sp

    def system(sp):
        sp.add_argument("--system", choices=("duffing", "vessel"), default="duffing")
        sp.add_argument("--vessel", help="vessel JSON (default: FDS)")

    sp = verb("waves", cmd_waves, "sample a wave realization")
    sp.add_argument("--hs", type=float, required=True)
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--wp", type=float, help="peak frequency, rad/s (Bretschneider form)")
    grp.add_argument("--tp", type=float, help="peak period, s (JONSWAP)")
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--duration", type=float, required=True)
    sp.add_argument("--dt", type=float, default=0.1)
    sp.add_argument("--csv", help="also write the elevation series here")

    sp = verb("simulate", cmd_simulate, "high-fidelity response")
    system(sp)
    sp.add_argument("--waves", required=True)
    sp.add_argument("--duration", type=float, required=True)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--cutoff", type=float)

    sp = verb("extract-delta", cmd_extract_delta, "force correction of a trajectory")
    system(sp)
    sp.add_argument("--trajectory", required=True)
    sp.add_argument("--waves", required=True)
    sp.add_argument("--model", default="A", choices=list("ABCDE"))

    sp = verb("train", cmd_train, "train corrector networks")
    sp.add_argument("--trajectory", required=True, help="CSV with a delta column")
    sp.add_argument("--k", type=int, default=5)
    sp.add_argument("--features", help="comma-separated channel ids")
    sp.add_argument("--layers", default="30,30")
    sp.add_argument("--dofs", help="corrected DOF indices (default 0, or 2,4 for 6 DOF)")
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--cutoff", type=float, default=0.0)

    sp = verb("predict", cmd_predict, "hybrid or linear prediction")
    system(sp)
    sp.add_argument("--net", action="append", help="network JSON (repeat per corrected DOF)")
    sp.add_argument("--waves", required=True)
    sp.add_argument("--duration", type=float, required=True)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--model", default="A", choices=list("ABCDE"))
    sp.add_argument("--cutoff", type=float)

    sp = verb("metrics", cmd_metrics, "L2, Linf and JSD of a prediction")
    sp.add_argument("--pred", required=True)
    sp.add_argument("--ref", required=True)
    sp.add_argument("--quantities", default="pos,vel,acc")
    sp.add_argument("--dof", type=int)
    sp.add_argument("--cutoff", type=float)
    sp.add_argument("--model-id", default="")
    sp.add_argument("--hs", default="")
    sp.add_argument("--tp-or-wp", default="")

    sp = verb("eigen", cmd_eigen, "eigenvalues of the low-fidelity models")
    sp.add_argument("--a1", type=float, default=0.0)
    sp.add_argument("--phase-csv")
    sp.add_argument("--phase-model", default="A", choices=list("ABCDE"))

    sp = verb("study", cmd_study, "run an experiment study")
    sp.add_argument("name", help="; ".join(experiments.STUDY_ALIASES))
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        args.func(args, _load_config(args.config))
    except HybridSeaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
