"""Configuration-driven experiment studies.

Each study expands an :class:`ExperimentPlan` into independent cells (one
per training configuration). Cells are hermetic functions of plain data, so
they can run in a process pool; the parent process alone writes results.

Output layout under ``<out_dir>/<study>/``::

    results.csv        one row per (condition, model, dof, quantity)
    manifests/         one JSON provenance record per cell
    models/            trained networks
    trajectories/      prediction/reference CSVs (only when exporting)
"""
from __future__ import annotations

import json
import logging
import os
import platform
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .duffing import TRANSIENT, DuffingParams, ForcingModel, extract_delta, predict, solve_high_fidelity
from .errors import ConfigError
from .integrator import IntegratorConfig
from .metrics import REPORT_COLUMNS, compare_trajectories, write_report_rows
from .network import (NetCorrector, StencilSpec, TableCorrector, TrainConfig, build_dataset,
                      duffing_channels, train)
from .vessel import (OracleNonlinearity, assemble_vessel, ExcitationModel, linear_response,
                     sized_nonlinearity, synthetic_high_fidelity)
from . import vessel
from .waves import SpectrumSpec, count_zuc, duration_for_zuc, elevation, sample_realization

log = logging.getLogger(__name__)

OUT_ENV = "HYBRIDSEA_OUT"
FDS_TRANSIENT = 50.0
FDS_CHANNELS = ("pos2", "pos4", "vel2", "vel4", "acc2", "acc4", "eta")
EXTRA_COLUMNS = ("study", "train_seed", "test_seed", "n_zuc", "train_duration", "k", "k_over_tp",
                 "model_sha256")


class Study(str, Enum):
    DUFFING_TRAIN_SIZE = "DuffingTrainSize"
    DUFFING_HS_SWEEP = "DuffingHsSweep"
    STENCIL_SWEEP = "StencilSweep"
    TRAIN_SIZE_6DOF = "TrainSizeSweep6DOF"
    SEAWAY_GRID = "SeawayGrid"

    @property
    def is_duffing(self):
        return self in (Study.DUFFING_TRAIN_SIZE, Study.DUFFING_HS_SWEEP)


# CLI-friendly aliases for ``study <name>``.
STUDY_ALIASES = {
    "duffing-trainsize": Study.DUFFING_TRAIN_SIZE,
    "duffing-hs-sweep": Study.DUFFING_HS_SWEEP,
    "stencil-sweep": Study.STENCIL_SWEEP,
    "trainsize-6dof": Study.TRAIN_SIZE_6DOF,
    "seaway-grid": Study.SEAWAY_GRID,
}


def parse_study(name):
    if name in STUDY_ALIASES:
        return STUDY_ALIASES[name]
    try:
        return Study(name)
    except ValueError:
        names = sorted(STUDY_ALIASES) + [s.value for s in Study]
        raise ConfigError(f"unknown study {name!r}; choose from {', '.join(names)}") from None


@dataclass(frozen=True)
class Condition:
    """Sea state. Duffing conditions use ``omega_p``; FDS conditions use ``tp``."""

    hs: float
    omega_p: float | None = None
    tp: float | None = None

    def __post_init__(self):
        if (self.omega_p is None) == (self.tp is None):
            raise ConfigError("a condition needs exactly one of omega_p or tp")
        if self.hs < 0:
            raise ConfigError("Hs must be >= 0")

    def spectrum(self):
        if self.tp is not None:
            return SpectrumSpec.jonswap(self.hs, self.tp, 1.0)
        return SpectrumSpec.bretschneider(self.hs, self.omega_p)

    @property
    def period_or_frequency(self):
        return self.tp if self.tp is not None else self.omega_p

    @classmethod
    def parse(cls, d):
        if isinstance(d, Condition):
            return d
        if isinstance(d, (list, tuple)):
            raise ConfigError("conditions are objects like {\"hs\": 1.0, \"omega_p\": 1.0}")
        return cls(float(d["hs"]), d.get("omega_p"), d.get("tp"))


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to reproduce one study.

    ``budgets`` holds N_ZUC training sizes (Duffing, FDS train-size sweep);
    ``k_grid`` the stencil lengths of the stencil sweep. Seeds for training
    and testing must be disjoint.
    """

    study: Study
    train_condition: Condition
    test_conditions: tuple[Condition, ...]
    models: tuple[str, ...] = ("A",)
    k: int = 5
    k_grid: tuple[int, ...] = ()
    budgets: tuple[int, ...] = ()
    train_duration: float | None = None
    train_seeds: tuple[int, ...] = (1,)
    test_seeds: tuple[int, ...] = (1001,)
    test_duration: float = 1000.0
    transient_cutoff: float = TRANSIENT
    dt: float = 0.1
    hidden_layers: tuple[int, ...] = (30, 30)
    train: TrainConfig = field(default_factory=TrainConfig)
    params: DuffingParams = field(default_factory=DuffingParams)
    include_linear: bool = True
    include_oracle: bool = False
    oracle_fraction: float = 0.1
    oracle_gains: OracleNonlinearity | None = None
    out_dir: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.train_seeds or not self.test_seeds:
            raise ConfigError("plans need at least one training and one test seed")
        leak = set(self.train_seeds) & set(self.test_seeds)
        if leak:
            raise ConfigError(f"training and test seeds overlap: {sorted(leak)}")
        if not self.dt > 0 or not self.test_duration > self.transient_cutoff:
            raise ConfigError("need dt > 0 and a test duration longer than the transient cutoff")
        for m in self.models:
            if self.study.is_duffing:
                ForcingModel(m)
        if self.study in (Study.DUFFING_TRAIN_SIZE, Study.TRAIN_SIZE_6DOF) and not self.budgets:
            raise ConfigError(f"{self.study.value} needs a non-empty budgets list")
        if self.study is Study.STENCIL_SWEEP and not self.k_grid:
            raise ConfigError("StencilSweep needs a non-empty k_grid")
        if not self.test_conditions:
            raise ConfigError("at least one test condition is required")
        if any(h < 1 for h in self.hidden_layers) or self.k < 1:
            raise ConfigError("hidden sizes and k must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d["study"] = self.study.value
        d["train_condition"] = asdict(self.train_condition)
        d["test_conditions"] = [asdict(c) for c in self.test_conditions]
        d["oracle_gains"] = self.oracle_gains.to_dict() if self.oracle_gains else None
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown plan keys: {sorted(unknown)}")
        study = parse_study(d.pop("study"))
        base = default_plan(study)
        try:
            kw = {}
            if "train_condition" in d:
                kw["train_condition"] = Condition.parse(d.pop("train_condition"))
            if "test_conditions" in d:
                kw["test_conditions"] = tuple(Condition.parse(c) for c in d.pop("test_conditions"))
            if "train" in d:
                kw["train"] = TrainConfig(**{**base.train.to_dict(), **d.pop("train")})
            if "params" in d:
                kw["params"] = DuffingParams(**{**base.params.to_dict(), **d.pop("params")})
            if d.get("oracle_gains") is not None:
                kw["oracle_gains"] = OracleNonlinearity(**d.pop("oracle_gains"))
            for key in ("models", "k_grid", "budgets", "train_seeds", "test_seeds", "hidden_layers"):
                if key in d:
                    kw[key] = tuple(d.pop(key))
            kw.update(d)
            return replace(base, **kw)
        except (TypeError, KeyError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"invalid plan: {exc}") from exc

    @classmethod
    def load(cls, path):
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read plan {path}: {exc}") from exc
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def default_plan(study):
    """Full-scale defaults for each study."""
    study = parse_study(study) if not isinstance(study, Study) else study
    duff_train = Condition(1.0, omega_p=1.0)
    fds_train = Condition(4.0, tp=8.5)
    nine = tuple(Condition(h, tp=t) for h in (2.0, 4.0, 6.0) for t in (7.5, 8.5, 9.5))
    fds = dict(dt=0.1, k=10, hidden_layers=(30, 30, 30), transient_cutoff=FDS_TRANSIENT,
               test_duration=600.0, models=("FDS",))
    if study is Study.DUFFING_TRAIN_SIZE:
        return ExperimentPlan(study, duff_train, (duff_train,), models=tuple("ABCDE"),
                              budgets=(10, 25, 50, 100, 200, 500))
    if study is Study.DUFFING_HS_SWEEP:
        tests = tuple(Condition(h, omega_p=1.0) for h in (0.01, 0.25, 0.5, 1.0, 1.5))
        return ExperimentPlan(study, duff_train, tests, models=tuple("ABCDE"), budgets=(100,),
                              train_seeds=(1, 2, 3))
    if study is Study.STENCIL_SWEEP:
        return ExperimentPlan(study, Condition(4.0, tp=7.5), (Condition(4.0, tp=7.5),),
                              k_grid=(1, 2, 5, 10, 20, 50, 100), train_duration=150.0, **fds)
    if study is Study.TRAIN_SIZE_6DOF:
        return ExperimentPlan(study, fds_train, (fds_train,), budgets=(10, 25, 50, 107, 200), **fds)
    return ExperimentPlan(study, fds_train, nine, train_duration=150.0, **fds)


# -- shared cached building blocks -----------------------------------------------------


@lru_cache(maxsize=32)
def _duffing_reference(params, cond, seed, duration, dt, cutoff):
    waves = sample_realization(cond.spectrum(), duration, seed)
    return waves, solve_high_fidelity(params, waves, duration, dt, transient_cutoff=cutoff)


@lru_cache(maxsize=4)
def fds_setup(train_condition, seed, dt, fraction, gains=None):
    """Vessel, excitation and oracle nonlinearity for a 6-DOF study.

    Unless explicit gains are given, the cubic gains are sized from the
    linear response to the training condition (600 s, transient removed).
    """
    model = assemble_vessel()
    exc = ExcitationModel(speed=model.speed)
    if gains is None:
        waves = sample_realization(train_condition.spectrum(), 600.0, seed)
        lin = linear_response(model, exc, waves, 600.0, dt)
        w = lin.window_mask(FDS_TRANSIENT)
        gains = sized_nonlinearity(model, lin.pos[w, 2].std(), lin.pos[w, 4].std(), fraction)
    return model, exc, gains


@lru_cache(maxsize=16)
def _fds_reference(gains, cond, seed, duration, dt, cutoff, setup_key):
    model, exc, _ = fds_setup(*setup_key)
    waves = sample_realization(cond.spectrum(), duration, seed)
    return waves, synthetic_high_fidelity(model, exc, waves, gains, duration, dt, transient_cutoff=cutoff)


def _metric_rows(pred, ref, cond, model_id, dofs, quantities, extra):
    rows = []
    for dof_index, dof_name in dofs:
        for q in quantities:
            rep = compare_trajectories(pred, ref, f"{q}{dof_index}")
            rows.append({
                "Hs": cond.hs, "Tp_or_wp": cond.period_or_frequency, "model_id": model_id,
                "dof": dof_name, "quantity": q, "l2": rep.l2, "linf": rep.linf, "jsd": rep.jsd,
                "n_samples": rep.n_samples, **extra,
            })
    return rows


_DUFFING_DOFS = ((0, "z"),)
_FDS_DOFS = ((2, "heave"), (4, "pitch"))
_QUANTITIES = ("pos", "vel", "acc")


class CellResult(dict):
    """``rows``, ``models`` (name -> JSON text), ``manifest`` and ``trajectories``."""


def _export(store, name, traj, enabled):
    if enabled:
        store[name] = traj


# -- Duffing cells ------------------------------------------------------------------


def _train_duffing(plan, model, train_seed, duration):
    cond = plan.train_condition
    waves, hf = _duffing_reference(plan.params, cond, train_seed, duration, plan.dt, 0.0)
    spec = StencilSpec(plan.k, duffing_channels(), plan.dt)
    ds = build_dataset(hf, extract_delta(model, plan.params, hf, waves), spec, transient_cutoff=0.0)
    net = train(ds, list(plan.hidden_layers), replace(plan.train, seed=train_seed))
    return net, waves


def _duffing_predictions(plan, net, model, cond, test_seed, extra, trajs, tag, export):
    waves, ref = _duffing_reference(plan.params, cond, test_seed, plan.test_duration, plan.dt,
                                    plan.transient_cutoff)
    hyb = predict(model, plan.params, waves, plan.test_duration, plan.dt, NetCorrector(net),
                  transient_cutoff=plan.transient_cutoff)
    _export(trajs, f"{tag}_hybrid_{model}", hyb, export)
    _export(trajs, f"{tag}_reference", ref, export)
    return _metric_rows(hyb, ref, cond, model, _DUFFING_DOFS, _QUANTITIES, extra)


def duffing_trainsize_cell(plan, model, n_zuc, train_seed, export=False):
    spec = plan.train_condition.spectrum()
    duration = duration_for_zuc(spec, n_zuc, train_seed, plan.dt)
    net, _ = _train_duffing(plan, model, train_seed, duration)
    res = CellResult(rows=[], models={}, trajectories={})
    name = f"{model}_zuc{n_zuc}_seed{train_seed}"
    res["models"][name] = net.dumps()
    for test_seed in plan.test_seeds:
        for cond in plan.test_conditions:
            extra = dict(study=plan.study.value, train_seed=train_seed, test_seed=test_seed,
                         n_zuc=n_zuc, train_duration=duration, k=plan.k, model_sha256=net.sha256())
            tag = f"{name}_hs{cond.hs:g}_test{test_seed}"
            res["rows"] += _duffing_predictions(plan, net, model, cond, test_seed, extra,
                                                res["trajectories"], tag, export)
    res["manifest"] = {"cell": name, "model": model, "n_zuc": n_zuc, "train_seed": train_seed,
                       "train_duration": duration, "model_sha256": net.sha256(),
                       "train_meta": _short_meta(net.meta)}
    return res


def duffing_hs_cell(plan, model, train_seed, export=False):
    spec = plan.train_condition.spectrum()
    n_zuc = plan.budgets[0] if plan.budgets else 100
    duration = plan.train_duration or duration_for_zuc(spec, n_zuc, train_seed, plan.dt)
    net, _ = _train_duffing(plan, model, train_seed, duration)
    name = f"{model}_seed{train_seed}"
    res = CellResult(rows=[], models={name: net.dumps()}, trajectories={})
    for test_seed in plan.test_seeds:
        for cond in plan.test_conditions:
            extra = dict(study=plan.study.value, train_seed=train_seed, test_seed=test_seed,
                         n_zuc=n_zuc, train_duration=duration, k=plan.k, model_sha256=net.sha256())
            tag = f"{name}_hs{cond.hs:g}_test{test_seed}"
            res["rows"] += _duffing_predictions(plan, net, model, cond, test_seed, extra,
                                                res["trajectories"], tag, export)
    res["manifest"] = {"cell": name, "model": model, "n_zuc": n_zuc, "train_seed": train_seed,
                       "train_duration": duration, "model_sha256": net.sha256(),
                       "train_meta": _short_meta(net.meta)}
    return res


def duffing_baseline_cell(plan, export=False):
    """Linear benchmark (model A physics without correction) and, optionally,
    the exact tabulated-correction oracle."""
    res = CellResult(rows=[], models={}, trajectories={})
    for test_seed in plan.test_seeds:
        for cond in plan.test_conditions:
            waves, ref = _duffing_reference(plan.params, cond, test_seed, plan.test_duration,
                                            plan.dt, plan.transient_cutoff)
            extra = dict(study=plan.study.value, test_seed=test_seed, k=plan.k)
            tag = f"hs{cond.hs:g}_test{test_seed}"
            if plan.include_linear:
                lin = predict("A", plan.params, waves, plan.test_duration, plan.dt,
                              transient_cutoff=plan.transient_cutoff)
                _export(res["trajectories"], f"{tag}_linear", lin, export)
                res["rows"] += _metric_rows(lin, ref, cond, "linear", _DUFFING_DOFS, _QUANTITIES, extra)
            if plan.include_oracle:
                table = TableCorrector(extract_delta("A", plan.params, ref, waves))
                orc = predict("A", plan.params, waves, plan.test_duration, plan.dt, table,
                              transient_cutoff=plan.transient_cutoff)
                res["rows"] += _metric_rows(orc, ref, cond, "A-oracle", _DUFFING_DOFS, _QUANTITIES, extra)
    res["manifest"] = {"cell": "baselines"}
    return res


# -- 6-DOF cells --------------------------------------------------------------------


def _setup_key(plan):
    return (plan.train_condition, plan.train_seeds[0], plan.dt, plan.oracle_fraction, plan.oracle_gains)


def _train_fds(plan, k, train_seed, duration):
    key = _setup_key(plan)
    model, exc, gains = fds_setup(*key)
    waves, hf = _fds_reference(gains, plan.train_condition, train_seed, duration, plan.dt, 0.0, key)
    delta = vessel.extract_delta(model, exc, waves, hf)
    spec = StencilSpec(k, FDS_CHANNELS, plan.dt)
    nets = []
    for dof in (2, 4):
        ds = build_dataset(hf, delta[:, [dof]], spec, transient_cutoff=0.0)
        nets.append(train(ds, list(plan.hidden_layers), replace(plan.train, seed=train_seed)))
    return nets


def _fds_predictions(plan, nets, cond, test_seed, extra, trajs, tag, export):
    key = _setup_key(plan)
    model, exc, gains = fds_setup(*key)
    waves, ref = _fds_reference(gains, cond, test_seed, plan.test_duration, plan.dt,
                                plan.transient_cutoff, key)
    hyb = linear_response(model, exc, waves, plan.test_duration, plan.dt, NetCorrector(nets),
                          transient_cutoff=plan.transient_cutoff)
    _export(trajs, f"{tag}_hybrid", hyb, export)
    _export(trajs, f"{tag}_reference", ref, export)
    return _metric_rows(hyb, ref, cond, "hybrid", _FDS_DOFS, _QUANTITIES, extra)


def fds_cell(plan, train_seed, k=None, duration=None, n_zuc=None, export=False):
    k = k or plan.k
    duration = duration or plan.train_duration
    nets = _train_fds(plan, k, train_seed, duration)
    sha = "+".join(n.sha256() for n in nets)
    name = f"k{k}_dur{duration:g}_seed{train_seed}"
    res = CellResult(rows=[], trajectories={},
                     models={f"{name}_heave": nets[0].dumps(), f"{name}_pitch": nets[1].dumps()})
    for test_seed in plan.test_seeds:
        for cond in plan.test_conditions:
            extra = dict(study=plan.study.value, train_seed=train_seed, test_seed=test_seed, k=k,
                         k_over_tp=k * plan.dt / cond.tp, train_duration=duration, n_zuc=n_zuc,
                         model_sha256=sha)
            tag = f"{name}_hs{cond.hs:g}_tp{cond.tp:g}_test{test_seed}"
            res["rows"] += _fds_predictions(plan, nets, cond, test_seed, extra,
                                            res["trajectories"], tag, export)
    _, _, gains = fds_setup(*_setup_key(plan))
    res["manifest"] = {"cell": name, "k": k, "train_seed": train_seed, "train_duration": duration,
                       "model_sha256": [n.sha256() for n in nets], "oracle": gains.to_dict(),
                       "train_meta": [_short_meta(n.meta) for n in nets]}
    return res


def fds_baseline_cell(plan, export=False):
    key = _setup_key(plan)
    model, exc, gains = fds_setup(*key)
    res = CellResult(rows=[], models={}, trajectories={})
    for test_seed in plan.test_seeds:
        for cond in plan.test_conditions:
            waves, ref = _fds_reference(gains, cond, test_seed, plan.test_duration, plan.dt,
                                        plan.transient_cutoff, key)
            lin = linear_response(model, exc, waves, plan.test_duration, plan.dt,
                                  transient_cutoff=plan.transient_cutoff)
            tag = f"hs{cond.hs:g}_tp{cond.tp:g}_test{test_seed}"
            _export(res["trajectories"], f"{tag}_linear", lin, export)
            extra = dict(study=plan.study.value, test_seed=test_seed)
            res["rows"] += _metric_rows(lin, ref, cond, "linear", _FDS_DOFS, _QUANTITIES, extra)
    res["manifest"] = {"cell": "baselines", "oracle": gains.to_dict(), "vessel": model.to_dict(),
                       "excitation": exc.to_dict()}
    return res


def _short_meta(meta):
    return {k: v for k, v in meta.items() if k not in ("train_loss", "validation_loss")}


# -- orchestration ------------------------------------------------------------------


def plan_cells(plan, export=False):
    """``(function, kwargs)`` pairs for every cell of the plan."""
    s = plan.study
    cells = []
    if s is Study.DUFFING_TRAIN_SIZE:
        for n_zuc in plan.budgets:
            for m in plan.models:
                for seed in plan.train_seeds:
                    cells.append((duffing_trainsize_cell, dict(model=m, n_zuc=n_zuc, train_seed=seed)))
        cells.append((duffing_baseline_cell, {}))
    elif s is Study.DUFFING_HS_SWEEP:
        for m in plan.models:
            for seed in plan.train_seeds:
                cells.append((duffing_hs_cell, dict(model=m, train_seed=seed)))
        cells.append((duffing_baseline_cell, {}))
    elif s is Study.STENCIL_SWEEP:
        for k in plan.k_grid:
            for seed in plan.train_seeds:
                cells.append((fds_cell, dict(train_seed=seed, k=k)))
        cells.append((fds_baseline_cell, {}))
    elif s is Study.TRAIN_SIZE_6DOF:
        spec = plan.train_condition.spectrum()
        for n_zuc in plan.budgets:
            for seed in plan.train_seeds:
                dur = duration_for_zuc(spec, n_zuc, seed, plan.dt)
                cells.append((fds_cell, dict(train_seed=seed, duration=dur, n_zuc=n_zuc)))
        cells.append((fds_baseline_cell, {}))
    else:
        for seed in plan.train_seeds:
            cells.append((fds_cell, dict(train_seed=seed)))
        cells.append((fds_baseline_cell, {}))
    return [(f, {**kw, "export": export}) for f, kw in cells]


def _run_cell(args):
    fn, plan, kw = args
    return fn(plan, **kw)


def output_root(out_dir=None):
    return Path(out_dir or os.environ.get(OUT_ENV) or "results")


def run_study(plan, out_dir=None, threads=1, export_trajectories=False, write=True):
    """Run every cell of ``plan`` and return the result rows.

    With ``write`` the rows, manifests and models are written under
    ``<out_dir>/<study>/``.
    """
    cells = plan_cells(plan, export_trajectories)
    jobs = [(f, plan, kw) for f, kw in cells]
    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_cell, jobs))
    else:
        results = [_run_cell(j) for j in jobs]

    rows = [r for res in results for r in res["rows"]]
    if write:
        root = output_root(out_dir or plan.out_dir) / plan.study.value
        _write_outputs(root, plan, results, threads)
    return rows


def _write_outputs(root, plan, results, threads):
    (root / "manifests").mkdir(parents=True, exist_ok=True)
    (root / "models").mkdir(exist_ok=True)
    csv_path = root / "results.csv"
    if csv_path.exists():
        csv_path.unlink()
    write_report_rows(csv_path, [r for res in results for r in res["rows"]], EXTRA_COLUMNS)
    env = {"package_version": __version__, "python": platform.python_version(),
           "numpy": np.__version__, "threads": threads}
    for res in results:
        man = dict(res["manifest"], plan=plan.to_dict(), environment=env,
                   models=sorted(res["models"]))
        for name, text in res["models"].items():
            (root / "models" / f"{name}.json").write_text(text)
        if res["trajectories"]:
            tdir = root / "trajectories"
            tdir.mkdir(exist_ok=True)
            for name, traj in res["trajectories"].items():
                traj.to_csv(tdir / f"{name}.csv")
            man["trajectories"] = sorted(res["trajectories"])
        (root / "manifests" / f"{res['manifest']['cell']}.json").write_text(
            json.dumps(man, indent=2, default=_json_default))
    summary = summarize(plan, [r for res in results for r in res["rows"]])
    (root / "summary.json").write_text(json.dumps(summary, indent=2, default=_json_default))
    log.info("wrote %s", root)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, Enum):
        return o.value
    raise TypeError(f"not serializable: {type(o).__name__}")


# -- summaries ----------------------------------------------------------------------


def median_jsd(rows, quantities=_QUANTITIES, dofs=None, **match):
    """Median over matching rows (seeds) of the per-cell mean JSD over ``quantities``.

    Rows are grouped by ``(train_seed, test_seed)`` so each cell contributes
    one value: the mean JSD over the requested quantities and DOFs.
    """
    cells = {}
    for r in rows:
        if any(r.get(k) != v for k, v in match.items()):
            continue
        if r["quantity"] not in quantities or (dofs and r["dof"] not in dofs):
            continue
        cells.setdefault((r.get("train_seed"), r.get("test_seed")), []).append(r["jsd"])
    if not cells:
        raise ConfigError(f"no rows match {match}")
    return statistics.median(float(np.mean(v)) for v in cells.values())


def converged_budget(budgets, values, tol=0.05):
    """Smallest budget after which successive values change by less than ``tol``."""
    for i in range(1, len(values)):
        if abs(values[i] - values[i - 1]) <= tol * abs(values[i - 1]):
            return budgets[i - 1]
    return None


def summarize(plan, rows):
    out = {"study": plan.study.value}
    if plan.study is Study.DUFFING_TRAIN_SIZE:
        for m in plan.models:
            curve = [median_jsd(rows, model_id=m, n_zuc=b) for b in plan.budgets]
            out[m] = {"budgets": list(plan.budgets), "median_jsd": curve,
                      "converged_at": converged_budget(plan.budgets, curve)}
    elif plan.study is Study.DUFFING_HS_SWEEP:
        for m in list(plan.models) + (["linear"] if plan.include_linear else []):
            out[m] = {str(c.hs): median_jsd(rows, model_id=m, Hs=c.hs) for c in plan.test_conditions}
    return out


def zuc_of(spec, duration, seed, dt=0.1):
    """N_ZUC of a realization record (for reporting training sizes)."""
    waves = sample_realization(spec, duration, seed)
    return count_zuc(elevation(waves, np.arange(0.0, duration, dt)))
