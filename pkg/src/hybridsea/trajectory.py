"""Uniformly sampled multi-DOF response records and their CSV/JSON forms."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError


@dataclass(eq=False)
class StateTrajectory:
    """Positions, velocities and accelerations sampled at ``t0 + n dt``.

    Arrays ``pos``, ``vel``, ``acc`` and ``delta`` have shape ``(N, ndof)``;
    ``eta`` has shape ``(N,)``. For the first-order state ``v = (x, u)`` the
    position block is ``x``, the velocity block ``u`` and the acceleration
    block ``du/dt`` as solved from the force balance. ``delta`` holds the
    correction applied at each sample (zeros when none was used).
    """

    dt: float
    pos: np.ndarray
    vel: np.ndarray
    acc: np.ndarray
    eta: np.ndarray
    t0: float = 0.0
    delta: np.ndarray | None = None
    transient_cutoff: float = 0.0
    dof_names: tuple[str, ...] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise DataError("dt must be positive")
        self.pos = np.atleast_2d(np.asarray(self.pos, dtype=float).T).T
        self.vel = np.atleast_2d(np.asarray(self.vel, dtype=float).T).T
        self.acc = np.atleast_2d(np.asarray(self.acc, dtype=float).T).T
        self.eta = np.asarray(self.eta, dtype=float).reshape(-1)
        if self.delta is None:
            self.delta = np.zeros_like(self.acc)
        else:
            self.delta = np.atleast_2d(np.asarray(self.delta, dtype=float).T).T
        n = len(self.eta)
        for name in ("pos", "vel", "acc", "delta"):
            if getattr(self, name).shape[0] != n:
                raise DataError(f"{name} has {getattr(self, name).shape[0]} samples, eta has {n}")
        if self.dof_names is None:
            self.dof_names = tuple(f"dof{i}" for i in range(self.ndof))

    def __len__(self):
        return len(self.eta)

    @property
    def ndof(self):
        return self.pos.shape[1]

    @property
    def t(self):
        return self.t0 + self.dt * np.arange(len(self))

    # single-DOF conveniences
    @property
    def z(self):
        return self.pos[:, 0]

    @property
    def zdot(self):
        return self.vel[:, 0]

    @property
    def zddot(self):
        return self.acc[:, 0]

    def window_mask(self, cutoff=None):
        """Boolean mask of samples at or after ``t0 + cutoff``."""
        cutoff = self.transient_cutoff if cutoff is None else cutoff
        return self.t >= self.t0 + cutoff - 1e-9 * self.dt

    def quantity(self, name):
        """Series by name: ``eta`` or ``<pos|vel|acc|delta><dof index>``."""
        if name == "eta":
            return self.eta
        for block in ("pos", "vel", "acc", "delta"):
            if name.startswith(block) and name[len(block):].isdigit():
                return getattr(self, block)[:, int(name[len(block):])]
        raise DataError(f"unknown quantity {name!r}")

    def head(self, n):
        """First ``n`` samples as a new trajectory."""
        return StateTrajectory(
            self.dt, self.pos[:n], self.vel[:n], self.acc[:n], self.eta[:n],
            self.t0, self.delta[:n], self.transient_cutoff, self.dof_names, dict(self.meta),
        )

    def columns(self):
        cols = {"t": self.t, "eta": self.eta}
        for i, name in enumerate(self.dof_names):
            cols[f"{name}_pos"] = self.pos[:, i]
        for i, name in enumerate(self.dof_names):
            cols[f"{name}_vel"] = self.vel[:, i]
        for i, name in enumerate(self.dof_names):
            cols[f"{name}_acc"] = self.acc[:, i]
        for i, name in enumerate(self.dof_names):
            cols[f"{name}_delta"] = self.delta[:, i]
        return cols

    def to_csv(self, path, sidecar=True):
        cols = self.columns()
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(list(cols))
            for row in zip(*(c.tolist() for c in cols.values())):
                w.writerow([repr(v) for v in row])
        if sidecar:
            doc = {
                "dt": self.dt, "t0": self.t0, "transient_cutoff": self.transient_cutoff,
                "dof_names": list(self.dof_names), "meta": self.meta,
            }
            Path(path).with_suffix(".json").write_text(json.dumps(doc, indent=2, default=_jsonable))

    @classmethod
    def from_csv(cls, path):
        path = Path(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, data = rows[0], np.array(rows[1:], dtype=float)
        if data.ndim != 2 or data.shape[0] < 2:
            raise DataError(f"{path}: need at least two samples")
        col = {name: data[:, i] for i, name in enumerate(header)}
        names = [h[:-4] for h in header if h.endswith("_pos")]
        side = path.with_suffix(".json")
        meta = json.loads(side.read_text()) if side.exists() else {}
        t = col["t"]
        dt = meta.get("dt", float(t[1] - t[0]))
        stack = lambda suffix: np.column_stack([col[f"{n}_{suffix}"] for n in names])
        delta = stack("delta") if all(f"{n}_delta" in col for n in names) else None
        return cls(
            dt, stack("pos"), stack("vel"), stack("acc"), col["eta"], float(t[0]), delta,
            meta.get("transient_cutoff", 0.0), tuple(names), meta.get("meta", {}),
        )


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if hasattr(obj, "value"):
        return obj.value
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")
