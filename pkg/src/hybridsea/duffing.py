"""Single-DOF Duffing oscillator under irregular wave excitation.

High-fidelity dynamics::

    m z'' = beta sum_i (zeta_i - alpha z) cos(w_i t + p_i)
            - c1 z - c3 z^3 - b1 z' - b2 |z'| z'

Low-fidelity force models retain subsets of the linear terms:

=====  ==========  ========  ===============
model  restoring   damping   wave excitation
=====  ==========  ========  ===============
A      yes         yes       yes
B      yes         yes       no
C      yes         no        no
D      yes         no        yes
E      no          no        no
=====  ==========  ========  ===============

The correction is ``delta = m z'' - f_low(z, z', t)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .errors import ConfigError, DataError
from .integrator import FirstOrderSystem, IntegratorConfig, simulate
from .waves import elevation, harmonic_sum

# Transient window excluded from Duffing metrics.
TRANSIENT = 100.0


@dataclass(frozen=True)
class DuffingParams:
    m: float = 1.0
    c1: float = 1.0
    c3: float = 0.01
    b1: float = 0.1
    b2: float = 0.0
    beta: float = 1.0
    alpha: float = 0.0

    def __post_init__(self):
        if not self.m > 0:
            raise ConfigError("m must be > 0")
        if not self.c1 > 0:
            raise ConfigError("c1 must be > 0")
        if not self.b1 >= 0:
            raise ConfigError("b1 must be >= 0")
        if not all(np.isfinite([self.c3, self.b2, self.alpha, self.beta])):
            raise ConfigError("coefficients must be finite")

    def to_dict(self):
        return asdict(self)


class ForcingModel(str, Enum):
    A = "A"
    B = "B"
    C = "C"
    D = "D"
    E = "E"

    @property
    def restoring(self):
        return self is not ForcingModel.E

    @property
    def damping(self):
        return self in (ForcingModel.A, ForcingModel.B)

    @property
    def excitation(self):
        return self in (ForcingModel.A, ForcingModel.D)


class _Excitation:
    """``beta sum zeta_i cos(.)`` and ``beta sum cos(.)`` memoized on the last time."""

    def __init__(self, waves, beta):
        self.waves = waves
        self.beta = beta
        self._t = None
        self._val = (0.0, 0.0)

    def __call__(self, t):
        if t != self._t:
            w = self.waves
            arg = w.omega * t + w.phase
            c = np.cos(arg)
            self._val = (self.beta * float(c @ w.zeta), self.beta * float(c.sum()))
            self._t = t
        return self._val


def _linear_matrices(params, restoring=True, damping=True, a1=0.0):
    mass = np.diag([1.0, params.m + a1])
    c1 = params.c1 if restoring else 0.0
    b1 = params.b1 if damping else 0.0
    G = np.array([[0.0, 1.0], [-c1, -b1]])
    return mass, G


def high_fidelity_system(params, waves):
    exc = _Excitation(waves, params.beta)
    p = params

    def forcing(t, v):
        z, zd = v[0], v[1]
        lin, csum = exc(t)
        f = lin - p.alpha * z * csum - p.c3 * z**3 - p.b2 * abs(zd) * zd
        return np.array([0.0, f])

    mass, G = _linear_matrices(params)
    return FirstOrderSystem(mass, G, forcing, corrected=(1,),
                            elevation=lambda t: elevation(waves, t), dof_names=("z",))


def low_fidelity_system(model, params, waves):
    """First-order form of ``m z'' = f_low + delta`` for one forcing model."""
    model = ForcingModel(model)
    mass, G = _linear_matrices(params, model.restoring, model.damping)
    forcing = None
    if model.excitation:
        exc = _Excitation(waves, params.beta)
        forcing = lambda t, v: np.array([0.0, exc(t)[0]])
    return FirstOrderSystem(mass, G, forcing, corrected=(1,),
                            elevation=lambda t: elevation(waves, t), dof_names=("z",))


def solve_high_fidelity(params, waves, duration, dt, cfg=None, transient_cutoff=TRANSIENT):
    """Reference response from rest, integrated with BDF2/Newton."""
    cfg = cfg or IntegratorConfig(dt)
    sys = high_fidelity_system(params, waves)
    traj = simulate(sys, np.zeros(2), duration, cfg, transient_cutoff=transient_cutoff)
    traj.meta.update(kind="duffing-high-fidelity", params=params.to_dict())
    return traj


def predict(model, params, waves, duration, dt, corrector=None, cfg=None,
            transient_cutoff=TRANSIENT):
    """Hybrid response ``m z'' = f_low + delta*``; with no corrector this is the
    low-fidelity (for model A, linear benchmark) response."""
    cfg = cfg or IntegratorConfig(dt)
    sys = low_fidelity_system(model, params, waves)
    traj = simulate(sys, np.zeros(2), duration, cfg, corrector=corrector,
                    transient_cutoff=transient_cutoff)
    traj.meta.update(kind="duffing-hybrid", model=ForcingModel(model).value,
                     params=params.to_dict())
    return traj


def linear_excitation(params, waves, t):
    return params.beta * harmonic_sum(waves.omega, waves.zeta, waves.phase, t)


def eval_low_fidelity_force(model, params, z, zdot, waves, t):
    """Low-fidelity force ``f_low`` of one model; broadcasts over arrays."""
    model = ForcingModel(model)
    z = np.asarray(z, dtype=float)
    zdot = np.asarray(zdot, dtype=float)
    f = np.zeros(np.broadcast(z, zdot, np.asarray(t)).shape)
    if model.restoring:
        f = f - params.c1 * z
    if model.damping:
        f = f - params.b1 * zdot
    if model.excitation:
        f = f + linear_excitation(params, waves, t)
    return float(f) if f.ndim == 0 else f


def extract_delta(model, params, traj, waves):
    """Force correction ``m z'' - f_low`` at every sample of ``traj``."""
    if traj.ndof != 1:
        raise DataError("Duffing trajectories have one DOF")
    t = traj.t
    if not (len(traj.z) == len(traj.zdot) == len(traj.zddot) == len(t)):
        raise DataError("trajectory arrays are misaligned")
    return params.m * traj.zddot - eval_low_fidelity_force(model, params, traj.z, traj.zdot, waves, t)


def tabulated(traj, model, params, waves):
    """Trajectory copy carrying the extracted correction in its ``delta`` column."""
    out = traj.head(len(traj))
    out.delta = extract_delta(model, params, traj, waves)[:, None]
    out.meta["delta_model"] = ForcingModel(model).value
    return out
