"""Six-DOF ship-fixed seakeeping model of the Fast Displacement Ship (FDS).

State ``v = (x_e, y_e, z_e, phi, theta, psi, u, v, w, p, q, r)``: earth-fixed
positions and Euler angles followed by ship-fixed velocities. The velocity
rows obey ``(M + A) du/dt = f_w - B u - C x + f_nl + delta`` and the position
rows are the Euler-angle kinematics ``dx/dt = T(phi, theta, psi) u``.

Hydrodynamic coefficients below are the FDS infinite-frequency added mass and
hydrostatic stiffness. Wave excitation uses a configurable head-seas transfer
model; the proprietary boundary-element excitation is not available.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError
from .integrator import FirstOrderSystem, IntegratorConfig, euler_transform, simulate
from .waves import harmonic_sum

G_ACC = 9.81
KNOT = 1852.0 / 3600.0

DOF_NAMES = ("surge", "sway", "heave", "roll", "pitch", "yaw")
HEAVE, PITCH = 2, 4
SURGE_VEL = 6

FDS_ADDED_MASS = np.array([
    [6.9e3, 0, 1.2e4, 0, 3.3e6, 0],
    [0, 6.0e6, 0, -4.7e5, 0, 6.5e6],
    [1.1e4, 0, 4.3e6, 0, 3.2e7, 0],
    [0, -4.4e5, 0, 7.7e6, 0, 3.6e7],
    [3.3e6, 0, 3.2e7, 0, 2.2e9, 0],
    [0, 6.5e6, 0, 3.6e7, 0, 4.3e8],
])

FDS_STIFFNESS = np.array([
    [0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0],
    [0, 0, 1.01e7, 0, 3.65e7, 0],
    [0, 0, 0, 4.49e7, 0, 0],
    [0, 0, 3.65e7, 0, 6.25e9, 0],
    [0, 0, 0, 0, 0, 0],
])


@dataclass(frozen=True)
class Particulars:
    """Main particulars. ``kxx`` and ``kzz`` are not published for the FDS;
    the defaults (0.4 B and 0.25 Lpp) only matter for the unexcited DOFs."""

    lpp: float = 100.0
    breadth: float = 12.502
    draft: float = 3.125
    volume: float = 1568.4
    displacement_t: float = 1607.6
    kyy: float = 25.0
    kxx: float = 5.0
    kzz: float = 25.0
    speed_kn: float = 35.4
    heading_deg: float = 180.0

    @property
    def mass_kg(self):
        return self.displacement_t * 1e3

    @property
    def speed(self):
        return self.speed_kn * KNOT

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True, eq=False)
class VesselModel:
    M: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    speed: float
    heading: float
    particulars: Particulars | None = None

    def to_dict(self):
        return {
            "particulars": self.particulars.to_dict() if self.particulars else None,
            "speed": self.speed,
            "heading": self.heading,
            "M": self.M.tolist(), "A": self.A.tolist(),
            "B": self.B.tolist(), "C": self.C.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        part = Particulars(**d["particulars"]) if d.get("particulars") else None
        mats = [np.asarray(d[k], dtype=float) for k in ("M", "A", "B", "C")]
        for name, m in zip("MABC", mats):
            if m.shape != (6, 6):
                raise DataError(f"matrix {name} must be 6x6")
        return cls(*mats, float(d["speed"]), float(d["heading"]), part)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    @property
    def heave_natural_frequency(self):
        return float(np.sqrt(self.C[2, 2] / (self.M[2, 2] + self.A[2, 2])))


def read_matrix_csv(path):
    """6x6 matrix from a plain CSV (no header)."""
    with open(path, newline="") as fh:
        rows = [[float(x) for x in r] for r in csv.reader(fh) if r]
    m = np.asarray(rows)
    if m.shape != (6, 6):
        raise DataError(f"{path}: expected a 6x6 matrix, got {m.shape}")
    return m


def critical_damping(M, A, C, alpha, dofs=(2, 3, 4)):
    """Diagonal damping ``B_ii = alpha 2 sqrt(C_ii (M_ii + A_ii))`` on ``dofs``."""
    B = np.zeros((6, 6))
    for i in dofs:
        if not C[i, i] > 0:
            raise ConfigError(f"DOF {DOF_NAMES[i]} is damped but has stiffness {C[i, i]}")
        B[i, i] = alpha * 2.0 * np.sqrt(C[i, i] * (M[i, i] + A[i, i]))
    return B


def assemble_vessel(particulars=Particulars(), alpha=0.1, added_mass=None, stiffness=None):
    """Mass, added mass, damping and stiffness for the given particulars."""
    p = particulars
    if not (p.displacement_t > 0 and p.kyy > 0):
        raise ConfigError("displacement and K_yy must be positive")
    m = p.mass_kg
    M = np.diag([m, m, m, m * p.kxx**2, m * p.kyy**2, m * p.kzz**2])
    A = FDS_ADDED_MASS.copy() if added_mass is None else np.asarray(added_mass, dtype=float)
    C = FDS_STIFFNESS.copy() if stiffness is None else np.asarray(stiffness, dtype=float)
    B = critical_damping(M, A, C, alpha)
    return VesselModel(M, A, B, C, p.speed, p.heading_deg, p)


def encounter_frequency(omega, speed, g=G_ACC):
    """Head-seas encounter frequency ``w + w^2 U / g``."""
    return omega + omega**2 * speed / g


@dataclass(frozen=True, eq=False)
class ExcitationModel:
    """Linear head-seas excitation per unit wave amplitude.

    Transfer amplitudes (force or moment per metre of wave amplitude) and
    phases are tabulated against encounter frequency and interpolated
    linearly; a single-entry table is a flat coefficient. The defaults are a
    flat approximation: heave force ``0.25 C33`` in phase with the wave and a
    pitch moment ``0.02 C55`` lagging by 90 degrees.
    """

    speed: float
    frequencies: np.ndarray = field(default_factory=lambda: np.array([1.0]))
    heave_amplitude: np.ndarray = field(default_factory=lambda: np.array([0.25 * 1.01e7]))
    heave_phase: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    pitch_amplitude: np.ndarray = field(default_factory=lambda: np.array([0.02 * 6.25e9]))
    pitch_phase: np.ndarray = field(default_factory=lambda: np.array([-np.pi / 2]))
    surge_amplitude: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    surge_phase: np.ndarray = field(default_factory=lambda: np.array([0.0]))
    heading: float = 180.0

    def __post_init__(self):
        if abs(self.heading - 180.0) > 1e-9:
            raise ConfigError("only head seas (180 deg) are supported")
        for name in ("frequencies", "heave_amplitude", "heave_phase", "pitch_amplitude",
                     "pitch_phase", "surge_amplitude", "surge_phase"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        n = self.frequencies.size
        if np.any(np.diff(self.frequencies) <= 0):
            raise ConfigError("excitation frequencies must be strictly increasing")
        for name in ("heave_amplitude", "heave_phase", "pitch_amplitude", "pitch_phase",
                     "surge_amplitude", "surge_phase"):
            curve = getattr(self, name)
            if curve.size == 1:
                # a single value is a flat coefficient at every tabulated frequency
                object.__setattr__(self, name, np.full(n, curve[0]))
            elif curve.size != n:
                raise ConfigError(f"{name} has {curve.size} entries for {n} frequencies")

    def encounter(self, omega):
        return encounter_frequency(omega, self.speed)

    def _curve(self, amp, phase, we):
        return (np.interp(we, self.frequencies, amp), np.interp(we, self.frequencies, phase))

    def components(self, waves):
        """Per-component encounter frequency and complex force amplitudes."""
        we = self.encounter(waves.omega)
        out = {}
        for dof, amp, ph in ((0, self.surge_amplitude, self.surge_phase),
                             (HEAVE, self.heave_amplitude, self.heave_phase),
                             (PITCH, self.pitch_amplitude, self.pitch_phase)):
            a, p = self._curve(amp, ph, we)
            out[dof] = (waves.zeta * a, waves.phase + p)
        return we, out

    def to_dict(self):
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in vars(self).items()}

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


class _WaveForce:
    """Excitation 6-vector at time ``t`` (memoized on the last time)."""

    def __init__(self, excitation, waves):
        self.we, comps = excitation.components(waves)
        self.parts = [(dof, a, p) for dof, (a, p) in comps.items() if np.any(a)]
        self._t = None
        self._f = np.zeros(6)

    def __call__(self, t):
        if t != self._t:
            f = np.zeros(6)
            for dof, a, p in self.parts:
                f[dof] = float(np.cos(self.we * t + p) @ a)
            self._f = f
            self._t = t
        return self._f


def wave_excitation(excitation, waves, t):
    """Excitation forces and moments (6-vector, or ``(len(t), 6)`` for arrays)."""
    we, comps = excitation.components(waves)
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape + (6,))
    for dof, (a, p) in comps.items():
        out[..., dof] = harmonic_sum(we, a, p, t)
    return out


def encountered_elevation(excitation, waves, t):
    """Wave elevation at the moving centre of gravity."""
    return harmonic_sum(excitation.encounter(waves.omega), waves.zeta, waves.phase, t)


@dataclass(frozen=True)
class OracleNonlinearity:
    """Known nonlinear forces standing in for body-exact hydrodynamics.

    Heave force ``-g3 z^3 - d3 |w| w`` and pitch moment
    ``-g5 theta^3 - d5 |q| q`` act on top of the linear model.
    """

    heave_cubic: float = 0.0
    pitch_cubic: float = 0.0
    heave_quadratic_damping: float = 0.0
    pitch_quadratic_damping: float = 0.0

    def __post_init__(self):
        if not all(np.isfinite(list(asdict(self).values()))):
            raise ConfigError("nonlinearity gains must be finite")

    @property
    def is_zero(self):
        return not any(asdict(self).values())

    def force(self, v):
        z, th, w, q = v[2], v[4], v[8], v[10]
        f = np.zeros(6)
        f[HEAVE] = -self.heave_cubic * z**3 - self.heave_quadratic_damping * abs(w) * w
        f[PITCH] = -self.pitch_cubic * th**3 - self.pitch_quadratic_damping * abs(q) * q
        return f

    def to_dict(self):
        return asdict(self)


def vessel_system(model, excitation=None, waves=None, nonlinearity=None,
                  corrected=(HEAVE, PITCH), fixed_surge=True, constraints=None):
    """First-order 12-state system for the vessel.

    ``corrected`` lists the DOFs whose force rows receive the correction.
    With ``fixed_surge`` the surge velocity is held at the vessel speed.
    """
    I = np.zeros((12, 12))
    I[:6, :6] = np.eye(6)
    I[6:, 6:] = model.M + model.A
    base = np.zeros((12, 12))
    base[6:, :6] = -model.C
    base[6:, 6:] = -model.B

    def coupling(v):
        G = base.copy()
        G[:6, 6:] = euler_transform(v[3], v[4], v[5])
        return G

    wave = _WaveForce(excitation, waves) if excitation is not None and waves is not None else None
    nl = None if nonlinearity is None or nonlinearity.is_zero else nonlinearity

    def forcing(t, v):
        F = np.zeros(12)
        if wave is not None:
            F[6:] += wave(t)
        if nl is not None:
            F[6:] += nl.force(v)
        return F

    cons = dict(constraints or {})
    if fixed_surge:
        cons.setdefault(SURGE_VEL, model.speed)
    eta = None
    if excitation is not None and waves is not None:
        eta = lambda t: encountered_elevation(excitation, waves, t)
    return FirstOrderSystem(
        I, coupling, forcing if (wave is not None or nl is not None) else None,
        corrected=tuple(6 + d for d in corrected), constraints=cons,
        elevation=eta, dof_names=DOF_NAMES,
    )


def initial_state(model, fixed_surge=True, heave=0.0, pitch=0.0):
    v = np.zeros(12)
    v[HEAVE] = heave
    v[PITCH] = pitch
    if fixed_surge:
        v[SURGE_VEL] = model.speed
    return v


def synthetic_high_fidelity(model, excitation, waves, nonlinearity, duration, dt,
                            cfg=None, transient_cutoff=50.0):
    """Ground-truth response: linear model plus the known nonlinear forces."""
    cfg = cfg or IntegratorConfig(dt)
    sys = vessel_system(model, excitation, waves, nonlinearity)
    traj = simulate(sys, initial_state(model), duration, cfg, transient_cutoff=transient_cutoff)
    traj.meta.update(kind="fds-oracle", nonlinearity=nonlinearity.to_dict())
    return traj


def linear_response(model, excitation, waves, duration, dt, corrector=None, cfg=None,
                    transient_cutoff=50.0, corrected=(HEAVE, PITCH)):
    """Low-fidelity linear response, or the hybrid response when ``corrector`` is set."""
    cfg = cfg or IntegratorConfig(dt)
    sys = vessel_system(model, excitation, waves, corrected=corrected)
    traj = simulate(sys, initial_state(model), duration, cfg, corrector=corrector,
                    transient_cutoff=transient_cutoff)
    traj.meta.update(kind="fds-hybrid" if corrector is not None else "fds-linear")
    return traj


def extract_delta(model, excitation, waves, traj):
    """``(M + A) du/dt - (f_w - B u - C x)`` at every sample, shape ``(N, 6)``."""
    if traj.ndof != 6:
        raise DataError("vessel trajectories have six DOFs")
    fw = wave_excitation(excitation, waves, traj.t)
    return traj.acc @ (model.M + model.A).T - (fw - traj.vel @ model.B.T - traj.pos @ model.C.T)


def decay_test(model, offset=1.0, duration=30.0, dt=0.01, dof=HEAVE, isolate=True, speed=0.0):
    """Free decay from a position offset with no waves.

    With ``isolate`` all other DOFs are restrained, giving the uncoupled
    single-DOF response of ``dof``.
    """
    cons = {}
    if isolate:
        for i in range(12):
            if i not in (dof, 6 + dof):
                cons[i] = 0.0
    cons[SURGE_VEL] = speed if not isolate else 0.0
    sys = vessel_system(model, fixed_surge=False, constraints=cons)
    v0 = np.zeros(12)
    v0[dof] = offset
    v0[SURGE_VEL] = cons[SURGE_VEL]
    return simulate(sys, v0, duration, IntegratorConfig(dt), transient_cutoff=0.0)


def sized_nonlinearity(model, sigma_heave, sigma_pitch, fraction=0.1, damping_fraction=0.0,
                       sigma_heave_vel=None, sigma_pitch_vel=None):
    """Cubic gains giving ``fraction`` of the linear restoring force at two sigma.

    Quadratic damping gains likewise give ``damping_fraction`` of the linear
    damping force at two velocity sigmas when those sigmas are supplied.
    """
    g3 = fraction * model.C[2, 2] / (2.0 * sigma_heave) ** 2
    g5 = fraction * model.C[4, 4] / (2.0 * sigma_pitch) ** 2
    d3 = d5 = 0.0
    if damping_fraction and sigma_heave_vel and sigma_pitch_vel:
        d3 = damping_fraction * model.B[2, 2] / (2.0 * sigma_heave_vel)
        d5 = damping_fraction * model.B[4, 4] / (2.0 * sigma_pitch_vel)
    return OracleNonlinearity(g3, g5, d3, d5)
