"""Implicit BDF2 time stepping of first-order hybrid systems.

The state obeys ``I dv/dt = G(v) v + F(t, v) + delta`` which is solved as
``dv/dt = Q v + q`` with ``Q = I^-1 G`` and ``q = I^-1 F``. Each step solves the
BDF residual with Newton iterations on a forward-difference Jacobian. The
correction ``delta`` is evaluated once per step, before the Newton loop, from
a stencil of already accepted samples.

State vectors are split into a position block followed by a velocity block of
equal size; accelerations are the velocity-block rates at the converged state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, NamedTuple

import numpy as np

from .errors import (
    ConfigError,
    KinematicSingularityError,
    NonConvergenceError,
    SingularJacobianError,
    SolverError,
)
from .trajectory import StateTrajectory

# Distance in rad from +-pi/2 pitch at which the Euler kinematics are refused.
PITCH_GUARD = 1e-3
_COS_GUARD = math.sin(PITCH_GUARD)


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    newton_tol: float = 1e-10
    newton_max_iters: int = 25
    jacobian_perturbation: float = 1e-6

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")
        if not self.newton_tol > 0:
            raise ConfigError("newton_tol must be > 0")
        if self.newton_max_iters < 1:
            raise ConfigError("newton_max_iters must be >= 1")
        if not self.jacobian_perturbation > 0:
            raise ConfigError("jacobian_perturbation must be > 0")


class FirstOrderSystem:
    """``I dv/dt = G(v) v + F(t, v)`` with optional correction rows and constraints.

    Parameters
    ----------
    mass : (n, n) array
        Block matrix ``I``; invertible on the unconstrained states.
    coupling : (n, n) array or callable
        ``G`` or a function ``v -> G(v)`` for state-dependent kinematics.
    forcing : callable, optional
        ``F(t, v)`` excluding the correction. ``None`` means zero forcing.
    corrected : sequence of int
        State rows of ``F`` that receive the correction vector, in order.
    constraints : mapping of int to float
        States held at fixed values; their rates are forced to zero and their
        equations are dropped from the Newton solve.
    elevation : callable, optional
        ``t -> eta`` recorded alongside the state for stencil features.
    """

    def __init__(self, mass, coupling, forcing=None, corrected=(), constraints=None,
                 elevation=None, dof_names=None):
        self.mass = np.asarray(mass, dtype=float)
        n = self.mass.shape[0]
        if self.mass.shape != (n, n) or n % 2:
            raise ConfigError("mass must be square with an even state dimension")
        self.n = n
        self._coupling = coupling if callable(coupling) else np.asarray(coupling, dtype=float)
        self.forcing = forcing
        self.corrected = np.asarray(corrected, dtype=int)
        self.constraints = dict(constraints or {})
        self.elevation = elevation
        self.dof_names = tuple(dof_names) if dof_names else tuple(f"dof{i}" for i in range(n // 2))
        fixed = sorted(self.constraints)
        self.free = np.array([i for i in range(n) if i not in self.constraints], dtype=int)
        self.fixed = np.array(fixed, dtype=int)
        sub = self.mass[np.ix_(self.free, self.free)]
        if np.linalg.cond(sub) > 1e14:
            raise ConfigError("mass matrix is singular on the free states")
        self._inv_free = np.linalg.inv(sub)
        self._all_free = len(self.fixed) == 0

    @property
    def ndof(self):
        return self.n // 2

    def coupling(self, v):
        return self._coupling(v) if callable(self._coupling) else self._coupling

    def coefficient_matrix(self, v=None):
        """``Q = I^-1 G`` (unconstrained)."""
        v = np.zeros(self.n) if v is None else v
        return np.linalg.solve(self.mass, self.coupling(v))

    def rhs(self, t, v, delta=None):
        f = self.coupling(v) @ v
        if self.forcing is not None:
            f = f + self.forcing(t, v)
        if delta is not None and len(self.corrected):
            f[self.corrected] += delta
        return f

    def rates(self, t, v, delta=None):
        f = self.rhs(t, v, delta)
        if self._all_free:
            return self._inv_free @ f
        out = np.zeros(self.n)
        out[self.free] = self._inv_free @ f[self.free]
        return out

    def apply_constraints(self, v):
        v = np.array(v, dtype=float)
        for i, val in self.constraints.items():
            v[i] = val
        return v


class NewtonResult(NamedTuple):
    root: np.ndarray
    iterations: int
    update_norm: float


def fd_jacobian(residual, x, h0, cols, rows, rel_step):
    """Forward-difference Jacobian of ``residual`` w.r.t. ``x[cols]``, rows ``rows``."""
    J = np.empty((len(rows), len(cols)))
    xp = x.copy()
    for j, c in enumerate(cols):
        step = rel_step * (1.0 + abs(x[c]))
        xp[c] = x[c] + step
        J[:, j] = (residual(xp)[rows] - h0[rows]) / step
        xp[c] = x[c]
    return J


def newton_solve(residual, guess, cfg, free=None):
    """Solve ``residual(v) = 0`` for the entries ``free`` of ``v``.

    Iterates ``J alpha = -H(v)``, ``v += alpha`` until
    ``|alpha|_2 <= newton_tol (1 + |v|_2)``. Entries outside ``free`` keep
    their guessed values.
    """
    x = np.array(guess, dtype=float)
    free = np.arange(x.size) if free is None else np.asarray(free)
    h = residual(x)
    if not np.all(np.isfinite(h)):
        raise SolverError("non-finite residual at initial guess")
    if not np.any(h[free]):
        return NewtonResult(x, 0, 0.0)
    for it in range(1, cfg.newton_max_iters + 1):
        J = fd_jacobian(residual, x, h, free, free, cfg.jacobian_perturbation)
        try:
            alpha = np.linalg.solve(J, -h[free])
        except np.linalg.LinAlgError as exc:
            raise SingularJacobianError(f"singular Jacobian: {exc}") from None
        if not np.all(np.isfinite(alpha)):
            raise SingularJacobianError("non-finite Newton update")
        x[free] += alpha
        norm = math.sqrt(float(alpha @ alpha))
        if norm <= cfg.newton_tol * (1.0 + math.sqrt(float(x @ x))):
            return NewtonResult(x, it, norm)
        h = residual(x)
        if not np.all(np.isfinite(h)):
            raise NonConvergenceError("residual became non-finite", residual_norm=math.inf)
    raise NonConvergenceError(
        f"Newton did not converge in {cfg.newton_max_iters} iterations",
        residual_norm=float(np.linalg.norm(h[free])),
    )


def step_bdf1(sys, v0, t0, cfg, delta=None):
    """One backward-Euler step from ``(t0, v0)``."""
    dt = cfg.dt
    t1 = t0 + dt
    v0 = np.asarray(v0, dtype=float)
    res = lambda v: (v - v0) / dt - sys.rates(t1, v, delta)
    return newton_solve(res, sys.apply_constraints(v0), cfg, sys.free).root


def step_bdf2(sys, v_n, v_nm1, t_n, cfg, delta=None):
    """One BDF2 step: ``(3 v_{n+1} - 4 v_n + v_{n-1}) / (2 dt) = Q v_{n+1} + q_{n+1}``."""
    dt = cfg.dt
    t1 = t_n + dt
    v_n = np.asarray(v_n, dtype=float)
    hist = (4.0 * v_n - np.asarray(v_nm1, dtype=float)) / (2.0 * dt)
    c = 3.0 / (2.0 * dt)
    res = lambda v: c * v - hist - sys.rates(t1, v, delta)
    guess = sys.apply_constraints(2.0 * v_n - v_nm1)
    return newton_solve(res, guess, cfg, sys.free).root


def euler_transform(phi, theta, psi):
    """6x6 block-diagonal map from ship-fixed velocities to earth-fixed rates.

    The translational block is the ZYX rotation matrix; the rotational block
    maps body angular rates to Euler-angle rates and is singular at
    ``theta = +-pi/2``.
    """
    cth = math.cos(theta)
    if abs(cth) < _COS_GUARD:
        raise KinematicSingularityError(f"pitch {theta:.6g} rad is within the Euler-angle guard")
    sph, cph = math.sin(phi), math.cos(phi)
    sth = math.sin(theta)
    sps, cps = math.sin(psi), math.cos(psi)
    tth = sth / cth
    T = np.zeros((6, 6))
    T[0, 0] = cps * cth
    T[0, 1] = -cph * sps + cps * sth * sph
    T[0, 2] = sph * sps + cph * cps * sth
    T[1, 0] = cth * sps
    T[1, 1] = cph * cps + sph * sps * sth
    T[1, 2] = -cps * sph + cph * sps * sth
    T[2, 0] = -sth
    T[2, 1] = cth * sph
    T[2, 2] = cph * cth
    T[3, 3] = 1.0
    T[3, 4] = sph * tth
    T[3, 5] = cph * tth
    T[4, 4] = cph
    T[4, 5] = -sph
    T[5, 4] = sph / cth
    T[5, 5] = cph / cth
    return T


class _Channels:
    """Column gather for stencil windows over the running state arrays."""

    def __init__(self, spec, ndof):
        self.k = spec.k
        self.sources = []
        for name in spec.features:
            if name == "eta":
                self.sources.append(("eta", None))
                continue
            for block, offset in (("pos", 0), ("vel", ndof), ("acc", ndof)):
                if name.startswith(block) and name[len(block):].isdigit():
                    idx = int(name[len(block):])
                    if idx >= ndof:
                        raise ConfigError(f"channel {name} exceeds {ndof} DOFs")
                    self.sources.append(("rate" if block == "acc" else "state", offset + idx))
                    break
            else:
                raise ConfigError(f"unknown channel {name!r}")

    def window(self, V, R, eta, n):
        lo = n - self.k + 1
        parts = []
        for src, col in self.sources:
            if src == "eta":
                parts.append(eta[lo:n + 1])
            elif src == "state":
                parts.append(V[lo:n + 1, col])
            else:
                parts.append(R[lo:n + 1, col])
        return np.concatenate(parts)


def simulate(sys, v_initial, duration, cfg, corrector=None, t0=0.0, transient_cutoff=0.0,
             warm_start=None):
    """Integrate ``sys`` over ``duration`` seconds and record the response.

    The first step is backward Euler, the rest BDF2. When ``corrector`` is
    given it is called once per step, before the Newton solve, with the
    stencil ending at the latest accepted sample; during the first ``k``
    steps (no full stencil yet) the correction is zero. ``warm_start`` is an
    optional trajectory whose samples pre-fill the history; integration then
    continues from its last sample and the corrector may act immediately.
    """
    dt = cfg.dt
    n_steps = int(round(duration / dt))
    if n_steps < 1:
        raise ConfigError("duration must cover at least one time step")
    n, d = sys.n, sys.ndof
    N = n_steps + 1
    V = np.zeros((N, n))
    R = np.zeros((N, n))
    D = np.zeros((N, d))
    eta = np.zeros(N)
    t = t0 + dt * np.arange(N)
    if sys.elevation is not None:
        eta[:] = sys.elevation(t)

    channels = None
    if corrector is not None and getattr(corrector, "spec", None) is not None:
        channels = _Channels(corrector.spec, d)
    k = corrector.spec.k if channels is not None else 0
    corr_dofs = sys.corrected - d

    start = 0
    first_valid = 1
    if warm_start is not None:
        m = len(warm_start)
        if m < 2 or m > N:
            raise ConfigError("warm start needs between 2 and N samples")
        V[:m, :d] = warm_start.pos
        V[:m, d:] = warm_start.vel
        R[:m, d:] = warm_start.acc
        D[:m] = warm_start.delta
        eta[:m] = warm_start.eta
        start = m - 1
        first_valid = 0
    else:
        V[0] = sys.apply_constraints(v_initial)
        R[0] = sys.rates(t[0], V[0])

    calls = 0
    for i in range(start, n_steps):
        delta = None
        if corrector is not None and i - k + 1 >= first_valid:
            window = channels.window(V, R, eta, i) if channels is not None else None
            delta = np.asarray(corrector(window, i + 1), dtype=float).reshape(-1)
            calls += 1
        try:
            if i == 0:
                V[1] = step_bdf1(sys, V[0], t[0], cfg, delta)
            else:
                V[i + 1] = step_bdf2(sys, V[i], V[i - 1], t[i], cfg, delta)
            R[i + 1] = sys.rates(t[i + 1], V[i + 1], delta)
        except SolverError as err:
            raise err.at(i + 1, t[i + 1]) from None
        if not np.all(np.isfinite(V[i + 1])):
            raise SolverError("state became non-finite").at(i + 1, t[i + 1])
        if delta is not None:
            D[i + 1, corr_dofs] = delta

    return StateTrajectory(
        dt, V[:, :d], V[:, d:], R[:, d:], eta, t0, D, transient_cutoff,
        sys.dof_names, {"corrector_calls": calls, "steps": n_steps},
    )
