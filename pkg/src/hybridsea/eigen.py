"""Linear stability of the single-DOF low-fidelity models.

With ``v1 = z`` and ``v2 = z'`` the unforced low-fidelity system is
``v' = Q v`` with ``Q = [[0, 1], [-c1/(m+a1), -b1/(m+a1)]]``, where each
forcing model keeps only the restoring and damping terms it retains.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .duffing import DuffingParams, ForcingModel
from .errors import ConfigError, DomainError

# Relative tolerance for deciding that a real part or discriminant vanishes.
_ZERO = 1e-12


class FixedPoint(str, Enum):
    SPIRAL_SINK = "SpiralSink"
    CENTER = "Center"
    DEGENERATE_LINE = "DegenerateLine"
    SPIRAL_SOURCE = "SpiralSource"
    NODE_SINK = "NodeSink"
    NODE_SOURCE = "NodeSource"


def coefficient_matrix(model, params, a1=0.0):
    """``Q`` for one forcing model (restoring and damping as retained)."""
    model = ForcingModel(model)
    mt = params.m + a1
    if not mt > 0:
        raise DomainError(f"m + a1 must be positive, got {mt}")
    c1 = params.c1 if model.restoring else 0.0
    b1 = params.b1 if model.damping else 0.0
    return np.array([[0.0, 1.0], [-c1 / mt, -b1 / mt]])


def critical_damping(params, a1=0.0):
    """``b_c = 2 sqrt(c1 (m + a1))``."""
    return 2.0 * float(np.sqrt(params.c1 * (params.m + a1)))


def classify(lam1, lam2, scale=1.0):
    """Fixed-point type of a planar linear system from its eigenvalues.

    ``scale`` sets the magnitude below which real and imaginary parts count
    as zero.
    """
    eps = _ZERO * max(scale, 1.0)
    re = np.array([lam1.real, lam2.real])
    im = max(abs(lam1.imag), abs(lam2.imag))
    if np.all(np.abs(re) <= eps) and im <= eps:
        return FixedPoint.DEGENERATE_LINE
    if im > eps:
        if abs(re[0]) <= eps:
            return FixedPoint.CENTER
        return FixedPoint.SPIRAL_SINK if re[0] < 0 else FixedPoint.SPIRAL_SOURCE
    if np.all(re < eps):
        return FixedPoint.NODE_SINK
    return FixedPoint.NODE_SOURCE


@dataclass(frozen=True)
class EigenReport:
    model: ForcingModel
    lambda1: complex
    lambda2: complex
    classification: FixedPoint
    critical_damping: float | None
    a1: float = 0.0

    @property
    def natural_frequency(self):
        return float(np.sqrt(abs(self.lambda1 * self.lambda2)))

    def to_dict(self):
        return {
            "model": self.model.value,
            "lambda1": [self.lambda1.real, self.lambda1.imag],
            "lambda2": [self.lambda2.real, self.lambda2.imag],
            "classification": self.classification.value,
            "critical_damping": self.critical_damping,
            "a1": self.a1,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def eigenvalues(model, params, a1=0.0):
    """Eigenvalues and fixed-point classification of ``Q`` for one model.

    Eigenvalues are ordered by descending imaginary part, then descending
    real part.
    """
    model = ForcingModel(model)
    Q = coefficient_matrix(model, params, a1)
    lam = np.linalg.eigvals(Q).astype(complex)
    lam = sorted(lam, key=lambda z: (-z.imag, -z.real))
    scale = float(np.abs(Q).max())
    bc = critical_damping(params, a1) if model.restoring else None
    return EigenReport(model, complex(lam[0]), complex(lam[1]),
                       classify(lam[0], lam[1], scale), bc, float(a1))


def quadratic_roots(model, params, a1=0.0):
    """Roots of ``lambda^2 + (b/(m+a1)) lambda + c/(m+a1) = 0`` by formula."""
    Q = coefficient_matrix(model, params, a1)
    p, q = -Q[1, 1], -Q[1, 0]
    disc = np.sqrt(complex(p * p - 4 * q))
    return (-p + disc) / 2, (-p - disc) / 2


def phase_field(model, params, a1=0.0, v1_range=(-2.0, 2.0), v2_range=(-2.0, 2.0), n=(21, 21)):
    """Vector field ``(v1', v2') = Q v`` on a regular grid.

    Returns an ``(n1*n2, 4)`` array of rows ``(v1, v2, dv1, dv2)``.
    """
    n1, n2 = (n, n) if np.isscalar(n) else n
    if n1 < 2 or n2 < 2 or not (v1_range[1] > v1_range[0] and v2_range[1] > v2_range[0]):
        raise ConfigError("phase grid must have >= 2 points and non-empty ranges per axis")
    Q = coefficient_matrix(model, params, a1)
    g1, g2 = np.meshgrid(np.linspace(*v1_range, n1), np.linspace(*v2_range, n2), indexing="ij")
    V = np.stack([g1.ravel(), g2.ravel()], axis=1)
    return np.hstack([V, V @ Q.T])


def write_phase_csv(path, field):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["v1", "v2", "dv1", "dv2"])
        w.writerows(np.asarray(field).tolist())


def all_reports(params=DuffingParams(), a1=0.0):
    return [eigenvalues(m, params, a1) for m in ForcingModel]


def write_reports_json(path, reports):
    Path(path).write_text(json.dumps([r.to_dict() for r in reports], indent=2))
