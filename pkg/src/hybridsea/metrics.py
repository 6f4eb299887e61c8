"""Prediction-quality metrics: L2, L-infinity and histogram Jensen-Shannon divergence."""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigError, DataError

# Default histogram: 101 uniform bins over +-5 reference standard deviations.
BINS = 101
WIDTH_SIGMAS = 5.0

REPORT_COLUMNS = ("Hs", "Tp_or_wp", "model_id", "dof", "quantity", "l2", "linf", "jsd", "n_samples")


def _pair(pred, ref):
    pred = np.asarray(pred, dtype=float).reshape(-1)
    ref = np.asarray(ref, dtype=float).reshape(-1)
    if pred.shape != ref.shape:
        raise DataError(f"length mismatch: {pred.size} vs {ref.size}")
    if pred.size == 0:
        raise DataError("empty series")
    return pred, ref


def l2_error(pred, ref):
    """Root-mean-square difference ``sqrt(sum (pred - ref)^2 / N)``."""
    pred, ref = _pair(pred, ref)
    d = pred - ref
    return float(np.sqrt(np.mean(d * d)))


def linf_error(pred, ref):
    pred, ref = _pair(pred, ref)
    return float(np.max(np.abs(pred - ref)))


@dataclass(frozen=True, eq=False)
class Pdf:
    bin_edges: np.ndarray
    probabilities: np.ndarray
    sample_count: int

    @property
    def bin_count(self):
        return len(self.probabilities)

    def same_grid(self, other):
        return self.bin_edges.shape == other.bin_edges.shape and np.array_equal(
            self.bin_edges, other.bin_edges
        )


def estimate_pdf(series, bin_count, support):
    """Normalized histogram on ``bin_count`` uniform bins over ``support``.

    Samples outside the support are counted in the end bins.
    """
    x = np.asarray(series, dtype=float).reshape(-1)
    if x.size == 0:
        raise DataError("cannot estimate a pdf from an empty series")
    lo, hi = map(float, support)
    if not hi > lo:
        raise ConfigError("support must satisfy hi > lo")
    if bin_count < 2:
        raise ConfigError("bin_count must be >= 2")
    edges = np.linspace(lo, hi, bin_count + 1)
    counts, _ = np.histogram(np.clip(x, lo, hi), bins=edges)
    return Pdf(edges, counts / x.size, int(x.size))


def kl_divergence(p, m):
    """``sum p log(p / m)`` over bins with ``p > 0`` (natural log)."""
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / m[mask])))


def jsd(P, Q):
    """Jensen-Shannon divergence in nats, in [0, ln 2]."""
    if not P.same_grid(Q):
        raise DataError("pdfs are defined on different bin grids")
    p, q = P.probabilities, Q.probabilities
    m = 0.5 * (p + q)
    return 0.5 * kl_divergence(p, m) + 0.5 * kl_divergence(q, m)


def reference_support(ref, width=WIDTH_SIGMAS):
    ref = np.asarray(ref, dtype=float)
    mu, sd = float(ref.mean()), float(ref.std())
    if sd == 0.0:
        sd = max(abs(mu), 1.0) * 1e-12
    return mu - width * sd, mu + width * sd


@dataclass
class MetricsReport:
    l2: float
    linf: float
    jsd: float
    bin_count: int
    support: tuple
    transient_cutoff: float
    n_samples: int

    def to_dict(self):
        return asdict(self)


def compare(pred, ref, bins=BINS, width=WIDTH_SIGMAS, transient_cutoff=0.0):
    """All three metrics on already-windowed series sharing the reference's grid."""
    pred, ref = _pair(pred, ref)
    support = reference_support(ref, width)
    P = estimate_pdf(ref, bins, support)
    Q = estimate_pdf(pred, bins, support)
    return MetricsReport(l2_error(pred, ref), linf_error(pred, ref), jsd(P, Q), bins,
                         tuple(support), transient_cutoff, int(ref.size))


def compare_trajectories(pred, ref, quantity, cutoff=None, **kw):
    """Metrics for one named quantity (see ``StateTrajectory.quantity``) past the cutoff."""
    if len(pred) != len(ref) or not math.isclose(pred.dt, ref.dt):
        raise DataError("trajectories are sampled differently")
    cutoff = ref.transient_cutoff if cutoff is None else cutoff
    mask = ref.window_mask(cutoff)
    return compare(pred.quantity(quantity)[mask], ref.quantity(quantity)[mask],
                   transient_cutoff=cutoff, **kw)


def write_report_rows(path, rows, extra_columns=()):
    """Append rows (dicts) to a CSV with the standard columns plus ``extra_columns``."""
    cols = list(REPORT_COLUMNS) + [c for c in extra_columns if c not in REPORT_COLUMNS]
    exists = False
    try:
        with open(path) as fh:
            exists = bool(fh.readline())
    except FileNotFoundError:
        pass
    with open(path, "a", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
        if not exists:
            w.writeheader()
        for row in rows:
            w.writerow(row)
