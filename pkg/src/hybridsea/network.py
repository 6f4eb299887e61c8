"""Feed-forward force-correction networks.

Inputs are stencils of the ``k`` most recent samples of each feature channel,
flattened channel-major (all samples of channel 0 oldest to newest, then
channel 1, ...). The target is the correction one step ahead. Inputs and
targets are z-scored with statistics frozen at training time.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, ContractError, DataError, ModelFormatError, TrainingError

FORMAT_VERSION = 1


@dataclass(frozen=True)
class StencilSpec:
    """Stencil length ``k``, ordered channel ids and sample spacing ``dt``.

    Channel ids are ``eta`` or ``pos<i>``, ``vel<i>``, ``acc<i>`` for DOF ``i``.
    """

    k: int
    features: tuple[str, ...]
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        if self.k < 1:
            raise ConfigError("stencil length k must be >= 1")
        if not self.features:
            raise ConfigError("at least one feature channel is required")
        if len(set(self.features)) != len(self.features):
            raise ConfigError("feature channels must be unique")
        if not self.dt > 0:
            raise ConfigError("dt must be > 0")

    @property
    def n_channels(self):
        return len(self.features)

    @property
    def input_dim(self):
        return self.k * self.n_channels

    def to_dict(self):
        return {"k": self.k, "features": list(self.features), "dt": self.dt}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["k"]), tuple(d["features"]), float(d["dt"]))


def duffing_channels():
    return ("pos0", "vel0", "acc0", "eta")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2000
    batch_size: int = 32
    learning_rate: float = 1e-3
    seed: int = 0
    validation_fraction: float = 0.1
    patience: int = 100

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be > 0")
        if not 0 <= self.validation_fraction < 1:
            raise ConfigError("validation_fraction must be in [0, 1)")

    def to_dict(self):
        return asdict(self)


class Dataset(NamedTuple):
    inputs: np.ndarray
    targets: np.ndarray
    spec: StencilSpec


def build_dataset(traj, delta, spec, transient_cutoff=None):
    """Pair stencils ending at ``t_n`` with the correction at ``t_{n+1}``.

    Only samples at or after the transient cutoff are used; the first usable
    sample starts no window, so ``L`` usable samples give ``L - k - 1`` rows.
    """
    delta = np.asarray(delta, dtype=float)
    if delta.ndim == 1:
        delta = delta[:, None]
    if delta.shape[0] != len(traj):
        raise DataError(f"delta has {delta.shape[0]} samples, trajectory has {len(traj)}")
    mask = traj.window_mask(transient_cutoff)
    s = int(np.argmax(mask)) if mask.any() else len(traj)
    usable = len(traj) - s
    k = spec.k
    if usable < k + 2:
        raise DataError(f"{usable} usable samples; stencil k={k} needs at least {k + 2}")
    n_rows = usable - k - 1
    X = np.empty((n_rows, spec.input_dim))
    for c, name in enumerate(spec.features):
        series = traj.quantity(name)[s + 1:len(traj) - 1]
        X[:, c * k:(c + 1) * k] = sliding_window_view(series, k)
    Y = delta[s + k + 1:].copy()
    return Dataset(X, Y, spec)


def concat_datasets(datasets):
    specs = {d.spec for d in datasets}
    if len(specs) != 1:
        raise DataError("datasets use different stencils")
    return Dataset(np.vstack([d.inputs for d in datasets]),
                   np.vstack([d.targets for d in datasets]), specs.pop())


# -- network core ---------------------------------------------------------------

def init_params(sizes, rng):
    """He-uniform weights ``U(-sqrt(6/fan_in), sqrt(6/fan_in))``, zero biases."""
    params = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = math.sqrt(6.0 / fan_in)
        params.append((rng.uniform(-lim, lim, (fan_in, fan_out)), np.zeros(fan_out)))
    return params


def forward(params, X):
    """ReLU hidden layers, identity output. Returns output and layer activations."""
    acts = [X]
    h = X
    last = len(params) - 1
    for i, (W, b) in enumerate(params):
        h = h @ W + b
        if i < last:
            h = np.maximum(h, 0.0)
        acts.append(h)
    return h, acts


def loss_and_grad(params, X, Y):
    """Mean-squared error over all entries and its gradient w.r.t. every (W, b)."""
    out, acts = forward(params, X)
    diff = out - Y
    loss = float(np.mean(diff**2))
    g = 2.0 * diff / diff.size
    grads = [None] * len(params)
    for i in range(len(params) - 1, -1, -1):
        W = params[i][0]
        grads[i] = (acts[i].T @ g, g.sum(axis=0))
        if i:
            g = (g @ W.T) * (acts[i] > 0.0)
    return loss, grads


class _FlatParams:
    """Parameters in one contiguous buffer so Adam updates are single array ops."""

    def __init__(self, params):
        self.shapes = [(W.shape, b.shape) for W, b in params]
        self.theta = np.concatenate([np.concatenate([W.ravel(), b]) for W, b in params])
        self.views = self._views(self.theta)
        self.grad = np.zeros_like(self.theta)
        self.grad_views = self._views(self.grad)

    def _views(self, buf):
        out, pos = [], 0
        for ws, bs in self.shapes:
            nw, nb = ws[0] * ws[1], bs[0]
            out.append((buf[pos:pos + nw].reshape(ws), buf[pos + nw:pos + nw + nb]))
            pos += nw + nb
        return out

    def snapshot(self):
        return [(W.copy(), b.copy()) for W, b in self.views]


@dataclass(frozen=True, eq=False)
class CorrectorNet:
    """Trained network with its stencil and frozen normalization statistics."""

    spec: StencilSpec
    weights: tuple
    biases: tuple
    feature_mean: np.ndarray
    feature_std: np.ndarray
    target_mean: np.ndarray
    target_std: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        sizes = self.layer_sizes
        for W, b, (i, o) in zip(self.weights, self.biases, zip(sizes[:-1], sizes[1:])):
            if W.shape != (i, o) or b.shape != (o,):
                raise ContractError("layer shapes are inconsistent")
        if sizes[0] != self.spec.input_dim:
            raise ContractError(f"input layer {sizes[0]} != stencil dimension {self.spec.input_dim}")
        if len(self.feature_mean) != self.spec.n_channels or len(self.feature_std) != self.spec.n_channels:
            raise ContractError("feature statistics must have one entry per channel")
        if len(self.target_mean) != sizes[-1] or len(self.target_std) != sizes[-1]:
            raise ContractError("target statistics must have one entry per output")
        if np.any(~(self.feature_std > 0)) or np.any(~(self.target_std > 0)):
            raise ContractError("normalization standard deviations must be positive")
        k = self.spec.k
        object.__setattr__(self, "_col_mean", np.repeat(self.feature_mean, k))
        object.__setattr__(self, "_col_std", np.repeat(self.feature_std, k))
        object.__setattr__(self, "_params", list(zip(self.weights, self.biases)))

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[0]] + [W.shape[1] for W in self.weights]

    @property
    def n_outputs(self):
        return self.weights[-1].shape[1]

    @property
    def n_parameters(self):
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def normalize(self, X):
        return (X - self._col_mean) / self._col_std

    def denormalize(self, Xn):
        return Xn * self._col_std + self._col_mean

    def predict(self, X):
        """Batch forward pass on raw (unnormalized) stencil rows."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.spec.input_dim:
            raise ContractError(f"expected {self.spec.input_dim} inputs, got {X.shape[-1]}")
        out, _ = forward(self._params, self.normalize(X))
        return out * self.target_std + self.target_mean

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "stencil_spec": self.spec.to_dict(),
            "layer_sizes": self.layer_sizes,
            "activation": {"hidden": "relu", "output": "identity"},
            "weights": [W.tolist() for W in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "norms": {
                "feature_mean": self.feature_mean.tolist(),
                "feature_std": self.feature_std.tolist(),
                "target_mean": self.target_mean.tolist(),
                "target_std": self.target_std.tolist(),
            },
            "train_metadata": self.meta,
        }

    @classmethod
    def from_dict(cls, d):
        version = d.get("format_version")
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"model format version {version!r}, expected {FORMAT_VERSION}")
        try:
            n = d["norms"]
            net = cls(
                StencilSpec.from_dict(d["stencil_spec"]),
                tuple(np.asarray(W, dtype=float) for W in d["weights"]),
                tuple(np.asarray(b, dtype=float) for b in d["biases"]),
                np.asarray(n["feature_mean"], dtype=float),
                np.asarray(n["feature_std"], dtype=float),
                np.asarray(n["target_mean"], dtype=float),
                np.asarray(n["target_std"], dtype=float),
                d.get("train_metadata", {}),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFormatError(f"malformed model document: {exc}") from None
        if net.layer_sizes != list(d["layer_sizes"]):
            raise ModelFormatError("layer_sizes do not match the stored weights")
        return net

    def dumps(self):
        return json.dumps(self.to_dict())

    def save(self, path):
        Path(path).write_text(self.dumps())

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def sha256(self):
        return hashlib.sha256(self.dumps().encode()).hexdigest()


def _channel_stats(X, spec):
    k = spec.k
    mean = np.array([X[:, c * k:(c + 1) * k].mean() for c in range(spec.n_channels)])
    std = np.array([X[:, c * k:(c + 1) * k].std() for c in range(spec.n_channels)])
    return mean, np.where(std > 0, std, 1.0)


def train(dataset, layers, cfg=TrainConfig()):
    """Fit a ReLU network to ``dataset`` by minibatch Adam on the z-scored MSE.

    The last ``validation_fraction`` of rows is held out for early stopping
    (``patience`` epochs without improvement); the best weights are returned.
    """
    X, Y, spec = dataset
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if len(X) == 0:
        raise DataError("empty dataset")
    if any(h < 1 for h in layers):
        raise ConfigError("hidden layer sizes must be >= 1")
    if X.shape[1] != spec.input_dim:
        raise ContractError(f"dataset has {X.shape[1]} inputs, stencil needs {spec.input_dim}")

    f_mean, f_std = _channel_stats(X, spec)
    t_mean = Y.mean(axis=0)
    t_std = Y.std(axis=0)
    # a constant target carries no information: a tiny floor makes the
    # denormalized output that constant whatever the weights learn
    t_std = np.where(t_std > 0, t_std, 1e-12 * np.maximum(1.0, np.abs(t_mean)))
    Xn = (X - np.repeat(f_mean, spec.k)) / np.repeat(f_std, spec.k)
    Yn = (Y - t_mean) / t_std

    n_val = int(round(cfg.validation_fraction * len(X)))
    if n_val >= len(X):
        n_val = 0
    n_tr = len(X) - n_val
    Xt, Yt = Xn[:n_tr], Yn[:n_tr]
    Xv, Yv = Xn[n_tr:], Yn[n_tr:]

    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    sizes = [spec.input_dim, *layers, Y.shape[1]]
    flat = _FlatParams(init_params(sizes, rng))
    m = np.zeros_like(flat.theta)
    v = np.zeros_like(flat.theta)
    b1, b2, eps, lr = 0.9, 0.999, 1e-8, cfg.learning_rate
    params = flat.views

    best = (math.inf, flat.snapshot(), 0)
    history_train, history_val = [], []
    step = 0
    bs = cfg.batch_size
    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(n_tr)
        total = 0.0
        for lo in range(0, n_tr, bs):
            idx = order[lo:lo + bs]
            loss, grads = loss_and_grad(params, Xt[idx], Yt[idx])
            for (gW, gb), (dW, db) in zip(grads, flat.grad_views):
                dW[...] = gW
                db[...] = gb
            step += 1
            m *= b1
            m += (1 - b1) * flat.grad
            v *= b2
            v += (1 - b2) * flat.grad**2
            mhat = m / (1 - b1**step)
            vhat = v / (1 - b2**step)
            flat.theta -= lr * mhat / (np.sqrt(vhat) + eps)
            total += loss * len(idx)
        train_loss = total / n_tr
        if not math.isfinite(train_loss):
            raise TrainingError("non-finite training loss", epoch=epoch)
        history_train.append(train_loss)
        if n_val:
            val_loss = float(np.mean((forward(params, Xv)[0] - Yv) ** 2))
            if not math.isfinite(val_loss):
                raise TrainingError("non-finite validation loss", epoch=epoch)
            history_val.append(val_loss)
        else:
            val_loss = train_loss
        if val_loss < best[0]:
            best = (val_loss, flat.snapshot(), epoch)
        elif epoch - best[2] >= cfg.patience:
            break

    weights = tuple(W for W, _ in best[1])
    biases = tuple(b for _, b in best[1])
    meta = {
        "train_config": cfg.to_dict(),
        "hidden_layers": list(layers),
        "n_rows": int(len(X)),
        "n_validation": int(n_val),
        "epochs_run": len(history_train),
        "best_epoch": best[2],
        "best_validation_mse": best[0],
        "train_loss": history_train,
        "validation_loss": history_val,
        "optimizer": "adam",
        "init": "he-uniform",
    }
    return CorrectorNet(spec, weights, biases, f_mean, f_std, t_mean, t_std, meta)


def infer(net, window):
    """Correction predicted from one flattened stencil window."""
    window = np.asarray(window, dtype=float).reshape(-1)
    if window.size != net.spec.input_dim:
        raise ContractError(f"window has {window.size} values, network expects {net.spec.input_dim}")
    return net.predict(window[None, :])[0]


# -- correctors used inside the integrator ---------------------------------------

class NetCorrector:
    """One or more networks sharing a stencil; outputs are concatenated in order."""

    def __init__(self, nets):
        nets = list(nets) if isinstance(nets, (list, tuple)) else [nets]
        specs = {n.spec for n in nets}
        if len(specs) != 1:
            raise ConfigError("all networks of a corrector must share one stencil")
        self.nets = nets
        self.spec = specs.pop()
        self.calls = 0

    def __call__(self, window, n):
        self.calls += 1
        x = window[None, :]
        if len(self.nets) == 1:
            return self.nets[0].predict(x)[0]
        return np.concatenate([net.predict(x)[0] for net in self.nets])


class TableCorrector:
    """Replays a precomputed correction sequence (indexed by the target sample)."""

    spec = None

    def __init__(self, table):
        self.table = np.asarray(table, dtype=float)
        if self.table.ndim == 1:
            self.table = self.table[:, None]
        self.calls = 0

    def __call__(self, window, n):
        self.calls += 1
        return self.table[n]
