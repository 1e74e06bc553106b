"""DLinear in numpy: moving-average decomposition plus two linear heads.

The look-back window of every channel is split into a trend (centered
moving average with edge replication) and a residual; each part goes
through its own ``horizon x lookback`` linear map, shared by all
channels, and the two outputs are summed.  Training minimizes MSE with
Adam and keeps the parameters of the best validation epoch.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from waveaug.augment import AugmentationPolicy, augment_training_batch

__all__ = [
    "DLinearParams",
    "AdamState",
    "TrainConfig",
    "TrainResult",
    "series_decompose",
    "moving_average_matrix",
    "init_params",
    "dlinear_forward",
    "dlinear_backward",
    "mse_loss",
    "mae_loss",
    "adam_step",
    "lr_at_epoch",
    "train",
    "predict",
    "evaluate",
    "save_params",
    "load_params",
]

PARAM_NAMES = ("W_t", "b_t", "W_r", "b_r")
CHECKPOINT_FORMAT = "waveaug-dlinear"
CHECKPOINT_VERSION = 1


@dataclass
class DLinearParams:
    W_t: np.ndarray
    b_t: np.ndarray
    W_r: np.ndarray
    b_r: np.ndarray
    kernel: int = 25

    @property
    def lookback(self) -> int:
        return self.W_t.shape[1]

    @property
    def horizon(self) -> int:
        return self.W_t.shape[0]

    def arrays(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in PARAM_NAMES}

    def copy(self) -> "DLinearParams":
        return DLinearParams(*(a.copy() for a in self.arrays().values()), kernel=self.kernel)


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


@dataclass
class TrainConfig:
    epochs: int = 30
    patience: int = 12
    batch_size: int = 64
    learning_rate: float = 0.005
    # "halve": lr * 0.5**(epoch-1); "constant": no decay
    lr_schedule: str = "halve"
    kernel: int = 25
    seed: int = 0
    policy: AugmentationPolicy = field(default_factory=AugmentationPolicy)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.lr_schedule not in ("halve", "constant"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError(f"kernel must be a positive odd integer, got {self.kernel}")


@dataclass
class TrainResult:
    params: DLinearParams
    best_epoch: int
    best_val_mse: float
    history: list[dict]


def series_decompose(x, kernel: int):
    """Split ``x`` (rows, time, channels) into moving-average trend and residual."""
    x = np.asarray(x, dtype=np.float64)
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError(f"moving-average kernel must be a positive odd integer, got {kernel}")
    if kernel == 1:
        return x.copy(), np.zeros_like(x)
    half = (kernel - 1) // 2
    padded = np.concatenate(
        [np.repeat(x[:, :1], half, axis=1), x, np.repeat(x[:, -1:], half, axis=1)], axis=1
    )
    csum = np.cumsum(padded, axis=1)
    csum = np.concatenate([np.zeros_like(csum[:, :1]), csum], axis=1)
    trend = (csum[:, kernel:] - csum[:, :-kernel]) / kernel
    return trend, x - trend


def init_params(lookback: int, horizon: int, rng: np.random.Generator, kernel: int = 25) -> DLinearParams:
    """Uniform(-1/sqrt(lookback), 1/sqrt(lookback)) weights and biases."""
    bound = 1.0 / math.sqrt(lookback)
    u = lambda *shape: rng.uniform(-bound, bound, size=shape)
    return DLinearParams(u(horizon, lookback), u(horizon), u(horizon, lookback), u(horizon), kernel)


def _check_input(params: DLinearParams, x: np.ndarray):
    if x.ndim != 3 or x.shape[1] != params.lookback:
        raise ValueError(f"expected input (rows, {params.lookback}, channels), got {x.shape}")


@lru_cache(maxsize=32)
def moving_average_matrix(length: int, kernel: int) -> np.ndarray:
    """``A`` with ``A @ x`` equal to the trend :func:`series_decompose` returns."""
    half = (kernel - 1) // 2
    a = np.zeros((length, length))
    for i in range(length):
        for j in range(i - half, i + half + 1):
            a[i, min(max(j, 0), length - 1)] += 1.0 / kernel
    a.flags.writeable = False
    return a


def _flat(a: np.ndarray) -> np.ndarray:
    # (rows, time, channels) -> (rows * channels, time) so both heads are plain matmuls
    return np.ascontiguousarray(np.swapaxes(a, 1, 2)).reshape(-1, a.shape[1])


def _forward(params: DLinearParams, x: np.ndarray):
    _check_input(params, x)
    # the decomposition is linear, so fold it into one effective map:
    # W_t A x + W_r (x - A x) = (W_r + (W_t - W_r) A) x
    ma = moving_average_matrix(params.lookback, params.kernel)
    w = params.W_r + (params.W_t - params.W_r) @ ma
    xf = _flat(x)
    out = xf @ w.T + (params.b_t + params.b_r)
    pred = np.swapaxes(out.reshape(x.shape[0], x.shape[2], -1), 1, 2)
    return pred, xf, ma


def dlinear_forward(params: DLinearParams, x) -> np.ndarray:
    """Per channel: ``W_t @ trend + b_t + W_r @ residual + b_r``."""
    return _forward(params, np.asarray(x, dtype=np.float64))[0]


def _check_pair(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"prediction {pred.shape} and target {target.shape} differ in shape")
    return pred, target


def mse_loss(pred, target) -> float:
    pred, target = _check_pair(pred, target)
    return float(np.mean((pred - target) ** 2))


def mae_loss(pred, target) -> float:
    pred, target = _check_pair(pred, target)
    return float(np.mean(np.abs(pred - target)))


def dlinear_backward(params: DLinearParams, x, target):
    """Loss and exact gradients of ``mse_loss(dlinear_forward(params, x), target)``."""
    pred, xf, ma = _forward(params, np.asarray(x, dtype=np.float64))
    pred, target = _check_pair(pred, target)
    err = pred - target
    g = _flat(2.0 * err / err.size)
    g_bias = g.sum(axis=0)
    gx = g.T @ xf
    g_trend = gx @ ma.T
    grads = {
        "W_t": g_trend,
        "b_t": g_bias,
        "W_r": gx - g_trend,
        "b_r": g_bias.copy(),
    }
    return float(np.mean(err**2)), grads


def adam_step(params: DLinearParams, grads: dict, state: AdamState, lr: float,
              beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
    """One bias-corrected Adam update; returns new params and new state."""
    step = state.step + 1
    new = params.copy()
    m, v = {}, {}
    for k in PARAM_NAMES:
        g = grads[k]
        m[k] = beta1 * state.m.get(k, np.zeros_like(g)) + (1 - beta1) * g
        v[k] = beta2 * state.v.get(k, np.zeros_like(g)) + (1 - beta2) * g * g
        m_hat = m[k] / (1 - beta1**step)
        v_hat = v[k] / (1 - beta2**step)
        setattr(new, k, getattr(params, k) - lr * m_hat / (np.sqrt(v_hat) + eps))
    return new, AdamState(step, m, v)


def lr_at_epoch(cfg: TrainConfig, epoch: int) -> float:
    """Learning rate for 1-based ``epoch``."""
    if cfg.lr_schedule == "constant":
        return cfg.learning_rate
    return cfg.learning_rate * 0.5 ** (epoch - 1)


def predict(params: DLinearParams, x, batch_size: int = 1024) -> np.ndarray:
    x = np.asarray(x)
    if x.shape[0] == 0:
        return np.zeros((0, params.horizon) + x.shape[2:])
    return np.concatenate(
        [dlinear_forward(params, x[i : i + batch_size]) for i in range(0, x.shape[0], batch_size)]
    )


def evaluate(params: DLinearParams, windows) -> tuple[float, float]:
    """(MSE, MAE) over every test window; no augmentation is involved."""
    x, y = windows
    if len(x) == 0:
        raise ValueError("cannot evaluate on an empty window set")
    pred = predict(params, x)
    return mse_loss(pred, y), mae_loss(pred, y)


def train(params: DLinearParams, train_windows, val_windows, cfg: TrainConfig,
          rng: np.random.Generator) -> TrainResult:
    """Mini-batch Adam with per-batch augmentation and early stopping.

    Validation MSE is computed after every epoch; training stops after
    ``cfg.patience`` epochs without improvement and the best epoch's
    parameters are returned.
    """
    x_tr, y_tr = train_windows
    if len(x_tr) == 0:
        raise ValueError("training split has no windows")
    if len(val_windows[0]) == 0:
        raise ValueError("validation split has no windows")
    params = params.copy()
    state = AdamState()
    best = params.copy()
    best_val, best_epoch, stale = math.inf, 0, 0
    history = []
    n = len(x_tr)
    for epoch in range(1, cfg.epochs + 1):
        lr = lr_at_epoch(cfg, epoch)
        order = rng.permutation(n)
        losses = []
        for start in range(0, n, cfg.batch_size):
            idx = np.sort(order[start : start + cfg.batch_size])
            bx, by = augment_training_batch(x_tr[idx], y_tr[idx], cfg.policy, rng)
            loss, grads = dlinear_backward(params, bx, by)
            params, state = adam_step(params, grads, state, lr)
            losses.append(loss)
        val_mse, _ = evaluate(params, val_windows)
        history.append({"epoch": epoch, "lr": lr, "train_loss": float(np.mean(losses)), "val_mse": val_mse})
        if not math.isfinite(val_mse):
            break
        if val_mse < best_val:
            best_val, best_epoch, stale = val_mse, epoch, 0
            best = params.copy()
        else:
            stale += 1
            if stale >= cfg.patience:
                break
    return TrainResult(best, best_epoch, best_val, history)


def save_params(params: DLinearParams, path) -> None:
    """Write a JSON checkpoint; floats use ``repr`` so they roundtrip exactly."""
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "kernel": params.kernel,
        "arrays": {
            k: {"shape": list(a.shape), "data": [float(v) for v in a.ravel()]}
            for k, a in params.arrays().items()
        },
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_params(path) -> DLinearParams:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a DLinear checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')}")
    arrays = {}
    for k in PARAM_NAMES:
        entry = doc["arrays"][k]
        arrays[k] = np.array(entry["data"], dtype=np.float64).reshape(entry["shape"])
    return DLinearParams(**arrays, kernel=int(doc["kernel"]))
