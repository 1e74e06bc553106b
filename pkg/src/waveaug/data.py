"""Dataset ingestion, chronological splits, scaling and windowing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "Dataset",
    "ForecastTask",
    "Normalizer",
    "DataError",
    "load_csv",
    "split_622",
    "fit_normalizer",
    "fit_apply_normalizer",
    "make_windows",
    "downsample_train",
    "synthetic_seasonal",
    "CANONICAL_TIMESTEPS",
]

CANONICAL_TIMESTEPS = {"ETTh1": 17420, "ETTh2": 17420, "Weather": 52696, "ILI": 966}


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    name: str
    values: np.ndarray  # (timesteps, channels)
    timestamps: tuple[str, ...] | None = None
    columns: tuple[str, ...] | None = None

    @property
    def n_channels(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ForecastTask:
    lookback: int
    horizon: int
    dataset: str = ""

    def __post_init__(self):
        if self.lookback < 1 or self.horizon < 1:
            raise ValueError(f"lookback and horizon must be >= 1, got {self.lookback}, {self.horizon}")

    @property
    def window_len(self) -> int:
        return self.lookback + self.horizon

    @classmethod
    def standard(cls, dataset: str, horizon: int) -> "ForecastTask":
        """Benchmark look-back: 24 steps for ILI, 336 otherwise."""
        return cls(24 if dataset.upper() == "ILI" else 336, horizon, dataset)


def load_csv(path, name: str | None = None) -> Dataset:
    """Read a ``date, ch1, ch2, ...`` CSV; every data cell must be a finite number."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if len(header) < 2:
            raise DataError(f"{path}: need a timestamp column and at least one channel")
        seen = set()
        for col in header:
            if col in seen:
                raise DataError(f"{path}: duplicate header column {col!r}")
            seen.add(col)
        stamps, rows = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            vals = []
            for col, cell in zip(header[1:], row[1:]):
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}:{lineno}: column {col!r} is not numeric: {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}:{lineno}: column {col!r} has missing/non-finite value {cell!r}")
                vals.append(v)
            stamps.append(row[0])
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(name or path.stem, np.array(rows, dtype=np.float64), tuple(stamps), tuple(header[1:]))


def split_622(ds, lookback: int = 0) -> tuple[range, range, range]:
    """Chronological 60/20/20 split into row ranges.

    Validation and test ranges start ``lookback`` rows early so their first
    windows have a full look-back; their horizons never overlap train's.
    """
    n = len(ds)
    if n < 10:
        raise DataError(f"dataset has {n} timesteps; need at least 10")
    n_train = int(math.floor(0.6 * n))
    n_val = int(math.floor(0.2 * n))
    if lookback > n_train:
        raise DataError(f"look-back {lookback} is longer than the training split ({n_train})")
    train = range(0, n_train)
    val = range(n_train - lookback, n_train + n_val)
    test = range(n_train + n_val - lookback, n)
    return train, val, test


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray
    std: np.ndarray

    def apply(self, values) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def invert(self, values) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std + self.mean


def fit_normalizer(ds, train_range: range) -> Normalizer:
    values = ds.values if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.float64)
    if len(train_range) == 0:
        raise DataError("training range is empty")
    block = values[train_range.start : train_range.stop]
    mean = block.mean(axis=0)
    std = block.std(axis=0)
    for c, s in enumerate(std):
        if not s > 1e-12 * max(1.0, abs(mean[c])):
            label = ds.columns[c] if isinstance(ds, Dataset) and ds.columns else c
            raise DataError(f"channel {label!r} has zero variance on the training range")
    return Normalizer(mean, std)


def fit_apply_normalizer(ds: Dataset, train_range: range) -> tuple[Dataset, Normalizer]:
    """Z-score every channel with statistics from ``train_range`` only."""
    norm = fit_normalizer(ds, train_range)
    return Dataset(ds.name, norm.apply(ds.values), ds.timestamps, ds.columns), norm


def make_windows(ds, rows: range, task: ForecastTask):
    """Stride-1 (look-back, horizon) pairs inside ``rows``.

    Returns read-only views ``X (n, lookback, K)`` and ``Y (n, horizon, K)``.
    """
    values = ds.values if isinstance(ds, Dataset) else np.asarray(ds, dtype=np.float64)
    block = values[rows.start : rows.stop]
    if len(block) < task.window_len:
        raise DataError(
            f"range of {len(block)} timesteps is shorter than one window "
            f"({task.lookback} + {task.horizon})"
        )
    # (n, K, window) -> (n, window, K)
    win = np.swapaxes(sliding_window_view(block, task.window_len, axis=0), 1, 2)
    return win[:, : task.lookback], win[:, task.lookback :]


def downsample_train(train_range: range, keep_fraction: float, task: ForecastTask | None = None) -> range:
    """Keep the most recent ``floor(keep_fraction * len)`` training timesteps."""
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    keep = int(math.floor(keep_fraction * len(train_range) + 1e-9))
    if task is not None and keep < task.window_len:
        raise DataError(
            f"keeping {keep} training timesteps leaves no window of length {task.window_len}"
        )
    if keep < 1:
        raise DataError("downsampled training range is empty")
    return range(train_range.stop - keep, train_range.stop)


def synthetic_seasonal(timesteps: int = 17420, channels: int = 7, seed: int = 0,
                       noise: float = 0.3, name: str = "synthetic_seasonal") -> Dataset:
    """Hourly-like multichannel series: daily and weekly cycles, drift, noise.

    Stand-in for the benchmark files when they are not available locally.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(timesteps, dtype=np.float64)[:, None]
    amp_d = rng.uniform(0.5, 2.0, channels)
    amp_w = rng.uniform(0.2, 1.0, channels)
    phase = rng.uniform(0, 2 * np.pi, (2, channels))
    drift = rng.uniform(-1.0, 1.0, channels) / timesteps
    level = rng.uniform(-2.0, 2.0, channels)
    ar = np.zeros((timesteps, channels))
    eps = rng.normal(0.0, noise, (timesteps, channels))
    for i in range(1, timesteps):
        ar[i] = 0.8 * ar[i - 1] + eps[i]
    values = (
        level
        + amp_d * np.sin(2 * np.pi * t / 24 + phase[0])
        + amp_w * np.sin(2 * np.pi * t / 168 + phase[1])
        + drift * t
        + ar
    )
    cols = tuple(f"ch{c}" for c in range(channels))
    return Dataset(name, values, None, cols)
