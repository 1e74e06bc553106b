"""Wavelet and frequency-domain augmentations for forecasting windows.

All augmentations act on the concatenation ``s = x || y`` of a look-back
window and its horizon, shaped ``(time, channels)``, so the label part
always goes through the same transform as the input part.

Randomness is split deterministically: a window's generator spawns one
child stream per channel, and a batch generator spawns one child per row.
Augmenting a row inside a batch therefore gives the same result as
augmenting it alone with that row's stream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from waveaug.dwt import LevelError, filter_bank, wavedec, waverec
from waveaug.spectral import Spectrum, irfft, rfft

__all__ = [
    "METHODS",
    "WAVE_METHODS",
    "FREQ_METHODS",
    "MIX_METHODS",
    "AugmentationPolicy",
    "create_random_mask",
    "wave_mask",
    "wave_mix",
    "freq_mask",
    "freq_mix",
    "sample_size",
    "sample_rows",
    "augment_rows",
    "augment_training_batch",
]

METHODS = ("none", "wave_mask", "wave_mix", "freq_mask", "freq_mix")
WAVE_METHODS = ("wave_mask", "wave_mix")
FREQ_METHODS = ("freq_mask", "freq_mix")
MIX_METHODS = ("wave_mix", "freq_mix")


def _check_rate(rate: float, what: str = "rate") -> float:
    rate = float(rate)
    if not 0.0 <= rate <= 1.0:
        raise ValueError(f"{what} must lie in [0, 1], got {rate}")
    return rate


@dataclass(frozen=True)
class AugmentationPolicy:
    """Method selector plus its hyperparameters.

    Wave methods read ``wavelet``, ``level`` and ``rates`` (one entry per
    coefficient array, approximation first).  Frequency methods read the
    scalar ``rate``.  ``sampling_rate`` is the fraction of augmented rows
    appended to each training batch.
    """

    method: str = "none"
    wavelet: str = "db1"
    level: int = 1
    rates: tuple[float, ...] = field(default=(0.0, 0.0))
    rate: float = 0.0
    sampling_rate: float = 1.0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown augmentation method {self.method!r}; expected one of {METHODS}")
        object.__setattr__(self, "rates", tuple(float(r) for r in self.rates))
        _check_rate(self.sampling_rate, "sampling_rate")
        _check_rate(self.rate)
        if self.method in WAVE_METHODS:
            filter_bank(self.wavelet)
            if self.level < 1:
                raise ValueError(f"level must be >= 1, got {self.level}")
            if len(self.rates) != self.level + 1:
                raise ValueError(
                    f"{self.method} at level {self.level} needs {self.level + 1} rates, got {len(self.rates)}"
                )
        for r in self.rates:
            _check_rate(r, "rates entry")


def create_random_mask(length: int, rate: float, rng: np.random.Generator) -> np.ndarray:
    """Independent Bernoulli(rate) bits; True marks a masked position.

    Consumes exactly ``length`` uniform draws from ``rng``.
    """
    rate = _check_rate(rate)
    if length < 1:
        raise ValueError(f"mask length must be positive, got {length}")
    return rng.random(length) < rate


def _as_window(s) -> np.ndarray:
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 1:
        s = s[:, None]
    if s.ndim != 2:
        raise ValueError(f"expected a (time, channels) window, got shape {s.shape}")
    return s


def _coef_masks(lens: Sequence[int], rates: Sequence[float], streams) -> list[np.ndarray]:
    # streams[r][c] draws the masks of row r, channel c, level by level
    n_rows, n_ch = len(streams), len(streams[0])
    out = [np.empty((n_rows, n_ch, n), dtype=bool) for n in lens]
    for r in range(n_rows):
        for c in range(n_ch):
            g = streams[r][c]
            for i, (n, rate) in enumerate(zip(lens, rates)):
                out[i][r, c] = create_random_mask(n, rate, g)
    return out


def _bin_masks(n_bins: int, rate: float, streams) -> np.ndarray:
    return np.array([[create_random_mask(n_bins, rate, g) for g in row] for row in streams])


def _decompose(s: np.ndarray, policy: AugmentationPolicy):
    # s: (rows, time, channels) -> coefficients over (rows, channels, time)
    fb = filter_bank(policy.wavelet)
    try:
        return wavedec(np.ascontiguousarray(np.swapaxes(s, 1, 2)), fb, policy.level, strict=False), fb
    except LevelError as exc:
        raise LevelError(f"{policy.method}: {exc}") from None


def _wave_mask_rows(s, policy, streams):
    coeffs, fb = _decompose(s, policy)
    masks = _coef_masks([w.shape[-1] for w in coeffs], policy.rates, streams)
    masked = [np.where(m, 0.0, w) for w, m in zip(coeffs, masks)]
    return np.swapaxes(waverec(coeffs.replace(masked), fb), 1, 2)


def _wave_mix_rows(s1, s2, policy, streams):
    c1, fb = _decompose(s1, policy)
    c2, _ = _decompose(s2, policy)
    masks = _coef_masks([w.shape[-1] for w in c1], policy.rates, streams)
    # m2 = ~m1, so Masking(W1, m1) + Masking(W2, m2) picks W2 wherever m1 is set
    mixed = [np.where(m, w2, w1) for w1, w2, m in zip(c1, c2, masks)]
    return np.swapaxes(waverec(c1.replace(mixed), fb), 1, 2)


def _freq_mask_rows(s, rate, streams):
    n = s.shape[1]
    spec = rfft(np.ascontiguousarray(np.swapaxes(s, 1, 2)))
    m = _bin_masks(spec.bins.shape[-1], rate, streams)
    out = irfft(Spectrum(np.where(m, 0.0, spec.bins), n))
    return np.swapaxes(out, 1, 2)


def _freq_mix_rows(s1, s2, rate, streams):
    n = s1.shape[1]
    b1 = rfft(np.ascontiguousarray(np.swapaxes(s1, 1, 2))).bins
    b2 = rfft(np.ascontiguousarray(np.swapaxes(s2, 1, 2))).bins
    m = _bin_masks(b1.shape[-1], rate, streams)
    out = irfft(Spectrum(np.where(m, b2, b1), n))
    return np.swapaxes(out, 1, 2)


def _pair(s1, s2):
    s1, s2 = _as_window(s1), _as_window(s2)
    if s1.shape != s2.shape:
        raise ValueError(f"windows to mix differ in shape: {s1.shape} vs {s2.shape}")
    return s1, s2


def wave_mask(s, policy: AugmentationPolicy, rng: np.random.Generator) -> np.ndarray:
    """Zero random wavelet coefficients of every channel and reconstruct.

    ``policy.rates[i]`` is the masking probability for coefficient array
    ``i`` (approximation first).  Each channel draws from its own child
    stream of ``rng``.
    """
    s = _as_window(s)
    streams = [rng.spawn(s.shape[1])]
    return _wave_mask_rows(s[None], policy, streams)[0]


def wave_mix(s1, s2, policy: AugmentationPolicy, rng: np.random.Generator) -> np.ndarray:
    """Swap random wavelet coefficients of ``s1`` for those of ``s2``."""
    s1, s2 = _pair(s1, s2)
    streams = [rng.spawn(s1.shape[1])]
    return _wave_mix_rows(s1[None], s2[None], policy, streams)[0]


def freq_mask(s, rate: float, rng: np.random.Generator) -> np.ndarray:
    rate = _check_rate(rate)
    s = _as_window(s)
    return _freq_mask_rows(s[None], rate, [rng.spawn(s.shape[1])])[0]


def freq_mix(s1, s2, rate: float, rng: np.random.Generator) -> np.ndarray:
    rate = _check_rate(rate)
    s1, s2 = _pair(s1, s2)
    return _freq_mix_rows(s1[None], s2[None], rate, [rng.spawn(s1.shape[1])])[0]


def augment_rows(s, policy: AugmentationPolicy, row_rngs, partners=None) -> np.ndarray:
    """Apply ``policy`` to each row of ``s`` (rows, time, channels).

    ``row_rngs[r]`` is row ``r``'s generator; row ``r`` gives exactly what the
    single-window function returns for ``s[r]`` and ``row_rngs[r]``.
    """
    s = np.asarray(s, dtype=np.float64)
    if len(row_rngs) != s.shape[0]:
        raise ValueError(f"need one generator per row: {len(row_rngs)} for {s.shape[0]} rows")
    if s.shape[0] == 0 or policy.method == "none":
        return s.copy()
    streams = [g.spawn(s.shape[2]) for g in row_rngs]
    if policy.method in MIX_METHODS:
        if partners is None or np.shape(partners) != s.shape:
            raise ValueError("mixing methods need a partner window per row of the same shape")
        partners = np.asarray(partners, dtype=np.float64)
    if policy.method == "wave_mask":
        return _wave_mask_rows(s, policy, streams)
    if policy.method == "wave_mix":
        return _wave_mix_rows(s, partners, policy, streams)
    if policy.method == "freq_mask":
        return _freq_mask_rows(s, policy.rate, streams)
    return _freq_mix_rows(s, partners, policy.rate, streams)


def sample_size(b: int, sampling_rate: float) -> int:
    """Rows kept from ``b`` augmented rows: ``max(1, round(rate * b))``.

    Rounds half up; a rate of exactly 0 keeps nothing.
    """
    sampling_rate = _check_rate(sampling_rate, "sampling_rate")
    if sampling_rate == 0.0 or b == 0:
        return 0
    return min(b, max(1, int(np.floor(sampling_rate * b + 0.5))))


def _sample_indices(b: int, sampling_rate: float, rng) -> np.ndarray:
    return rng.permutation(b)[: sample_size(b, sampling_rate)]


def sample_rows(aug, sampling_rate: float, rng: np.random.Generator) -> np.ndarray:
    """Uniformly choose ``sample_size(b, rate)`` rows without replacement."""
    aug = np.asarray(aug)
    return aug[_sample_indices(aug.shape[0], sampling_rate, rng)]


def _partners(b: int, rng: np.random.Generator) -> np.ndarray:
    if b < 2:
        return np.zeros(b, dtype=np.int64)
    j = rng.integers(0, b - 1, size=b)
    return j + (j >= np.arange(b))


def augment_training_batch(x, y, policy: AugmentationPolicy, rng: np.random.Generator):
    """Append sampled augmented copies of a batch to the batch itself.

    Returns ``(x', y')`` with ``b + n`` rows where the first ``b`` rows are
    the originals.  Mixing methods pair every row with a uniformly drawn
    different row of the batch (a one-row batch pairs with itself).  Only the rows that survive
    sampling are transformed, which yields the same result as augmenting
    all rows and then sampling, since every row has its own stream.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 3 or y.ndim != 3 or x.shape[0] != y.shape[0] or x.shape[2] != y.shape[2]:
        raise ValueError(f"inconsistent batch shapes x {x.shape}, y {y.shape}")
    if policy.method == "none":
        return x, y
    b, t_lb = x.shape[0], x.shape[1]
    s = np.concatenate([x, y], axis=1)
    pair_rng, aug_rng, sample_rng = rng.spawn(3)
    partner = _partners(b, pair_rng) if policy.method in MIX_METHODS else np.arange(b)
    row_rngs = aug_rng.spawn(b)
    idx = _sample_indices(b, policy.sampling_rate, sample_rng)
    aug = augment_rows(s[idx], policy, [row_rngs[i] for i in idx], partners=s[partner[idx]])
    return (
        np.concatenate([x, aug[:, :t_lb]], axis=0),
        np.concatenate([y, aug[:, t_lb:]], axis=0),
    )
