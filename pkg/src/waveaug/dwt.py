"""Multilevel discrete wavelet transform with Daubechies filter banks.

Every transform works along the last axis, so a stack of signals shaped
``(..., n)`` is decomposed in one call.  Boundaries are handled by
half-point symmetric extension, which keeps each stage at
``floor((n + f - 1) / 2)`` coefficients and still reconstructs exactly.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from waveaug._daubechies import REC_LO

__all__ = [
    "FilterBank",
    "WaveletCoeffs",
    "UnknownWaveletError",
    "LevelError",
    "filter_bank",
    "supported_wavelets",
    "dwt_step",
    "idwt_step",
    "wavedec",
    "waverec",
    "max_level",
    "coeff_len",
]


class UnknownWaveletError(ValueError):
    pass


class LevelError(ValueError):
    pass


@dataclass(frozen=True)
class FilterBank:
    name: str
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray

    @property
    def length(self) -> int:
        return len(self.dec_lo)


@dataclass
class WaveletCoeffs:
    """Last-level approximation plus details, coarsest level first.

    ``coeffs[0]`` is the approximation and ``coeffs[i]`` for ``i >= 1`` the
    details from coarsest to finest, so a rates array of length
    ``level + 1`` lines up with ``coeffs`` position by position.
    """

    approx: np.ndarray
    details: list[np.ndarray]
    original_len: int
    # input length of every stage, coarsest first; needed to trim odd lengths
    stage_lens: list[int] = field(default_factory=list)

    @property
    def level(self) -> int:
        return len(self.details)

    def __len__(self) -> int:
        return self.level + 1

    def __getitem__(self, i: int) -> np.ndarray:
        return self.approx if i == 0 else self.details[i - 1]

    def __iter__(self):
        yield self.approx
        yield from self.details

    def replace(self, arrays) -> "WaveletCoeffs":
        arrays = list(arrays)
        if len(arrays) != len(self):
            raise ValueError(f"expected {len(self)} coefficient arrays, got {len(arrays)}")
        return WaveletCoeffs(arrays[0], arrays[1:], self.original_len, list(self.stage_lens))


def supported_wavelets() -> list[str]:
    return [f"db{n}" for n in sorted(REC_LO)]


@lru_cache(maxsize=None)
def filter_bank(name: str) -> FilterBank:
    """Return the orthogonal Daubechies filter bank ``dbN`` (N = 1..26).

    The high-pass filter is the quadrature mirror of the low-pass one,
    ``dec_hi[k] = (-1)**k * dec_lo[f-1-k]``, and reconstruction filters are
    the time-reversed decomposition filters.
    """
    m = re.fullmatch(r"db(\d+)", str(name))
    if m is None or int(m.group(1)) not in REC_LO:
        raise UnknownWaveletError(f"unknown wavelet {name!r}; supported: db1..db26")
    rec_lo = np.array(REC_LO[int(m.group(1))], dtype=np.float64)
    dec_lo = rec_lo[::-1].copy()
    f = len(dec_lo)
    dec_hi = (-1.0) ** np.arange(f) * dec_lo[::-1]
    rec_hi = dec_hi[::-1].copy()
    for a in (dec_lo, dec_hi, rec_lo, rec_hi):
        a.flags.writeable = False
    return FilterBank(str(name), dec_lo, dec_hi, rec_lo, rec_hi)


def _as_bank(fb) -> FilterBank:
    return fb if isinstance(fb, FilterBank) else filter_bank(fb)


def coeff_len(n: int, filter_len: int) -> int:
    return (n + filter_len - 1) // 2


def max_level(signal_len: int, filter_len: int) -> int:
    """Deepest level before every coefficient is affected by the boundary."""
    if filter_len < 2 or signal_len < filter_len - 1:
        return 0
    return max(0, int(math.floor(math.log2(signal_len / (filter_len - 1)))))


def _analysis_taps(x: np.ndarray, fb: FilterBank):
    n = x.shape[-1]
    f = fb.length
    out = coeff_len(n, f)
    pad = [(0, 0)] * (x.ndim - 1) + [(f - 1, f - 1)]
    xe = np.pad(x, pad, mode="symmetric")
    # out[i] = sum_j h[j] * xe[2i + f - j], accumulated one tap at a time
    approx = np.zeros(x.shape[:-1] + (out,))
    detail = np.zeros_like(approx)
    for j in range(f):
        tap = xe[..., f - j : f - j + 2 * out : 2]
        approx += fb.dec_lo[j] * tap
        detail += fb.dec_hi[j] * tap
    return approx, detail


def _synthesis_taps(a: np.ndarray, d: np.ndarray, fb: FilterBank, out_len: int) -> np.ndarray:
    f = fb.length
    # y[k] = sum_j g[j] * u[k + f - 2 - j] with u the zero-upsampled coefficients;
    # only even u indices are nonzero, so y[2p] and y[2p+1] use alternate taps
    half = f // 2
    n_even = (out_len + 1) // 2
    n_odd = out_len // 2
    y = np.empty(a.shape[:-1] + (out_len,))
    for parity, count in ((0, n_even), (1, n_odd)):
        acc = np.zeros(a.shape[:-1] + (count,))
        # k = 2p + parity, j = parity + 2q  ->  coefficient index p + half - 1 - q
        for q in range(half):
            j = parity + 2 * q
            start = half - 1 - q
            acc += fb.rec_lo[j] * a[..., start : start + count]
            acc += fb.rec_hi[j] * d[..., start : start + count]
        y[..., parity::2] = acc
    return y


# Each stage is a fixed linear map for a given (length, wavelet); caching it as
# a dense matrix turns the tap loops into one BLAS product per call.
_MATRIX_MAX_LEN = 4096


@lru_cache(maxsize=128)
def _analysis_matrix(n: int, name: str) -> np.ndarray:
    lo, hi = _analysis_taps(np.eye(n), filter_bank(name))
    m = np.concatenate([lo, hi], axis=1)
    m.flags.writeable = False
    return m


@lru_cache(maxsize=128)
def _synthesis_matrix(n_c: int, out_len: int, name: str) -> np.ndarray:
    fb = filter_bank(name)
    eye, zero = np.eye(n_c), np.zeros((n_c, n_c))
    m = np.concatenate([_synthesis_taps(eye, zero, fb, out_len), _synthesis_taps(zero, eye, fb, out_len)])
    m.flags.writeable = False
    return m


def _is_cached_bank(fb: FilterBank) -> bool:
    try:
        return filter_bank(fb.name) is fb
    except UnknownWaveletError:
        return False


def dwt_step(signal, fb) -> tuple[np.ndarray, np.ndarray]:
    """Single-level analysis along the last axis."""
    fb = _as_bank(fb)
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[-1]
    if n < 2:
        raise ValueError(f"signal needs at least 2 samples, got {n}")
    if n > _MATRIX_MAX_LEN or not _is_cached_bank(fb):
        return _analysis_taps(x, fb)
    out = coeff_len(n, fb.length)
    y = np.ascontiguousarray(x) @ _analysis_matrix(n, fb.name)
    return y[..., :out], y[..., out:]


def idwt_step(approx, detail, fb, out_len: int) -> np.ndarray:
    """Single-level synthesis, trimmed to ``out_len`` samples."""
    fb = _as_bank(fb)
    a = np.asarray(approx, dtype=np.float64)
    d = np.asarray(detail, dtype=np.float64)
    if a.shape != d.shape:
        raise ValueError(f"approx and detail shapes differ: {a.shape} vs {d.shape}")
    n_c = a.shape[-1]
    f = fb.length
    full = 2 * n_c - f + 2
    if out_len < 1 or out_len > full or coeff_len(out_len, f) != n_c:
        raise ValueError(f"out_len {out_len} is inconsistent with {n_c} coefficients for filter length {f}")
    if out_len > _MATRIX_MAX_LEN or not _is_cached_bank(fb):
        return _synthesis_taps(a, d, fb, out_len)
    return np.concatenate([a, d], axis=-1) @ _synthesis_matrix(n_c, out_len, fb.name)


def wavedec(signal, fb, level: int, strict: bool = True) -> WaveletCoeffs:
    """Decompose ``level`` times, recursing on the approximation.

    With ``strict`` a level above :func:`max_level` raises :class:`LevelError`.
    Non-strict mode accepts it as long as every stage has at least two
    samples; reconstruction stays exact, but the deepest stages are
    dominated by the boundary extension.
    """
    fb = _as_bank(fb)
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[-1]
    if level < 1:
        raise LevelError(f"level must be >= 1, got {level}")
    top = max_level(n, fb.length)
    if strict and level > top:
        raise LevelError(f"level {level} exceeds max level {top} for length {n} and {fb.name}")
    details = []
    stage_lens = []
    a = x
    for _ in range(level):
        if a.shape[-1] < 2:
            raise LevelError(f"level {level} not reachable for length {n} and {fb.name}")
        stage_lens.append(a.shape[-1])
        a, d = dwt_step(a, fb)
        details.append(d)
    return WaveletCoeffs(a, details[::-1], n, stage_lens[::-1])


def waverec(coeffs: WaveletCoeffs, fb) -> np.ndarray:
    fb = _as_bank(fb)
    f = fb.length
    lens = coeffs.stage_lens
    if not lens:
        # chain not recorded: infer the longest lengths consistent with each stage
        lens, m = [], coeffs.original_len
        for _ in range(coeffs.level):
            lens.append(m)
            m = coeff_len(m, f)
        lens = lens[::-1]
    if len(lens) != coeffs.level or (lens and lens[-1] != coeffs.original_len):
        raise ValueError("coefficient chain does not match original length")
    a = np.asarray(coeffs.approx, dtype=np.float64)
    for d, n in zip(coeffs.details, lens):
        if a.shape != np.shape(d) or coeff_len(n, f) != a.shape[-1]:
            raise ValueError(
                f"inconsistent coefficient chain at stage of length {n}: "
                f"approx {a.shape}, detail {np.shape(d)}"
            )
        a = idwt_step(a, d, fb, n)
    return a
