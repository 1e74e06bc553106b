"""Real-input DFT and its inverse.

Power-of-two lengths use a radix-2 decimation-in-time FFT on top of
direct 32-point DFTs;
any other length goes through Bluestein's chirp-z reformulation on a
padded power-of-two grid.  Both work along the last axis.

Normalization: forward unnormalized, inverse scaled by ``1/n``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["Spectrum", "fft", "ifft", "rfft", "irfft"]


@dataclass
class Spectrum:
    bins: np.ndarray
    original_len: int


_BASE = 32


@lru_cache(maxsize=16)
def _dft_matrix(n: int) -> np.ndarray:
    k = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(k, k) / n)


@lru_cache(maxsize=64)
def _merge_twiddles(rows: int) -> np.ndarray:
    return np.exp(-1j * np.pi * np.arange(rows) / rows)[:, None, None]


def _fft_pow2(x: np.ndarray) -> np.ndarray:
    n = x.shape[-1]
    lead = x.shape[:-1]
    base = min(n, _BASE)
    # transform axis first, batch last: every step below is a contiguous slab op
    cols = x.reshape(-1, n).T.reshape(base, n // base, -1)
    # column j holds the stride-(n/base) subsequence at offset j; each loop
    # merges offsets j and j + cols/2 into a DFT twice as long
    out = (_dft_matrix(base) @ cols.reshape(base, -1)).reshape(cols.shape)
    while out.shape[0] < n:
        half = out.shape[1] // 2
        even = out[:, :half]
        odd = out[:, half:] * _merge_twiddles(out.shape[0])
        out = np.concatenate([even + odd, even - odd], axis=0)
    return out.reshape(n, -1).T.reshape(lead + (n,))


@lru_cache(maxsize=64)
def _chirp(n: int):
    k = np.arange(n)
    # k^2 mod 2n keeps the phase argument small for long inputs
    w = np.exp(-1j * np.pi * ((k * k) % (2 * n)) / n)
    m = 1 << (2 * n - 1).bit_length()
    b = np.zeros(m, dtype=np.complex128)
    b[:n] = np.conj(w)
    b[m - n + 1 :] = np.conj(w[1:])[::-1]
    return w, m, _fft_pow2(b)


def fft(x) -> np.ndarray:
    """Complex forward DFT along the last axis, any length."""
    x = np.asarray(x, dtype=np.complex128)
    n = x.shape[-1]
    if n == 0:
        raise ValueError("cannot transform an empty signal")
    if n & (n - 1) == 0:
        return _fft_pow2(x)
    w, m, fb = _chirp(n)
    a = np.zeros(x.shape[:-1] + (m,), dtype=np.complex128)
    a[..., :n] = x * w
    conv = _ifft_pow2(_fft_pow2(a) * fb)
    return w * conv[..., :n]


def _ifft_pow2(x: np.ndarray) -> np.ndarray:
    return np.conj(_fft_pow2(np.conj(x))) / x.shape[-1]


def ifft(x) -> np.ndarray:
    x = np.asarray(x, dtype=np.complex128)
    return np.conj(fft(np.conj(x))) / x.shape[-1]


@lru_cache(maxsize=64)
def _half_twiddles(n: int) -> np.ndarray:
    return np.exp(-2j * np.pi * np.arange(n // 2 + 1) / n)


def rfft(signal) -> Spectrum:
    """Non-negative frequency half of the DFT of a real signal."""
    x = np.asarray(signal, dtype=np.float64)
    n = x.shape[-1]
    if n == 0:
        raise ValueError("cannot transform an empty signal")
    if n % 2:
        return Spectrum(fft(x)[..., : n // 2 + 1], n)
    # pack even/odd samples into one complex signal of half the length
    m = n // 2
    z = fft(x[..., 0::2] + 1j * x[..., 1::2])
    zk = np.concatenate([z, z[..., :1]], axis=-1)
    zc = np.conj(np.concatenate([z[..., :1], z[..., ::-1]], axis=-1))
    even = 0.5 * (zk + zc)
    odd = -0.5j * (zk - zc)
    return Spectrum(even + _half_twiddles(n) * odd, n)


def irfft(spec: Spectrum) -> np.ndarray:
    """Inverse of :func:`rfft`; imaginary parts of DC/Nyquist are ignored."""
    bins = np.asarray(spec.bins, dtype=np.complex128)
    n = spec.original_len
    if n < 1 or bins.shape[-1] != n // 2 + 1:
        raise ValueError(f"{bins.shape[-1]} bins do not match original length {n}")
    bins = bins.copy()
    bins[..., 0] = bins[..., 0].real
    if n % 2 == 0:
        bins[..., -1] = bins[..., -1].real
        m = n // 2
        xk = bins[..., :m]
        xc = np.conj(bins[..., m:0:-1])
        even = 0.5 * (xk + xc)
        odd = 0.5 * (xk - xc) * np.conj(_half_twiddles(n)[:m])
        z = ifft(even + 1j * odd)
        out = np.empty(bins.shape[:-1] + (n,))
        out[..., 0::2] = z.real
        out[..., 1::2] = z.imag
        return out
    # conjugate-symmetric extension for the negative frequencies
    full = np.concatenate([bins, np.conj(bins[..., :0:-1])], axis=-1)
    return ifft(full).real
