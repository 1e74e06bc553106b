"""Fast invariant checks that ship with the package (``waveaug selftest``).

Each check compares against an oracle that does not share code with the
path under test: direct O(n^2) DFT sums, central finite differences,
orthonormality sums of the raw filter tables.
"""

from __future__ import annotations

import math
import time

import numpy as np

from waveaug import augment as aug
from waveaug import dwt, model, spectral


def _check_filters():
    worst = 0.0
    for name in dwt.supported_wavelets():
        fb = dwt.filter_bank(name)
        h = fb.dec_lo
        f = len(h)
        worst = max(worst, abs(h.sum() - math.sqrt(2)))
        for shift in range(0, f, 2):
            target = 1.0 if shift == 0 else 0.0
            worst = max(worst, abs(float(np.dot(h[: f - shift], h[shift:])) - target))
    return worst < 1e-10, f"max orthonormality defect {worst:.2e}"


def _check_reconstruction():
    rng = np.random.default_rng(0)
    worst = 0.0
    for name in ("db1", "db2", "db3", "db5", "db25", "db26"):
        for n in (48, 360, 1056):
            x = rng.uniform(-10, 10, (5, n))
            for level in range(1, 5):
                c = dwt.wavedec(x, name, level, strict=False)
                worst = max(worst, float(np.abs(dwt.waverec(c, name) - x).max()))
    return worst < 1e-8, f"max reconstruction error {worst:.2e}"


def _check_fft():
    rng = np.random.default_rng(1)
    worst_dft = worst_rt = 0.0
    for n in range(1, 65):
        x = rng.normal(size=n)
        bins = spectral.rfft(x).bins
        for k in range(n // 2 + 1):
            ref = sum(x[t] * complex(math.cos(2 * math.pi * k * t / n), -math.sin(2 * math.pi * k * t / n))
                      for t in range(n))
            worst_dft = max(worst_dft, abs(bins[k] - ref))
    for n in (100, 432, 1056):
        x = rng.normal(size=n)
        worst_rt = max(worst_rt, float(np.abs(spectral.irfft(spectral.rfft(x)) - x).max()))
    return worst_dft < 1e-8 and worst_rt < 1e-10, f"dft error {worst_dft:.2e}, roundtrip {worst_rt:.2e}"


def _check_rate_limits():
    rng = np.random.default_rng(2)
    s1, s2 = rng.normal(size=(2, 432, 3))
    worst = 0.0
    for rates, expect in (((0.0,) * 4, s1), ((1.0,) * 4, np.zeros_like(s1))):
        p = aug.AugmentationPolicy("wave_mask", "db2", 3, rates)
        worst = max(worst, float(np.abs(aug.wave_mask(s1, p, np.random.default_rng(0)) - expect).max()))
    for rates, expect in (((0.0,) * 2, s1), ((1.0,) * 2, s2)):
        p = aug.AugmentationPolicy("wave_mix", "db3", 1, rates)
        worst = max(worst, float(np.abs(aug.wave_mix(s1, s2, p, np.random.default_rng(0)) - expect).max()))
    worst = max(worst, float(np.abs(aug.freq_mask(s1, 0.0, np.random.default_rng(0)) - s1).max()))
    worst = max(worst, float(np.abs(aug.freq_mix(s1, s2, 0.0, np.random.default_rng(0)) - s1).max()))
    return worst < 1e-8, f"max deviation {worst:.2e}"


def _check_gradients():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(5):
        p = model.init_params(8, 4, rng, kernel=3)
        x = rng.normal(size=(3, 8, 2))
        y = rng.normal(size=(3, 4, 2))
        _, grads = model.dlinear_backward(p, x, y)
        for name in model.PARAM_NAMES:
            arr = getattr(p, name)
            num = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                old = arr[idx]
                arr[idx] = old + 1e-5
                up = model.mse_loss(model.dlinear_forward(p, x), y)
                arr[idx] = old - 1e-5
                down = model.mse_loss(model.dlinear_forward(p, x), y)
                arr[idx] = old
                num[idx] = (up - down) / 2e-5
            rel = np.linalg.norm(grads[name] - num) / max(np.linalg.norm(num), 1e-12)
            worst = max(worst, float(rel))
    return worst < 1e-5, f"max relative error {worst:.2e}"


def _check_masks():
    worst = 0.0
    for r in (0.1, 0.5, 0.9):
        frac = aug.create_random_mask(100_000, r, np.random.default_rng(4)).mean()
        worst = max(worst, abs(frac - r))
    return worst <= 0.01, f"max deviation from rate {worst:.4f}"


CHECKS = [
    ("filter orthonormality", _check_filters),
    ("perfect reconstruction", _check_reconstruction),
    ("fft vs direct dft", _check_fft),
    ("augmentation rate limits", _check_rate_limits),
    ("dlinear gradients", _check_gradients),
    ("mask statistics", _check_masks),
]


def run_all(emit=print) -> bool:
    ok = True
    for name, check in CHECKS:
        t0 = time.perf_counter()
        passed, detail = check()
        ok &= passed
        emit(f"{'PASS' if passed else 'FAIL'}  {name:<26} {detail}  ({time.perf_counter() - t0:.2f}s)")
    return ok
