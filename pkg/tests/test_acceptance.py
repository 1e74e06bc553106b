"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -v`` (lines are printed even
under output capture) or directly with ``python3 tests/test_acceptance.py``.

Criteria 6 and 7 look for the benchmark ``ETTh1.csv`` in ``$WAVEAUG_DATA_DIR``
or ``./data``.  Without it, 6 is reported as UNAVAILABLE (skipped) and 7 uses
the synthetic-seasonal fallback.
"""

from __future__ import annotations

import hashlib
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from waveaug import augment as aug
from waveaug import data, dwt, harness, model, spectral
from waveaug.augment import AugmentationPolicy

WAVELETS = ["db1", "db2", "db3", "db5", "db25", "db26"]


def _emit(n: int, status: str, detail: str, capsys=None):
    line = f"[{status}] criterion {n}: {detail}"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line, flush=True)
    else:
        print(line, flush=True)


def _etth1_path() -> Path | None:
    for base in (os.environ.get(harness.DATA_ENV), "data"):
        if base and (Path(base) / "ETTh1.csv").exists():
            return Path(base) / "ETTh1.csv"
    return None


def _mean_std(xs):
    xs = [float(x) for x in xs]
    m = sum(xs) / len(xs)
    s = math.sqrt(sum((x - m) ** 2 for x in xs) / (len(xs) - 1)) if len(xs) > 1 else 0.0
    return m, s


# ---------------------------------------------------------------- criteria
def criterion_1():
    g = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for name in WAVELETS:
        for n in (48, 360, 1056):
            x = g.uniform(-10, 10, size=(50, n))
            for level in range(1, 5):
                c = dwt.wavedec(x, name, level, strict=False)
                worst = max(worst, float(np.abs(dwt.waverec(c, name) - x).max()))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-8 and elapsed < 10.0
    return ok, f"perfect reconstruction max error {worst:.2e} (< 1e-8), runtime {elapsed:.2f}s (< 10s)"


def criterion_2():
    g = np.random.default_rng(202)
    rows, t, k = 100, 432, 3
    worst = 0.0
    n_cfg = 0

    def run(p, s, partners=None):
        return aug.augment_rows(s, p, np.random.default_rng(g.integers(2**63)).spawn(rows), partners)

    for name in WAVELETS:
        for level in range(1, 5):
            s1, s2 = g.normal(size=(2, rows, t, k))
            zero, one = (0.0,) * (level + 1), (1.0,) * (level + 1)
            worst = max(
                worst,
                np.abs(run(AugmentationPolicy("wave_mask", name, level, zero), s1) - s1).max(),
                np.abs(run(AugmentationPolicy("wave_mask", name, level, one), s1)).max(),
                np.abs(run(AugmentationPolicy("wave_mix", name, level, zero), s1, s2) - s1).max(),
                np.abs(run(AugmentationPolicy("wave_mix", name, level, one), s1, s2) - s2).max(),
            )
            n_cfg += 4
    s1, s2 = g.normal(size=(2, rows, t, k))
    worst = max(
        worst,
        np.abs(run(AugmentationPolicy("freq_mask", rate=0.0), s1) - s1).max(),
        np.abs(run(AugmentationPolicy("freq_mix", rate=0.0), s1, s2) - s1).max(),
    )
    n_cfg += 2
    return worst < 1e-8, f"rate-limit identities over {n_cfg} configurations x {rows} windows, max deviation {worst:.2e} (< 1e-8)"


def criterion_3():
    g = np.random.default_rng(303)
    worst = 0.0
    h = 1e-5
    for _ in range(100):
        p = model.init_params(8, 4, g, kernel=3)
        x, y = g.normal(size=(4, 8, 2)), g.normal(size=(4, 4, 2))
        _, grads = model.dlinear_backward(p, x, y)
        for name in model.PARAM_NAMES:
            arr = getattr(p, name)
            num = np.zeros_like(arr)
            for idx in np.ndindex(arr.shape):
                old = arr[idx]
                arr[idx] = old + h
                up = model.mse_loss(model.dlinear_forward(p, x), y)
                arr[idx] = old - h
                down = model.mse_loss(model.dlinear_forward(p, x), y)
                arr[idx] = old
                num[idx] = (up - down) / (2 * h)
            rel = np.linalg.norm(grads[name] - num) / max(np.linalg.norm(num), 1e-12)
            worst = max(worst, float(rel))
    return worst < 1e-5, f"gradient vs central differences on 100 instances, max relative error {worst:.2e} (< 1e-5)"


def criterion_4():
    g = np.random.default_rng(404)
    worst_dft = 0.0
    for n in range(1, 65):
        x = g.normal(size=n)
        k = np.arange(n // 2 + 1)[:, None]
        t = np.arange(n)[None, :]
        ref = (x * np.cos(2 * np.pi * k * t / n)).sum(1) - 1j * (x * np.sin(2 * np.pi * k * t / n)).sum(1)
        worst_dft = max(worst_dft, float(np.abs(spectral.rfft(x).bins - ref).max()))
    worst_rt = 0.0
    for n in range(1, 1057):
        x = g.uniform(-10, 10, size=n)
        worst_rt = max(worst_rt, float(np.abs(spectral.irfft(spectral.rfft(x)) - x).max()))
    ok = worst_dft < 1e-8 and worst_rt < 1e-10
    return ok, f"rfft vs direct DFT (n <= 64) max error {worst_dft:.2e} (< 1e-8); roundtrip n = 1..1056 max error {worst_rt:.2e} (< 1e-10)"


def criterion_5():
    parts, ok = [], True
    for r in (0.1, 0.5, 0.9):
        frac = float(aug.create_random_mask(100_000, r, np.random.default_rng(505)).mean())
        ok &= abs(frac - r) <= 0.01
        parts.append(f"r={r}: {frac:.4f}")
    return ok, "mask True-fraction within r +- 0.01: " + ", ".join(parts)


def _table4_spec(methods, fractions, n_repeats=10):
    spec = harness.parse_config("etth1_table4")
    spec.horizons = [96]
    spec.methods = list(methods)
    spec.fractions = list(fractions)
    spec.n_repeats = n_repeats
    spec.dataset_path = _etth1_path()
    return spec


def criterion_6():
    if _etth1_path() is None:
        return None, (f"UNAVAILABLE: ETTh1.csv not found in ${harness.DATA_ENV} or ./data; "
                      "published-number reproduction not attempted")
    spec = _table4_spec(["none", "wave_mix"], [1.0])
    with tempfile.TemporaryDirectory() as tmp:
        recs = harness.run_experiment(spec, output_dir=tmp)
    got = {m: _mean_std([r.mse for r in recs if r.method == m]) for m in ("none", "wave_mix")}
    target = {"none": 0.3708, "wave_mix": 0.3696}
    ok = all(abs(got[m][0] - target[m]) <= 0.1 * target[m] for m in target)
    detail = ", ".join(f"{m} {got[m][0]:.4f} +- {got[m][1]:.4f} (target {target[m]} +- 10%)" for m in target)
    return ok, "ETTh1 h=96, 10 seeds: " + detail


def criterion_7():
    if _etth1_path() is not None:
        spec = _table4_spec(["freq_mask", "freq_mix", "wave_mask", "wave_mix"], [0.15])
        with tempfile.TemporaryDirectory() as tmp:
            recs = harness.run_experiment(spec, output_dir=tmp)
        stats = {m: _mean_std([r.mse for r in recs if r.method == m]) for m in spec.methods}
        wave = min(("wave_mask", "wave_mix"), key=lambda m: stats[m][0])
        freq = min(("freq_mask", "freq_mix"), key=lambda m: stats[m][0])
        ok = stats[wave][0] <= stats[freq][0]
        label, rival = "ETTh1 15%", freq
    else:
        spec = harness.parse_config("synthetic_coldstart")
        spec.methods = ["none", "wave_mask", "wave_mix"]
        with tempfile.TemporaryDirectory() as tmp:
            recs = harness.run_experiment(spec, output_dir=tmp)
        stats = {m: _mean_std([r.mse for r in recs if r.method == m]) for m in spec.methods}
        wave = min(("wave_mask", "wave_mix"), key=lambda m: stats[m][0])
        ok = stats[wave][0] <= stats["none"][0]
        label, rival = "synthetic-seasonal fallback (ETTh1.csv unavailable), 15%", "none"
    fmt = lambda m: f"{m} {stats[m][0]:.5f} +- {stats[m][1]:.5f}"
    return ok, f"{label}, h=96, 10 seeds: best wave {fmt(wave)} <= {fmt(rival)}; all: " + "; ".join(
        fmt(m) for m in stats)


_DETERMINISM_CONFIG = {
    "dataset": {"name": "det", "synthetic": {"timesteps": 1200, "channels": 3, "seed": 8}},
    "lookback": 96,
    "horizons": [24, 48],
    "methods": ["none", "wave_mask", "wave_mix", "freq_mask", "freq_mix"],
    "n_repeats": 2,
    "fractions": [0.5, 1.0],
    "train": {"epochs": 3, "batch_size": 32, "kernel": 25},
    "policies": {"default": {
        "wave_mask": {"wavelet": "db2", "level": 3, "rates": [0.5, 0.3, 0.9, 0.9], "sampling_rate": 0.2},
        "wave_mix": {"wavelet": "db25", "level": 1, "rates": [0.1, 0.9], "sampling_rate": 0.8},
        "freq_mask": {"rate": 0.1},
        "freq_mix": {"rate": 0.2},
    }},
}


def criterion_8():
    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for run in ("a", "b"):
            out = Path(tmp) / run
            recs = harness.run_experiment(harness.parse_config(_DETERMINISM_CONFIG), output_dir=out)
            harness.emit_report(harness.aggregate(recs), out)
            digests.append({name: hashlib.sha256((out / name).read_bytes()).hexdigest()
                            for name in ("ledger.jsonl", "metrics.csv", "coldstart.csv")})
    ok = digests[0] == digests[1]
    short = ", ".join(f"{k} {v[:12]}" for k, v in digests[0].items())
    return ok, f"two identical runs ({len(recs)} records) give byte-identical files: {short}"


def _batch_digest(prep, spec, horizon, method):
    h = hashlib.sha256()
    g = np.random.default_rng(9)
    p = spec.policy(horizon, method)
    x, y = prep.train
    for start in range(0, min(len(x), 640), 64):
        bx, by = aug.augment_training_batch(x[start:start + 64], y[start:start + 64], p, g)
        h.update(bx.tobytes())
        h.update(by.tobytes())
    return h.hexdigest()


def criterion_9():
    spec = harness.parse_config(_DETERMINISM_CONFIG)
    ds = data.synthetic_seasonal(3000, 3, seed=2)
    task = data.ForecastTask(spec.lookback, 24)
    tr, va, te = data.split_622(ds, task.lookback)
    bumped = ds.values.copy()
    test_only = slice(va.stop, te.stop)  # timesteps that belong to the test split alone
    bumped[test_only] = np.random.default_rng(1).normal(size=bumped[test_only].shape) * 1e3
    ds2 = data.Dataset(ds.name, bumped, ds.timestamps, ds.columns)

    def norm_digest(d):
        n = data.fit_normalizer(d, tr)
        return hashlib.sha256(n.mean.tobytes() + n.std.tobytes()).hexdigest()

    same_norm = norm_digest(ds) == norm_digest(ds2)
    same_batches = True
    for fraction in (1.0, 0.15):
        a = harness._Prepared(ds, spec, 24, fraction)
        b = harness._Prepared(ds2, spec, 24, fraction)
        for m in spec.methods:
            same_batches &= _batch_digest(a, spec, 24, m) == _batch_digest(b, spec, 24, m)
    changed = not np.array_equal(harness._Prepared(ds, spec, 24, 1.0).test[1],
                                 harness._Prepared(ds2, spec, 24, 1.0).test[1])
    ok = same_norm and same_batches and changed
    return ok, (f"perturbed test range: normalizer hash unchanged={same_norm}, "
                f"augmented training batch hashes unchanged={same_batches} (5 methods x 2 fractions), "
                f"test windows changed={changed}")


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


def _check(n, capsys=None):
    ok, detail = CRITERIA[n]()
    status = "SKIP" if ok is None else ("PASS" if ok else "FAIL")
    _emit(n, status, detail, capsys)
    return ok, detail


@pytest.mark.parametrize("n", sorted(CRITERIA))
def test_criterion(n, capsys):
    ok, detail = _check(n, capsys)
    if ok is None:
        pytest.skip(detail)
    assert ok, detail


if __name__ == "__main__":
    results = [_check(n)[0] for n in sorted(CRITERIA)]
    sys.exit(0 if all(r is not False for r in results) else 1)
