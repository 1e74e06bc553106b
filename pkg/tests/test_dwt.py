import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveaug import dwt
from waveaug.dwt import LevelError, UnknownWaveletError, filter_bank, max_level, wavedec, waverec

ALL = [f"db{n}" for n in range(1, 27)]
CORE = ["db1", "db2", "db3", "db5", "db25", "db26"]


def direct_analysis(x, h):
    """Oracle: half-point symmetric extension, full convolution, keep odd samples."""
    f = len(h)
    xe = np.pad(x, f - 1, mode="symmetric")
    return np.convolve(xe, h, mode="valid")[1::2]


# ------------------------------------------------------------------ filters
def test_supported_set():
    assert dwt.supported_wavelets() == ALL


def test_haar():
    np.testing.assert_allclose(filter_bank("db1").dec_lo, [0.7071067812, 0.7071067812], atol=1e-10)


def test_db2_closed_form():
    r3, d = math.sqrt(3), 4 * math.sqrt(2)
    rec = np.array([1 + r3, 3 + r3, 3 - r3, 1 - r3]) / d
    fb = filter_bank("db2")
    np.testing.assert_allclose(fb.rec_lo, rec, atol=1e-15)
    assert fb.length == 4
    assert abs(fb.dec_lo.sum() - math.sqrt(2)) < 1e-14
    assert abs((fb.dec_lo ** 2).sum() - 1) < 1e-14


@pytest.mark.parametrize("name", ALL)
def test_filter_conditions(name):
    fb = filter_bank(name)
    h = fb.dec_lo
    f = len(h)
    n = int(name[2:])
    assert f == 2 * n
    assert abs(h.sum() - math.sqrt(2)) < 1e-12
    for shift in range(0, f, 2):
        assert abs(np.dot(h[: f - shift], h[shift:]) - (shift == 0)) < 1e-12
    # vanishing moments of the high-pass on a normalized grid
    k = np.arange(f) / (f - 1)
    for p in range(n):
        assert abs(np.sum(fb.dec_hi * k ** p)) < 1e-10
    # quadrature mirror and time reversal conventions
    sign = (-1.0) ** np.arange(f)
    np.testing.assert_array_equal(fb.dec_hi, sign * h[::-1])
    np.testing.assert_array_equal(fb.rec_lo, h[::-1])
    np.testing.assert_array_equal(fb.rec_hi, fb.dec_hi[::-1])


def test_filter_bank_cached_and_readonly():
    a, b = filter_bank("db5"), filter_bank("db5")
    np.testing.assert_array_equal(a.dec_lo, b.dec_lo)
    with pytest.raises(ValueError):
        a.dec_lo[0] = 1.0


@pytest.mark.parametrize("bad", ["db99", "db0", "sym4", "DB2x"])
def test_unknown_wavelet(bad):
    with pytest.raises(UnknownWaveletError, match=bad):
        filter_bank(bad)


# ---------------------------------------------------------------- one stage
def test_dwt_step_haar_ramp():
    a, d = dwt.dwt_step([2.0, 4.0, 6.0, 8.0], "db1")
    np.testing.assert_allclose(a, [4.2426, 9.8995], atol=1e-4)
    np.testing.assert_allclose(np.abs(d), [1.4142, 1.4142], atol=1e-4)


@pytest.mark.parametrize("c", [0.0, 1.0, -3.5])
def test_dwt_step_constant(c):
    a, d = dwt.dwt_step([c] * 4, "db1")
    np.testing.assert_allclose(a, [c * math.sqrt(2)] * 2, atol=1e-12)
    np.testing.assert_allclose(d, [0, 0], atol=1e-12)
    np.testing.assert_allclose(dwt.idwt_step(a, d, "db1", 4), [c] * 4, atol=1e-12)


def test_dwt_step_length_formula():
    a, d = dwt.dwt_step(np.arange(8.0), "db2")
    assert a.shape == d.shape == (5,)
    assert dwt.coeff_len(8, 4) == 5


@pytest.mark.parametrize("name", CORE)
@pytest.mark.parametrize("n", [2, 5, 8, 31, 96])
def test_dwt_step_matches_direct_convolution(name, n, rng):
    fb = filter_bank(name)
    x = rng.normal(size=n)
    a, d = dwt.dwt_step(x, fb)
    np.testing.assert_allclose(a, direct_analysis(x, fb.dec_lo), atol=1e-12)
    np.testing.assert_allclose(d, direct_analysis(x, fb.dec_hi), atol=1e-12)


def test_dwt_step_batched_rows(rng):
    x = rng.normal(size=(3, 4, 40))
    a, d = dwt.dwt_step(x, "db3")
    a0, d0 = dwt.dwt_step(x[1, 2], "db3")
    np.testing.assert_allclose(a[1, 2], a0, rtol=0, atol=1e-13)
    np.testing.assert_allclose(d[1, 2], d0, rtol=0, atol=1e-13)


def test_dwt_step_too_short():
    with pytest.raises(ValueError):
        dwt.dwt_step([1.0], "db1")


@pytest.mark.parametrize("name", CORE)
def test_idwt_step_inverse(name, rng):
    x = rng.normal(size=96)
    a, d = dwt.dwt_step(x, name)
    np.testing.assert_allclose(dwt.idwt_step(a, d, name, 96), x, atol=1e-8)


def test_idwt_step_zero():
    np.testing.assert_array_equal(dwt.idwt_step(np.zeros(5), np.zeros(5), "db2", 8), np.zeros(8))


def test_idwt_step_errors():
    with pytest.raises(ValueError):
        dwt.idwt_step(np.zeros(5), np.zeros(4), "db2", 8)
    with pytest.raises(ValueError):
        dwt.idwt_step(np.zeros(5), np.zeros(5), "db2", 20)


# --------------------------------------------------------------- multilevel
@pytest.mark.parametrize("n,f,expect", [(48, 2, 5), (8, 4, 1), (2, 4, 0), (1056, 52, 4), (360, 50, 2)])
def test_max_level(n, f, expect):
    assert max_level(n, f) == expect


def test_wavedec_shapes():
    c = wavedec(np.arange(8.0), "db1", 1)
    assert c.approx.shape == (4,) and [w.shape for w in c.details] == [(4,)]
    c = wavedec(np.arange(48.0), "db1", 3)
    assert c.approx.shape == (6,)
    assert [len(w) for w in c.details] == [6, 12, 24]
    assert len(c) == 4 and c.level == 3 and c.original_len == 48
    assert [len(w) for w in c] == [6, 6, 12, 24]


def test_wavedec_level_errors():
    with pytest.raises(LevelError):
        wavedec(np.arange(8.0), "db2", 5)
    with pytest.raises(ValueError):
        wavedec(np.arange(8.0), "db2", 0)


def test_non_strict_deeper_levels(rng):
    x = rng.normal(size=48)
    assert max_level(48, 52) == 0
    with pytest.raises(LevelError):
        wavedec(x, "db26", 1)
    for level in range(1, 5):
        c = wavedec(x, "db26", level, strict=False)
        np.testing.assert_allclose(waverec(c, "db26"), x, atol=1e-8)


@pytest.mark.parametrize("name", CORE)
@pytest.mark.parametrize("n", [48, 360, 1056])
def test_perfect_reconstruction(name, n, rng):
    x = rng.uniform(-10, 10, size=(4, n))
    for level in range(1, 5):
        c = wavedec(x, name, level, strict=False)
        y = waverec(c, name)
        assert y.shape == x.shape
        assert np.abs(y - x).max() < 1e-8


@pytest.mark.parametrize("name", ALL)
def test_perfect_reconstruction_every_wavelet(name, rng):
    x = rng.uniform(-10, 10, size=360)
    level = max(1, max_level(360, filter_bank(name).length))
    c = wavedec(x, name, level)
    assert np.abs(waverec(c, name) - x).max() < 1e-8


def test_waverec_linearity(rng):
    x = rng.normal(size=360)
    c = wavedec(x, "db5", 3)
    np.testing.assert_array_equal(waverec(c.replace([np.zeros_like(w) for w in c]), "db5"), np.zeros(360))
    np.testing.assert_allclose(waverec(c.replace([2.5 * w for w in c]), "db5"), 2.5 * x, atol=1e-8)


def test_waverec_inconsistent_chain(rng):
    c = wavedec(rng.normal(size=48), "db2", 2)
    bad = c.replace([c[0], c[1][:-1], c[2]])
    with pytest.raises(ValueError):
        waverec(bad, "db2")


def test_haar_energy(rng):
    for x in (np.full(64, 3.0), rng.normal(size=256)):
        c = wavedec(x, "db1", 1)
        assert abs(sum(float((w ** 2).sum()) for w in c) - float((x ** 2).sum())) < 1e-8


@settings(max_examples=60, deadline=None)
@given(
    name=st.sampled_from(CORE),
    n=st.integers(16, 400),
    alpha=st.floats(-5, 5),
    beta=st.floats(-5, 5),
    seed=st.integers(0, 2 ** 32 - 1),
)
def test_linearity_property(name, n, alpha, beta, seed):
    g = np.random.default_rng(seed)
    x, y = g.normal(size=(2, n))
    level = max(1, max_level(n, filter_bank(name).length))
    lhs = wavedec(alpha * x + beta * y, name, level, strict=False)
    cx = wavedec(x, name, level, strict=False)
    cy = wavedec(y, name, level, strict=False)
    for a, b, c in zip(lhs, cx, cy):
        np.testing.assert_allclose(a, alpha * b + beta * c, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(name=st.sampled_from(ALL), n=st.integers(2, 600), level=st.integers(1, 4), seed=st.integers(0, 999))
def test_shape_chain_property(name, n, level, seed):
    f = filter_bank(name).length
    lens = [n]
    for _ in range(level):
        lens.append(dwt.coeff_len(lens[-1], f))
    if min(lens[:-1]) < 2:
        return
    x = np.random.default_rng(seed).normal(size=n)
    c = wavedec(x, name, level, strict=False)
    assert [len(w) for w in c.details] == lens[1:][::-1]
    assert len(c.approx) == lens[-1]
    y = waverec(c, name)
    assert y.shape == (n,)
    assert np.abs(y - x).max() < 1e-8
