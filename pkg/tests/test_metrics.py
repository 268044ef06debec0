import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import fftconvolve
from skimage.measure import block_reduce
from skimage.metrics import structural_similarity

from oracles import brute_rmse, naive_ssim3d
from jdac.metrics import (
    MetricsReport,
    gradient_metrics,
    image_metrics,
    ms_ssim3d,
    ms_ssim_scales,
    psnr,
    rmse,
    ssim3d,
)

WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)


def reference_ms_ssim(a, b):
    """Independent MS-SSIM: dense 3D kernel, FFT convolution, block pooling."""
    t = np.exp(-0.5 * (np.arange(-5, 6) / 1.5) ** 2)
    w = np.einsum("i,j,k->ijk", t, t, t)
    w /= w.sum()
    c1, c2 = 0.01**2, 0.03**2

    def f(x):
        return fftconvolve(x, w, mode="valid")

    levels = 1
    while levels < 5 and min(a.shape) // 2 ** levels >= 11:
        levels += 1
    wt = np.array(WEIGHTS[:levels]) / sum(WEIGHTS[:levels])
    out = 1.0
    for j in range(levels):
        ma, mb = f(a), f(b)
        va, vb, cov = f(a * a) - ma**2, f(b * b) - mb**2, f(a * b) - ma * mb
        cs = (2 * cov + c2) / (va + vb + c2)
        lum = (2 * ma * mb + c1) / (ma**2 + mb**2 + c1)
        term = np.mean(lum * cs) if j == levels - 1 else np.mean(cs)
        out *= max(term, 0) ** wt[j]
        a, b = block_reduce(a, (2, 2, 2), np.mean), block_reduce(b, (2, 2, 2), np.mean)
    return out


def random_pair(seed, dims):
    r = np.random.default_rng(seed)
    a = r.random(dims)
    return a, np.clip(a + r.normal(0, 0.1, dims), 0, 1)


class TestRmsePsnr:
    def test_trivial(self):
        a = np.random.default_rng(0).random((8, 8, 8))
        assert rmse(a, a) == 0
        assert rmse(a, a + 0.05) == pytest.approx(0.05, abs=1e-12)
        assert psnr(a, a) == math.inf

    @pytest.mark.parametrize("e,db", [(0.1, 20.0), (0.01, 40.0)])
    def test_closed_form(self, e, db):
        a = np.zeros((4, 4, 4))
        assert psnr(a + e, a) == pytest.approx(db, abs=1e-9)

    def test_brute_force(self):
        a, b = random_pair(3, (8, 8, 8))
        assert abs(rmse(a, b) - brute_rmse(a, b)) < 1e-12

    def test_inf_sentinel_in_json(self):
        a = np.random.default_rng(0).random((16, 16, 16))
        d = image_metrics(a, a).to_dict()
        assert d["psnr_db"] == "inf"
        json.dumps(d)


class TestSsim:
    def test_identical(self):
        a = np.random.default_rng(0).random((16, 16, 16))
        assert ssim3d(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_anticorrelated(self):
        a = np.random.default_rng(0).random((16, 16, 16))
        assert ssim3d(a, 1.0 - a) < 0

    @pytest.mark.parametrize("seed", range(3))
    def test_naive_oracle(self, seed):
        a, b = random_pair(seed, (16, 16, 16))
        assert abs(ssim3d(a, b) - naive_ssim3d(a, b)) < 1e-9

    def test_skimage_agrees(self):
        a, b = random_pair(5, (24, 24, 24))
        ref = structural_similarity(a, b, data_range=1.0, gaussian_weights=True, sigma=1.5,
                                    use_sample_covariance=False)
        assert ssim3d(a, b) == pytest.approx(ref, abs=1e-9)

    def test_small_volume_uses_smaller_window(self):
        a, b = random_pair(1, (6, 7, 8))
        assert -1 <= ssim3d(a, b) <= 1


class TestMsSsim:
    def test_identical(self):
        a = np.random.default_rng(0).random((32, 32, 32))
        assert ms_ssim3d(a, a) == pytest.approx(1.0, abs=1e-12)

    def test_scale_selection(self):
        assert ms_ssim_scales((32, 32, 32)) == 2
        assert ms_ssim_scales((64, 64, 64)) == 3
        assert ms_ssim_scales((16, 16, 16)) == 1
        assert ms_ssim_scales((256, 256, 256)) == 5

    def test_two_scale_formula(self):
        a, b = random_pair(2, (32, 32, 32))
        assert ms_ssim3d(a, b) == pytest.approx(reference_ms_ssim(a, b), abs=1e-9)

    def test_reference_64(self):
        a, b = random_pair(9, (64, 64, 64))
        assert abs(ms_ssim3d(a, b) - reference_ms_ssim(a, b)) < 1e-6


class TestGradientMetrics:
    def test_identical(self, phantom):
        rep = gradient_metrics(phantom, phantom)
        assert rep.rmse == 0 and rep.ssim == pytest.approx(1.0) and rep.domain == "gradient"

    def test_offset_invariant(self, phantom):
        a = gradient_metrics(phantom.data + 0.1, phantom)
        b = gradient_metrics(phantom, phantom)
        assert a.rmse == pytest.approx(0.0, abs=1e-12) and a.ssim == pytest.approx(b.ssim, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.001, 0.5))
def test_report_invariants(seed, noise):
    r = np.random.default_rng(seed)
    a = r.random((14, 14, 14))
    b = a + r.normal(0, noise, a.shape)
    rep = image_metrics(b, a)
    assert isinstance(rep, MetricsReport)
    assert rep.rmse > 0 and rep.psnr_db == pytest.approx(20 * math.log10(1 / rep.rmse), abs=1e-9)
    assert -1 <= rep.ssim <= 1 and -1 <= rep.ms_ssim <= 1
    assert abs(ssim3d(a, b) - ssim3d(b, a)) < 1e-12
