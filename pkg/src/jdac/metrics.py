"""PSNR, RMSE, SSIM and MS-SSIM for volumes and their gradient maps.

SSIM uses an isotropic 3D Gaussian window (11 taps, std 1.5) and the usual
constants ``C1 = (0.01 L)^2``, ``C2 = (0.03 L)^2``. Scores are averaged over
every window that fits entirely inside the volume.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage

from .volume import as_array, check_same_dims, gradient

MS_SSIM_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
WINDOW_SIZE = 11
WINDOW_STD = 1.5


@dataclass(frozen=True)
class MetricsReport:
    psnr_db: float
    rmse: float
    ssim: float
    ms_ssim: float
    domain: str = "image"

    def to_dict(self):
        d = asdict(self)
        if math.isinf(d["psnr_db"]):
            d["psnr_db"] = "inf"
        return d


def _pair(test, ref):
    a = np.asarray(as_array(test), dtype=np.float64)
    b = np.asarray(as_array(ref), dtype=np.float64)
    check_same_dims(a, b)
    return a, b


def rmse(test, ref) -> float:
    a, b = _pair(test, ref)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def psnr(test, ref, data_range=1.0) -> float:
    """Peak SNR in dB; ``inf`` for identical inputs."""
    e = rmse(test, ref)
    if e == 0:
        return math.inf
    return float(20.0 * np.log10(data_range / e))


def gaussian_window(size=WINDOW_SIZE, std=WINDOW_STD):
    """Normalized 1D Gaussian taps; the 3D window is their outer product."""
    r = size // 2
    g = np.exp(-((np.arange(size) - r) ** 2) / (2.0 * std**2))
    return g / g.sum()


def _effective_window(dims, size):
    size = min(size, min(dims))
    return size if size % 2 == 1 else size - 1


def _filter_valid(a, taps):
    """Separable weighted means, keeping only windows fully inside ``a``."""
    r = len(taps) // 2
    out = a
    for axis in range(3):
        out = ndimage.correlate1d(out, taps, axis=axis, mode="constant")
    if r:
        out = out[r:-r, r:-r, r:-r]
    return out


def _ssim_maps(a, b, data_range, size, std):
    taps = gaussian_window(_effective_window(a.shape, size), std)
    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    mu_a = _filter_valid(a, taps)
    mu_b = _filter_valid(b, taps)
    var_a = _filter_valid(a * a, taps) - mu_a**2
    var_b = _filter_valid(b * b, taps) - mu_b**2
    cov = _filter_valid(a * b, taps) - mu_a * mu_b
    lum = (2 * mu_a * mu_b + c1) / (mu_a**2 + mu_b**2 + c1)
    cs = (2 * cov + c2) / (var_a + var_b + c2)
    return lum, cs


def ssim3d(test, ref, data_range=1.0, window_size=WINDOW_SIZE, window_std=WINDOW_STD) -> float:
    """Mean SSIM over all Gaussian windows that fit inside the volume.

    If an axis is shorter than the window, the window shrinks to the
    largest odd size that fits; its std is unchanged.
    """
    a, b = _pair(test, ref)
    lum, cs = _ssim_maps(a, b, data_range, window_size, window_std)
    return float(np.mean(lum * cs))


def _pool2(a):
    """2x2x2 mean pooling; a trailing odd voxel along any axis is dropped."""
    L, W, H = (n // 2 * 2 for n in a.shape)
    a = a[:L, :W, :H]
    return a.reshape(L // 2, 2, W // 2, 2, H // 2, 2).mean(axis=(1, 3, 5))


def ms_ssim_scales(dims, scales=len(MS_SSIM_WEIGHTS), min_size=WINDOW_SIZE):
    """Number of dyadic scales usable so the coarsest level keeps ``min_size`` voxels."""
    n = 1
    size = min(dims)
    while n < scales and size // 2 >= min_size:
        size //= 2
        n += 1
    return n


def ms_ssim3d(test, ref, data_range=1.0, scales=5, weights=MS_SSIM_WEIGHTS) -> float:
    """Multi-scale SSIM with contrast-structure terms at every scale.

    Luminance only enters at the coarsest scale. The number of scales is
    reduced until the coarsest level is at least 11 voxels per axis, and the
    weights are truncated and renormalized to match. Negative per-scale
    terms are clamped to 0 before exponentiation.
    """
    a, b = _pair(test, ref)
    n = ms_ssim_scales(a.shape, min(scales, len(weights)))
    w = np.asarray(weights[:n], dtype=np.float64)
    w = w / w.sum()
    result = 1.0
    for j in range(n):
        lum, cs = _ssim_maps(a, b, data_range, WINDOW_SIZE, WINDOW_STD)
        if j == n - 1:
            term = float(np.mean(lum * cs))
        else:
            term = float(np.mean(cs))
            a, b = _pool2(a), _pool2(b)
        result *= max(term, 0.0) ** w[j]
    return float(result)


def image_metrics(test, ref, data_range=1.0, domain="image") -> MetricsReport:
    a, b = _pair(test, ref)
    return MetricsReport(
        psnr_db=psnr(a, b, data_range),
        rmse=rmse(a, b),
        ssim=ssim3d(a, b, data_range),
        ms_ssim=ms_ssim3d(a, b, data_range),
        domain=domain,
    )


def gradient_magnitude(v) -> np.ndarray:
    return gradient(v).magnitude()


def gradient_metrics(test, ref) -> MetricsReport:
    """The four metrics on gradient-magnitude volumes (data range 1)."""
    a, b = _pair(test, ref)
    return image_metrics(gradient_magnitude(a), gradient_magnitude(b), 1.0, domain="gradient")
