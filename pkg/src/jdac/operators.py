"""Pluggable denoiser and anti-artifact operators.

A denoiser predicts the *scaled residual* ``noise / sigma^2`` of its input;
:func:`denoise_with` multiplies that prediction by the estimated variance
``sigma_e^2`` and subtracts it. A corrector maps a volume straight to its
artifact-free estimate. Trained networks plug in through the same two
interfaces (see :mod:`jdac.external` for a file-based adapter); the classes
here are classical stand-ins good enough to exercise the engine.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import OperatorContractViolation, UnknownOperator
from .kspace import KSpace, fft3, ifft3
from .volume import Volume

# Gaussian kernel std, in voxels, per unit of estimated noise std
VOXELS_PER_SIGMA = 10.0
MIN_SIGMA = 0.01
# variances below this underflow the noise / sigma^2 convention
_TINY_VAR = np.finfo(np.float64).tiny


class Denoiser:
    """Interface: ``raw_predict(x, sigma_e)`` returns the predicted noise / sigma^2."""

    name = "denoiser"

    def raw_predict(self, x: Volume, sigma_e: float) -> Volume:
        raise NotImplementedError


class Corrector:
    """Interface: ``correct(x)`` returns the artifact-corrected volume."""

    name = "corrector"

    def correct(self, x: Volume) -> Volume:
        raise NotImplementedError


def _check_output(out, x, who):
    if not isinstance(out, Volume):
        try:
            out = x.with_data(np.asarray(out, dtype=np.float64))
        except Exception as exc:
            raise OperatorContractViolation(f"{who} returned an unusable value: {exc}") from exc
    if out.dims != x.dims:
        raise OperatorContractViolation(f"{who} changed dims from {x.dims} to {out.dims}")
    return out


def denoise_with(d: Denoiser, x: Volume, sigma_e) -> Volume:
    """``x - sigma_e^2 * d.raw_predict(x, sigma_e)``; exactly ``x`` when sigma_e is 0.

    A variance too small to represent counts as 0.
    """
    if sigma_e < 0:
        raise ValueError("sigma_e must be >= 0")
    if sigma_e**2 < _TINY_VAR:
        return x.with_data(x.data.copy())
    pred = _check_output(d.raw_predict(x, sigma_e), x, f"denoiser {d.name!r}")
    return x.with_data(x.data - sigma_e**2 * pred.data)


def correct_with(a: Corrector, x: Volume) -> Volume:
    return _check_output(a.correct(x), x, f"corrector {a.name!r}")


# -- baselines ----------------------------------------------------------------

class IdentityDenoiser(Denoiser):
    name = "identity"

    def raw_predict(self, x, sigma_e):
        return x.with_data(np.zeros_like(x.data), residual=True)


class IdentityCorrector(Corrector):
    name = "identity"

    def correct(self, x):
        return x.with_data(x.data.copy())


@dataclass
class GaussianDenoiser(Denoiser):
    """Separable Gaussian smoothing whose width follows the noise estimate.

    The kernel std is ``width_scale * 10 * max(sigma_e, 0.01)`` voxels,
    truncated at three standard deviations, so ``denoise_with`` returns the
    smoothed volume.
    """

    width_scale: float = 1.0

    def __post_init__(self):
        if not self.width_scale > 0:
            raise ValueError("width_scale must be positive")

    @property
    def name(self):
        return f"gauss:{self.width_scale:g}"

    def kernel_std(self, sigma_e):
        return self.width_scale * VOXELS_PER_SIGMA * max(float(sigma_e), MIN_SIGMA)

    def smooth(self, x: Volume, sigma_e) -> np.ndarray:
        return ndimage.gaussian_filter(x.data.astype(np.float64), self.kernel_std(sigma_e),
                                       mode="nearest", truncate=3.0)

    def raw_predict(self, x, sigma_e):
        if sigma_e**2 < _TINY_VAR:
            return x.with_data(np.zeros_like(x.data), residual=True)
        return x.with_data((x.data - self.smooth(x, sigma_e)) / sigma_e**2, residual=True)


def radial_bands(k: KSpace):
    """Integer radial band of every coefficient (rounded index radius)."""
    return np.rint(k.radius()).astype(np.int64)


def band_medians(magnitude, bands):
    """Lower median of ``magnitude`` within each band, broadcast back per coefficient.

    The lower median is always a member of the band, so pulling outliers
    down to it leaves it unchanged and a second pass finds nothing new.
    """
    flat_b = bands.ravel()
    flat_m = magnitude.ravel()
    order = np.lexsort((flat_m, flat_b))
    counts = np.bincount(flat_b)
    starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
    present = counts > 0
    med = np.zeros(len(counts))
    med[present] = flat_m[order][starts[present] + (counts[present] - 1) // 2]
    return med[bands]


@dataclass
class SpikeNotchCorrector(Corrector):
    """Suppress isolated k-space outliers relative to their radial band.

    Any non-DC coefficient whose magnitude exceeds ``z_threshold`` times the
    median magnitude of its radial band is scaled down to that median with
    its phase kept. Bands depend only on |frequency|, so conjugate pairs are
    treated alike and the corrected volume stays real.
    """

    z_threshold: float = 8.0

    def __post_init__(self):
        if not self.z_threshold > 2:
            raise ValueError("z_threshold must exceed 2")

    @property
    def name(self):
        return f"spike-notch:{self.z_threshold:g}"

    def outliers(self, k: KSpace):
        mag = np.abs(k.data)
        med = band_medians(mag, radial_bands(k))
        mask = mag > self.z_threshold * med
        mask[0, 0, 0] = False
        return mask, mag, med

    def correct(self, x):
        k = fft3(x)
        mask, mag, med = self.outliers(k)
        if not mask.any():
            return x.with_data(x.data.copy())
        data = k.data.copy()
        data[mask] *= med[mask] / mag[mask]
        return ifft3(KSpace(data, k.spacing))


def identity_denoiser():
    return IdentityDenoiser()


def identity_corrector():
    return IdentityCorrector()


def gaussian_denoiser(width_scale=1.0):
    return GaussianDenoiser(width_scale)


def spike_notch_corrector(z_threshold=8.0):
    return SpikeNotchCorrector(z_threshold)


# -- registry -----------------------------------------------------------------

def _split(name):
    head, _, arg = name.partition(":")
    return head.strip().lower(), arg


def make_denoiser(name: str, timeout=300.0) -> Denoiser:
    """Build a denoiser from ``identity``, ``gauss[:width]`` or ``external:<command>``."""
    head, arg = _split(name)
    if head == "identity":
        return IdentityDenoiser()
    if head in ("gauss", "gaussian"):
        return GaussianDenoiser(float(arg) if arg else 1.0)
    if head == "external":
        from .external import ExternalDenoiser

        return ExternalDenoiser(arg, timeout=timeout)
    raise UnknownOperator(f"unknown denoiser {name!r}")


def make_corrector(name: str, timeout=300.0) -> Corrector:
    """Build a corrector from ``identity``, ``spike-notch[:z]`` or ``external:<command>``."""
    head, arg = _split(name)
    if head == "identity":
        return IdentityCorrector()
    if head in ("spike-notch", "spikenotch", "notch"):
        return SpikeNotchCorrector(float(arg) if arg else 8.0)
    if head == "external":
        from .external import ExternalCorrector

        return ExternalCorrector(arg, timeout=timeout)
    raise UnknownOperator(f"unknown corrector {name!r}")
