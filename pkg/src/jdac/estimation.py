"""Noise-level estimation from the dispersion of gradient maps.

For i.i.d. Gaussian noise the central-difference gradient has variance
sigma^2 / 2, so the pooled gradient std is scaled by sqrt(2) to report the
noise std itself. The early-stop threshold is compared against the raw,
uncalibrated value.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import EmptyCorpus
from .volume import gradient, pooled_std

DEFAULT_CALIBRATION = math.sqrt(2.0)
# raw gradient-map std of clean scans used as the early-stop threshold
DEFAULT_STOP_THRESHOLD = 0.028


class NoiseEstimate(NamedTuple):
    sigma_e: float
    raw_std: float
    calibration: float


def estimate_noise(v, calibration=DEFAULT_CALIBRATION) -> NoiseEstimate:
    if not calibration > 0:
        raise ValueError("calibration must be positive")
    raw = pooled_std(gradient(v))
    return NoiseEstimate(calibration * raw, raw, float(calibration))


def raw_noise(v) -> float:
    return pooled_std(gradient(v))


def calibrate_threshold(clean_volumes) -> float:
    """Mean raw gradient std over a corpus of clean volumes."""
    vols = list(clean_volumes)
    if not vols:
        raise EmptyCorpus("threshold calibration needs at least one clean volume")
    return float(np.mean([raw_noise(v) for v in vols]))
