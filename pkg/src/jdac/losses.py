"""L1 training losses for the two operators, averaged per voxel.

The noise loss compares predicted and true noise; the anti-artifact loss
is the image L1 term plus the L1 distance between gradient fields. Means
rather than sums keep thresholds independent of volume size; multiply by
the voxel count (times 3 for the gradient term) to recover summed norms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .volume import as_array, check_same_dims, gradient


@dataclass(frozen=True)
class LossReport:
    l_n: float
    l_m: float
    l_g: float
    l_a: float


def _pair(a, b):
    a = np.asarray(as_array(a), dtype=np.float64)
    b = np.asarray(as_array(b), dtype=np.float64)
    check_same_dims(a, b)
    return a, b


def l1_mean(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.mean(np.abs(a - b)))


def loss_noise(n_hat, xi) -> float:
    return l1_mean(n_hat, xi)


def loss_motion(m, m_hat) -> float:
    return l1_mean(m, m_hat)


def loss_gradient(m, m_hat) -> float:
    """Mean absolute difference over all three gradient components."""
    a, b = _pair(m, m_hat)
    ga, gb = gradient(a), gradient(b)
    return float(np.mean([np.mean(np.abs(ca - cb)) for ca, cb in zip(ga, gb)]))


def loss_total(m, m_hat, n_hat=None, xi=None) -> LossReport:
    l_m = loss_motion(m, m_hat)
    l_g = loss_gradient(m, m_hat)
    l_n = loss_noise(n_hat, xi) if n_hat is not None and xi is not None else 0.0
    return LossReport(l_n=l_n, l_m=l_m, l_g=l_g, l_a=l_m + l_g)
