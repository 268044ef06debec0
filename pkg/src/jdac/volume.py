"""Dense 3D volumes, finite-difference gradients, statistics and phantoms.

A :class:`Volume` wraps a ``(L, W, H)`` numpy array indexed ``[x, y, z]``.
The canonical flat order used for serialization is x-fastest, i.e. numpy
``order="F"``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import DimensionMismatch, DimensionTooSmall, UnknownPhantomKind

PHANTOM_KINDS = ("ellipsoids", "checker-smooth", "shepp-logan-like")


@dataclass(frozen=True, eq=False)
class Volume:
    """3D scalar field with voxel spacing in millimetres.

    ``residual`` marks volumes that hold noise, residuals or otherwise
    unnormalized intensities which may leave ``[0, 1]``.
    """

    data: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)
    residual: bool = False

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim != 3:
            raise DimensionMismatch(f"volume data must be 3D, got shape {data.shape}")
        if min(data.shape) < 1:
            raise DimensionMismatch(f"volume dims must be positive, got {data.shape}")
        if not np.issubdtype(data.dtype, np.floating):
            data = data.astype(np.float64)
        spacing = tuple(float(s) for s in self.spacing)
        if len(spacing) != 3 or min(spacing) <= 0:
            raise ValueError(f"spacing must be three positive values, got {self.spacing}")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "residual", bool(self.residual))

    @property
    def dims(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def with_data(self, data, residual=None):
        """Return a volume with the same geometry and new voxel values.

        When ``residual`` is None it is inferred: values outside ``[0, 1]``
        set the marker, otherwise the current marker is kept.
        """
        data = np.asarray(data)
        if data.shape != self.dims:
            raise DimensionMismatch(f"expected dims {self.dims}, got {data.shape}")
        if residual is None:
            residual = self.residual or _out_of_unit_range(data)
        return replace(self, data=data, residual=residual)

    def flat(self):
        """Voxel values in canonical x-fastest order."""
        return self.data.ravel(order="F")

    @classmethod
    def from_flat(cls, values, dims, spacing=(1.0, 1.0, 1.0), residual=False):
        values = np.asarray(values)
        dims = tuple(int(d) for d in dims)
        if values.size != int(np.prod(dims)):
            raise DimensionMismatch(f"{values.size} values do not fill dims {dims}")
        return cls(values.reshape(dims, order="F"), spacing, residual)


def _out_of_unit_range(data):
    return bool(data.size) and (float(np.min(data)) < 0.0 or float(np.max(data)) > 1.0)


def as_array(v):
    """Voxel array of a Volume, or the input itself if already array-like."""
    return v.data if isinstance(v, Volume) else np.asarray(v)


def check_same_dims(a, b):
    if a.shape != b.shape:
        raise DimensionMismatch(f"dims differ: {a.shape} vs {b.shape}")


class GradientField(NamedTuple):
    """Per-axis central-difference components, each with the parent's dims."""

    dx: np.ndarray
    dy: np.ndarray
    dz: np.ndarray

    @property
    def dims(self):
        return self.dx.shape

    def magnitude(self):
        return np.sqrt(self.dx**2 + self.dy**2 + self.dz**2)


class VolumeStats(NamedTuple):
    mean: float
    std: float
    min: float
    max: float


def gradient(v) -> GradientField:
    """Central differences in voxel units, one-sided at the faces.

    Raises DimensionTooSmall if any axis has fewer than 3 voxels.
    """
    a = np.asarray(as_array(v), dtype=np.float64)
    if a.ndim != 3 or min(a.shape) < 3:
        raise DimensionTooSmall(f"gradient needs >= 3 voxels per axis, got {a.shape}")
    return GradientField(*np.gradient(a, edge_order=1))


def pooled_std(g: GradientField) -> float:
    """Population std over the concatenation of all three components."""
    n = 3 * g.dx.size
    mean = (g.dx.sum() + g.dy.sum() + g.dz.sum()) / n
    ss = sum(float(np.sum((c - mean) ** 2)) for c in g)
    return float(np.sqrt(ss / n))


def stats(v) -> VolumeStats:
    a = np.asarray(as_array(v), dtype=np.float64)
    return VolumeStats(float(a.mean()), float(a.std()), float(a.min()), float(a.max()))


# -- phantoms -----------------------------------------------------------------

def _grid(dims):
    """Normalized coordinates in [-1, 1] along each axis, voxel centres."""
    axes = [(np.arange(n) + 0.5) / n * 2.0 - 1.0 for n in dims]
    return np.meshgrid(*axes, indexing="ij")


def _soft_ellipsoid(coords, center, semi_axes, rot, ramp_voxels, dims):
    """Indicator of an ellipsoid with a linear edge ramp of compact support.

    The ramp is ``ramp_voxels`` wide, so voxels further than half a ramp
    outside the surface are exactly zero.
    """
    p = np.stack([c - c0 for c, c0 in zip(coords, center)], axis=-1)
    if rot is not None:
        p = p @ rot
    rho = np.sqrt(sum((p[..., i] / semi_axes[i]) ** 2 for i in range(3)))
    # radius of the ellipsoid in voxels, used to convert the ramp to rho units
    radius_vox = float(np.mean([semi_axes[i] * dims[i] / 2.0 for i in range(3)]))
    return np.clip(0.5 + (1.0 - rho) * radius_vox / ramp_voxels, 0.0, 1.0)


def _ellipsoids(dims, rng):
    coords = _grid(dims)
    head_axes = np.array([0.78, 0.84, 0.74]) * rng.uniform(0.95, 1.05, size=3)
    head = _soft_ellipsoid(coords, (0.0, 0.0, 0.0), head_axes, None, 4.0, dims)
    # slow shading keeps the interior piecewise smooth rather than flat
    k = rng.uniform(0.5, 1.0, size=3)
    ph = rng.uniform(0, 2 * np.pi, size=3)
    shading = 1.0 + 0.04 * sum(np.sin(np.pi * k[i] * coords[i] + ph[i]) for i in range(3)) / 3
    img = 0.3 * head * shading
    for _ in range(int(rng.integers(4, 7))):
        axes = rng.uniform(0.12, 0.32, size=3)
        center = rng.uniform(-0.4, 0.4, size=3) * head_axes
        rot = Rotation.random(random_state=rng).as_matrix()
        contrast = rng.choice([-1.0, 1.0]) * rng.uniform(0.05, 0.12)
        img += contrast * _soft_ellipsoid(coords, center, axes, rot, 3.0, dims) * head
    return np.clip(img, 0.0, 1.0)


def _checker_smooth(dims, rng):
    coords = _grid(dims)
    ball = _soft_ellipsoid(coords, (0.0, 0.0, 0.0), (0.8, 0.8, 0.8), None, 2.0, dims)
    period = rng.uniform(0.5, 0.9)
    ph = rng.uniform(0, 2 * np.pi, size=3)
    pattern = np.prod([np.sin(2 * np.pi * coords[i] / period + ph[i]) for i in range(3)], axis=0)
    return np.clip(ball * (0.45 + 0.15 * pattern), 0.0, 1.0)


# amplitude, semi-axes (a, b, c), centre (x0, y0, z0), rotation about z in degrees
_SHEPP_LOGAN_3D = np.array([
    [1.00, 0.6900, 0.920, 0.810, 0.00, 0.0000, 0.00, 0.0],
    [-0.80, 0.6624, 0.874, 0.780, 0.00, -0.0184, 0.00, 0.0],
    [-0.20, 0.1100, 0.310, 0.220, 0.22, 0.0000, 0.00, -18.0],
    [-0.20, 0.1600, 0.410, 0.280, -0.22, 0.0000, 0.00, 18.0],
    [0.10, 0.2100, 0.250, 0.410, 0.00, 0.3500, -0.15, 0.0],
    [0.10, 0.0460, 0.046, 0.050, 0.00, 0.1000, 0.25, 0.0],
    [0.10, 0.0460, 0.046, 0.050, 0.00, -0.1000, 0.25, 0.0],
    [0.10, 0.0460, 0.023, 0.050, -0.08, -0.6050, 0.00, 0.0],
    [0.10, 0.0230, 0.023, 0.200, 0.00, -0.6060, 0.00, 0.0],
    [0.10, 0.0230, 0.046, 0.200, 0.06, -0.6050, 0.00, 0.0],
])


def _shepp_logan_like(dims, rng):
    coords = _grid(dims)
    img = np.zeros(dims)
    for i, (amp, a, b, c, x0, y0, z0, phi) in enumerate(_SHEPP_LOGAN_3D):
        # the outer shell stays put so the background remains exactly zero
        jitter = rng.uniform(-0.01, 0.01, size=3) if i > 1 else np.zeros(3)
        rot = Rotation.from_euler("z", phi, degrees=True).as_matrix()
        inside = _soft_ellipsoid(coords, np.array([x0, y0, z0]) + jitter, (a, b, c), rot, 1.0, dims)
        img += amp * inside
    return np.clip(img, 0.0, 1.0)


_PHANTOMS = {
    "ellipsoids": _ellipsoids,
    "checker-smooth": _checker_smooth,
    "shepp-logan-like": _shepp_logan_like,
}


def make_phantom(dims=(64, 64, 64), kind="ellipsoids", seed=0, spacing=(1.0, 1.0, 1.0)) -> Volume:
    """Deterministic piecewise-smooth test volume with intensities in [0, 1].

    Parameters
    ----------
    dims : tuple of int
        Volume size; every axis needs at least 32 voxels.
    kind : str
        One of ``ellipsoids``, ``checker-smooth`` or ``shepp-logan-like``.
    seed : int
        Seed for the random layout; identical arguments give identical volumes.

    The background outside the outermost structure is exactly 0.
    """
    if kind not in _PHANTOMS:
        raise UnknownPhantomKind(f"unknown phantom kind {kind!r}; expected one of {PHANTOM_KINDS}")
    dims = tuple(int(d) for d in dims)
    if len(dims) != 3 or min(dims) < 32:
        raise DimensionTooSmall(f"phantoms need >= 32 voxels per axis, got {dims}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5048414E]))
    data = _PHANTOMS[kind](dims, rng)
    return Volume(data, spacing)
