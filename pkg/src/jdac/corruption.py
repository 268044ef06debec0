"""Seeded noise synthesis and k-space artifact simulation.

The degradation model is ``y = A(x) + noise``: an artifact operator applied
to the clean volume, followed by additive (or replacement) noise. Every
simulator draws from a private generator derived from ``(seed, op-tag)`` so
results are reproducible and calls never share random state.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from scipy.spatial.transform import Rotation

from .errors import SpecParseError
from .kspace import KSpace, fft3, ifft3
from .volume import Volume

NOISE_KINDS = ("gaussian", "rician", "speckle", "salt_pepper")
ARTIFACT_KINDS = ("gibbs", "motion", "ghosting", "spike", "none")


def _rng(seed, tag):
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), zlib.crc32(tag.encode())]))


# -- specs --------------------------------------------------------------------

@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "gaussian"
    sigma: float = 0.0
    density: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise SpecParseError(f"unknown noise kind {self.kind!r}")
        if not self.sigma >= 0:
            raise SpecParseError(f"noise sigma must be >= 0, got {self.sigma}")
        if not 0.0 <= self.density <= 1.0:
            raise SpecParseError(f"salt-and-pepper density must lie in [0, 1], got {self.density}")

    @classmethod
    def parse(cls, text, seed=0):
        """Parse ``gaussian:0.10``, ``rician:0.05``, ``speckle:0.2``, ``saltpepper:0.1`` or ``none``."""
        name, _, arg = text.strip().partition(":")
        name = name.lower().replace("-", "").replace("_", "").replace("&", "")
        if name == "none":
            return cls("gaussian", 0.0, seed=seed)
        try:
            value = float(arg)
        except ValueError:
            raise SpecParseError(f"bad noise spec {text!r}: expected <kind>:<value>") from None
        if name == "saltpepper":
            return cls("salt_pepper", density=value, seed=seed)
        if name in ("gaussian", "rician", "speckle"):
            return cls(name, sigma=value, seed=seed)
        raise SpecParseError(f"unknown noise kind in {text!r}")

    def to_text(self):
        if self.kind == "salt_pepper":
            return f"saltpepper:{self.density:g}"
        return f"{self.kind}:{self.sigma:g}"


@dataclass(frozen=True)
class ArtifactSpec:
    kind: str = "none"
    gibbs_alpha: float = 0.7
    rot_deg_range: tuple = (5.0, 8.0)
    trans_mm_range: tuple = (3.0, 5.0)
    num_transforms: int = 4
    num_ghosts_range: tuple = (4, 10)
    ghost_intensity_range: tuple = (0.5, 1.0)
    ghost_axis: int = 1
    num_spikes: int = 1
    spike_intensity: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ARTIFACT_KINDS:
            raise SpecParseError(f"unknown artifact kind {self.kind!r}")
        if not 0.0 <= self.gibbs_alpha < 1.0:
            raise SpecParseError(f"gibbs alpha must lie in [0, 1), got {self.gibbs_alpha}")
        for name in ("rot_deg_range", "trans_mm_range", "num_ghosts_range", "ghost_intensity_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise SpecParseError(f"{name} must satisfy low <= high, got {(lo, hi)}")
        if self.num_transforms < 0 or self.num_spikes < 0:
            raise SpecParseError("counts must be non-negative")
        if self.num_ghosts_range[0] < 1:
            raise SpecParseError("number of ghosts must be >= 1")
        if self.ghost_axis not in (0, 1, 2):
            raise SpecParseError(f"ghost axis must be 0, 1 or 2, got {self.ghost_axis}")

    @classmethod
    def parse(cls, text, seed=0):
        """Parse the textual artifact form.

        Accepted: ``none``, ``gibbs:<alpha>``, ``motion:default`` or
        ``motion:<num_transforms>``, ``ghosting:default`` or
        ``ghosting:<num_ghosts>,<intensity>[,<axis>]``, ``spike:<count>,<intensity>``.
        """
        name, _, arg = text.strip().partition(":")
        name = name.lower()
        parts = [p for p in arg.split(",") if p.strip()] if arg else []
        try:
            if name == "none":
                return cls("none", seed=seed)
            if name == "gibbs":
                return cls("gibbs", gibbs_alpha=float(parts[0]) if parts else 0.7, seed=seed)
            if name == "motion":
                if not parts or parts[0].strip() == "default":
                    return cls("motion", seed=seed)
                return cls("motion", num_transforms=int(parts[0]), seed=seed)
            if name == "ghosting":
                if not parts or parts[0].strip() == "default":
                    return cls("ghosting", seed=seed)
                g, s = int(parts[0]), float(parts[1])
                axis = int(parts[2]) if len(parts) > 2 else 1
                return cls("ghosting", num_ghosts_range=(g, g), ghost_intensity_range=(s, s),
                           ghost_axis=axis, seed=seed)
            if name == "spike":
                if not parts or parts[0].strip() == "default":
                    return cls("spike", seed=seed)
                return cls("spike", num_spikes=int(parts[0]), spike_intensity=float(parts[1]), seed=seed)
        except (IndexError, ValueError) as exc:
            raise SpecParseError(f"bad artifact spec {text!r}: {exc}") from None
        raise SpecParseError(f"unknown artifact kind in {text!r}")

    def to_text(self):
        if self.kind == "gibbs":
            return f"gibbs:{self.gibbs_alpha:g}"
        if self.kind == "motion":
            return "motion:default" if self.num_transforms == 4 else f"motion:{self.num_transforms}"
        if self.kind == "ghosting":
            (g0, g1), (s0, s1) = self.num_ghosts_range, self.ghost_intensity_range
            if g0 == g1 and s0 == s1:
                return f"ghosting:{g0},{s0:g},{self.ghost_axis}"
            return "ghosting:default"
        if self.kind == "spike":
            return f"spike:{self.num_spikes},{self.spike_intensity:g}"
        return "none"


# -- noise --------------------------------------------------------------------

def add_gaussian(v: Volume, sigma, seed=0) -> Volume:
    """Additive i.i.d. N(0, sigma^2) noise, deliberately left unclipped."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return v.with_data(v.data.copy())
    noise = _rng(seed, "gaussian").normal(0.0, sigma, size=v.dims)
    return v.with_data(v.data + noise)


def add_rician(v: Volume, sigma, seed=0) -> Volume:
    """Magnitude of the signal plus complex Gaussian noise."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return v.with_data(np.abs(v.data))
    rng = _rng(seed, "rician")
    n1 = rng.normal(0.0, sigma, size=v.dims)
    n2 = rng.normal(0.0, sigma, size=v.dims)
    return v.with_data(np.sqrt((v.data + n1) ** 2 + n2**2))


def add_speckle(v: Volume, sigma, seed=0) -> Volume:
    """Multiplicative noise ``v * (1 + n)`` with n ~ N(0, sigma^2)."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return v.with_data(v.data.copy())
    n = _rng(seed, "speckle").normal(0.0, sigma, size=v.dims)
    return v.with_data(v.data * (1.0 + n))


def add_salt_pepper(v: Volume, density, seed=0) -> Volume:
    """Replace voxels by 1 or 0, each with probability ``density / 2``."""
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must lie in [0, 1]")
    out = v.data.copy()
    if density == 0:
        return v.with_data(out)
    u = _rng(seed, "salt_pepper").random(size=v.dims)
    out[u < density / 2] = 0.0
    out[(u >= density / 2) & (u < density)] = 1.0
    return v.with_data(out)


def add_noise(v: Volume, noise: NoiseSpec) -> Volume:
    if noise.kind == "gaussian":
        return add_gaussian(v, noise.sigma, noise.seed)
    if noise.kind == "rician":
        return add_rician(v, noise.sigma, noise.seed)
    if noise.kind == "speckle":
        return add_speckle(v, noise.sigma, noise.seed)
    return add_salt_pepper(v, noise.density, noise.seed)


# -- artifacts ----------------------------------------------------------------

def gibbs_mask(dims, alpha):
    """Boolean mask of coefficients kept by the Gibbs low-pass.

    Frequencies are normalized per axis to [-1, 1] (Nyquist = 1); a
    coefficient survives when its radius is at most ``(1 - alpha) * r_max``.
    """
    f = np.meshgrid(*(np.fft.fftfreq(n) * 2.0 for n in dims), indexing="ij")
    r = np.sqrt(sum(c**2 for c in f))
    return r <= (1.0 - alpha) * r.max()


def gibbs_kspace(k: KSpace, alpha) -> KSpace:
    return KSpace(np.where(gibbs_mask(k.dims, alpha), k.data, 0.0), k.spacing)


def apply_gibbs(v: Volume, alpha) -> Volume:
    """Truncate k-space outside a sphere of radius ``(1 - alpha) * r_max``."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    return ifft3(gibbs_kspace(fft3(v), alpha), magnitude=True)


def _signed_uniform(rng, lo, hi, size):
    return rng.uniform(lo, hi, size=size) * rng.choice([-1.0, 1.0], size=size)


def draw_motion(spec: ArtifactSpec, seed, spacing=(1.0, 1.0, 1.0)):
    """Rigid transforms as ``(rotation_matrix, translation_voxels)`` pairs."""
    rng = _rng(seed, "motion")
    transforms = []
    for _ in range(spec.num_transforms):
        angles = _signed_uniform(rng, *spec.rot_deg_range, 3)
        shift_mm = _signed_uniform(rng, *spec.trans_mm_range, 3)
        rot = Rotation.from_euler("xyz", angles, degrees=True).as_matrix()
        transforms.append((rot, shift_mm / np.asarray(spacing)))
    return transforms


def rigid_resample(data, rot, shift):
    """Rotate about the volume centre and translate (voxels); trilinear, zero fill."""
    center = (np.asarray(data.shape) - 1) / 2.0
    inv = rot.T
    offset = center - inv @ (center + shift)
    return ndimage.affine_transform(data, inv, offset=offset, order=1, mode="constant", cval=0.0)


def apply_motion(v: Volume, spec: ArtifactSpec = None, seed=None) -> Volume:
    """Compose k-space from rigidly moved copies of the volume.

    k-space is split into ``num_transforms + 1`` contiguous slabs along the
    slowest (last) axis in FFT index order. Slab 0 comes from the unmoved
    volume and slab t from the volume under transform t.
    """
    spec = spec or ArtifactSpec("motion")
    seed = spec.seed if seed is None else seed
    k = fft3(v)
    transforms = draw_motion(spec, seed, v.spacing)
    if not transforms:
        return ifft3(k, magnitude=True)
    out = k.data.copy()
    slabs = np.array_split(np.arange(v.dims[2]), len(transforms) + 1)
    for (rot, shift), slab in zip(transforms, slabs[1:]):
        moved = np.fft.fftn(rigid_resample(v.data.astype(np.float64), rot, shift))
        out[:, :, slab] = moved[:, :, slab]
    return ifft3(KSpace(out, k.spacing), magnitude=True)


def ghosting_kspace(k: KSpace, num_ghosts, intensity, axis=1) -> KSpace:
    """Attenuate every ``num_ghosts``-th plane along ``axis``, except the DC plane."""
    out = k.data.copy()
    idx = np.arange(k.dims[axis])
    planes = idx[(idx % num_ghosts == 0) & (idx != 0)]
    sl = [slice(None)] * 3
    sl[axis] = planes
    out[tuple(sl)] *= 1.0 - intensity
    return KSpace(out, k.spacing)


def apply_ghosting(v: Volume, spec: ArtifactSpec = None, seed=None) -> Volume:
    spec = spec or ArtifactSpec("ghosting")
    seed = spec.seed if seed is None else seed
    rng = _rng(seed, "ghosting")
    g = int(rng.integers(spec.num_ghosts_range[0], spec.num_ghosts_range[1] + 1))
    s = float(rng.uniform(*spec.ghost_intensity_range))
    return ifft3(ghosting_kspace(fft3(v), g, s, spec.ghost_axis), magnitude=True)


def spike_kspace(k: KSpace, num_spikes, intensity, rng):
    """Overwrite random non-DC coefficients with magnitude ``intensity * |DC|``.

    Returns the modified k-space and the list of spike indices. Phases are
    drawn uniformly.
    """
    out = k.data.copy()
    amp = intensity * abs(k.dc)
    n = out.size
    flat = rng.choice(np.arange(1, n), size=num_spikes, replace=False) if num_spikes else []
    positions = [tuple(int(i) for i in np.unravel_index(f, k.dims)) for f in flat]
    for pos in positions:
        out[pos] = amp * np.exp(1j * rng.uniform(0.0, 2 * np.pi))
    return KSpace(out, k.spacing), positions


def apply_spike(v: Volume, spec: ArtifactSpec = None, seed=None) -> Volume:
    """Add global stripes through corrupted k-space samples.

    A single off-centre coefficient has no Hermitian partner, so the real
    part of the inverse transform is kept: each spike becomes a cosine
    stripe added linearly to the image.
    """
    spec = spec or ArtifactSpec("spike")
    seed = spec.seed if seed is None else seed
    if spec.spike_intensity == 0 or spec.num_spikes == 0:
        return ifft3(fft3(v))
    k, _ = spike_kspace(fft3(v), spec.num_spikes, spec.spike_intensity, _rng(seed, "spike"))
    return v.with_data(np.fft.ifftn(k.data).real)


def apply_artifact(v: Volume, spec: ArtifactSpec) -> Volume:
    if spec.kind == "gibbs":
        return apply_gibbs(v, spec.gibbs_alpha)
    if spec.kind == "motion":
        return apply_motion(v, spec)
    if spec.kind == "ghosting":
        return apply_ghosting(v, spec)
    if spec.kind == "spike":
        return apply_spike(v, spec)
    return v.with_data(v.data.copy())


def corrupt(v: Volume, artifact: ArtifactSpec = None, noise: NoiseSpec = None) -> Volume:
    """Artifact first, then noise."""
    artifact = artifact or ArtifactSpec("none")
    noise = noise or NoiseSpec("gaussian", 0.0)
    return add_noise(apply_artifact(v, artifact), noise)


def specs_from_text(artifact_text, noise_text, seed=0):
    """Parse both spec strings with one run seed.

    Sharing the seed is safe: every simulator mixes its own tag into it.
    """
    artifact = ArtifactSpec.parse(artifact_text or "none", seed=seed)
    noise = NoiseSpec.parse(noise_text or "none", seed=seed)
    return artifact, noise
