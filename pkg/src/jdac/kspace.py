"""3D discrete Fourier transforms between volumes and k-space.

Forward transforms are unnormalized and inverses carry the 1/N factor, the
same convention as :mod:`numpy.fft`. Arbitrary (non power-of-two) sizes are
supported and nothing is zero-padded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonNegligibleImaginaryPart
from .volume import Volume, as_array

IMAG_TOLERANCE = 1e-5


@dataclass(frozen=True, eq=False)
class KSpace:
    """Complex coefficients with the DC term at index ``(0, 0, 0)``."""

    data: np.ndarray
    spacing: tuple = (1.0, 1.0, 1.0)

    @property
    def dims(self):
        return self.data.shape

    @property
    def dc(self):
        return self.data[0, 0, 0]

    def frequency_indices(self):
        """Signed integer frequency index along each axis, broadcastable."""
        return np.meshgrid(*(np.fft.fftfreq(n, 1.0 / n) for n in self.dims), indexing="ij")

    def radius(self):
        """Radial frequency of every coefficient in integer index units."""
        fx, fy, fz = self.frequency_indices()
        return np.sqrt(fx**2 + fy**2 + fz**2)


def fft3(v) -> KSpace:
    spacing = v.spacing if isinstance(v, Volume) else (1.0, 1.0, 1.0)
    return KSpace(np.fft.fftn(np.asarray(as_array(v), dtype=np.float64)), spacing)


def ifft3(k: KSpace, magnitude=False, residual=None) -> Volume:
    """Inverse transform back to a real volume.

    With ``magnitude=True`` the modulus of the complex result is returned,
    which is how MR magnitude images are formed. Otherwise the imaginary part
    must be negligible (``max|Im| <= 1e-5 * max|Re|``) and is dropped;
    anything larger raises NonNegligibleImaginaryPart.
    """
    z = np.fft.ifftn(k.data)
    if magnitude:
        out = np.abs(z)
    else:
        re_max = float(np.max(np.abs(z.real))) if z.size else 0.0
        im_max = float(np.max(np.abs(z.imag))) if z.size else 0.0
        if im_max > IMAG_TOLERANCE * re_max:
            raise NonNegligibleImaginaryPart(
                f"max |Im| = {im_max:.3g} exceeds {IMAG_TOLERANCE:g} * max |Re| = {re_max:.3g}"
            )
        out = z.real.copy()
    vol = Volume(out, k.spacing)
    if residual is not None:
        return vol.with_data(out, residual=residual)
    return vol.with_data(out)
