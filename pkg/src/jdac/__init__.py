"""Iterative joint denoising and motion-artifact correction for 3D volumes."""

__version__ = "0.1.0"

from .corruption import (
    ArtifactSpec,
    NoiseSpec,
    add_gaussian,
    add_rician,
    add_salt_pepper,
    add_speckle,
    apply_ghosting,
    apply_gibbs,
    apply_motion,
    apply_spike,
    corrupt,
)
from .engine import JdacConfig, JdacState, RestorationReport, jdac_run, jdac_step
from .estimation import NoiseEstimate, calibrate_threshold, estimate_noise
from .kspace import KSpace, fft3, ifft3
from .losses import LossReport, loss_gradient, loss_motion, loss_noise, loss_total
from .metrics import MetricsReport, gradient_metrics, ms_ssim3d, psnr, rmse, ssim3d
from .operators import (
    denoise_with,
    gaussian_denoiser,
    identity_corrector,
    identity_denoiser,
    spike_notch_corrector,
)
from .volume import GradientField, Volume, VolumeStats, gradient, make_phantom, pooled_std, stats
