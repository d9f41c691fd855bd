"""Space-variant TV image restoration.

Restores blurred images corrupted by Gaussian, Laplace or salt-and-pepper
noise with a per-pixel weighted lp gradient penalty whose shape and scale
maps are estimated from the observation, solved by an ADMM scheme with an
FFT-diagonalized image stage and optional discrepancy-principle weight
selection.
"""

__version__ = "0.1.0"

from .degrade import NoiseSpec, add_awgn, add_awln, add_spn, corrupt, sigma_for_bsnr
from .ggd import (ParamMaps, RatioLookup, build_ratio_lookup, estimate_maps,
                  gg_ratio, prefilter_impulses)
from .metrics import bsnr, isnr
from .operators import (BlurKernel, BlurSpectrum, apply_blur, build_spectrum,
                        div_adjoint, grad_forward, grad_magnitude,
                        make_gaussian_psf)
from .prox import shrink_factor, shrink_gradient_field
from .solver import (Diagnostics, DivergenceError, SolverConfig,
                     discrepancy_shrink, restore, soft_threshold)

__all__ = [
    "NoiseSpec", "add_awgn", "add_awln", "add_spn", "corrupt", "sigma_for_bsnr",
    "ParamMaps", "RatioLookup", "build_ratio_lookup", "estimate_maps",
    "gg_ratio", "prefilter_impulses",
    "bsnr", "isnr",
    "BlurKernel", "BlurSpectrum", "apply_blur", "build_spectrum",
    "div_adjoint", "grad_forward", "grad_magnitude", "make_gaussian_psf",
    "shrink_factor", "shrink_gradient_field",
    "Diagnostics", "DivergenceError", "SolverConfig", "discrepancy_shrink",
    "restore", "soft_threshold",
    "__version__",
]
