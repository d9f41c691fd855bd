"""Raster operators: periodic forward differences, Gaussian PSF, FFT spectra.

Images are 2-D float64 arrays of shape (d1, d2), row-major, intensity data
in [0, 1].  Gradient fields are (d1, d2, 2) arrays with channel 0 holding
the horizontal difference and channel 1 the vertical one.  All boundary
handling is periodic so blur and difference operators stay circulant and
share one FFT diagonalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.fft import fft2, ifft2
from scipy import ndimage


def as_image(a, name: str = "image") -> np.ndarray:
    """Coerce to a 2-D float64 array, rejecting anything else."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    return a


def grad_forward(u: np.ndarray) -> np.ndarray:
    """Forward differences with periodic wrap, stacked (d1, d2, 2)."""
    u = as_image(u)
    g = np.empty(u.shape + (2,), dtype=np.float64)
    g[:, :, 0] = np.roll(u, -1, axis=1) - u
    g[:, :, 1] = np.roll(u, -1, axis=0) - u
    return g


def div_adjoint(t: np.ndarray) -> np.ndarray:
    """Exact adjoint of :func:`grad_forward` (negative periodic divergence)."""
    t = np.asarray(t, dtype=np.float64)
    if t.ndim != 3 or t.shape[2] != 2:
        raise ValueError(f"gradient field must have shape (d1, d2, 2), got {t.shape}")
    th, tv = t[:, :, 0], t[:, :, 1]
    return (np.roll(th, 1, axis=1) - th) + (np.roll(tv, 1, axis=0) - tv)


def grad_magnitude(u: np.ndarray) -> np.ndarray:
    """Per-pixel Euclidean norm of the forward-difference gradient."""
    g = grad_forward(u)
    return np.hypot(g[:, :, 0], g[:, :, 1])


@dataclass(frozen=True)
class BlurKernel:
    """Truncated-Gaussian point spread function, normalized to unit sum."""

    band: int
    sigma: float
    weights: np.ndarray


def make_gaussian_psf(band: int, sigma: float) -> BlurKernel:
    """Build a band x band Gaussian kernel with unit sum and 4-fold symmetry."""
    if band < 1 or band % 2 == 0:
        raise ValueError(f"band must be a positive odd integer, got {band}")
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    half = (band - 1) // 2
    offs = np.arange(-half, half + 1, dtype=np.float64)
    w = np.exp(-(offs[:, None] ** 2 + offs[None, :] ** 2) / (2.0 * sigma**2))
    w /= w.sum()
    return BlurKernel(band=band, sigma=float(sigma), weights=w)


@dataclass(frozen=True)
class BlurSpectrum:
    """DFT eigenvalues of the blur and difference operators on a d1 x d2 grid.

    ``denom`` caches |F(Dh)|^2 + |F(Dv)|^2 + beta_ratio * |F(K)|^2, the
    diagonal of the quadratic-stage system for a fixed penalty ratio.
    """

    shape: tuple[int, int]
    kernel: BlurKernel
    blur: np.ndarray
    diff_h: np.ndarray
    diff_v: np.ndarray
    beta_ratio: float
    denom: np.ndarray


def build_spectrum(kernel: BlurKernel, d1: int, d2: int,
                   beta_ratio: float) -> BlurSpectrum:
    """Embed the kernel centered at the origin with wrap and transform once."""
    if kernel.band > min(d1, d2):
        raise ValueError(
            f"kernel band {kernel.band} exceeds image extent {min(d1, d2)}")
    if beta_ratio <= 0:
        raise ValueError(f"beta_ratio must be positive, got {beta_ratio}")

    half = (kernel.band - 1) // 2
    embedded = np.zeros((d1, d2))
    embedded[:kernel.band, :kernel.band] = kernel.weights
    embedded = np.roll(embedded, (-half, -half), axis=(0, 1))
    blur_hat = fft2(embedded)

    eh = np.zeros((d1, d2))
    eh[0, 0] = -1.0
    eh[0, d2 - 1] = 1.0
    ev = np.zeros((d1, d2))
    ev[0, 0] = -1.0
    ev[d1 - 1, 0] = 1.0
    dh_hat = fft2(eh)
    dv_hat = fft2(ev)

    denom = (np.abs(dh_hat) ** 2 + np.abs(dv_hat) ** 2
             + beta_ratio * np.abs(blur_hat) ** 2)
    if denom.min() <= 0.0:
        raise ValueError("quadratic-stage denominator is not strictly positive; "
                         "blur and difference operators share a null direction")
    return BlurSpectrum(shape=(d1, d2), kernel=kernel, blur=blur_hat,
                        diff_h=dh_hat, diff_v=dv_hat,
                        beta_ratio=float(beta_ratio), denom=denom)


def apply_blur(u: np.ndarray, spec: BlurSpectrum) -> np.ndarray:
    """Circular convolution with the kernel via its cached spectrum."""
    u = as_image(u)
    if u.shape != spec.shape:
        raise ValueError(f"image shape {u.shape} != spectrum shape {spec.shape}")
    if spec.kernel.band == 1:  # identity operator, skip the FFT round trip
        return u * spec.kernel.weights[0, 0]
    return np.real(ifft2(fft2(u) * spec.blur))


def apply_blur_adjoint(x: np.ndarray, spec: BlurSpectrum) -> np.ndarray:
    """Transpose of :func:`apply_blur` (circular correlation with the kernel)."""
    x = as_image(x)
    if x.shape != spec.shape:
        raise ValueError(f"image shape {x.shape} != spectrum shape {spec.shape}")
    return np.real(ifft2(fft2(x) * np.conj(spec.blur)))


def blur_transpose_spatial(x: np.ndarray, kernel: BlurKernel) -> np.ndarray:
    """Spatial-domain K^T x: periodic correlation with the (odd) kernel.

    O(n * band^2); used to assemble the quadratic-stage right-hand side so
    that stage spends exactly one forward and one inverse FFT.
    """
    return ndimage.correlate(np.asarray(x, dtype=np.float64), kernel.weights,
                             mode="wrap")
