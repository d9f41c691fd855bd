"""Per-pixel half-generalized-Gaussian parameter estimation.

The shape map comes from inverting the moment-ratio function of the
distribution over a small square neighborhood of every pixel; the scale
map is the windowed maximum-likelihood estimate given that shape.  An
adaptive neighborhood-mean prefilter repairs impulse-corrupted pixels
before any gradients are taken.

Windows are s x s, wrap periodically (consistent with every other operator
here), and for even s carry the extra row/column on the trailing side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .operators import as_image, grad_magnitude

DEFAULT_P_MIN = 0.1
DEFAULT_ALPHA_MAX = 1e4
DEFAULT_LUT_NODES = 4096
DEFAULT_FILL_THRESHOLD = 0.4


def gg_ratio(z):
    """Moment ratio Gamma(1/z) Gamma(3/z) / Gamma(2/z)^2 of the GG family.

    Evaluated through log-Gamma; the plain Gamma ratio overflows for small z.
    """
    z = np.asarray(z, dtype=np.float64)
    if np.any(z <= 0):
        raise ValueError("gg_ratio requires z > 0")
    out = np.exp(gammaln(1.0 / z) + gammaln(3.0 / z) - 2.0 * gammaln(2.0 / z))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class RatioLookup:
    """Sampled inverse of :func:`gg_ratio`, restricted to shapes (0, 2].

    ``z`` ascends, ``h`` strictly descends; inversion is a binary-searched
    linear interpolation in h, clamping at both ends of the shape range.
    """

    z: np.ndarray
    h: np.ndarray

    @property
    def p_min(self) -> float:
        return float(self.z[0])

    def invert(self, rho):
        """Shape value(s) whose ratio equals rho, clamped to [p_min, 2]."""
        rho = np.asarray(rho, dtype=np.float64)
        out = np.interp(rho, self.h[::-1], self.z[::-1])
        return float(out) if out.ndim == 0 else out


def build_ratio_lookup(p_min: float = DEFAULT_P_MIN,
                       n_nodes: int = DEFAULT_LUT_NODES) -> RatioLookup:
    """Tabulate the ratio function on log-spaced shape nodes in [p_min, 2]."""
    if not 0.0 < p_min < 2.0:
        raise ValueError(f"p_min must lie in (0, 2), got {p_min}")
    if n_nodes < 256:
        raise ValueError(f"n_nodes must be at least 256, got {n_nodes}")
    z = np.geomspace(p_min, 2.0, n_nodes)
    z[np.argmin(np.abs(z - 1.0))] = 1.0  # pin the exponential-family node
    z[-1] = 2.0
    h = gg_ratio(z)
    if np.any(np.diff(h) >= 0):
        raise RuntimeError("ratio table is not strictly decreasing")
    return RatioLookup(z=z, h=h)


def _window_offsets(s: int) -> tuple[int, int]:
    # trailing-side extra for even s
    return (s - 1) // 2, s // 2


def window_sums(x: np.ndarray, s: int) -> np.ndarray:
    """Sum of each centered s x s periodic window, via one integral image."""
    lo, hi = _window_offsets(s)
    padded = np.pad(x, ((lo, hi), (lo, hi)), mode="wrap")
    acc = padded.cumsum(axis=0).cumsum(axis=1)
    full = np.zeros((acc.shape[0] + 1, acc.shape[1] + 1), dtype=acc.dtype)
    full[1:, 1:] = acc
    return (full[s:, s:] - full[:-s, s:] - full[s:, :-s] + full[:-s, :-s])


def window_max(x: np.ndarray, s: int) -> np.ndarray:
    """Max of each centered s x s periodic window (separable, exact)."""
    lo, hi = _window_offsets(s)
    out = x
    for axis in (0, 1):
        shifted = [np.roll(out, -k, axis=axis) for k in range(-lo, hi + 1)]
        out = np.max(shifted, axis=0)
    return out


def estimate_shape_map(m: np.ndarray, window: int, lut: RatioLookup) -> np.ndarray:
    """Windowed moment-ratio shape estimate from a magnitude raster.

    All-zero windows carry no ratio information and are assigned p_min: a
    perfectly flat neighborhood is the strongest evidence of gradient
    sparsity.
    """
    m = as_image(m, "magnitudes")
    if window < 3:
        raise ValueError(f"window must be >= 3, got {window}")
    count = float(window * window)
    s1 = np.maximum(window_sums(m, window), 0.0)
    s2 = np.maximum(window_sums(m * m, window), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = count * s2 / (s1 * s1)
    shape = lut.invert(np.where(np.isfinite(rho), rho, np.inf))
    degenerate = window_max(m, window) == 0.0
    shape[degenerate] = lut.p_min
    return shape


def estimate_scale_map(m: np.ndarray, shape: np.ndarray, window: int,
                       alpha_max: float = DEFAULT_ALPHA_MAX) -> np.ndarray:
    """Windowed ML scale estimate given the per-pixel shape.

    Solves the stationarity condition of the windowed log-likelihood in
    closed form: scale = ((shape/count) * sum_window m^shape)^(-1/shape).
    All-zero windows (infinite formal scale) are capped at alpha_max, as is
    anything beyond it.
    """
    m = as_image(m, "magnitudes")
    shape = as_image(shape, "shape map")
    if shape.shape != m.shape:
        raise ValueError("shape map and magnitude raster dimensions differ")
    if window < 3:
        raise ValueError(f"window must be >= 3, got {window}")
    lo, hi = _window_offsets(window)
    acc = np.zeros_like(m)
    with np.errstate(divide="ignore"):
        for dr in range(-lo, hi + 1):
            for dc in range(-lo, hi + 1):
                acc += np.roll(m, (-dr, -dc), axis=(0, 1)) ** shape
    count = float(window * window)
    with np.errstate(divide="ignore"):
        scale = (shape * acc / count) ** (-1.0 / shape)
    scale = np.minimum(scale, alpha_max)
    scale[window_max(m, window) == 0.0] = alpha_max
    return scale


def estimate_global_shape(m: np.ndarray, lut: RatioLookup) -> float:
    """Single shape value from the whole-raster moment ratio."""
    m = as_image(m, "magnitudes")
    s1 = float(m.sum())
    if s1 == 0.0:
        return lut.p_min
    rho = m.size * float((m * m).sum()) / (s1 * s1)
    return float(lut.invert(rho))


def prefilter_impulses(g: np.ndarray, mask: np.ndarray,
                       min_clear_fraction: float = DEFAULT_FILL_THRESHOLD) -> np.ndarray:
    """Replace masked pixels by the mean of clean neighbors.

    Each masked pixel takes the mean of unmasked pixels over the smallest
    centered odd window (3, 5, 7, ...) whose unmasked fraction reaches
    ``min_clear_fraction``; growth is capped at the image extent, falling
    back to the global unmasked mean.  Means always draw from original
    unmasked values, never from fills.
    """
    g = as_image(g)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != g.shape:
        raise ValueError("mask and image dimensions differ")
    if not 0.0 < min_clear_fraction <= 1.0:
        raise ValueError(f"min_clear_fraction must lie in (0,1], got {min_clear_fraction}")

    clear = ~mask
    if not clear.any():
        raise ValueError("cannot prefilter: every pixel is masked")
    out = g.copy()
    if not mask.any():
        return out

    clear_count_src = clear.astype(np.int64)
    clear_values = np.where(clear, g, 0.0)
    pending = mask.copy()
    max_window = min(g.shape)
    s = 3
    while s <= max_window and pending.any():
        counts = window_sums(clear_count_src, s)
        ready = pending & (counts >= min_clear_fraction * s * s)
        if ready.any():
            sums = window_sums(clear_values, s)
            out[ready] = sums[ready] / counts[ready]
            pending &= ~ready
        s += 2
    if pending.any():
        out[pending] = g[clear].mean()
    return out


@dataclass
class ParamMaps:
    """Per-pixel shape/scale rasters plus the window they came from."""

    shape: np.ndarray
    scale: np.ndarray
    window: int
    global_shape: float
    p_min: float = DEFAULT_P_MIN
    alpha_max: float = DEFAULT_ALPHA_MAX

    def validate(self) -> None:
        if self.shape.shape != self.scale.shape:
            raise ValueError("shape and scale rasters have different dimensions")
        if np.any(self.shape < self.p_min) or np.any(self.shape > 2.0):
            raise ValueError("shape map leaves [p_min, 2]")
        if np.any(self.scale <= 0.0) or np.any(self.scale > self.alpha_max):
            raise ValueError("scale map leaves (0, alpha_max]")


def estimate_maps(observed: np.ndarray, noise_kind: str,
                  mask: np.ndarray | None = None, window: int = 3,
                  p_min: float = DEFAULT_P_MIN,
                  alpha_max: float = DEFAULT_ALPHA_MAX,
                  lut: RatioLookup | None = None,
                  fill_threshold: float = DEFAULT_FILL_THRESHOLD) -> ParamMaps:
    """Full estimation pipeline on an observed image.

    Impulse-noise observations are prefiltered through the known corruption
    mask first; additive-noise observations feed the estimators directly.
    """
    observed = as_image(observed, "observed")
    if noise_kind == "spn":
        if mask is None:
            raise ValueError("spn estimation requires the corruption mask")
        base = prefilter_impulses(observed, mask, fill_threshold)
    elif noise_kind in ("awgn", "awln"):
        base = observed
    else:
        raise ValueError(f"unknown noise kind {noise_kind!r}")

    if lut is None:
        lut = build_ratio_lookup(p_min)
    elif abs(lut.p_min - p_min) > 1e-12:
        raise ValueError("lookup table p_min does not match requested p_min")

    m = grad_magnitude(base)
    shape = estimate_shape_map(m, window, lut)
    scale = estimate_scale_map(m, shape, window, alpha_max)
    maps = ParamMaps(shape=shape, scale=scale, window=window,
                     global_shape=estimate_global_shape(m, lut),
                     p_min=p_min, alpha_max=alpha_max)
    maps.validate()
    return maps
