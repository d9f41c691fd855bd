"""Procedurally generated grayscale test images in [0, 1].

Stand-ins for non-redistributable benchmark images: a piecewise-constant
"geometric" scene (flat regions, sharp edges) and a striped "texture"
pattern.  Both are deterministic in the requested size.
"""

from __future__ import annotations

import numpy as np

BUILTIN_PREFIX = "builtin:"


def geometric(d1: int = 64, d2: int = 64) -> np.ndarray:
    """Heterogeneous geometric scene: flat shapes plus a shaded stripe band.

    The left part holds sharp-edged constant shapes (rectangle, disk) on a
    flat background; the right part is a smoothly shaded diagonal stripe
    band.  Flat, edge and oscillatory regions co-exist, which is the regime
    a space-variant gradient prior is built for.
    """
    u = np.full((d1, d2), 0.2)
    rr, cc = np.mgrid[0:d1, 0:d2]
    r = rr / (d1 - 1.0)
    c = cc / (d2 - 1.0)
    u[(r >= 0.08) & (r <= 0.45) & (c >= 0.08) & (c <= 0.33)] = 0.85
    u[(r - 0.75) ** 2 + (c - 0.175) ** 2 <= 0.15**2] = 0.55
    band = c >= 0.45
    # stripe wavelength fixed in pixels (not proportional to the image) so
    # the band keeps the same local statistics relative to the PSF at any size
    shading = 0.5 + 0.32 * np.sin(2.0 * np.pi * (6.0 * rr + 10.0 * cc) / 63.0)
    u[band] = shading[band]
    return u


def stripes(d1: int = 64, d2: int = 64) -> np.ndarray:
    """Smooth diagonal stripe texture spanning [0.15, 0.85].

    Wavelength is fixed in pixels, so every size has the same local
    character.
    """
    rr, cc = np.mgrid[0:d1, 0:d2]
    phase = 2.0 * np.pi * (4.0 * rr + 6.0 * cc) / 64.0
    return 0.5 + 0.35 * np.sin(phase)


_BUILTINS = {"geometric": geometric, "stripes": stripes}


def is_builtin(name: str) -> bool:
    return name.startswith(BUILTIN_PREFIX)


def load_builtin(name: str, d1: int, d2: int) -> np.ndarray:
    """Resolve a ``builtin:<name>`` reference to a generated image."""
    key = name.removeprefix(BUILTIN_PREFIX)
    if key not in _BUILTINS:
        raise ValueError(f"unknown builtin image {key!r}; "
                         f"choose from {sorted(_BUILTINS)}")
    return _BUILTINS[key](d1, d2)
