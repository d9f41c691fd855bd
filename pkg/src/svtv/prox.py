"""Radial shrinkage for weighted lp penalties on gradient pairs.

For a pair q the minimizer of  scale*|t|^shape + (pen/2)*|t - q|^2  is
xi * q with xi in [0, 1]: the problem is radial, so it reduces to the 1-D
objective  phi(rho) = scale*rho^shape + (pen/2)*(rho - |q|)^2  over rho >= 0.

Closed forms exist for shape 1 (soft threshold) and 2 (uniform scaling).
For shape in (1, 2) the objective is strictly convex and the stationary
point is bracketed in (0, |q|); for shape < 1 it is nonconvex with at most
one stationary minimum past the inflection radius, which must still beat
rho = 0 (hard-thresholding behavior).  Both searches use safeguarded
Newton iterations (bisection fallback keeps the bracket valid).
"""

from __future__ import annotations

import numpy as np

_MAX_NEWTON = 200


def _newton_root(scale, shape, pen, theta, lo, hi):
    """Root of phi'(rho) = scale*shape*rho^(shape-1) + pen*(rho-theta).

    Requires phi' < 0 at lo, > 0 at hi, and phi' increasing on [lo, hi].
    """
    x = 0.5 * (lo + hi)
    tol = 1e-15 * hi + 1e-300
    for _ in range(_MAX_NEWTON):
        with np.errstate(over="ignore"):
            f = scale * shape * x ** (shape - 1.0) + pen * (x - theta)
            fp = scale * shape * (shape - 1.0) * x ** (shape - 2.0) + pen
        lo = np.where(f < 0, x, lo)
        hi = np.where(f >= 0, x, hi)
        with np.errstate(invalid="ignore", divide="ignore", over="ignore"):
            xn = x - f / fp
        bad = ~np.isfinite(xn) | (xn <= lo) | (xn >= hi)
        xn = np.where(bad, 0.5 * (lo + hi), xn)
        if np.all(np.abs(xn - x) <= tol):
            x = xn
            break
        x = xn
    return x


def shrink_factor(theta, scale, shape, pen: float):
    """Shrinkage coefficient xi in [0, 1] for each (theta, scale, shape).

    ``theta`` is the pair magnitude |q|; ``pen`` is the scalar quadratic
    penalty weight.  Zero magnitudes map to xi = 0.
    """
    theta = np.asarray(theta, dtype=np.float64)
    scale = np.broadcast_to(np.asarray(scale, dtype=np.float64), theta.shape)
    shape = np.broadcast_to(np.asarray(shape, dtype=np.float64), theta.shape)
    if pen <= 0:
        raise ValueError(f"penalty must be positive, got {pen}")
    if np.any(scale <= 0) or np.any(shape <= 0) or np.any(shape > 2.0):
        raise ValueError("requires scale > 0 and shape in (0, 2]")

    xi = np.zeros(theta.shape, dtype=np.float64)
    pos = theta > 0.0

    m1 = pos & (shape == 1.0)
    if m1.any():
        xi[m1] = np.maximum(1.0 - scale[m1] / (pen * theta[m1]), 0.0)

    m2 = pos & (shape == 2.0)
    if m2.any():
        xi[m2] = pen / (pen + 2.0 * scale[m2])

    mc = pos & (shape > 1.0) & (shape < 2.0)
    if mc.any():
        th, a, p = theta[mc], scale[mc], shape[mc]
        root = _newton_root(a, p, pen, th, np.zeros_like(th), th.copy())
        xi[mc] = root / th

    mn = pos & (shape < 1.0)
    if mn.any():
        th, a, p = theta[mn], scale[mn], shape[mn]
        # inflection of phi: below it phi' decreases, beyond it increases
        rho_inf = (a * p * (1.0 - p) / pen) ** (1.0 / (2.0 - p))
        sub = np.zeros_like(th)
        searchable = rho_inf < th
        if searchable.any():
            ti, ai, pi = th[searchable], a[searchable], p[searchable]
            ri = rho_inf[searchable]
            with np.errstate(divide="ignore", over="ignore"):
                slope_at_inf = ai * pi * ri ** (pi - 1.0) + pen * (ri - ti)
            dips = slope_at_inf < 0.0
            if dips.any():
                td, ad, pd = ti[dips], ai[dips], pi[dips]
                root = _newton_root(ad, pd, pen, td, ri[dips], td.copy())
                at_root = ad * root**pd + 0.5 * pen * (root - td) ** 2
                at_zero = 0.5 * pen * td**2
                keep = at_root < at_zero
                vals = np.zeros_like(td)
                vals[keep] = root[keep] / td[keep]
                partial = np.zeros_like(ti)
                partial[dips] = vals
                sub[searchable] = partial
        xi[mn] = sub

    return np.clip(xi, 0.0, 1.0)


def shrink_gradient_field(q: np.ndarray, scale, shape, pen: float) -> np.ndarray:
    """Apply radial shrinkage to every pair of a (..., 2) field."""
    q = np.asarray(q, dtype=np.float64)
    if q.shape[-1] != 2:
        raise ValueError(f"expected trailing pair axis, got shape {q.shape}")
    theta = np.hypot(q[..., 0], q[..., 1])
    xi = shrink_factor(theta, scale, shape, pen)
    return xi[..., None] * q
