"""Dense-matrix and brute-force oracles shared across test modules.

Everything here builds operators from first principles (explicit stencils,
index wrapping, loops) so it stays independent of the code under test.
"""

import numpy as np


def dense_grad_matrix(d1: int, d2: int) -> np.ndarray:
    """(2n x n) forward-difference matrix with periodic wrap.

    Rows 0..n-1 hold horizontal differences, rows n..2n-1 vertical ones,
    both in row-major pixel order.
    """
    n = d1 * d2
    D = np.zeros((2 * n, n))
    for r in range(d1):
        for c in range(d2):
            i = r * d2 + c
            D[i, r * d2 + (c + 1) % d2] += 1.0
            D[i, i] -= 1.0
            D[n + i, ((r + 1) % d1) * d2 + c] += 1.0
            D[n + i, i] -= 1.0
    return D


def dense_blur_matrix(weights: np.ndarray, d1: int, d2: int) -> np.ndarray:
    """(n x n) circulant convolution matrix for a centered odd kernel."""
    band = weights.shape[0]
    half = (band - 1) // 2
    n = d1 * d2
    K = np.zeros((n, n))
    for r in range(d1):
        for c in range(d2):
            i = r * d2 + c
            for a in range(-half, half + 1):
                for b in range(-half, half + 1):
                    j = ((r - a) % d1) * d2 + (c - b) % d2
                    K[i, j] += weights[half + a, half + b]
    return K


def spatial_circular_convolve(u: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Direct O(n * band^2) circular convolution."""
    band = weights.shape[0]
    half = (band - 1) // 2
    out = np.zeros_like(u)
    for a in range(-half, half + 1):
        for b in range(-half, half + 1):
            out += weights[half + a, half + b] * np.roll(u, (a, b), axis=(0, 1))
    return out


def field_to_vector(t: np.ndarray) -> np.ndarray:
    """Stack a (d1, d2, 2) field as [horizontal; vertical] of length 2n."""
    return np.concatenate([t[:, :, 0].ravel(), t[:, :, 1].ravel()])


def vector_to_field(v: np.ndarray, d1: int, d2: int) -> np.ndarray:
    n = d1 * d2
    t = np.empty((d1, d2, 2))
    t[:, :, 0] = v[:n].reshape(d1, d2)
    t[:, :, 1] = v[n:].reshape(d1, d2)
    return t


def radial_penalty(rho, theta, scale, shape, pen):
    """1-D objective behind the gradient shrinkage."""
    return scale * rho**shape + 0.5 * pen * (rho - theta) ** 2


def grid_min_radial(theta, scale, shape, pen, points=20001):
    """Brute-force minimum of the radial objective on [0, 2*theta]."""
    grid = np.linspace(0.0, 2.0 * max(theta, 1e-9), points)
    return radial_penalty(grid, theta, scale, shape, pen).min()


def prefilter_oracle(g: np.ndarray, mask: np.ndarray, p_bar: float) -> np.ndarray:
    """Literal per-pixel reimplementation of the adaptive mean fill."""
    d1, d2 = g.shape
    out = g.copy()
    clear = ~mask
    if not clear.any():
        raise ValueError("fully masked")
    global_mean = g[clear].mean()
    for r in range(d1):
        for c in range(d2):
            if not mask[r, c]:
                continue
            filled = False
            s = 3
            while s <= min(d1, d2):
                half = (s - 1) // 2
                vals, nclear = [], 0
                for a in range(-half, half + 1):
                    for b in range(-half, half + 1):
                        rr, cc = (r + a) % d1, (c + b) % d2
                        if not mask[rr, cc]:
                            nclear += 1
                            vals.append(g[rr, cc])
                if nclear >= p_bar * s * s:
                    out[r, c] = np.mean(vals)
                    filled = True
                    break
                s += 2
            if not filled:
                out[r, c] = global_mean
    return out
