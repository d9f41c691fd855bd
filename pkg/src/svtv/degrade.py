"""Synthetic corruption of blurred images: Gaussian, Laplace, salt-and-pepper.

All draws come from the counter-based Philox4x32-10 bit generator keyed by
the user seed, so a (spec, seed) pair reproduces the observation bit for
bit.  Additive noise is never clipped to [0, 1]; residual statistics must
stay exactly Gaussian/Laplacian for the fidelity terms to be honest.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import as_image

NOISE_KINDS = ("awgn", "awln", "spn")
RNG_NAME = "philox4x32-10/numpy"


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model: kind, level (sigma / scale / probability), seed.

    For the additive kinds the level may be left unset when a target BSNR
    is given; it is then calibrated against the blurred image.
    """

    kind: str
    level: float | None
    seed: int
    target_bsnr: float | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if self.kind == "spn":
            if self.level is None or not 0.0 <= self.level <= 1.0:
                raise ValueError(f"spn probability must lie in [0,1], got {self.level}")
        elif self.level is None:
            if self.target_bsnr is None:
                raise ValueError(f"{self.kind} needs a level or a target BSNR")
        elif self.level <= 0:
            raise ValueError(f"{self.kind} level must be positive, got {self.level}")


@dataclass
class CorruptionRecord:
    """Observation plus everything needed to audit how it was produced."""

    observed: np.ndarray
    blurred: np.ndarray
    mask: np.ndarray | None
    kind: str
    level: float
    seed: int
    realized: dict = field(default_factory=dict)


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=np.uint64(seed)))


def add_awgn(blurred: np.ndarray, sigma: float, seed: int) -> CorruptionRecord:
    """Add i.i.d. zero-mean Gaussian noise of standard deviation sigma."""
    blurred = as_image(blurred)
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    noise = sigma * _rng(seed).standard_normal(blurred.shape)
    observed = blurred + noise
    return CorruptionRecord(observed=observed, blurred=blurred, mask=None,
                            kind="awgn", level=float(sigma), seed=seed,
                            realized={"sample_std": float(noise.std())})


def add_awln(blurred: np.ndarray, scale: float, seed: int) -> CorruptionRecord:
    """Add i.i.d. zero-mean Laplace noise, inverse-CDF from Philox uniforms.

    Density (1/(2*scale)) * exp(-|x|/scale).
    """
    blurred = as_image(blurred)
    if scale <= 0:
        raise ValueError(f"scale must be positive, got {scale}")
    u = _rng(seed).random(blurred.shape)
    v = u - 0.5
    tail = np.maximum(1.0 - 2.0 * np.abs(v), np.finfo(np.float64).tiny)
    noise = -scale * np.sign(v) * np.log(tail)
    observed = blurred + noise
    return CorruptionRecord(observed=observed, blurred=blurred, mask=None,
                            kind="awln", level=float(scale), seed=seed,
                            realized={"sample_mean_abs": float(np.abs(noise).mean()),
                                      "sample_std": float(noise.std())})


def add_spn(blurred: np.ndarray, gamma: float, seed: int) -> CorruptionRecord:
    """Corrupt each pixel with probability gamma to an extreme value {0, 1}.

    Off the corrupted set the observation equals the blurred input exactly.
    """
    blurred = as_image(blurred)
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0,1], got {gamma}")
    if blurred.min() < 0.0 or blurred.max() > 1.0:
        raise ValueError("salt-and-pepper input must have pixels in [0,1]")
    gen = _rng(seed)
    hit = gen.random(blurred.shape) < gamma
    extreme = (gen.random(blurred.shape) >= 0.5).astype(np.float64)
    observed = np.where(hit, extreme, blurred)
    return CorruptionRecord(observed=observed, blurred=blurred, mask=hit,
                            kind="spn", level=float(gamma), seed=seed,
                            realized={"corrupted_fraction": float(hit.mean())})


def sigma_for_bsnr(blurred: np.ndarray, target_db: float) -> float:
    """Gaussian sigma whose expected BSNR on this blurred image hits target_db."""
    blurred = as_image(blurred)
    if np.ptp(blurred) == 0.0:
        raise ValueError("cannot calibrate BSNR on a constant image")
    signal = blurred - blurred.mean()
    energy = float(np.sum(signal**2))
    n = blurred.size
    return float(np.sqrt(energy / (n * 10.0 ** (target_db / 10.0))))


def laplace_scale_for_bsnr(blurred: np.ndarray, target_db: float) -> float:
    """Laplace scale with the same expected noise energy (variance 2*scale^2)."""
    return sigma_for_bsnr(blurred, target_db) / np.sqrt(2.0)


def corrupt(blurred: np.ndarray, spec: NoiseSpec) -> CorruptionRecord:
    """Apply the spec'd noise model.

    A target BSNR, when present, is resolved into a level against this
    blurred image and takes precedence over an explicit level.
    """
    level = spec.level
    if spec.target_bsnr is not None:
        if spec.kind == "awgn":
            level = sigma_for_bsnr(blurred, spec.target_bsnr)
        elif spec.kind == "awln":
            level = laplace_scale_for_bsnr(blurred, spec.target_bsnr)
        else:
            raise ValueError("target_bsnr calibration applies to awgn/awln only")
    if spec.kind == "awgn":
        return add_awgn(blurred, level, spec.seed)
    if spec.kind == "awln":
        return add_awln(blurred, level, spec.seed)
    return add_spn(blurred, level, spec.seed)
