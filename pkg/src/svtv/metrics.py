"""Restoration-quality measures in dB.

Degenerate ratios are reported with explicit float sentinels (+inf for a
perfect match, nan for 0/0) instead of large finite stand-ins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .operators import as_image


def _energy(a: np.ndarray) -> float:
    return float(np.sum(a * a))


def bsnr(observed: np.ndarray, blurred: np.ndarray) -> float:
    """Blurred signal-to-noise ratio of an observation against K u."""
    observed = as_image(observed)
    blurred = as_image(blurred)
    if observed.shape != blurred.shape:
        raise ValueError("observed and blurred shapes differ")
    signal = _energy(blurred - blurred.mean())
    noise = _energy(observed - blurred)
    if noise == 0.0:
        return math.nan if np.ptp(blurred) == 0.0 else math.inf
    return 10.0 * math.log10(signal / noise)


def isnr(observed: np.ndarray, original: np.ndarray, restored: np.ndarray) -> float:
    """Improvement in SNR of a restoration over the raw observation."""
    observed = as_image(observed)
    original = as_image(original)
    restored = as_image(restored)
    if not observed.shape == original.shape == restored.shape:
        raise ValueError("observed, original and restored shapes differ")
    before = _energy(observed - original)
    after = _energy(restored - original)
    if before == 0.0:
        return math.nan
    if after == 0.0:
        return math.inf
    return 10.0 * math.log10(before / after)


@dataclass(frozen=True)
class QualityReport:
    image: str
    variant: str
    bsnr_db: float
    isnr_db: float
    observation_rmse: float
    restored_rmse: float


def quality_report(image: str, variant: str, observed, original,
                   restored, blurred) -> QualityReport:
    n = as_image(original).size
    return QualityReport(
        image=image,
        variant=variant,
        bsnr_db=bsnr(observed, blurred),
        isnr_db=isnr(observed, original, restored),
        observation_rmse=float(np.sqrt(_energy(as_image(observed) - original) / n)),
        restored_rmse=float(np.sqrt(_energy(as_image(restored) - original) / n)),
    )
