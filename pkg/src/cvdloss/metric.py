"""The CVDLoss score and its log-scale comparisons."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike

from cvdloss.color import srgb8_to_oklab_planes
from cvdloss.gradient import gradient_from_planes
from cvdloss.simulation import MATRICES, Deficiency


class DegenerateReferenceError(ValueError):
    """The reference gradient map is identically zero, so the score is undefined."""


@dataclass(frozen=True)
class CvdLossScore:
    value: float
    n_pixels: int
    max_gradient: float

    @property
    def log10(self) -> float:
        return math.log10(self.value) if self.value > 0 else math.nan

    def as_dict(self) -> dict[str, float | int | None]:
        return {
            "value": self.value,
            "log10": self.log10 if self.value > 0 else None,
            "n_pixels": self.n_pixels,
            "max_gradient": self.max_gradient,
        }


def cvdloss(g_ref: ArrayLike, g_cvd: ArrayLike) -> CvdLossScore:
    """Mean squared gradient difference, normalized by the peak reference gradient.

    ``g_ref`` is the normal-vision map and alone sets the normalization, so
    the score is not symmetric and can exceed 1 when the simulated map has
    stronger gradients than the reference.
    """
    g_ref = np.asarray(g_ref, dtype=np.float64)
    g_cvd = np.asarray(g_cvd, dtype=np.float64)
    if g_ref.shape != g_cvd.shape:
        raise ValueError(f"gradient map shapes differ: {g_ref.shape} vs {g_cvd.shape}")
    if g_ref.size == 0:
        raise ValueError("empty gradient map")
    peak = float(g_ref.max())
    if not peak > 0.0:
        raise DegenerateReferenceError("degenerate reference: metric undefined (constant image)")
    n = g_ref.size
    if peak * peak == 0.0 or not math.isfinite(peak * peak):
        # peak**2 under- or overflows; rescale the maps first.
        diff = (g_ref - g_cvd) / peak
        return CvdLossScore(value=float(np.sum(diff * diff)) / n, n_pixels=n, max_gradient=peak)
    diff = g_ref - g_cvd
    total = float(np.sum(diff * diff))
    # Dividing by peak**2 first keeps the single-pixel case exactly 1/N.
    return CvdLossScore(value=total / (peak * peak) / n, n_pixels=n, max_gradient=peak)


def gradient_maps(img: ArrayLike, deficiency: Deficiency) -> tuple[np.ndarray, np.ndarray]:
    """Normal-vision and simulated gradient maps of an 8-bit sRGB image."""
    g_ref = gradient_from_planes(srgb8_to_oklab_planes(img))
    g_cvd = gradient_from_planes(srgb8_to_oklab_planes(img, pre=MATRICES.rgb_operator[deficiency]))
    return g_ref, g_cvd


def cvdloss_for_image(img: ArrayLike, deficiency: Deficiency) -> CvdLossScore:
    """Score an 8-bit sRGB image of shape ``(h, w, 3)`` against its simulation."""
    return cvdloss(*gradient_maps(img, deficiency))


def log10_delta(after: CvdLossScore | float, before: CvdLossScore | float) -> float:
    """``log10(after) - log10(before)``; negative means the loss went down."""
    a = after.value if isinstance(after, CvdLossScore) else float(after)
    b = before.value if isinstance(before, CvdLossScore) else float(before)
    if not (a > 0 and b > 0):
        raise ValueError(f"log of nonpositive score (after={a!r}, before={b!r})")
    return math.log10(a) - math.log10(b)
