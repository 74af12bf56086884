"""Gradient-based color accessibility scoring for red-green dichromats."""

from cvdloss.color import (
    hyab,
    linear_rgb_to_oklab,
    linear_to_srgb,
    oklab_to_linear_rgb,
    srgb_to_linear,
)
from cvdloss.daltonization import DaltonizationResult, daltonization_delta, daltonize
from cvdloss.gradient import gradient_magnitude_map
from cvdloss.metric import CvdLossScore, DegenerateReferenceError, cvdloss, cvdloss_for_image, log10_delta
from cvdloss.simulation import Deficiency, deficiencies_for_prompt_type, simulate_image, simulate_pixel

__version__ = "0.1.0"

__all__ = [
    "CvdLossScore",
    "DaltonizationResult",
    "Deficiency",
    "DegenerateReferenceError",
    "cvdloss",
    "cvdloss_for_image",
    "daltonization_delta",
    "daltonize",
    "deficiencies_for_prompt_type",
    "gradient_magnitude_map",
    "hyab",
    "linear_rgb_to_oklab",
    "linear_to_srgb",
    "log10_delta",
    "oklab_to_linear_rgb",
    "simulate_image",
    "simulate_pixel",
    "srgb_to_linear",
]
