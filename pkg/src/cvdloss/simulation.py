"""Dichromat simulation with the Viénot, Brettel & Mollon (1999) projection.

Colors are taken to LMS cone space, the missing cone's response is replaced
by a linear combination of the two remaining ones so that every color lands
on the plane spanned by black, blue (0, 0, 1) and yellow (1, 1, 0), and the
result is taken back to linear RGB. The plane holds the achromatic axis, so
grays are unchanged. Only complete dichromacy is modeled.

The cone model is Smith & Pokorny (1975) LMS over the BT.709 / sRGB
primaries, the combination DaltonLens recommends for sRGB displays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

XYZ_FROM_LINEAR_RGB = np.array(
    [
        [0.412456, 0.3575761, 0.1804375],
        [0.212672, 0.7151522, 0.0721750],
        [0.019333, 0.1191920, 0.9503041],
    ]
)
LMS_FROM_XYZ = np.array(
    [
        [0.15514, 0.54312, -0.03286],
        [-0.15514, 0.45684, 0.03286],
        [0.0, 0.0, 0.01608],
    ]
)
CONSTANT_SET = "vienot1999/smith-pokorny-1975/srgb-bt709"


class Deficiency(enum.Enum):
    PROTANOPIA = "protan"
    DEUTERANOPIA = "deutan"

    @property
    def missing_cone(self) -> int:
        return 0 if self is Deficiency.PROTANOPIA else 1

    @classmethod
    def parse(cls, text: str) -> Deficiency:
        """Accept ``protan``/``deutan`` or the full names, case-insensitively."""
        key = text.strip().lower()
        for d in cls:
            if key in (d.value, d.name.lower()):
                return d
        valid = ", ".join(f"{d.value} ({d.name.lower()})" for d in cls)
        raise ValueError(f"unknown deficiency {text!r}; expected one of: {valid}")

    def __str__(self) -> str:
        return self.value


def _projection(rgb_to_lms: NDArray[np.float64], deficiency: Deficiency) -> NDArray[np.float64]:
    blue = rgb_to_lms @ np.array([0.0, 0.0, 1.0])
    yellow = rgb_to_lms @ np.array([1.0, 1.0, 0.0])
    normal = np.cross(yellow, blue)
    k = deficiency.missing_cone
    proj = np.eye(3)
    # Solve normal . lms = 0 for the missing cone.
    proj[k] = -normal / normal[k]
    proj[k, k] = 0.0
    return proj


@dataclass(frozen=True)
class SimulationMatrices:
    rgb_to_lms: NDArray[np.float64]
    lms_to_rgb: NDArray[np.float64]
    projection: dict[Deficiency, NDArray[np.float64]]
    # Collapsed linear-RGB -> linear-RGB operator per deficiency.
    rgb_operator: dict[Deficiency, NDArray[np.float64]] = field(repr=False)

    @classmethod
    def build(cls) -> SimulationMatrices:
        rgb_to_lms = LMS_FROM_XYZ @ XYZ_FROM_LINEAR_RGB
        lms_to_rgb = np.linalg.inv(rgb_to_lms)
        projection = {d: _projection(rgb_to_lms, d) for d in Deficiency}
        operator = {d: lms_to_rgb @ p @ rgb_to_lms for d, p in projection.items()}
        for m in (rgb_to_lms, lms_to_rgb, *projection.values(), *operator.values()):
            m.setflags(write=False)
        return cls(rgb_to_lms, lms_to_rgb, projection, operator)


MATRICES = SimulationMatrices.build()


def simulate_pixel(rgb: ArrayLike, deficiency: Deficiency) -> NDArray[np.float64]:
    """Simulate a single linear RGB triple (or any ``(..., 3)`` stack)."""
    return np.asarray(rgb, dtype=np.float64) @ MATRICES.rgb_operator[deficiency].T


def simulate_image(img: ArrayLike, deficiency: Deficiency) -> NDArray[np.float64]:
    """Simulate a linear RGB image of shape ``(h, w, 3)``.

    No clipping is applied; out-of-gamut results are left for the encoder.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) image, got shape {img.shape}")
    return simulate_pixel(img, deficiency)


PROMPT_TYPES = ("standard", "colorblind_aware", "protanopia_aware", "deuteranopia_aware")

_ROUTING = {
    "standard": (Deficiency.PROTANOPIA, Deficiency.DEUTERANOPIA),
    "colorblind_aware": (Deficiency.PROTANOPIA, Deficiency.DEUTERANOPIA),
    "protanopia_aware": (Deficiency.PROTANOPIA,),
    "deuteranopia_aware": (Deficiency.DEUTERANOPIA,),
}


def deficiencies_for_prompt_type(prompt_type: str) -> tuple[Deficiency, ...]:
    """Deficiencies to simulate for an image generated with ``prompt_type``.

    Deficiency-specific prompts get only their own simulation; the generic
    prompts get both. Returned in a fixed protan-then-deutan order.
    """
    try:
        return _ROUTING[prompt_type]
    except KeyError:
        raise ValueError(
            f"unknown prompt type {prompt_type!r}; expected one of: {', '.join(PROMPT_TYPES)}"
        ) from None
