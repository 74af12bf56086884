"""Full-strength daltonization, transcribed from the ``daltonize`` 0.2.0 package.

The recoloring estimates the color information a dichromat loses (original
minus its dichromat simulation), rotates that error into channels the viewer
can still see, and adds it back. The package ships its own simulation
matrices for this step and clips the simulated image to [0, 1] before taking
the error; both are reproduced here so the output matches the package rather
than the simulator in :mod:`cvdloss.simulation`. Arithmetic is float64 where
the package computes in float16, which accounts for the residual one-code
differences against it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from cvdloss.color import linear_to_srgb, srgb_to_linear
from cvdloss.metric import CvdLossScore, DegenerateReferenceError, cvdloss_for_image, log10_delta
from cvdloss.simulation import Deficiency

RGB_TO_LMS = np.array(
    [
        [0.3904725, 0.54990437, 0.00890159],
        [0.07092586, 0.96310739, 0.00135809],
        [0.02314268, 0.12801221, 0.93605194],
    ]
)
LMS_TO_RGB = np.array(
    [
        [2.85831110e00, -1.62870796e00, -2.48186967e-02],
        [-2.10434776e-01, 1.15841493e00, 3.20463334e-04],
        [-4.18895045e-02, -1.18154333e-01, 1.06888657e00],
    ]
)
CONE_REPLACEMENT = {
    Deficiency.PROTANOPIA: np.array([[0.0, 0.90822864, 0.008192], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]),
    Deficiency.DEUTERANOPIA: np.array([[1.0, 0.0, 0.0], [1.10104433, 0.0, -0.00901975], [0.0, 0.0, 1.0]]),
}
# Moves red-green error into the green and blue channels.
ERROR_REDISTRIBUTION = np.array(
    [
        [0.0, 0.0, 0.0],
        [0.7, 1.0, 0.0],
        [0.7, 0.0, 1.0],
    ]
)
CONSTANT_SET = "daltonize-0.2.0"



def _as_stored(m: NDArray[np.float64]) -> NDArray[np.float64]:
    # The package declares these matrices float16; these are the values it multiplies by.
    return m.astype(np.float16).astype(np.float64)


_SIMULATION = {
    d: _as_stored(LMS_TO_RGB) @ _as_stored(m) @ _as_stored(RGB_TO_LMS) for d, m in CONE_REPLACEMENT.items()
}

# Scores below this are rounding noise on simulation-invariant content.
NEGLIGIBLE_LOSS = 1e-20


@dataclass(frozen=True)
class DaltonizationResult:
    image: NDArray[np.uint8]
    deficiency: Deficiency
    clip_fraction: float


def daltonize_linear(linear: ArrayLike, deficiency: Deficiency) -> NDArray[np.float64]:
    """Unclipped daltonized linear RGB."""
    linear = np.asarray(linear, dtype=np.float64)
    simulated = np.clip(linear @ _SIMULATION[deficiency].T, 0.0, 1.0)
    return linear + (linear - simulated) @ ERROR_REDISTRIBUTION.T


def daltonize(img: ArrayLike, deficiency: Deficiency) -> DaltonizationResult:
    """Daltonize an 8-bit sRGB image of shape ``(h, w, 3)``."""
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) image, got shape {img.shape}")
    out = daltonize_linear(srgb_to_linear(img), deficiency)
    clipped = np.count_nonzero((out < 0.0) | (out > 1.0))
    return DaltonizationResult(
        image=linear_to_srgb(out),
        deficiency=deficiency,
        clip_fraction=clipped / out.size,
    )


def _checked(score: CvdLossScore, which: str) -> CvdLossScore:
    if score.value <= NEGLIGIBLE_LOSS:
        raise DegenerateReferenceError(
            f"degenerate reference: {which} CVDLoss is {score.value:.3g}, "
            "image is invariant under simulation and the log delta is undefined"
        )
    return score


def daltonization_delta(img: ArrayLike, deficiency: Deficiency) -> float:
    """Change in log10 CVDLoss caused by daltonizing ``img``.

    Negative values mean the daltonized image loses less gradient structure
    under simulation than the original. Positive values are legitimate.
    """
    before = _checked(cvdloss_for_image(img, deficiency), "original")
    after = _checked(cvdloss_for_image(daltonize(img, deficiency).image, deficiency), "daltonized")
    return log10_delta(after, before)
