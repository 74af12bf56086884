"""sRGB, linear RGB and OKLab conversions plus the HyAB color difference.

Images are numpy arrays of shape ``(height, width, 3)``: ``uint8`` codes for
sRGB, ``float64`` everywhere else. Every conversion also accepts a single
triple or any ``(..., 3)`` stack of colors.
"""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray

# Piecewise sRGB transfer function (IEC 61966-2-1).
SRGB_DECODE_THRESHOLD = 0.04045
SRGB_ENCODE_THRESHOLD = 0.0031308
SRGB_LINEAR_SLOPE = 12.92
SRGB_GAMMA = 2.4
SRGB_OFFSET = 0.055

# Ottosson's OKLab constants: linear sRGB -> LMS, then cube-rooted LMS -> Lab.
OKLAB_M1 = np.array(
    [
        [0.4122214708, 0.5363325363, 0.0514459929],
        [0.2119034982, 0.6806995451, 0.1073969566],
        [0.0883024619, 0.2817188376, 0.6299787005],
    ]
)
OKLAB_M2 = np.array(
    [
        [0.2104542553, 0.7936177850, -0.0040720468],
        [1.9779984951, -2.4285922050, 0.4505937099],
        [0.0259040371, 0.7827717662, -0.8086757660],
    ]
)
# Published inverses; round-trip accuracy is checked in the tests.
OKLAB_M2_INV = np.array(
    [
        [1.0, 0.3963377774, 0.2158037573],
        [1.0, -0.1055613458, -0.0638541728],
        [1.0, -0.0894841775, -1.2914855480],
    ]
)
OKLAB_M1_INV = np.array(
    [
        [4.0767416621, -3.3077115913, 0.2309699292],
        [-1.2684380046, 2.6097574011, -0.3413193965],
        [-0.0041960863, -0.7034186147, 1.7076147010],
    ]
)
OKLAB_CONSTANT_SET = "ottosson-2021"


def srgb_channel_to_linear(code: int) -> float:
    """Decode one 8-bit sRGB channel code to linear light in [0, 1]."""
    if not 0 <= code <= 255:
        raise ValueError(f"sRGB code {code} outside [0, 255]")
    x = code / 255.0
    if x <= SRGB_DECODE_THRESHOLD:
        return x / SRGB_LINEAR_SLOPE
    return ((x + SRGB_OFFSET) / (1.0 + SRGB_OFFSET)) ** SRGB_GAMMA


def linear_to_srgb_channel(value: float) -> int:
    """Encode a linear value to an 8-bit code, clipping to [0, 1] first."""
    v = min(max(float(value), 0.0), 1.0)
    if v <= SRGB_ENCODE_THRESHOLD:
        y = SRGB_LINEAR_SLOPE * v
    else:
        y = (1.0 + SRGB_OFFSET) * v ** (1.0 / SRGB_GAMMA) - SRGB_OFFSET
    return int(round(y * 255.0))


SRGB_TO_LINEAR_LUT = np.array([srgb_channel_to_linear(c) for c in range(256)])
SRGB_TO_LINEAR_LUT.setflags(write=False)


def srgb_to_linear(img: ArrayLike) -> NDArray[np.float64]:
    """Decode 8-bit sRGB codes to linear RGB via a lookup table."""
    codes = np.asarray(img)
    if codes.dtype != np.uint8:
        if np.any((codes < 0) | (codes > 255)) or np.any(codes != np.round(codes)):
            raise ValueError("sRGB codes must be integers in [0, 255]")
        codes = codes.astype(np.uint8)
    return SRGB_TO_LINEAR_LUT[codes]


def linear_to_srgb(img: ArrayLike) -> NDArray[np.uint8]:
    """Clip linear RGB to [0, 1] and encode as rounded 8-bit sRGB codes."""
    v = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    out = np.where(
        v <= SRGB_ENCODE_THRESHOLD,
        SRGB_LINEAR_SLOPE * v,
        (1.0 + SRGB_OFFSET) * np.power(v, 1.0 / SRGB_GAMMA) - SRGB_OFFSET,
    )
    return np.rint(out * 255.0).astype(np.uint8)


def linear_rgb_to_oklab(rgb: ArrayLike) -> NDArray[np.float64]:
    rgb = np.asarray(rgb, dtype=np.float64)
    lms = rgb @ OKLAB_M1.T
    return np.cbrt(lms) @ OKLAB_M2.T


def oklab_to_linear_rgb(lab: ArrayLike) -> NDArray[np.float64]:
    lab = np.asarray(lab, dtype=np.float64)
    lms_ = lab @ OKLAB_M2_INV.T
    return (lms_ * lms_ * lms_) @ OKLAB_M1_INV.T


def srgb8_to_oklab_planes(
    img: ArrayLike, pre: NDArray[np.float64] | None = None, rows: int = 32
) -> NDArray[np.float64]:
    """OKLab of an 8-bit sRGB image as a ``(3, h, w)`` array of L, a, b planes.

    ``pre`` is an optional linear-RGB 3x3 operator applied before conversion
    (a dichromat simulation, say); it is folded into the first OKLab matrix.
    Work proceeds in bands of ``rows`` rows so temporaries stay in cache.
    """
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) image, got shape {img.shape}")
    if img.dtype != np.uint8:
        img = np.asarray(np.rint(img), dtype=np.uint8)
    m1 = OKLAB_M1 if pre is None else OKLAB_M1 @ pre
    h, w, _ = img.shape
    out = np.empty((3, h, w))
    lms = np.empty((3, rows, w))
    tmp = np.empty((rows, w))
    for y0 in range(0, h, rows):
        y1 = min(h, y0 + rows)
        n = y1 - y0
        lin = [SRGB_TO_LINEAR_LUT[img[y0:y1, :, k]] for k in range(3)]
        _mix(m1, lin, lms[:, :n], tmp[:n])
        np.cbrt(lms[:, :n], out=lms[:, :n])
        _mix(OKLAB_M2, lms[:, :n], out[:, y0:y1], tmp[:n])
    return out


def _mix(m: NDArray[np.float64], src, dst, tmp) -> None:
    # dst[i] = sum_j m[i, j] * src[j], without full-size temporaries
    for i in range(3):
        np.multiply(src[0], m[i, 0], out=dst[i])
        for j in (1, 2):
            np.multiply(src[j], m[i, j], out=tmp)
            dst[i] += tmp


def hyab(c1: ArrayLike, c2: ArrayLike) -> NDArray[np.float64] | float:
    """HyAB distance: city-block in lightness plus Euclidean in (a, b).

    Broadcasts over leading axes; returns a float for single colors.
    """
    d = np.asarray(c1, dtype=np.float64) - np.asarray(c2, dtype=np.float64)
    out = np.abs(d[..., 0]) + np.hypot(d[..., 1], d[..., 2])
    return float(out) if out.ndim == 0 else out
