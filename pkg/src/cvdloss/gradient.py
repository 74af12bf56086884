"""Perceptual gradient magnitude maps built from HyAB neighbor differences."""

from __future__ import annotations

import numpy as np
from numpy.typing import ArrayLike, NDArray


def gradient_from_planes(planes: ArrayLike, rows: int = 32) -> NDArray[np.float64]:
    """Gradient magnitude from OKLab given as a ``(3, h, w)`` stack of planes.

    Processed in bands of ``rows`` rows to keep temporaries in cache.
    """
    planes = np.asarray(planes, dtype=np.float64)
    if planes.ndim != 3 or planes.shape[0] != 3:
        raise ValueError(f"expected (3, h, w) planes, got shape {planes.shape}")
    _, h, w = planes.shape
    if h < 2 or w < 2:
        raise ValueError(f"gradient needs an image of at least 2x2 pixels, got {w}x{h}")

    out = np.empty((h, w))
    dx = np.empty((3, rows, w))
    dy = np.empty((3, rows, w))
    gx = np.empty((rows, w))
    tmp = np.empty((rows, w))
    for y0 in range(0, h, rows):
        y1 = min(h, y0 + rows)
        n = y1 - y0
        # Edge replication: a missing neighbor is the border pixel itself.
        above = np.maximum(np.arange(y0, y1) - 1, 0)
        below = np.minimum(np.arange(y0, y1) + 1, h - 1)
        for c in range(3):
            p = planes[c, y0:y1]
            d = dx[c, :n]
            np.subtract(p[:, 2:], p[:, :-2], out=d[:, 1:-1])
            d[:, 0] = p[:, 1] - p[:, 0]
            d[:, -1] = p[:, -1] - p[:, -2]
            np.subtract(planes[c, below], planes[c, above], out=dy[c, :n])
        gy = out[y0:y1]
        _half_hyab(dx[:, :n], gx[:n], tmp[:n])
        _half_hyab(dy[:, :n], gy, tmp[:n])
        np.multiply(gy, gy, out=gy)
        np.multiply(gx[:n], gx[:n], out=tmp[:n])
        gy += tmp[:n]
        np.sqrt(gy, out=gy)
    return out


def _half_hyab(d: NDArray[np.float64], out: NDArray[np.float64], tmp: NDArray[np.float64]) -> None:
    # out = (|dL| + sqrt(da^2 + db^2)) / 2
    np.multiply(d[1], d[1], out=out)
    np.multiply(d[2], d[2], out=tmp)
    out += tmp
    np.sqrt(out, out=out)
    np.abs(d[0], out=tmp)
    out += tmp
    out *= 0.5


def gradient_magnitude_map(lab: ArrayLike) -> NDArray[np.float64]:
    """Gradient magnitude of an OKLab image of shape ``(h, w, 3)``.

    Central differences with edge replication: the horizontal component is
    half the HyAB distance between the right and left neighbors, the
    vertical one half the distance between the pixels below and above. At a
    border the replicated pixel is the center itself, so the one-sided
    distance is halved as well.
    """
    lab = np.asarray(lab, dtype=np.float64)
    if lab.ndim != 3 or lab.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) image, got shape {lab.shape}")
    return gradient_from_planes(np.moveaxis(lab, 2, 0))
