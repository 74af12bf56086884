"""PNG and raw gradient-map file I/O."""

from __future__ import annotations

import logging
import struct
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike, NDArray
from PIL import Image

log = logging.getLogger(__name__)

GMM_MAGIC = b"GMM1"
_GMM_HEADER = struct.Struct("<II4s")


def read_png(path: str | Path) -> NDArray[np.uint8]:
    """Read an image as ``(h, w, 3)`` uint8 sRGB; alpha is dropped with a warning."""
    with Image.open(path) as im:
        if im.mode in ("RGBA", "LA", "PA") or (im.mode == "P" and "transparency" in im.info):
            log.warning("%s: dropping alpha channel", path)
        if im.mode not in ("RGB", "RGBA", "L", "LA", "P", "PA"):
            raise ValueError(f"{path}: unsupported image mode {im.mode!r}; expected 8-bit RGB(A)")
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return arr.copy()


def write_png(path: str | Path, img: ArrayLike) -> None:
    arr = np.asarray(img)
    if arr.dtype != np.uint8:
        raise TypeError(f"expected uint8 image, got {arr.dtype}")
    mode = "L" if arr.ndim == 2 else "RGB"
    Image.fromarray(arr, mode=mode).save(path, format="PNG")


def gmm_to_gray8(gmm: ArrayLike) -> NDArray[np.uint8]:
    """Scale a gradient map by its own maximum into 8-bit gray."""
    g = np.asarray(gmm, dtype=np.float64)
    peak = g.max()
    if peak <= 0:
        return np.zeros(g.shape, dtype=np.uint8)
    return np.rint(g / peak * 255.0).astype(np.uint8)


def write_gmm_raw(path: str | Path, gmm: ArrayLike) -> None:
    """Raw dump: width u32, height u32, ``GMM1``, then little-endian float64 row-major."""
    g = np.ascontiguousarray(gmm, dtype="<f8")
    if g.ndim != 2:
        raise ValueError(f"gradient map must be 2-D, got shape {g.shape}")
    h, w = g.shape
    with open(path, "wb") as f:
        f.write(_GMM_HEADER.pack(w, h, GMM_MAGIC))
        f.write(g.tobytes())


def read_gmm_raw(path: str | Path) -> NDArray[np.float64]:
    data = Path(path).read_bytes()
    if len(data) < _GMM_HEADER.size:
        raise ValueError(f"{path}: truncated gradient map header")
    w, h, magic = _GMM_HEADER.unpack_from(data)
    if magic != GMM_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}, expected {GMM_MAGIC!r}")
    body = data[_GMM_HEADER.size :]
    if len(body) != 8 * w * h:
        raise ValueError(f"{path}: expected {8 * w * h} payload bytes, found {len(body)}")
    return np.frombuffer(body, dtype="<f8").reshape(h, w).astype(np.float64)
