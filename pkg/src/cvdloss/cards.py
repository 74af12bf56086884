"""Synthetic test cards: two-color step edges and textures over hue pairs."""

from __future__ import annotations

import colorsys
import itertools
from collections.abc import Sequence
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

Rgb8 = tuple[int, int, int]


def hsv8(h_deg: float, s: float, v: float) -> Rgb8:
    r, g, b = colorsys.hsv_to_rgb((h_deg % 360.0) / 360.0, s, v)
    return (round(r * 255), round(g * 255), round(b * 255))


def step_card(a: Rgb8, b: Rgb8, width: int = 64, height: int = 64) -> NDArray[np.uint8]:
    """Left half ``a``, right half ``b``."""
    img = np.empty((height, width, 3), dtype=np.uint8)
    img[:, : width // 2] = a
    img[:, width // 2 :] = b
    return img


def texture_card(a: Rgb8, b: Rgb8, size: int = 64, seed: int = 0) -> NDArray[np.uint8]:
    """Random blocky two-color texture with mild per-pixel brightness jitter."""
    rng = np.random.default_rng(seed)
    cells = rng.integers(0, 2, (size // 8, size // 8), dtype=np.uint8)
    cells[0, 0], cells[-1, -1] = 0, 1
    mask = np.kron(cells, np.ones((8, 8), dtype=np.uint8)).astype(bool)
    img = np.where(mask[..., None], np.array(b, dtype=np.float64), np.array(a, dtype=np.float64))
    img *= rng.uniform(0.94, 1.0, (size, size, 1))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def red_green_pairs(count: int) -> list[tuple[Rgb8, Rgb8]]:
    """``count`` saturated (red, green) color pairs on a deterministic hue grid."""
    reds = [0.0, 10.0, 20.0, 30.0, 345.0]
    greens = [80.0, 100.0, 120.0, 140.0]
    levels = [(1.0, 1.0), (0.9, 0.8), (0.8, 0.9), (1.0, 0.7), (0.7, 1.0)]
    pairs = []
    for (hr, hg), (s, v) in itertools.product(itertools.product(reds, greens), levels):
        pairs.append((hsv8(hr, s, v), hsv8(hg, s, v)))
    if count > len(pairs):
        raise ValueError(f"at most {len(pairs)} distinct red/green pairs available")
    return pairs[:count]


def red_green_corpus(count: int, size: int = 64) -> list[tuple[str, NDArray[np.uint8]]]:
    """Alternating step and texture cards, ``count`` images in total."""
    pairs = red_green_pairs((count + 1) // 2)
    cards: list[tuple[str, NDArray[np.uint8]]] = []
    for i, (a, b) in enumerate(pairs):
        cards.append((f"step_{i:03d}", step_card(a, b, size, size)))
        cards.append((f"texture_{i:03d}", texture_card(a, b, size, seed=i)))
    return cards[:count]


def write_card_corpus(directory: str | Path, count: int = 100, size: int = 64) -> Path:
    """Write a red/green card corpus laid out as ``cards/standard/*.png``.

    Returns the root directory, ready for directory-mode manifest discovery.
    """
    from cvdloss.imageio import write_png

    root = Path(directory)
    out = root / "cards" / "standard"
    out.mkdir(parents=True, exist_ok=True)
    for name, img in red_green_corpus(count, size):
        write_png(out / f"{name}.png", img)
    return root


def smooth_image(seed: int, size: int = 32, palette: Sequence[Rgb8] | None = None) -> NDArray[np.uint8]:
    """Smooth random color field; with ``palette``, a blend of its colors."""
    rng = np.random.default_rng(seed)
    coarse = rng.random((size // 8 + 1, size // 8 + 1, 3))
    idx = np.linspace(0, coarse.shape[0] - 1, size)
    i0 = np.floor(idx).astype(int).clip(max=coarse.shape[0] - 2)
    t = (idx - i0)[:, None, None]
    rows = coarse[i0] * (1 - t) + coarse[i0 + 1] * t
    t = (idx - i0)[None, :, None]
    field = rows[:, i0] * (1 - t) + rows[:, i0 + 1] * t
    if palette is not None:
        weights = field / field.sum(axis=2, keepdims=True)
        field = weights @ (np.asarray(palette[:3], dtype=np.float64) / 255.0)
    return np.clip(np.rint(field * 255.0), 0, 255).astype(np.uint8)


def write_labeled_corpus(directory: str | Path, per_cell: int = 2, size: int = 32) -> Path:
    """Synthetic ``<category>/<prompt_type>/*.png`` tree over the default vocabulary.

    Each category gets its own three-color palette; every prompt type gets
    ``per_cell`` images, so the default layout has 8 x 4 x 2 = 64 images.
    """
    from cvdloss.imageio import write_png
    from cvdloss.pipeline import DEFAULT_CATEGORIES
    from cvdloss.simulation import PROMPT_TYPES

    root = Path(directory)
    for c, category in enumerate(DEFAULT_CATEGORIES):
        palette = [hsv8(45.0 * c + 120.0 * k, 0.8, 0.9) for k in range(3)]
        for p, prompt in enumerate(PROMPT_TYPES):
            out = root / category / prompt
            out.mkdir(parents=True, exist_ok=True)
            for i in range(per_cell):
                seed = 1000 * c + 100 * p + i
                write_png(out / f"{i:03d}.png", smooth_image(seed, size, palette))
    return root
