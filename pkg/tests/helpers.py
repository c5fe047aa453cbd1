"""Small deterministic clip builders shared by the test modules."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from artifactkit.video import Clip, Frame


def const_clip(width: int = 64, height: int = 64, length: int = 8,
               luma: int = 128, chroma: int = 128) -> Clip:
    frame = Frame.filled(width, height, luma=luma, chroma=chroma)
    return Clip((frame,) * length, Fraction(25))


def ramp_clip(width: int = 256, height: int = 16, length: int = 4) -> Clip:
    """Every row runs 0..255 left to right (width must be 256)."""
    row = (np.arange(width) % 256).astype(np.uint8)
    luma = np.tile(row, (height, 1))
    chroma = np.full((height // 2, width // 2), 128, np.uint8)
    frame = Frame(luma, chroma, chroma)
    return Clip((frame,) * length, Fraction(25))


def checker_clip(width: int = 8, height: int = 8, length: int = 2,
                 lo: int = 10, hi: int = 200) -> Clip:
    yy, xx = np.mgrid[0:height, 0:width]
    luma = np.where((yy + xx) % 2 == 0, lo, hi).astype(np.uint8)
    chroma = np.full((height // 2, width // 2), 128, np.uint8)
    frame = Frame(luma, chroma, chroma)
    return Clip((frame,) * length, Fraction(25))


def moving_clip(width: int = 64, height: int = 64, length: int = 16) -> Clip:
    """Textured content rolled one pixel per frame; all frames pairwise distinct."""
    base = (np.arange(height)[:, None] * 5 + np.arange(width)[None, :] * 3) % 251
    frames = []
    for t in range(length):
        luma = np.roll(base, t, axis=1).astype(np.uint8)
        cu = np.full((height // 2, width // 2), 100 + t, np.uint8)
        cv = np.full((height // 2, width // 2), 128, np.uint8)
        frames.append(Frame(luma, cu, cv))
    return Clip(tuple(frames), Fraction(25))


def laplacian_variance(luma: np.ndarray) -> float:
    x = luma.astype(np.float64)
    lap = (-4 * x
           + np.roll(x, 1, 0) + np.roll(x, -1, 0)
           + np.roll(x, 1, 1) + np.roll(x, -1, 1))
    return float(lap[1:-1, 1:-1].var())
