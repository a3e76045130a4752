"""Raster -> physical heightfield mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal, Optional

import numpy as np

from .errors import ImageTooSmall, ParameterOutOfRange, ResultTooSmall
from .imaging import RasterImage

Mode = Literal["external", "internal"]


@dataclass(frozen=True)
class ReliefParams:
    """How intensity becomes thickness.

    ``external`` puts bright pixels on top (tactile relief); ``internal``
    makes bright pixels thin, the backlit-lithophane convention.
    """

    mode: Mode = "external"
    base_mm: float = 2.0
    relief_mm: float = 3.0
    target_width_mm: float = 100.0

    def __post_init__(self):
        if self.mode not in ("external", "internal"):
            raise ParameterOutOfRange(f"mode must be 'external' or 'internal', got {self.mode!r}")
        for name in ("base_mm", "relief_mm", "target_width_mm"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ParameterOutOfRange(f"{name} must be > 0, got {value}")


@dataclass(frozen=True, eq=False)
class Heightfield:
    """Vertex grid of heights in mm, ``heights[row, col]``.

    Vertices sit at pixel centres, so the physical width is
    ``(cols - 1) * pitch_mm``.  ``base_mm``/``relief_mm`` record the band the
    heights were mapped into.
    """

    heights: np.ndarray
    pitch_mm: float
    base_mm: float
    relief_mm: float
    mm_per_micrometer: Optional[float] = None

    def __post_init__(self):
        h = np.array(self.heights, dtype=np.float64)
        if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 2:
            raise ValueError(f"heightfield needs at least 2x2 vertices, got shape {h.shape}")
        if not (math.isfinite(self.pitch_mm) and self.pitch_mm > 0):
            raise ValueError("pitch_mm must be > 0")
        if not np.all(np.isfinite(h)):
            raise ValueError("heights must be finite")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    @property
    def rows(self) -> int:
        return self.heights.shape[0]

    @property
    def cols(self) -> int:
        return self.heights.shape[1]

    @property
    def width_mm(self) -> float:
        return (self.cols - 1) * self.pitch_mm

    @property
    def depth_mm(self) -> float:
        return (self.rows - 1) * self.pitch_mm

    @property
    def top_mm(self) -> float:
        return self.base_mm + self.relief_mm

    def __eq__(self, other):
        if not isinstance(other, Heightfield):
            return NotImplemented
        return (
            self.pitch_mm == other.pitch_mm
            and self.base_mm == other.base_mm
            and self.relief_mm == other.relief_mm
            and self.mm_per_micrometer == other.mm_per_micrometer
            and np.array_equal(self.heights, other.heights)
        )

    __hash__ = None


def from_image(img: RasterImage, params: ReliefParams = ReliefParams()) -> Heightfield:
    if img.width < 2 or img.height < 2:
        raise ImageTooSmall(f"image must be at least 2x2 pixels, got {img.width}x{img.height}")
    v = img.pixels
    if params.mode == "internal":
        v = 1.0 - v
    heights = params.base_mm + v * params.relief_mm
    pitch = params.target_width_mm / (img.width - 1)
    mm_per_um = None
    if img.micrometers_per_pixel is not None:
        mm_per_um = pitch / img.micrometers_per_pixel
    return Heightfield(heights, pitch, params.base_mm, params.relief_mm, mm_per_um)


def downsample(hf: Heightfield, k: int) -> Heightfield:
    """Block-mean pooling over ``k x k`` vertex blocks; width is preserved."""
    if int(k) != k or k < 1:
        raise ParameterOutOfRange(f"downsample factor must be an integer >= 1, got {k}")
    k = int(k)
    if k == 1:
        return hf
    rows = -(-hf.rows // k)
    cols = -(-hf.cols // k)
    if rows < 2 or cols < 2:
        raise ResultTooSmall(f"downsampling {hf.cols}x{hf.rows} by {k} leaves {cols}x{rows}")
    h = hf.heights
    sums = np.add.reduceat(np.add.reduceat(h, np.arange(0, hf.rows, k), axis=0), np.arange(0, hf.cols, k), axis=1)
    row_n = np.minimum(k, hf.rows - np.arange(0, hf.rows, k))
    col_n = np.minimum(k, hf.cols - np.arange(0, hf.cols, k))
    means = sums / np.outer(row_n, col_n)
    # Guard the height band against last-ulp drift of the mean.
    means = np.clip(means, h.min(), h.max())
    pitch = hf.width_mm / (cols - 1)
    return replace(hf, heights=means, pitch_mm=pitch)


def column_volume(hf: Heightfield) -> float:
    """Volume under the surface, summed as two triangular prisms per cell.

    Each cell is split along the diagonal from ``(row, col)`` to
    ``(row+1, col+1)``, the same split the tessellator uses, so this matches
    the mesh volume exactly rather than approximately.
    """
    h = hf.heights
    h00 = h[:-1, :-1]
    h01 = h[:-1, 1:]
    h10 = h[1:, :-1]
    h11 = h[1:, 1:]
    # prism volume = (pitch^2 / 2) * mean of its three corners
    cell = (h00 + h11) * 2.0 + h01 + h10
    return float(cell.sum() * hf.pitch_mm**2 / 6.0)
