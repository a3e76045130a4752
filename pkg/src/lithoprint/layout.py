"""Multi-panel plates with gutters, an optional frame and a tactile scale bar."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from .errors import (
    CalibrationMissing,
    EmptyLayout,
    MixedBaseHeights,
    MixedMagnification,
    ParameterOutOfRange,
)
from .relief import Heightfield

DEFAULT_FRAME_WIDTH_MM = 2.0
DEFAULT_FRAME_HEIGHT_MM = 1.5


@dataclass(frozen=True)
class Panel:
    field: Heightfield
    row: int = 0
    col: int = 0


@dataclass(frozen=True)
class Frame:
    width_mm: float = DEFAULT_FRAME_WIDTH_MM
    # None means min(relief, 1.5 mm)
    height_mm: Optional[float] = None

    def __post_init__(self):
        if not self.width_mm > 0:
            raise ParameterOutOfRange("frame width must be > 0")
        if self.height_mm is not None and not self.height_mm > 0:
            raise ParameterOutOfRange("frame height must be > 0")


@dataclass(frozen=True)
class ScaleBar:
    specimen_length_um: float
    bar_thickness_mm: float = 1.0
    margin_mm: float = 3.0

    def __post_init__(self):
        if not self.specimen_length_um > 0:
            raise ParameterOutOfRange("scale bar length must be > 0")
        if not self.bar_thickness_mm > 0:
            raise ParameterOutOfRange("scale bar thickness must be > 0")
        if not self.margin_mm >= self.bar_thickness_mm:
            raise ParameterOutOfRange("scale bar margin must be at least the bar thickness")


@dataclass(frozen=True)
class PlateLayout:
    panels: Sequence[Panel]
    gutter_mm: float = 0.0
    frame: Optional[Frame] = None
    scale_bar: Optional[ScaleBar] = None

    def __post_init__(self):
        if not self.gutter_mm >= 0:
            raise ParameterOutOfRange("gutter must be >= 0")


def scale_bar_length_mm(specimen_length_um: float, pitch_mm: float, um_per_px: float) -> float:
    """Printed length of a bar representing ``specimen_length_um`` of specimen."""
    for name, value in (("specimen length", specimen_length_um), ("pitch", pitch_mm), ("um per px", um_per_px)):
        if not (math.isfinite(value) and value > 0):
            raise ParameterOutOfRange(f"{name} must be > 0, got {value}")
    return specimen_length_um * pitch_mm / um_per_px


def resample(hf: Heightfield, pitch_mm: float) -> Heightfield:
    """Bilinear resampling onto a grid of spacing ``pitch_mm``."""
    if pitch_mm == hf.pitch_mm:
        return hf
    cols = max(2, int(round(hf.width_mm / pitch_mm)) + 1)
    rows = max(2, int(round(hf.depth_mm / pitch_mm)) + 1)
    # sample positions in source-index units
    x = np.minimum(np.arange(cols) * pitch_mm / hf.pitch_mm, hf.cols - 1)
    y = np.minimum(np.arange(rows) * pitch_mm / hf.pitch_mm, hf.rows - 1)
    x0 = np.minimum(np.floor(x).astype(int), hf.cols - 2)
    y0 = np.minimum(np.floor(y).astype(int), hf.rows - 2)
    fx = (x - x0)[None, :]
    fy = (y - y0)[:, None]
    h = hf.heights
    h00 = h[np.ix_(y0, x0)]
    h01 = h[np.ix_(y0, x0 + 1)]
    h10 = h[np.ix_(y0 + 1, x0)]
    h11 = h[np.ix_(y0 + 1, x0 + 1)]
    out = (h00 * (1 - fx) + h01 * fx) * (1 - fy) + (h10 * (1 - fx) + h11 * fx) * fy
    out = np.clip(out, h.min(), h.max())
    return replace(hf, heights=out, pitch_mm=pitch_mm)


def _steps(length_mm: float, pitch: float) -> int:
    return int(round(length_mm / pitch))


def _common_magnification(panels: List[Panel], required: bool) -> Optional[float]:
    values = [p.field.mm_per_micrometer for p in panels]
    if any(v is None for v in values):
        if required:
            raise CalibrationMissing("a scale bar needs micrometres-per-pixel calibration on every panel")
        return None
    first = values[0]
    if any(not math.isclose(v, first, rel_tol=1e-9) for v in values):
        if required:
            raise MixedMagnification("panels have different magnifications; one scale bar cannot serve them all")
        return None
    return first


def compose(layout: PlateLayout) -> Heightfield:
    """Merge the panels into one heightfield ready for tessellation.

    Panels sit in a row/column grid (each cell as large as its largest
    member), separated by base-height gutters.  The scale bar is a
    full-relief rectangle in a strip below the panels, left-aligned; the
    frame is a raised ring around everything.
    """
    panels = list(layout.panels)
    if not panels:
        raise EmptyLayout("layout has no panels")
    base = panels[0].field.base_mm
    if any(p.field.base_mm != base for p in panels):
        raise MixedBaseHeights("all panels must share the same base thickness")
    mm_per_um = _common_magnification(panels, required=layout.scale_bar is not None)
    if len(panels) == 1 and layout.frame is None and layout.scale_bar is None:
        return panels[0].field

    relief = max(p.field.relief_mm for p in panels)
    top = base + relief
    pitch = min(p.field.pitch_mm for p in panels)
    fields = [resample(p.field, pitch) for p in panels]

    n_rows = max(p.row for p in panels) + 1
    n_cols = max(p.col for p in panels) + 1
    if min(min(p.row, p.col) for p in panels) < 0:
        raise ParameterOutOfRange("panel grid positions must be >= 0")
    if len({(p.row, p.col) for p in panels}) != len(panels):
        raise ParameterOutOfRange("two panels share a grid cell")
    col_steps = [0] * n_cols
    row_steps = [0] * n_rows
    for p, f in zip(panels, fields):
        col_steps[p.col] = max(col_steps[p.col], f.cols - 1)
        row_steps[p.row] = max(row_steps[p.row], f.rows - 1)
    gutter = _steps(layout.gutter_mm, pitch)
    col_off = np.concatenate([[0], np.cumsum([s + gutter for s in col_steps])])
    row_off = np.concatenate([[0], np.cumsum([s + gutter for s in row_steps])])
    width_steps = int(col_off[-1]) - gutter
    depth_steps = int(row_off[-1]) - gutter

    grid = np.full((depth_steps + 1, width_steps + 1), base)
    for p, f in zip(panels, fields):
        r0, c0 = int(row_off[p.row]), int(col_off[p.col])
        grid[r0 : r0 + f.rows, c0 : c0 + f.cols] = f.heights

    if layout.scale_bar is not None:
        bar = layout.scale_bar
        length_steps = _steps(bar.specimen_length_um * mm_per_um, pitch)
        thick_steps = max(1, _steps(bar.bar_thickness_mm, pitch))
        strip_rows = max(_steps(bar.margin_mm, pitch), thick_steps + 2)
        if length_steps < 1:
            raise ParameterOutOfRange("scale bar is shorter than one grid step")
        if length_steps > width_steps:
            raise ParameterOutOfRange("scale bar is longer than the plate")
        strip = np.full((strip_rows, grid.shape[1]), base)
        r0 = 1 + (strip_rows - 1 - (thick_steps + 1)) // 2
        strip[r0 : r0 + thick_steps + 1, 0 : length_steps + 1] = top
        grid = np.vstack([grid, strip])

    if layout.frame is not None:
        frame = layout.frame
        fw = max(1, _steps(frame.width_mm, pitch))
        fh = frame.height_mm if frame.height_mm is not None else DEFAULT_FRAME_HEIGHT_MM
        fh = min(fh, relief)
        grid = np.pad(grid, fw, mode="constant", constant_values=base + fh)

    grid = np.clip(grid, base, top)
    return Heightfield(grid, pitch, base, relief, mm_per_um)
