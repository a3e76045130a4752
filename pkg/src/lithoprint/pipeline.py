"""The end-to-end job: images -> filters -> heightfield -> mesh -> STL."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from . import imaging
from .config import FilterSettings, JobConfig, calibration_for
from .decimate import decimate_planar
from .errors import ConfigError, NotWatertight
from .fab import solve_budget
from .imaging import RasterImage
from .layout import Frame, Panel, PlateLayout, ScaleBar, compose
from .mesh import TriMesh, check_watertight, signed_volume, tessellate, triangle_budget_for_bytes, triangle_count
from .relief import Heightfield, downsample, from_image
from .stl import predicted_size_bytes, write_binary

SUMMARY_SCHEMA = "lithoprint.convert/1"
LIGHT_AZIMUTH_DEG = 315.0
LIGHT_ALTITUDE_DEG = 45.0


def apply_filters(img: RasterImage, settings: FilterSettings) -> RasterImage:
    for name in settings.active():
        if name == "blur":
            img = imaging.gaussian_blur(img, settings.blur_sigma)
        elif name == "brightness_contrast":
            img = imaging.brightness_contrast(img, settings.brightness, settings.contrast)
        elif name == "gamma":
            img = imaging.gamma(img, settings.gamma)
        elif name == "invert":
            img = imaging.invert(img)
        elif name == "posterize":
            img = imaging.posterize(img, settings.posterize_levels)
    return img


def load_images(config: JobConfig) -> List[RasterImage]:
    if not config.inputs:
        raise ConfigError("no input images given")
    return [
        apply_filters(imaging.load(path, calibration_for(config, i)), config.filters)
        for i, path in enumerate(config.inputs)
    ]


def make_layout(fields: List[Heightfield], config: JobConfig) -> PlateLayout:
    s = config.layout
    columns = s.columns or len(fields)
    panels = [Panel(f, row=i // columns, col=i % columns) for i, f in enumerate(fields)]
    frame = Frame(s.frame_width_mm, s.frame_height_mm) if s.frame else None
    bar = ScaleBar(s.scale_bar_um, s.bar_thickness_mm, s.bar_margin_mm) if s.scale_bar_um is not None else None
    return PlateLayout(panels, s.gutter_mm, frame, bar)


def plate_at(fields: List[Heightfield], config: JobConfig, k: int) -> Heightfield:
    return compose(make_layout([downsample(f, k) for f in fields], config))


@dataclass(frozen=True)
class Plate:
    field: Heightfield
    k: int


def plan_plate(fields: List[Heightfield], config: JobConfig) -> Plate:
    """Smallest downsample factor whose composed plate fits the byte budget.

    The search starts from the factor the full-resolution plate needs and
    then walks in both directions, since frames and gutters are sized in mm
    and do not scale exactly with ``k``.
    """
    max_tris = triangle_budget_for_bytes(config.budget_bytes)

    def fits(k: int) -> Optional[Heightfield]:
        hf = plate_at(fields, config, k)
        return hf if triangle_count(hf.cols, hf.rows) <= max_tris else None

    full = plate_at(fields, config, 1)
    k = solve_budget(full.cols, full.rows, config.budget_bytes)
    hf = fits(k)
    while hf is None:
        k += 1
        hf = fits(k)  # ResultTooSmall ends the search when nothing fits
    while k > 1:
        smaller = fits(k - 1)
        if smaller is None:
            break
        k, hf = k - 1, smaller
    return Plate(hf, k)


def full_resolution_plate(config: JobConfig) -> Heightfield:
    fields = [from_image(img, config.relief) for img in load_images(config)]
    return plate_at(fields, config, 1)


@dataclass
class ConvertResult:
    mesh: TriMesh
    plate: Plate
    tessellated_triangles: int
    removed_vertices: int
    summary: dict


def build_mesh(config: JobConfig) -> ConvertResult:
    images = load_images(config)
    fields = [from_image(img, config.relief) for img in images]
    plate = plan_plate(fields, config)
    mesh = tessellate(plate.field, threads=config.threads)
    tessellated = mesh.n_triangles
    removed = 0
    if config.decimate:
        result = decimate_planar(mesh, eps_mm=config.eps_mm)
        mesh, removed = result.mesh, result.removed_vertices
    report = check_watertight(mesh)
    if not report.ok:
        raise NotWatertight(report.defects)
    hf = plate.field
    summary = {
        "schema": SUMMARY_SCHEMA,
        "inputs": [str(p) for p in config.inputs],
        "source_dims": [[img.width, img.height] for img in images],
        "k": plate.k,
        "grid": [hf.cols, hf.rows],
        "pitch_mm": hf.pitch_mm,
        "size_mm": [hf.width_mm, hf.depth_mm, float(hf.heights.max())],
        "triangles_tessellated": tessellated,
        "removed_vertices": removed,
        "triangles": mesh.n_triangles,
        "vertices": mesh.n_vertices,
        "budget_bytes": config.budget_bytes,
        "predicted_bytes": predicted_size_bytes(mesh.n_triangles),
        "volume_mm3": signed_volume(mesh, check=False),
        "watertight": True,
    }
    return ConvertResult(mesh, plate, tessellated, removed, summary)


def convert(config: JobConfig) -> ConvertResult:
    if config.output is None:
        raise ConfigError("no output path given")
    result = build_mesh(config)
    Path(config.output).parent.mkdir(parents=True, exist_ok=True)
    written = write_binary(result.mesh, config.output)
    result.summary["output"] = str(config.output)
    result.summary["actual_bytes"] = written
    return result


# -- preview rasters -----------------------------------------------------------


def heightmap_gray8(hf: Heightfield) -> np.ndarray:
    """``(h - base) / relief`` mapped to 0..255."""
    v = (hf.heights - hf.base_mm) / hf.relief_mm
    return np.rint(np.clip(v, 0.0, 1.0) * 255.0).astype(np.uint8)


def hillshade_gray8(
    hf: Heightfield, azimuth_deg: float = LIGHT_AZIMUTH_DEG, altitude_deg: float = LIGHT_ALTITUDE_DEG
) -> np.ndarray:
    """Lambertian shading of the surface; azimuth clockwise from north (image up)."""
    dz_drow, dz_dcol = np.gradient(hf.heights, hf.pitch_mm)
    # rows run southwards, so the northward slope is the negated row slope
    dz_dx, dz_dy = dz_dcol, -dz_drow
    az = math.radians(azimuth_deg)
    alt = math.radians(altitude_deg)
    light = np.array([math.cos(alt) * math.sin(az), math.cos(alt) * math.cos(az), math.sin(alt)])
    norm = np.sqrt(dz_dx**2 + dz_dy**2 + 1.0)
    shade = (-dz_dx * light[0] - dz_dy * light[1] + light[2]) / norm
    return np.rint(np.clip(shade, 0.0, 1.0) * 255.0).astype(np.uint8)


def preview(config: JobConfig) -> Tuple[Path, Path]:
    heightmap_path, hillshade_path = config.preview_paths()
    hf = full_resolution_plate(config)
    for path, values in ((heightmap_path, heightmap_gray8(hf)), (hillshade_path, hillshade_gray8(hf))):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_bytes(imaging.encode_png_gray8(values))
    return heightmap_path, hillshade_path
