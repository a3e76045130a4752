"""Deterministic synthetic test images.

``cells`` imitates a fluorescence micrograph: uneven illumination, soft
elliptical cells with brighter nuclei, fine filaments and shot noise.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .imaging import RasterImage, encode_png_gray8

BUNDLED_SAMPLE = "data/sample_cells_1000.png"
BUNDLED_UM_PER_PX = 0.5


def _quantize8(v: np.ndarray) -> np.ndarray:
    return np.rint(np.clip(v, 0.0, 1.0) * 255.0).astype(np.uint8)


def cells(width: int = 1000, height: int = 1000, n_cells: int = 60, seed: int = 7) -> np.ndarray:
    """uint8 grayscale image of ``height x width`` pixels."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    scale = min(width, height)
    cx0, cy0 = rng.uniform(0.3, 0.7, 2) * (width, height)
    out = 0.08 + 0.06 * np.exp(-((x - cx0) ** 2 + (y - cy0) ** 2) / (2 * (0.6 * scale) ** 2))

    for _ in range(n_cells):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        a, b = rng.uniform(0.03, 0.07, 2) * scale
        theta = rng.uniform(0, np.pi)
        c, s = np.cos(theta), np.sin(theta)
        u = ((x - cx) * c + (y - cy) * s) / a
        w = (-(x - cx) * s + (y - cy) * c) / b
        r2 = u**2 + w**2
        body = 1.0 / (1.0 + np.exp((np.sqrt(r2) - 1.0) * 12.0))
        nucleus = np.exp(-r2 / (2 * 0.3**2))
        out += rng.uniform(0.25, 0.45) * body + rng.uniform(0.2, 0.35) * nucleus

    for _ in range(n_cells // 2):
        # thin curved filament as a sampled quadratic path
        p0, p1, p2 = (rng.uniform(0, 1, (3, 2)) * (width, height))
        t = np.linspace(0, 1, 400)[:, None]
        path = (1 - t) ** 2 * p0 + 2 * (1 - t) * t * p1 + t**2 * p2
        ix = np.clip(np.rint(path[:, 0]).astype(int), 0, width - 1)
        iy = np.clip(np.rint(path[:, 1]).astype(int), 0, height - 1)
        out[iy, ix] += rng.uniform(0.1, 0.25)

    out = out / out.max() * 0.95
    out += rng.normal(0.0, 0.015, out.shape)
    return _quantize8(out)


def smooth_gradient(width: int = 512, height: int = 512) -> np.ndarray:
    """Float image in [0, 1] made of broad sinusoidal and radial ramps."""
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    u, v = x / (width - 1), y / (height - 1)
    r = np.hypot(u - 0.4, v - 0.6)
    g = 0.5 + 0.25 * np.sin(2 * np.pi * u) * np.cos(np.pi * v) + 0.2 * np.exp(-(r**2) / 0.08) - 0.1 * u
    return np.clip(g, 0.0, 1.0)


def bundled_sample_path() -> Path:
    return Path(str(resources.files("lithoprint").joinpath(BUNDLED_SAMPLE)))


def write_sample(path, width: int = 1000, height: int = 1000, seed: int = 7) -> Path:
    path = Path(path)
    path.write_bytes(encode_png_gray8(cells(width, height, seed=seed)))
    return path


def as_raster(values: np.ndarray, micrometers_per_pixel=None) -> RasterImage:
    values = np.asarray(values)
    if values.dtype == np.uint8:
        return RasterImage(values / 255.0, 8, micrometers_per_pixel)
    return RasterImage(values.astype(np.float64), 8, micrometers_per_pixel)
