"""Image decoding and intensity filters on normalized luminance rasters.

All rasters hold float64 luminance in ``[0, 1]``.  Values are kept on the
dyadic grid ``k * 2**-53`` so that complementing (``1 - v``) is exact and
inversion is a true involution; the snapping error is below 6e-17.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import png
from PIL import Image, UnidentifiedImageError

from .errors import MalformedFile, ParameterOutOfRange, UnsupportedFormat, ZeroDimension

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"
JPEG_MAGIC = b"\xff\xd8\xff"

# BT.601 luma weights; fixed for reproducibility.
LUMA_R = 0.299
LUMA_G = 0.587
LUMA_B = 0.114

_GRID = 2.0**53


def _snap(values: np.ndarray) -> np.ndarray:
    return np.rint(values * _GRID) / _GRID


@dataclass(frozen=True, eq=False)
class RasterImage:
    """Row-major luminance grid, ``pixels[row, col]``."""

    pixels: np.ndarray
    source_bit_depth: int = 8
    micrometers_per_pixel: Optional[float] = None

    def __post_init__(self):
        p = np.array(self.pixels, dtype=np.float64)
        if p.ndim != 2:
            raise ValueError("pixels must be a 2-D array")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise ZeroDimension(f"raster has shape {p.shape}")
        if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
            raise ValueError("pixel values must lie in [0, 1]")
        if self.source_bit_depth not in (8, 16):
            raise ValueError("source_bit_depth must be 8 or 16")
        um = self.micrometers_per_pixel
        if um is not None and not (math.isfinite(um) and um > 0):
            raise ValueError("micrometers_per_pixel must be positive and finite")
        p = _snap(p)
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def with_pixels(self, pixels: np.ndarray) -> "RasterImage":
        return replace(self, pixels=pixels)

    def __eq__(self, other):
        if not isinstance(other, RasterImage):
            return NotImplemented
        return (
            self.source_bit_depth == other.source_bit_depth
            and self.micrometers_per_pixel == other.micrometers_per_pixel
            and np.array_equal(self.pixels, other.pixels)
        )

    __hash__ = None


def to_grayscale(r, g, b):
    """BT.601 luma; works on scalars or arrays.

    Evaluated as ``g + wr*(r-g) + wb*(b-g)`` (algebraically identical) so a
    gray pixel maps to itself exactly.
    """
    g = np.asarray(g, dtype=np.float64)
    y = g + LUMA_R * (np.asarray(r, dtype=np.float64) - g) + LUMA_B * (np.asarray(b, dtype=np.float64) - g)
    y = np.clip(y, 0.0, 1.0)
    return float(y) if y.ndim == 0 else y


def sniff_format(data: bytes) -> Optional[str]:
    if data.startswith(PNG_MAGIC):
        return "png"
    if data.startswith(JPEG_MAGIC):
        return "jpeg"
    return None


def decode(data: bytes, format: Optional[str] = None) -> RasterImage:
    """Decode PNG or JPEG bytes into a luminance raster.

    ``format`` may be ``"png"``, ``"jpeg"`` (``"jpg"``) or None to sniff the
    magic bytes.  Alpha channels are dropped.
    """
    detected = sniff_format(data)
    if format is not None:
        format = {"jpg": "jpeg"}.get(format.lower(), format.lower())
        if format not in ("png", "jpeg"):
            raise UnsupportedFormat(f"unsupported image format {format!r}")
        if detected != format:
            raise MalformedFile(f"data does not start with a valid {format} signature")
    elif detected is None:
        raise MalformedFile("unrecognised image signature")
    if detected == "png":
        return _decode_png(data)
    return _decode_jpeg(data)


def _decode_png(data: bytes) -> RasterImage:
    try:
        reader = png.Reader(bytes=data)
        width, height, rows, info = reader.asDirect()
        if width < 1 or height < 1:
            raise ZeroDimension(f"PNG has size {width}x{height}")
        arr = np.vstack([np.asarray(row, dtype=np.float64) for row in rows])
    except ZeroDimension:
        raise
    except (png.Error, ValueError, EOFError, OSError) as exc:
        raise MalformedFile(f"cannot decode PNG: {exc}") from exc
    except Exception as exc:  # zlib.error and friends
        raise MalformedFile(f"cannot decode PNG: {exc}") from exc
    if arr.shape[0] != height:
        raise MalformedFile("truncated PNG image data")
    planes = info["planes"]
    bitdepth = info["bitdepth"]
    arr = arr.reshape(height, width, planes) / float(2**bitdepth - 1)
    if info["greyscale"]:
        lum = arr[:, :, 0]
    else:
        lum = to_grayscale(arr[:, :, 0], arr[:, :, 1], arr[:, :, 2])
    return RasterImage(lum, source_bit_depth=16 if bitdepth == 16 else 8)


def _decode_jpeg(data: bytes) -> RasterImage:
    try:
        with Image.open(io.BytesIO(data)) as im:
            mode = im.mode
            if mode in ("CMYK", "YCCK"):
                raise UnsupportedFormat(f"JPEG colour mode {mode} is not supported")
            im.load()
            if mode == "L":
                arr = np.asarray(im, dtype=np.float64) / 255.0
                lum = arr
            elif mode == "RGB":
                arr = np.asarray(im, dtype=np.float64) / 255.0
                lum = to_grayscale(arr[:, :, 0], arr[:, :, 1], arr[:, :, 2])
            else:
                raise UnsupportedFormat(f"JPEG colour mode {mode} is not supported")
    except UnsupportedFormat:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise MalformedFile(f"cannot decode JPEG: {exc}") from exc
    if lum.size == 0:
        raise ZeroDimension("JPEG has zero size")
    return RasterImage(lum, source_bit_depth=8)


def load(path, micrometers_per_pixel: Optional[float] = None) -> RasterImage:
    with open(path, "rb") as fh:
        data = fh.read()
    img = decode(data)
    if micrometers_per_pixel is not None:
        img = replace(img, micrometers_per_pixel=micrometers_per_pixel)
    return img


def encode_png_gray8(values: np.ndarray) -> bytes:
    """Encode a 2-D uint8 array as an 8-bit grayscale PNG."""
    values = np.asarray(values)
    if values.dtype != np.uint8 or values.ndim != 2:
        raise ValueError("expected a 2-D uint8 array")
    height, width = values.shape
    buf = io.BytesIO()
    writer = png.Writer(width, height, greyscale=True, bitdepth=8, compression=9)
    writer.write(buf, values.tolist())
    return buf.getvalue()


def to_gray8(img: RasterImage) -> np.ndarray:
    return np.rint(img.pixels * 255.0).astype(np.uint8)


# -- filters -----------------------------------------------------------------


def invert(img: RasterImage) -> RasterImage:
    """Inverse LUT: ``v -> 1 - v``."""
    return img.with_pixels(1.0 - img.pixels)


def brightness_contrast(img: RasterImage, brightness: float = 0.0, contrast: float = 1.0) -> RasterImage:
    if not -1.0 <= brightness <= 1.0:
        raise ParameterOutOfRange(f"brightness must be in [-1, 1], got {brightness}")
    if not (contrast >= 0.0 and math.isfinite(contrast)):
        raise ParameterOutOfRange(f"contrast must be >= 0, got {contrast}")
    out = (img.pixels - 0.5) * contrast + 0.5 + brightness
    return img.with_pixels(np.clip(out, 0.0, 1.0))


def gamma(img: RasterImage, g: float) -> RasterImage:
    if not (g > 0.0 and math.isfinite(g)):
        raise ParameterOutOfRange(f"gamma must be > 0, got {g}")
    if g == 1.0:
        return img
    return img.with_pixels(np.clip(img.pixels**g, 0.0, 1.0))


def gaussian_kernel(sigma_px: float) -> np.ndarray:
    """Discrete Gaussian taps for offsets ``-ceil(3 sigma) .. ceil(3 sigma)``."""
    if not (sigma_px > 0.0 and math.isfinite(sigma_px)):
        raise ParameterOutOfRange(f"sigma must be > 0, got {sigma_px}")
    radius = math.ceil(3.0 * sigma_px)
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-(offsets**2) / (2.0 * sigma_px**2))
    return w / w.sum()


def _blur_axis(a: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    radius = len(kernel) // 2
    n = a.shape[axis]
    pad = [(0, 0), (0, 0)]
    pad[axis] = (radius, radius)
    padded = np.pad(a, pad, mode="edge")
    # Accumulate differences from the centre tap: a constant input yields
    # exactly zero increments, so constants are exact fixpoints.
    out = a.copy()
    for t, w in enumerate(kernel):
        if t == radius:
            continue
        shifted = padded[t : t + n, :] if axis == 0 else padded[:, t : t + n]
        out += w * (shifted - a)
    return out


def gaussian_blur(img: RasterImage, sigma_px: float) -> RasterImage:
    """Separable Gaussian blur with clamp-to-edge boundaries."""
    kernel = gaussian_kernel(sigma_px)
    out = _blur_axis(img.pixels, kernel, axis=1)
    out = _blur_axis(out, kernel, axis=0)
    return img.with_pixels(np.clip(out, 0.0, 1.0))


def posterize(img: RasterImage, levels: int) -> RasterImage:
    if int(levels) != levels or levels < 2:
        raise ParameterOutOfRange(f"posterize levels must be an integer >= 2, got {levels}")
    n = float(levels - 1)
    return img.with_pixels(np.rint(img.pixels * n) / n)
