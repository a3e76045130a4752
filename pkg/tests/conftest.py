import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lithoprint.imaging import RasterImage
from lithoprint.mesh import TriMesh
from lithoprint.relief import Heightfield

settings.register_profile(
    "default",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("default")


@st.composite
def rasters(draw, min_side=1, max_side=24):
    h = draw(st.integers(min_side, max_side))
    w = draw(st.integers(min_side, max_side))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    kind = draw(st.sampled_from(["uniform", "bytes", "constant"]))
    if kind == "uniform":
        px = rng.random((h, w))
    elif kind == "bytes":
        px = rng.integers(0, 256, (h, w)) / 255.0
    else:
        px = np.full((h, w), draw(st.floats(0.0, 1.0)))
    return RasterImage(px)


@st.composite
def heightfields(draw, max_side=40, levels=None):
    """Random fields; ``levels`` quantizes heights so plateaus appear."""
    rows = draw(st.integers(2, max_side))
    cols = draw(st.integers(2, max_side))
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    base = draw(st.floats(0.5, 3.0))
    relief = draw(st.floats(0.5, 5.0))
    pitch = draw(st.floats(0.05, 2.0))
    v = rng.random((rows, cols))
    if levels is not None:
        n = draw(st.integers(1, levels))
        v = np.rint(v * n) / n
    return Heightfield(base + v * relief, pitch, base, relief)


def box(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> TriMesh:
    """Axis-aligned cuboid, 12 outward-facing triangles."""
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    v = [
        (x0, y0, z0), (x1, y0, z0), (x1, y1, z0), (x0, y1, z0),
        (x0, y0, z1), (x1, y0, z1), (x1, y1, z1), (x0, y1, z1),
    ]
    t = [
        (0, 2, 1), (0, 3, 2),  # bottom
        (4, 5, 6), (4, 6, 7),  # top
        (0, 1, 5), (0, 5, 4),
        (1, 2, 6), (1, 6, 5),
        (2, 3, 7), (2, 7, 6),
        (3, 0, 4), (3, 4, 7),
    ]
    return TriMesh(np.array(v, dtype=float), np.array(t))


@pytest.fixture
def unit_box():
    return box()
