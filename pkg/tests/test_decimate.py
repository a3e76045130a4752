import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lithoprint.decimate import decimate_planar, ear_clip
from lithoprint.errors import NotWatertight, ParameterOutOfRange
from lithoprint.mesh import TriMesh, check_watertight, face_normals, signed_volume, tessellate
from lithoprint.relief import Heightfield, column_volume

from conftest import box, heightfields


def _area(points, tri):
    (ax, ay), (bx, by), (cx, cy) = (points[i] for i in tri)
    return 0.5 * ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))


def _polygon_area(points):
    return 0.5 * sum(points[i][0] * points[(i + 1) % len(points)][1] - points[(i + 1) % len(points)][0] * points[i][1]
                     for i in range(len(points)))


# -- ear clipping ----------------------------------------------------------------


def test_ear_clip_square():
    pts = [(0, 0), (1, 0), (1, 1), (0, 1)]
    tris = ear_clip(pts)
    # first convex ear in polygon order is vertex 0
    assert tris == [(3, 0, 1), (1, 2, 3)]
    assert sum(_area(pts, t) for t in tris) == pytest.approx(1.0)


def test_ear_clip_concave_is_exact_cover():
    pts = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
    tris = ear_clip(pts)
    assert len(tris) == len(pts) - 2
    assert all(_area(pts, t) > 0 for t in tris)
    assert sum(_area(pts, t) for t in tris) == pytest.approx(_polygon_area(pts))


def test_ear_clip_collinear_vertex_never_a_tip():
    pts = [(0, 0), (1, 0), (2, 0), (2, 1), (0, 1)]
    tris = ear_clip(pts)
    assert len(tris) == 3
    assert all(_area(pts, t) > 0 for t in tris)


def test_ear_clip_degenerate():
    assert ear_clip([(0, 0), (1, 0)]) is None
    assert ear_clip([(0, 0), (1, 0), (2, 0)]) is None
    # clockwise ring has no convex ear
    assert ear_clip([(0, 0), (0, 1), (1, 1), (1, 0)]) is None


def test_ear_clip_deterministic():
    rng = np.random.default_rng(2)
    angles = np.sort(rng.uniform(0, 2 * np.pi, 12))
    radii = rng.uniform(0.5, 1.0, 12)
    pts = [(r * np.cos(a), r * np.sin(a)) for r, a in zip(radii, angles)]
    assert ear_clip(pts) == ear_clip(pts)


# -- decimation ------------------------------------------------------------------


def _box_field(cols, rows, h=3.0, pitch=1.0):
    return Heightfield(np.full((rows, cols), h), pitch, h, 1.0)


def test_flat_box_collapses():
    mesh = tessellate(_box_field(100, 100))
    assert mesh.n_triangles == 20_788
    out = decimate_planar(mesh)
    assert check_watertight(out.mesh).ok
    assert out.mesh.n_triangles <= 0.05 * mesh.n_triangles
    assert signed_volume(out.mesh) == pytest.approx(signed_volume(mesh), rel=1e-9)


def test_minimal_box_unchanged():
    b = box()
    out = decimate_planar(b)
    assert out.removed_vertices == 0
    assert out.mesh.same_as(b)


def test_step_field():
    h = np.full((60, 80), 2.0)
    h[:, 40:] = 5.0
    hf = Heightfield(h, 0.5, 2.0, 3.0)
    mesh = tessellate(hf)
    out = decimate_planar(mesh)
    assert check_watertight(out.mesh).ok
    assert out.mesh.n_triangles < mesh.n_triangles
    assert signed_volume(out.mesh) == pytest.approx(column_volume(hf), rel=1e-9)


def test_no_degenerate_faces_after_decimation():
    h = np.full((30, 30), 2.0)
    h[5:20, 8:25] = 4.0
    out = decimate_planar(tessellate(Heightfield(h, 1.0, 2.0, 2.0)))
    assert np.all(np.linalg.norm(face_normals(out.mesh), axis=1) > 1e-9)


def test_budget_stops_early():
    mesh = tessellate(_box_field(40, 40))
    full = decimate_planar(mesh)
    partial = decimate_planar(mesh, budget=mesh.n_triangles - 100)
    assert partial.budget_met
    assert full.mesh.n_triangles < partial.mesh.n_triangles <= mesh.n_triangles - 100
    assert check_watertight(partial.mesh).ok


def test_unreachable_budget_is_best_effort():
    rng = np.random.default_rng(0)
    mesh = tessellate(Heightfield(2 + rng.random((10, 10)), 1.0, 2.0, 1.0))
    out = decimate_planar(mesh, budget=12)
    assert not out.budget_met
    assert check_watertight(out.mesh).ok


def test_lossy_eps_removes_more():
    rng = np.random.default_rng(4)
    hf = Heightfield(3 + 1e-4 * rng.random((30, 30)), 1.0, 3.0, 1.0)
    mesh = tessellate(hf)
    lossless = decimate_planar(mesh)
    lossy = decimate_planar(mesh, eps_mm=1e-3)
    assert lossy.mesh.n_triangles < lossless.mesh.n_triangles
    assert check_watertight(lossy.mesh).ok


def test_input_validation(unit_box):
    with pytest.raises(NotWatertight):
        decimate_planar(TriMesh(unit_box.vertices, unit_box.triangles[1:]))
    with pytest.raises(ParameterOutOfRange):
        decimate_planar(unit_box, eps_mm=-1.0)
    with pytest.raises(ValueError):
        decimate_planar(unit_box, engine="gpu")


@settings(max_examples=60)
@given(heightfields(max_side=14, levels=3))
def test_engines_agree(hf):
    mesh = tessellate(hf)
    a = decimate_planar(mesh, engine="compiled")
    b = decimate_planar(mesh, engine="python")
    assert a.mesh.same_as(b.mesh)
    assert a.removed_vertices == b.removed_vertices


@given(heightfields(max_side=30, levels=4))
def test_decimation_properties(hf):
    mesh = tessellate(hf)
    out = decimate_planar(mesh)
    assert check_watertight(out.mesh).ok
    assert out.mesh.n_triangles <= mesh.n_triangles
    assert signed_volume(out.mesh) == pytest.approx(column_volume(hf), rel=1e-9)
    assert decimate_planar(mesh).mesh.same_as(out.mesh)
