"""Indexed triangle meshes: tessellation of heightfields, watertightness, volume."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .errors import BudgetTooSmall, NotWatertight
from .relief import Heightfield


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Vertices in mm and counter-clockwise (seen from outside) index triples."""

    vertices: np.ndarray
    triangles: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        t = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise ValueError("triangle index out of range")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "triangles", t)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def corners(self) -> np.ndarray:
        """(F, 3, 3) array of triangle corner coordinates."""
        return self.vertices[self.triangles]

    def translated(self, offset) -> "TriMesh":
        return TriMesh(self.vertices + np.asarray(offset, dtype=np.float64), self.triangles)

    def same_as(self, other: "TriMesh") -> bool:
        return np.array_equal(self.vertices, other.vertices) and np.array_equal(self.triangles, other.triangles)


@dataclass
class WatertightReport:
    ok: bool
    defects: List[str] = field(default_factory=list)
    boundary_edges: int = 0
    overmatched_edges: int = 0
    same_direction_edges: int = 0
    euler_characteristic: int = 0

    def __bool__(self):
        return self.ok


def check_watertight(mesh: TriMesh) -> WatertightReport:
    """Edge-pairing, winding and Euler-characteristic diagnostics."""
    t = mesh.triangles
    nv = max(mesh.n_vertices, 1)
    defects = []
    if len(t) == 0:
        chi = mesh.n_vertices
        return WatertightReport(False, ["mesh has no triangles", f"Euler characteristic {chi} != 2"], euler_characteristic=chi)
    repeated = int(np.count_nonzero((t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 2] == t[:, 0])))
    if repeated:
        defects.append(f"{repeated} triangles with repeated vertex indices")
    a = t.reshape(-1)
    b = t[:, [1, 2, 0]].reshape(-1)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    key = lo * nv + hi
    forward = (a < b).astype(np.int64)
    order = np.argsort(key, kind="stable")
    key = key[order]
    forward = forward[order]
    starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
    uses = np.diff(np.r_[starts, len(key)])
    fwd_uses = np.add.reduceat(forward, starts)
    n_edges = len(starts)

    boundary = int(np.count_nonzero(uses == 1))
    over = int(np.count_nonzero(uses > 2))
    same_dir = int(np.count_nonzero((uses == 2) & (fwd_uses != 1)))
    chi = mesh.n_vertices - n_edges + len(t)
    if boundary:
        defects.append(f"{boundary} boundary edges")
    if over:
        defects.append(f"{over} over-matched edges")
    if same_dir:
        defects.append(f"{same_dir} same-direction shared edges")
    if chi != 2:
        defects.append(f"Euler characteristic {chi} != 2")
    return WatertightReport(not defects, defects, boundary, over, same_dir, chi)


def signed_volume(mesh: TriMesh, check: bool = True) -> float:
    """Enclosed volume by the divergence theorem; positive when outward-oriented."""
    if check:
        report = check_watertight(mesh)
        if not report.ok:
            raise NotWatertight(report.defects)
    if mesh.n_triangles == 0:
        return 0.0
    # Relative to one vertex: same value for a closed surface, less cancellation.
    v = mesh.vertices - mesh.vertices[0]
    p = v[mesh.triangles]
    det = np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2]))
    return float(det.sum() / 6.0)


def face_normals(mesh: TriMesh) -> np.ndarray:
    """Unnormalised CCW cross products, one per triangle."""
    p = mesh.corners()
    return np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])


# -- tessellation ------------------------------------------------------------


def triangle_count(cols: int, rows: int) -> int:
    """Triangles emitted by :func:`tessellate` for a ``cols x rows`` grid."""
    p = 2 * (cols - 1) + 2 * (rows - 1)
    return 2 * (cols - 1) * (rows - 1) + 3 * p - 2


def vertex_count(cols: int, rows: int) -> int:
    return cols * rows + 2 * (cols - 1) + 2 * (rows - 1)


def perimeter_ring(cols: int, rows: int) -> np.ndarray:
    """Top-grid indices of the border, counter-clockwise seen from above.

    Starts at grid vertex (0, 0) (image top-left), runs down the left edge,
    right along the bottom, up the right edge and back along the top.
    """
    W, H = cols, rows
    left = np.arange(0, H) * W
    bottom = (H - 1) * W + np.arange(1, W)
    right = np.arange(H - 2, -1, -1) * W + (W - 1)
    top = np.arange(W - 2, 0, -1)
    return np.concatenate([left, bottom, right, top])


def _top_band(r0: int, r1: int, W: int) -> np.ndarray:
    r = np.arange(r0, r1)[:, None]
    c = np.arange(W - 1)[None, :]
    p00 = (r * W + c).ravel()
    p01 = p00 + 1
    p10 = p00 + W
    p11 = p10 + 1
    tri = np.empty((len(p00), 2, 3), dtype=np.int64)
    tri[:, 0] = np.stack([p00, p10, p11], axis=1)
    tri[:, 1] = np.stack([p00, p11, p01], axis=1)
    return tri.reshape(-1, 3)


def _bottom_strip(P: int) -> np.ndarray:
    """Ring-position triples triangulating the bottom without collinear triples.

    Zigzags between the two perimeter chains that run from ring position 0
    (grid corner (0, 0)) to the opposite corner at position ``P // 2``.  Every
    triangle takes vertices from both chains, so none has all three corners
    on one side of the rectangle.
    """
    m = P // 2
    c1 = list(range(0, m + 1))
    c2 = [0] + list(range(P - 1, m - 1, -1))
    tris = [(0, c1[1], c2[1])]
    i = j = 1
    while i < m - 1 or j < m - 1:
        if i < m - 1:
            tris.append((c1[i], c1[i + 1], c2[j]))
            i += 1
        if j < m - 1:
            tris.append((c1[i], c2[j], c2[j + 1]))
            j += 1
    tris.append((c1[m - 1], m, c2[m - 1]))
    # Ascending ring positions on a convex CCW ring are CCW; the bottom faces down.
    out = np.sort(np.array(tris, dtype=np.int64), axis=1)
    return out[:, ::-1]


def tessellate(hf: Heightfield, threads: int = 1) -> TriMesh:
    """Closed mesh: top surface, vertical perimeter walls, flat bottom at z=0.

    Grid row 0 (the image's top row) is placed at the largest y so the print
    reads correctly from above.  ``threads`` splits the top surface into row
    bands; the output is identical for any thread count.
    """
    H, W = hf.heights.shape
    if np.any(hf.heights <= 0.0):
        raise ValueError("heights must be strictly positive to form walls")
    pitch = hf.pitch_mm
    xs = np.arange(W, dtype=np.float64) * pitch
    ys = (H - 1 - np.arange(H, dtype=np.float64)) * pitch
    top = np.empty((H, W, 3))
    top[:, :, 0] = xs[None, :]
    top[:, :, 1] = ys[:, None]
    top[:, :, 2] = hf.heights
    top = top.reshape(-1, 3)

    ring = perimeter_ring(W, H)
    P = len(ring)
    bottom = top[ring].copy()
    bottom[:, 2] = 0.0
    vertices = np.concatenate([top, bottom])

    if threads > 1 and H > 2:
        n_bands = min(threads, H - 1)
        edges = np.linspace(0, H - 1, n_bands + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            bands = list(pool.map(lambda k: _top_band(edges[k], edges[k + 1], W), range(n_bands)))
        top_tris = np.concatenate(bands)
    else:
        top_tris = _top_band(0, H - 1, W)

    base = W * H
    k = np.arange(P)
    k1 = (k + 1) % P
    t_k, t_k1 = ring[k], ring[k1]
    b_k, b_k1 = base + k, base + k1
    walls = np.empty((P, 2, 3), dtype=np.int64)
    walls[:, 0] = np.stack([t_k1, t_k, b_k], axis=1)
    walls[:, 1] = np.stack([t_k1, b_k, b_k1], axis=1)
    walls = walls.reshape(-1, 3)

    floor = base + _bottom_strip(P)
    return TriMesh(vertices, np.concatenate([top_tris, walls, floor]))


# Smallest mesh the tessellator can emit: the 12-triangle box of a 2x2 grid.
MIN_TRIANGLES = triangle_count(2, 2)
MIN_BUDGET_BYTES = 84 + 50 * MIN_TRIANGLES


def triangle_budget_for_bytes(budget_bytes: int) -> int:
    """Largest triangle count whose binary STL fits in ``budget_bytes``."""
    if budget_bytes < MIN_BUDGET_BYTES:
        raise BudgetTooSmall(
            f"budget of {budget_bytes} bytes is below the {MIN_BUDGET_BYTES}-byte minimum closed mesh"
        )
    return (int(budget_bytes) - 84) // 50
