"""Lossless-by-default vertex decimation for closed triangle meshes.

A vertex is removed when its star is flat (all ring vertices within
``eps_mm`` of the star's best-fit plane) or when it sits on a straight crease
between two flat sides.  The hole is re-triangulated by ear clipping in the
plane of each side.  Removals never change topology: candidate diagonals
that already exist elsewhere in the mesh veto the removal.

Vertices are visited in ascending index order, pass after pass, until no
vertex can be removed or the triangle budget is met.  With ``eps_mm=0`` the
enclosed volume is unchanged up to floating-point accumulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import NotWatertight, ParameterOutOfRange
from .mesh import TriMesh, check_watertight

# Slack added to eps so exactly planar input survives float rounding;
# relative to the mesh bounding-box diagonal.
PLANAR_SLACK = 1e-12
# Minimum sine of a turn for an ear tip to count as strictly convex.
CONVEX_SINE = 1e-12


@dataclass
class DecimationResult:
    mesh: TriMesh
    budget_met: bool
    removed_vertices: int
    passes: int


# -- ear clipping -------------------------------------------------------------


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def ear_clip(points: Sequence[Tuple[float, float]]) -> Optional[List[Tuple[int, int, int]]]:
    """Triangulate a counter-clockwise simple polygon.

    Only strictly convex ears are clipped, and among them the first one in
    polygon order whose triangle holds no other vertex (boundary included).
    Returns index triples, or None when no valid ear exists (e.g. a
    self-overlapping or degenerate ring).
    """
    n = len(points)
    if n < 3:
        return None
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    span = max(max(xs) - min(xs), max(ys) - min(ys))
    if span <= 0.0:
        return None
    tol = CONVEX_SINE * span * span
    idx = list(range(n))
    out = []

    def convex(a, b, c):
        cr = _orient(xs[a], ys[a], xs[b], ys[b], xs[c], ys[c])
        if cr <= 0.0:
            return False
        ab2 = (xs[b] - xs[a]) ** 2 + (ys[b] - ys[a]) ** 2
        bc2 = (xs[c] - xs[b]) ** 2 + (ys[c] - ys[b]) ** 2
        return cr * cr > CONVEX_SINE * CONVEX_SINE * ab2 * bc2

    while len(idx) > 3:
        m = len(idx)
        flags = [convex(idx[k - 1], idx[k], idx[(k + 1) % m]) for k in range(m)]
        # Only non-convex vertices can intrude into an ear of a simple polygon.
        blockers = [idx[k] for k in range(m) if not flags[k]]
        for k in range(m):
            if not flags[k]:
                continue
            a, b, c = idx[k - 1], idx[k], idx[(k + 1) % m]
            ax, ay, bx, by, cx, cy = xs[a], ys[a], xs[b], ys[b], xs[c], ys[c]
            blocked = False
            for p in blockers:
                if p == a or p == c:
                    continue
                px, py = xs[p], ys[p]
                if (
                    _orient(ax, ay, bx, by, px, py) >= -tol
                    and _orient(bx, by, cx, cy, px, py) >= -tol
                    and _orient(cx, cy, ax, ay, px, py) >= -tol
                ):
                    blocked = True
                    break
            if not blocked:
                out.append((a, b, c))
                del idx[k]
                break
        else:
            return None
    a, b, c = idx
    if not convex(a, b, c):
        return None
    out.append((a, b, c))
    return out


# -- vector helpers on tuples (faster than numpy for tiny stars) ------------


def _sub(p, q):
    return (p[0] - q[0], p[1] - q[1], p[2] - q[2])


def _cross(p, q):
    return (p[1] * q[2] - p[2] * q[1], p[2] * q[0] - p[0] * q[2], p[0] * q[1] - p[1] * q[0])


def _dot(p, q):
    return p[0] * q[0] + p[1] * q[1] + p[2] * q[2]


def _unit(p):
    n = math.sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])
    if n == 0.0 or not math.isfinite(n):
        return None
    return (p[0] / n, p[1] / n, p[2] / n)


def _plane_spread(points, normal):
    """Max distance of ``points`` from the plane through their centroid."""
    k = len(points)
    cx = sum(p[0] for p in points) / k
    cy = sum(p[1] for p in points) / k
    cz = sum(p[2] for p in points) / k
    c = cx * normal[0] + cy * normal[1] + cz * normal[2]
    return max(abs(_dot(p, normal) - c) for p in points)


def _basis(normal):
    ax = min(range(3), key=lambda i: abs(normal[i]))
    e = [0.0, 0.0, 0.0]
    e[ax] = 1.0
    u = _unit(_cross(normal, e))
    w = _cross(normal, u)
    return u, w


class _Decimator:
    def __init__(self, mesh: TriMesh, eps_mm: float):
        self.pos = [tuple(p) for p in mesh.vertices.tolist()]
        self.tris: List[Optional[Tuple[int, int, int]]] = [tuple(t) for t in mesh.triangles.tolist()]
        self.vt: List[set] = [set() for _ in self.pos]
        for i, (a, b, c) in enumerate(self.tris):
            self.vt[a].add(i)
            self.vt[b].add(i)
            self.vt[c].add(i)
        self.alive = [True] * len(self.pos)
        self.n_tris = len(self.tris)
        self.tol = eps_mm + PLANAR_SLACK * _span(mesh)

    # ring of v in CCW order (seen from outside), starting at its largest index
    def ring(self, v):
        nxt = {}
        for t in self.vt[v]:
            a, b, c = self.tris[t]
            if a == v:
                x, y = b, c
            elif b == v:
                x, y = c, a
            else:
                x, y = a, b
            if x in nxt:
                return None
            nxt[x] = y
        if len(nxt) < 3:
            return None
        start = max(nxt)
        ring = [start]
        cur = nxt[start]
        while cur != start:
            ring.append(cur)
            cur = nxt.get(cur)
            if cur is None or len(ring) > len(nxt):
                return None
        if len(ring) != len(nxt):
            return None
        return ring

    def polygons(self, v, ring):
        """Split the hole left by ``v`` into planar polygons, or None."""
        pv = self.pos[v]
        q = [_sub(self.pos[r], pv) for r in ring]
        k = len(ring)
        tri_n = [_cross(q[i], q[(i + 1) % k]) for i in range(k)]
        total = (sum(n[0] for n in tri_n), sum(n[1] for n in tri_n), sum(n[2] for n in tri_n))
        tol = self.tol
        normal = _unit(total)
        if normal is not None and _plane_spread(q + [(0.0, 0.0, 0.0)], normal) <= tol:
            if all(_dot(n, normal) > 0.0 for n in tri_n):
                return [(list(range(k)), normal)]
            return None

        # Crease vertex: exactly two feature edges, collinear through v.
        units = [_unit(n) for n in tri_n]
        if any(u is None for u in units):
            return None
        features = []
        for i in range(k):
            before, after = units[i - 1], units[i]
            if abs(_dot(q[(i + 1) % k], before)) > tol or abs(_dot(q[i - 1], after)) > tol:
                features.append(i)
                if len(features) > 2:
                    return None
        if len(features) != 2:
            return None
        s, e = features
        qs, qe = q[s], q[e]
        if _dot(qs, qe) >= 0.0:
            return None
        chord = _sub(qe, qs)
        chord_len = math.sqrt(_dot(chord, chord))
        if chord_len == 0.0:
            return None
        cr = _cross(qs, qe)
        if math.sqrt(_dot(cr, cr)) / chord_len > tol:
            return None
        out = []
        for arc in (list(range(s, e + 1)), list(range(e, k)) + list(range(0, s + 1))):
            faces = arc[:-1]
            n_arc = (
                sum(tri_n[j][0] for j in faces),
                sum(tri_n[j][1] for j in faces),
                sum(tri_n[j][2] for j in faces),
            )
            n_arc = _unit(n_arc)
            if n_arc is None:
                return None
            pts = [q[j] for j in arc] + [(0.0, 0.0, 0.0)]
            if _plane_spread(pts, n_arc) > tol:
                return None
            if not all(_dot(tri_n[j], n_arc) > 0.0 for j in faces):
                return None
            out.append((arc, n_arc))
        return out

    def edge_exists(self, a, b):
        tris = self.tris
        for t in self.vt[a]:
            if b in tris[t]:
                return True
        return False

    def try_remove(self, v):
        ring = self.ring(v)
        if ring is None:
            return None
        polys = self.polygons(v, ring)
        if polys is None:
            return None
        k = len(ring)
        pv = self.pos[v]
        new = []
        for arc, normal in polys:
            u, w = _basis(normal)
            pts = []
            for j in arc:
                d = _sub(self.pos[ring[j]], pv)
                pts.append((_dot(d, u), _dot(d, w)))
            clipped = ear_clip(pts)
            if clipped is None:
                return None
            for a, b, c in clipped:
                new.append((ring[arc[a]], ring[arc[b]], ring[arc[c]]))

        if k == 3:
            target = set(ring)
            for t in self.vt[ring[0]]:
                if set(self.tris[t]) == target:
                    return None
        else:
            ring_pos = {r: i for i, r in enumerate(ring)}
            checked = set()
            for tri in new:
                for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                    d = (ring_pos[a] - ring_pos[b]) % k
                    if d == 1 or d == k - 1:
                        continue
                    key = (a, b) if a < b else (b, a)
                    if key in checked:
                        continue
                    checked.add(key)
                    if self.edge_exists(a, b):
                        return None

        tris, vt = self.tris, self.vt
        for t in vt[v]:
            for x in tris[t]:
                if x != v:
                    vt[x].discard(t)
            tris[t] = None
        vt[v] = set()
        self.alive[v] = False
        for tri in new:
            tid = len(tris)
            tris.append(tri)
            for x in tri:
                vt[x].add(tid)
        self.n_tris += len(new) - k

        touched = set(ring)
        for r in ring:
            for t in vt[r]:
                touched.update(tris[t])
        return touched

    def run(self, budget):
        n = len(self.pos)
        queued = [True] * n
        later = [False] * n
        removed = passes = 0
        met = budget is not None and self.n_tris <= budget
        work = n > 0
        while work and not met:
            passes += 1
            for v in range(n):
                if not queued[v]:
                    continue
                queued[v] = False
                if not self.alive[v]:
                    continue
                touched = self.try_remove(v)
                if touched is None:
                    continue
                removed += 1
                if budget is not None and self.n_tris <= budget:
                    met = True
                    break
                for u in touched:
                    if self.alive[u]:
                        if u > v:
                            queued[u] = True
                        else:
                            later[u] = True
            queued, later = later, [False] * n
            work = any(queued)
        return removed, passes, met

    def result(self) -> TriMesh:
        faces = np.array([t for t in self.tris if t is not None], dtype=np.int64).reshape(-1, 3)
        return _compact(np.array(self.pos, dtype=np.float64).reshape(-1, 3), faces)


def decimate_planar(
    mesh: TriMesh, eps_mm: float = 0.0, budget: Optional[int] = None, engine: str = "compiled"
) -> DecimationResult:
    """Remove flat and straight-crease vertices until fixpoint or ``budget``.

    ``budget`` is a maximum triangle count; when it cannot be reached the
    best-effort mesh is returned with ``budget_met=False``.  ``engine`` picks
    the numba kernel (``"compiled"``) or the pure-Python reference
    (``"python"``); both produce identical meshes.
    """
    if not (eps_mm >= 0.0 and math.isfinite(eps_mm)):
        raise ParameterOutOfRange(f"eps_mm must be >= 0, got {eps_mm}")
    report = check_watertight(mesh)
    if not report.ok:
        raise NotWatertight(report.defects)
    if engine == "python":
        dec = _Decimator(mesh, eps_mm)
        removed, passes, met = dec.run(budget)
        out = dec.result() if removed else mesh
        return DecimationResult(out, met, removed, passes)
    if engine != "compiled":
        raise ValueError(f"unknown engine {engine!r}")
    from ._decimate_kernel import decimate_kernel

    tol = eps_mm + PLANAR_SLACK * _span(mesh)
    faces, removed, passes, met = decimate_kernel(
        np.ascontiguousarray(mesh.vertices), np.ascontiguousarray(mesh.triangles), tol, -1 if budget is None else int(budget)
    )
    if removed == 0:
        return DecimationResult(mesh, bool(met), 0, int(passes))
    return DecimationResult(_compact(mesh.vertices, faces), bool(met), int(removed), int(passes))


def _span(mesh: TriMesh) -> float:
    if mesh.n_vertices == 0:
        return 0.0
    return float(np.linalg.norm(mesh.vertices.max(axis=0) - mesh.vertices.min(axis=0)))


def _compact(vertices: np.ndarray, faces: np.ndarray) -> TriMesh:
    used = np.unique(faces)
    remap = np.full(len(vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    return TriMesh(vertices[used], remap[faces])
