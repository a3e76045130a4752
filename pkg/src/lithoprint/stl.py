"""Binary and ASCII STL serialization.

Binary layout: 80-byte header, uint32 facet count, then 50 bytes per facet
(normal and three vertices as little-endian float32, uint16 attribute = 0).
"""

from __future__ import annotations

import io
import os
import re
from typing import BinaryIO, Union

import numpy as np

from . import __version__
from .errors import AsciiDetected, DegenerateFacet, MalformedStl, TooManyTriangles
from .mesh import TriMesh

HEADER_SIZE = 80
PREAMBLE_SIZE = 84
FACET_SIZE = 50
MAX_TRIANGLES = 2**32 - 1

FACET_DTYPE = np.dtype(
    [("normal", "<f4", (3,)), ("vertices", "<f4", (3, 3)), ("attr", "<u2")]
)
assert FACET_DTYPE.itemsize == FACET_SIZE

HEADER = f"lithoprint {__version__} binary STL".encode("ascii").ljust(HEADER_SIZE, b" ")


def predicted_size_bytes(triangle_count: int) -> int:
    if triangle_count < 0:
        raise ValueError("triangle count must be >= 0")
    return PREAMBLE_SIZE + FACET_SIZE * int(triangle_count)


def _facets(mesh: TriMesh) -> np.ndarray:
    if mesh.n_triangles > MAX_TRIANGLES:
        raise TooManyTriangles(f"{mesh.n_triangles} triangles do not fit a uint32 count")
    corners = mesh.corners()
    if not np.all(np.isfinite(corners)):
        raise ValueError("mesh has non-finite coordinates")
    c32 = corners.astype("<f4")
    # Normals from the rounded coordinates, so re-writing a read-back mesh
    # reproduces them bit for bit.
    c = c32.astype(np.float64)
    n = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
    length = np.linalg.norm(n, axis=1)
    bad = np.flatnonzero(~(length > 0.0))
    if len(bad):
        raise DegenerateFacet(f"{len(bad)} facets have zero area after float32 rounding (first: {bad[0]})")
    facets = np.zeros(mesh.n_triangles, dtype=FACET_DTYPE)
    facets["normal"] = n / length[:, None]
    facets["vertices"] = c32
    return facets


def encode_binary(mesh: TriMesh) -> bytes:
    facets = _facets(mesh)
    return HEADER + np.uint32(len(facets)).astype("<u4").tobytes() + facets.tobytes()


def write_binary(mesh: TriMesh, dest: Union[str, os.PathLike, BinaryIO]) -> int:
    """Write ``mesh`` to a path or binary file object; returns bytes written."""
    data = encode_binary(mesh)
    if hasattr(dest, "write"):
        dest.write(data)
    else:
        with open(dest, "wb") as fh:
            fh.write(data)
    return len(data)


def _weld(corners: np.ndarray) -> TriMesh:
    """Index a triangle soup, merging vertices with bit-identical coordinates."""
    flat = np.ascontiguousarray(corners.reshape(-1, 3).astype("<f4"))
    if len(flat) == 0:
        return TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    keys = flat.view(np.dtype((np.void, 12))).ravel()
    _, first, inverse = np.unique(keys, return_index=True, return_inverse=True)
    # renumber by first appearance for a stable, file-ordered vertex list
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    vertices = flat[first[order]].astype(np.float64)
    return TriMesh(vertices, rank[inverse.ravel()].reshape(-1, 3))


def read_binary(data: bytes) -> TriMesh:
    if isinstance(data, (bytearray, memoryview)):
        data = bytes(data)
    n = len(data)
    if n < PREAMBLE_SIZE:
        if data.lstrip().startswith(b"solid"):
            raise AsciiDetected("file starts with 'solid' and is too short for binary STL; try the ASCII reader")
        raise MalformedStl(f"file of {n} bytes is shorter than the 84-byte preamble")
    count = int(np.frombuffer(data, dtype="<u4", count=1, offset=HEADER_SIZE)[0])
    expected = PREAMBLE_SIZE + FACET_SIZE * count
    if n != expected:
        if data.lstrip().startswith(b"solid"):
            raise AsciiDetected("file starts with 'solid' and its size does not match a binary STL; try the ASCII reader")
        raise MalformedStl(f"header claims {count} facets ({expected} bytes) but file has {n} bytes")
    facets = np.frombuffer(data, dtype=FACET_DTYPE, count=count, offset=PREAMBLE_SIZE)
    return _weld(facets["vertices"])


def read_binary_file(path) -> TriMesh:
    with open(path, "rb") as fh:
        return read_binary(fh.read())


def _fmt(x: float) -> str:
    return f"{x:.8e}"  # 9 significant digits: exact for float32


def write_ascii(mesh: TriMesh, name: str = "lithoprint") -> str:
    if not name or any(ch.isspace() for ch in name):
        raise ValueError("solid name must be a single non-empty token")
    facets = _facets(mesh)
    out = io.StringIO()
    out.write(f"solid {name}\n")
    for f in facets:
        n = f["normal"]
        out.write(f"  facet normal {_fmt(n[0])} {_fmt(n[1])} {_fmt(n[2])}\n    outer loop\n")
        for v in f["vertices"]:
            out.write(f"      vertex {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}\n")
        out.write("    endloop\n  endfacet\n")
    out.write(f"endsolid {name}\n")
    return out.getvalue()


_VERTEX = re.compile(r"^\s*vertex\s+(\S+)\s+(\S+)\s+(\S+)\s*$", re.MULTILINE)


def read_ascii(text: Union[str, bytes]) -> TriMesh:
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="replace")
    stripped = text.lstrip()
    if not stripped.startswith("solid"):
        raise MalformedStl("ASCII STL must begin with 'solid'")
    if "endsolid" not in text:
        raise MalformedStl("ASCII STL is missing 'endsolid'")
    try:
        values = [float(x) for m in _VERTEX.finditer(text) for x in m.groups()]
    except ValueError as exc:
        raise MalformedStl(f"bad vertex coordinate: {exc}") from exc
    if len(values) % 9:
        raise MalformedStl("vertex count is not a multiple of three")
    corners = np.array(values, dtype=np.float64).reshape(-1, 3, 3)
    return _weld(corners)


def read_any(data: bytes) -> TriMesh:
    """Binary first; falls back to ASCII when the binary reader detects it."""
    try:
        return read_binary(data)
    except AsciiDetected:
        return read_ascii(data)
