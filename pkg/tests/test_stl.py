import io
import struct

import numpy as np
import pytest
from hypothesis import given

from lithoprint import stl
from lithoprint.errors import AsciiDetected, DegenerateFacet, MalformedStl
from lithoprint.mesh import TriMesh, signed_volume, tessellate

from conftest import box, heightfields


def test_box_is_684_bytes(unit_box):
    data = stl.encode_binary(unit_box)
    assert len(data) == 684 == stl.predicted_size_bytes(12)


def test_header_layout(unit_box):
    data = stl.encode_binary(unit_box)
    assert len(stl.HEADER) == 80 and not stl.HEADER.startswith(b"solid")
    assert data[:80] == stl.HEADER
    assert struct.unpack("<I", data[80:84])[0] == 12
    # attribute bytes are zero
    facets = np.frombuffer(data, dtype=stl.FACET_DTYPE, offset=84)
    assert np.all(facets["attr"] == 0)


def test_empty_mesh():
    empty = TriMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=int))
    data = stl.encode_binary(empty)
    assert len(data) == 84
    assert stl.read_binary(data).n_triangles == 0
    text = stl.write_ascii(empty, "empty")
    assert text.splitlines() == ["solid empty", "endsolid empty"]


def test_predicted_sizes():
    assert stl.predicted_size_bytes(0) == 84
    assert stl.predicted_size_bytes(1_999_998) == 99_999_984
    assert stl.predicted_size_bytes(2_007_988) == 100_399_484


def test_write_to_path_and_stream(tmp_path, unit_box):
    path = tmp_path / "b.stl"
    assert stl.write_binary(unit_box, path) == 684
    buf = io.BytesIO()
    stl.write_binary(unit_box, buf)
    assert buf.getvalue() == path.read_bytes()
    assert stl.read_binary_file(path).n_triangles == 12


def test_read_rejects_size_mismatch():
    data = bytearray(100)
    data[80:84] = struct.pack("<I", 5)
    with pytest.raises(MalformedStl):
        stl.read_binary(bytes(data))
    with pytest.raises(MalformedStl):
        stl.read_binary(b"\x00" * 10)


def test_ascii_detected(unit_box):
    text = stl.write_ascii(unit_box).encode()
    with pytest.raises(AsciiDetected):
        stl.read_binary(text)
    assert stl.read_any(text).n_triangles == 12


def test_degenerate_facet_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
    with pytest.raises(DegenerateFacet):
        stl.encode_binary(TriMesh(v, [[0, 1, 2]]))
    # distinct doubles that collapse in float32
    v = np.array([[1, 1, 0], [2, 2, 0], [3, 3 + 1e-9, 0]], dtype=float)
    with pytest.raises(DegenerateFacet):
        stl.encode_binary(TriMesh(v, [[0, 1, 2]]))


def test_non_finite_rejected():
    v = np.array([[0, 0, 0], [1, 0, 0], [np.nan, 1, 0]], dtype=float)
    with pytest.raises(ValueError):
        stl.encode_binary(TriMesh(v, [[0, 1, 2]]))


def test_round_trip_welds_vertices():
    b = box((0.1, 0.2, 0.3), (1.7, 2.9, 3.3))
    back = stl.read_binary(stl.encode_binary(b))
    assert back.n_vertices == 8
    assert np.array_equal(back.corners(), b.corners().astype(np.float32).astype(np.float64))


def test_ascii_box():
    text = stl.write_ascii(box())
    assert text.count("facet normal") == 12
    with pytest.raises(ValueError):
        stl.write_ascii(box(), "two words")
    with pytest.raises(MalformedStl):
        stl.read_ascii("facet normal 0 0 1")


@given(heightfields(max_side=20))
def test_ascii_and_binary_volumes_agree(hf):
    mesh = tessellate(hf)
    vb = signed_volume(stl.read_binary(stl.encode_binary(mesh)))
    va = signed_volume(stl.read_ascii(stl.write_ascii(mesh)))
    assert va == pytest.approx(vb, rel=1e-6)
