import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from suco.core import Dataset
from suco.errors import ConfigurationError, FormatError, IncompatibilityError
from suco.io import (
    hold_out_queries,
    load_dataset,
    load_queries,
    parse_vecs,
    read_vecs,
    write_vecs,
)


@pytest.mark.parametrize("kind,ext,values", [
    ("f32", ".fvecs", np.array([[1.5, -2.0, 3.25], [0, 0, 1e-3]], dtype=np.float32)),
    ("u8", ".bvecs", np.array([[0, 255, 7], [1, 2, 3]], dtype=np.uint8)),
    ("i32", ".ivecs", np.array([[-1, 2**31 - 1, 0], [5, 6, 7]], dtype=np.int32)),
])
def test_round_trip(tmp_path, kind, ext, values):
    path = tmp_path / f"x{ext}"
    write_vecs(path, kind, values)
    assert path.stat().st_size == 2 * (4 + 3 * values.itemsize)
    back = read_vecs(path)
    np.testing.assert_array_equal(back, values)
    assert back.dtype == (np.float32 if kind != "i32" else np.int32)


def test_byte_layout(tmp_path):
    path = tmp_path / "a.fvecs"
    write_vecs(path, "f32", [[1.0, 2.0]])
    assert path.read_bytes() == struct.pack("<iff", 2, 1.0, 2.0)


def test_dimension_mismatch_names_record():
    raw = struct.pack("<iff", 2, 1, 2) + struct.pack("<ifff", 3, 1, 2, 3)
    with pytest.raises(FormatError, match="record 1"):
        parse_vecs(raw, "f32")


def test_truncation_reports_offset():
    raw = struct.pack("<iff", 2, 1, 2) * 3
    with pytest.raises(FormatError, match="byte offset 24"):
        parse_vecs(raw[:-2], "f32")


def test_limit_does_not_hide_truncation():
    raw = struct.pack("<iff", 2, 1, 2) * 3
    assert parse_vecs(raw, "f32", limit=2).shape == (2, 2)
    assert parse_vecs(raw[:-2], "f32", limit=1).shape == (1, 2)
    with pytest.raises(FormatError):
        parse_vecs(raw[:-2], "f32", limit=10)


def test_bad_header():
    with pytest.raises(FormatError):
        parse_vecs(b"\x01\x00", "f32")
    with pytest.raises(FormatError):
        parse_vecs(struct.pack("<i", -4), "f32")


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 6), st.integers(1, 5), st.sampled_from(["f32", "u8", "i32"]), st.data())
def test_any_truncation_is_a_format_error(n, dim, kind, data):
    rng = np.random.default_rng(n * 31 + dim)
    arr = rng.integers(0, 200, size=(n, dim))
    elem = {"f32": 4, "u8": 1, "i32": 4}[kind]
    rec = 4 + dim * elem
    out = bytearray()
    for row in arr:
        out += struct.pack("<i", dim)
        out += np.asarray(row, dtype={"f32": "<f4", "u8": "u1", "i32": "<i4"}[kind]).tobytes()
    cut = data.draw(st.integers(0, len(out) - 1))
    if cut % rec == 0 and cut > 0:
        assert parse_vecs(bytes(out[:cut]), kind).shape == (cut // rec, dim)
    else:
        with pytest.raises(FormatError):
            parse_vecs(bytes(out[:cut]), kind)


def test_write_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        write_vecs(tmp_path / "a.bvecs", "u8", [[256]])
    with pytest.raises(ConfigurationError):
        write_vecs(tmp_path / "a.bvecs", "u8", [[1.5]])
    with pytest.raises(ConfigurationError):
        write_vecs(tmp_path / "a.fvecs", "f32", [1.0, 2.0])


def test_loaders(tmp_path):
    write_vecs(tmp_path / "b.fvecs", "f32", np.ones((5, 4)))
    write_vecs(tmp_path / "q.fvecs", "f32", np.ones((2, 3)))
    write_vecs(tmp_path / "g.ivecs", "i32", np.ones((2, 3)))
    ds = load_dataset(tmp_path / "b.fvecs")
    assert isinstance(ds, Dataset) and (ds.n, ds.d) == (5, 4)
    assert load_dataset(tmp_path / "b.fvecs", limit=2).n == 2
    with pytest.raises(IncompatibilityError):
        load_queries(tmp_path / "q.fvecs", 4)
    with pytest.raises(FormatError):
        load_dataset(tmp_path / "g.ivecs")
    with pytest.raises(FormatError):
        load_dataset(tmp_path / "x.txt")


def test_hold_out(rng):
    ds = Dataset(rng.normal(size=(30, 3)))
    split = hold_out_queries(ds, 5, seed=1)
    assert split.base.n == 25 and split.queries.shape == (5, 3)
    assert sorted(split.query_ids.tolist() + split.base_ids.tolist()) == list(range(30))
    np.testing.assert_array_equal(split.queries, ds.data[split.query_ids])
    np.testing.assert_array_equal(split.base.data, ds.data[split.base_ids])
    again = hold_out_queries(ds, 5, seed=1)
    np.testing.assert_array_equal(again.query_ids, split.query_ids)
    none = hold_out_queries(ds, 0)
    assert none.base.n == 30 and none.queries.shape == (0, 3)
    with pytest.raises(ConfigurationError):
        hold_out_queries(ds, 30)
