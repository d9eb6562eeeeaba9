"""Round trips and failure modes for field serialization."""

import numpy as np
import pytest

from crowdmpm.core import (
    GridSpec,
    ScalarField,
    VectorField,
    read_field_binary,
    read_field_csv,
    write_field_binary,
    write_field_csv,
)
from crowdmpm.errors import BadMagic, DimMismatch, TruncatedFile


@pytest.fixture
def spec():
    return GridSpec(nx=12, ny=9, dx=2.5, origin=(-5.0, -5.0))


def test_csv_round_trip_scalar(tmp_path, spec):
    rng = np.random.default_rng(0)
    f = ScalarField(spec, rng.normal(size=(spec.nx, spec.ny)))
    p = tmp_path / "f.csv"
    write_field_csv(f, p)
    f2 = read_field_csv(p)
    assert f2.spec == spec
    np.testing.assert_array_equal(f.values, f2.values)


def test_csv_round_trip_vector(tmp_path, spec):
    rng = np.random.default_rng(1)
    f = VectorField(spec, rng.normal(size=(spec.nx, spec.ny, 2)))
    p = tmp_path / "v.csv"
    write_field_csv(f, p)
    f2 = read_field_csv(p)
    np.testing.assert_array_equal(f.values, f2.values)


def test_binary_round_trip(tmp_path, spec):
    rng = np.random.default_rng(2)
    f = VectorField(spec, rng.normal(size=(spec.nx, spec.ny, 2)))
    p = tmp_path / "v.cmf"
    write_field_binary(f, p)
    f2 = read_field_binary(p)
    assert f2.spec == spec
    np.testing.assert_array_equal(f.values, f2.values)


def test_binary_bad_magic(tmp_path, spec):
    p = tmp_path / "x.cmf"
    write_field_binary(ScalarField(spec), p)
    raw = bytearray(p.read_bytes())
    raw[:4] = b"NOPE"
    p.write_bytes(bytes(raw))
    with pytest.raises(BadMagic):
        read_field_binary(p)


def test_binary_truncated(tmp_path, spec):
    p = tmp_path / "x.cmf"
    write_field_binary(ScalarField(spec), p)
    raw = p.read_bytes()
    p.write_bytes(raw[: len(raw) - 16])
    with pytest.raises(TruncatedFile):
        read_field_binary(p)


def test_csv_truncated(tmp_path, spec):
    p = tmp_path / "f.csv"
    write_field_csv(ScalarField(spec), p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(lines[:-4]) + "\n")
    with pytest.raises(TruncatedFile):
        read_field_csv(p)


def test_shape_mismatch_rejected(tmp_path, spec):
    bad = ScalarField(spec)
    bad.values = np.zeros((3, 3))
    with pytest.raises(DimMismatch):
        write_field_binary(bad, tmp_path / "bad.cmf")
