import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from massflow.catalog import make_isotropic_schwarzschild, make_schwarzschild, sample_nonneg_scalar_metric
from massflow.errors import BadGrid
from massflow.geometry import ConformalMetric, RadialMetric
from massflow.grids import RadialGrid
from massflow.io import (
    SCHEMA_VERSION,
    fmt,
    infer_grid,
    read_csv,
    read_json,
    read_metric_csv,
    to_json,
    write_csv,
    write_json,
    write_metric_csv,
)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips_binary64(x):
    assert float(fmt(x)) == x


def test_fmt_non_floats():
    assert fmt(None) == "" and fmt(3) == "3" and fmt(np.float64(0.1)) == "0.10000000000000001"


def test_csv_round_trip(tmp_path):
    rows = [{"a": 0.1, "b": 1 / 3}, {"a": 2.0, "b": -1e-300}]
    write_csv(tmp_path / "x.csv", rows, ("a", "b"))
    header, data = read_csv(tmp_path / "x.csv")
    assert header == ["a", "b"]
    np.testing.assert_array_equal(data, [[0.1, 1 / 3], [2.0, -1e-300]])
    (tmp_path / "empty.csv").write_text("")
    with pytest.raises(ValueError):
        read_csv(tmp_path / "empty.csv")


@pytest.mark.parametrize("spacing", ["uniform", "geometric"])
def test_infer_grid(spacing):
    g = RadialGrid(0.5, 300.0, 100, spacing)
    assert infer_grid(g.nodes) == g
    with pytest.raises(BadGrid):
        infer_grid(np.sort(np.random.default_rng(0).uniform(1, 2, 40)))
    with pytest.raises(BadGrid):
        infer_grid(g.nodes[:10])


def test_radial_metric_csv_round_trip(tmp_path):
    m = sample_nonneg_scalar_metric(3, RadialGrid(1.0, 400.0, 1024))
    write_metric_csv(tmp_path / "m.csv", m)
    back = read_metric_csv(tmp_path / "m.csv")
    assert isinstance(back, RadialMetric)
    np.testing.assert_array_equal(back.u, m.u)
    np.testing.assert_array_equal(back.r, m.r)


def test_conformal_metric_csv_round_trip(tmp_path):
    iso = make_isotropic_schwarzschild(1.0, RadialGrid(0.05, 1e4, 512, "geometric"))
    write_metric_csv(tmp_path / "iso.csv", iso)
    back = read_metric_csv(tmp_path / "iso.csv")
    assert isinstance(back, ConformalMetric)
    np.testing.assert_array_equal(back.phi, iso.phi)


def test_static_csv_with_extra_column_reads_as_metric(tmp_path):
    s = make_schwarzschild(1.0, RadialGrid(3.0, 50.0, 64))
    rows = [{"r": r, "u": u, "V": 1 / u} for r, u in zip(s.r, s.u)]
    write_csv(tmp_path / "s.csv", rows, ("r", "u", "V"))
    np.testing.assert_array_equal(read_metric_csv(tmp_path / "s.csv").u, s.u)
    write_csv(tmp_path / "bad.csv", rows, ("V", "r", "u"))
    with pytest.raises(ValueError):
        read_metric_csv(tmp_path / "bad.csv")


def test_json_schema_and_plain_values(tmp_path):
    text = to_json({"x": np.float64(0.1), "a": np.arange(3), "inf": float("inf"), "flag": np.bool_(True)})
    doc = json.loads(text)
    assert list(doc)[0] == "schema_version" and doc["schema_version"] == SCHEMA_VERSION
    assert doc["x"] == 0.1 and doc["a"] == [0, 1, 2] and doc["inf"] is None and doc["flag"] is True
    write_json(tmp_path / "r.json", {"k": 1})
    assert read_json(tmp_path / "r.json")["k"] == 1
    (tmp_path / "old.json").write_text('{"schema_version": 0}')
    with pytest.raises(ValueError):
        read_json(tmp_path / "old.json")


def test_qs_metric_exports_angular_mean(tmp_path):
    from massflow.geometry import QSGridMetric
    from massflow.grids import SphereGrid

    g, s = RadialGrid(1.0, 2.0, 32), SphereGrid(4)
    u = 1 + 0.01 * np.outer(g.nodes, s.ylm(2, 0)) + 0.5
    write_metric_csv(tmp_path / "qs.csv", QSGridMetric(g, s, u))
    header, data = read_csv(tmp_path / "qs.csv")
    assert header == ["r", "u", "u_min", "u_max"]
    np.testing.assert_allclose(data[:, 1], 1.5, atol=1e-14)
    assert np.all(data[:, 2] < data[:, 1]) and np.all(data[:, 1] < data[:, 3])
    np.testing.assert_allclose(read_metric_csv(tmp_path / "qs.csv").u, data[:, 1])
