import json

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, strategies as st

from openquad.correlation import decay_report_1d
from openquad.dense import build_dense
from openquad.errors import InvalidStencil, ParseError
from openquad.io import (
    Table,
    columns_table,
    covariance_table,
    decay_table,
    dumps_csv,
    dumps_json,
    gap_curve_table,
    read_csv,
    write_gap_curve,
    write_table,
)
from openquad.modelfile import coerce_params, dumps_model, load_model, loads_model, preset_stencil
from openquad.models import XYChainParams, xy_chain_stencil
from openquad.spectral import gap_curve
from openquad.stencil import random_stencil
from openquad.steady import solve_steady_dense, solve_steady_momentum

seeds = st.integers(0, 2**32 - 1)

CUSTOM = """
statistics = "fermion"
dims = 1
bands = 1
extent = 8

[[h]]
r = [1]
re = [[0.0, 0.0], [0.0, 0.0]]
im = [[0.0, -0.5], [0.5, 0.0]]

[[ell]]
[[ell.term]]
r = [0]
re = [1.0, 0.0]
im = [0.0, 1.0]
"""

PRESET = """
preset = "xy_chain"
extent = 12

[params]
mu = 0.1
alpha = 0.2
eta = 1.0
phi = 0.7
"""


def _arr(a):
    return a.toarray() if sp.issparse(a) else np.asarray(a)


def _same_model(a, b):
    da, db = build_dense(a), build_dense(b)
    np.testing.assert_array_equal(_arr(da.X), _arr(db.X))
    np.testing.assert_array_equal(_arr(da.Y), _arr(db.Y))
    assert len(da.Zs) == len(db.Zs)
    for za, zb in zip(da.Zs, db.Zs):
        np.testing.assert_array_equal(_arr(za), _arr(zb))


# -- model files ---------------------------------------------------------------


def test_custom_model_parses():
    s = loads_model(CUSTOM)
    assert s.statistics.value == "fermion"
    assert s.lattice.extent == (8,)
    np.testing.assert_array_equal(s.h[(1,)], [[0, -0.5j], [0.5j, 0]])
    np.testing.assert_array_equal(s.ell[0][(0,)], [1, 1j])


def test_preset_model_matches_direct_construction():
    s = loads_model(PRESET)
    ref = xy_chain_stencil(XYChainParams(mu=0.1, alpha=0.2, eta=1.0, phi=0.7), extent=12)
    _same_model(s, ref)


@given(seeds, st.sampled_from(["fermion", "boson"]), st.integers(1, 2), st.integers(0, 1))
def test_dumps_loads_round_trip(seed, stats, bands, n_quad):
    if stats == "boson":
        n_quad = 0
    s = random_stencil(np.random.default_rng(seed), stats, bands=bands, n_quadratic=n_quad, extent=5)
    back = loads_model(dumps_model(s))
    assert back.statistics == s.statistics
    assert back.lattice == s.lattice
    _same_model(back, s)


def test_load_model_from_file(tmp_path):
    p = tmp_path / "m.toml"
    p.write_text(CUSTOM)
    _same_model(load_model(p), loads_model(CUSTOM))
    with pytest.raises(ParseError):
        load_model(tmp_path / "missing.toml")


@pytest.mark.parametrize(
    "text",
    [
        CUSTOM + "\nspeed = 1\n",
        CUSTOM.replace("r = [1]", "r = [1]\nphase = 0.0"),
        PRESET + "gamma = 0.3\n",
        'preset = "ising"\n',
        "statistics = \"fermion\"\ndims = 1\n",
        "statistics = \"anyon\"\ndims = 1\nbands = 1\n",
        CUSTOM.replace("re = [1.0, 0.0]", "re = [1.0]"),
        CUSTOM.replace("r = [1]", "r = [1, 0]"),
        "this is = = not toml",
        PRESET.replace("mu = 0.1", 'mu = "large"'),
        PRESET.replace("alpha = 0.2", "alpha = true"),
    ],
)
def test_malformed_models_raise_parse_error(text):
    with pytest.raises(ParseError):
        loads_model(text)


def test_non_hermitian_coupling_rejected():
    bad = CUSTOM.replace("re = [[0.0, 0.0], [0.0, 0.0]]\nim = [[0.0, -0.5], [0.5, 0.0]]", "re = [[0.0, -0.5], [0.5, 0.0]]")
    assert bad != CUSTOM
    with pytest.raises(InvalidStencil, match="dagger"):
        loads_model(bad)


def test_coerce_params():
    p = coerce_params(XYChainParams, {"mu": 1, "phi": 0.5})
    assert p.mu == 1.0 and isinstance(p.mu, float)
    with pytest.raises(ParseError):
        coerce_params(XYChainParams, {"omega": 1.0})


def test_preset_stencil_defaults_and_unknown():
    s = preset_stencil("critical_boson", {"D": 2, "eta": 1.5})
    assert s.dims == 2 and s.statistics.value == "boson"
    with pytest.raises(ParseError):
        preset_stencil("nope")


# -- serialization -------------------------------------------------------------


def test_outputs_are_deterministic():
    t = Table(["a", "b"], [[1, 0.1], [2, 1 / 3]], {"z": 1, "a": [1.0, 2.0]})
    assert dumps_csv(t) == dumps_csv(Table(t.columns, t.rows, {"a": [1.0, 2.0], "z": 1}))
    assert dumps_json(t) == dumps_json(t)
    lines = dumps_csv(t).splitlines()
    assert lines[-1] == "2,0.3333333333"
    assert [ln for ln in lines if ln.startswith("#")] == sorted(ln for ln in lines if ln.startswith("#"))


def test_nan_encoding():
    t = Table(["x"], [[float("nan")], [float("inf")], [-0.0]])
    assert dumps_csv(t).splitlines()[-3:] == ["nan", "nan", "0"]
    doc = json.loads(dumps_json(t))
    assert doc["rows"] == [[None], [None], [0]]


def test_json_carries_full_precision():
    doc = json.loads(dumps_json(Table(["x"], [[np.pi]])))
    assert doc["rows"][0][0] == np.pi
    assert doc["meta"]["library"] == "openquad"


def test_read_csv_round_trip(tmp_path):
    t = Table(["p", "gap"], [[0.0, 0.25], [1.0, -1.5e-3]], {"label": "p", "k": [1, 2]})
    path = tmp_path / "t.csv"
    write_table(t, path, "csv")
    back = read_csv(path)
    assert back.columns == t.columns and back.rows == t.rows
    assert back.meta["label"] == "p" and back.meta["k"] == [1, 2]
    assert read_csv(dumps_csv(t)).rows == t.rows
    with pytest.raises(ValueError):
        write_table(t, None, "xml")


def test_covariance_table_real_space():
    s = xy_chain_stencil(XYChainParams(mu=0.0, alpha=0.2, eta=1.0, phi=1.2), extent=9)
    cov = solve_steady_dense(build_dense(s))
    t = covariance_table(cov, {"note": "x"})
    assert t.columns == ["r0", "g_0_0", "g_0_1", "g_1_0", "g_1_1"]
    assert [row[0] for row in t.rows] == list(range(-4, 5))
    for row in t.rows:
        np.testing.assert_array_equal(np.reshape(row[1:], (2, 2)), cov.gamma((row[0],)))
    assert t.meta["note"] == "x" and t.meta["grid"] == [9]


def test_covariance_table_momentum_space():
    s = xy_chain_stencil(XYChainParams(mu=0.0, alpha=0.2, eta=1.0, phi=1.2))
    cov = solve_steady_momentum(s, grid=(6,))
    t = covariance_table(cov, space="momentum")
    assert len(t.columns) == 1 + 2 * 4 and len(t.rows) == 6
    vals = np.array([row[1:] for row in t.rows])
    z = (vals[:, 0::2] + 1j * vals[:, 1::2]).reshape(6, 2, 2)
    np.testing.assert_array_equal(z, cov.momentum_space)
    with pytest.raises(ValueError):
        covariance_table(cov.__class__(None, (4,), 1, real_space=np.zeros((4, 2, 2))), space="momentum")


def _xy(phi):
    return xy_chain_stencil(XYChainParams(mu=0.0, alpha=0.5, eta=1.0, phi=phi))


def test_gap_curve_table_and_sidecar(tmp_path):
    curve = gap_curve(_xy, np.linspace(0, 1, 3), grid=(32,), label="phi")
    t = gap_curve_table(curve, {"run": 1})
    assert t.columns == ["phi", "gap"]
    np.testing.assert_array_equal([r[1] for r in t.rows], curve.gaps)
    assert len(t.meta["argmax_k"]) == 3
    paths = write_gap_curve(curve, tmp_path / "g.csv", "csv", {"run": 1})
    assert [p.name for p in paths] == ["g.csv", "g.csv.json"]
    assert "argmax_k" not in read_csv(paths[0]).meta
    side = json.loads(paths[1].read_text())
    assert side["meta"]["argmax_k"] == t.meta["argmax_k"]
    assert write_gap_curve(curve, tmp_path / "g.json", "json") == [tmp_path / "g.json"]


def test_decay_table():
    rep = decay_report_1d(_xy(0.4))
    t = decay_table(rep)
    assert t.columns == ["index", "re", "im", "modulus", "multiplicity"]
    assert len(t.rows) == len(rep.modes)
    np.testing.assert_allclose([r[3] for r in t.rows], np.abs(rep.modes))
    assert t.meta["method"] == rep.method
    json.loads(dumps_json(t))


def test_columns_table():
    t = columns_table(["a", "b"], [[1, 2], [3, 4]], {"m": 1})
    assert t.rows == [[1.0, 3.0], [2.0, 4.0]]
    with pytest.raises(ValueError):
        columns_table(["a", "b"], [[1, 2], [3]])
