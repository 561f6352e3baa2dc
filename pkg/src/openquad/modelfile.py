"""TOML model-definition files and named presets.

A custom model lists its stencil entries explicitly::

    statistics = "fermion"      # or "boson"
    dims = 1
    bands = 1
    extent = 200                # optional; integer or one integer per axis

    [[h]]                       # one table per displacement r
    r = [1]
    re = [[0.0, 0.0], [0.0, 0.0]]   # optional, defaults to zero
    im = [[0.0, -0.5], [0.5, 0.0]]

    [[ell]]                     # one table per Lindblad family
    [[ell.term]]
    r = [0]
    re = [1.0, 0.0]             # length 2 * bands
    im = [0.0, 0.0]             # optional

    [[m]]                       # one table per Hermitian bilinear family
    [[m.term]]
    a = [0]
    b = [0]
    re = [[0.0, 0.0], [0.0, 0.0]]
    im = [[0.0, -0.5], [0.5, 0.0]]

A preset names a built-in model and its parameters::

    preset = "xy_chain"         # or "critical_boson"
    extent = 200                # optional

    [params]
    mu = 0.0
    alpha = 0.2
    eta = 1.0
    phi = 1.2566370614359172
    zeta = 0.0

Unknown keys anywhere raise :class:`~openquad.errors.ParseError`. Only the
part of ``h`` and ``m`` allowed by the exchange symmetry of the statistics
is kept (see :meth:`~openquad.stencil.CouplingStencil.canonical`); a model
whose remaining couplings are not Hermitian raises
:class:`~openquad.errors.InvalidStencil`.
"""

from __future__ import annotations

import sys
from pathlib import Path
from typing import Any, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import InvalidStencil, ParseError
from .models import CriticalBosonParams, XYChainParams, critical_boson_stencil, xy_chain_stencil
from .stencil import CouplingStencil, Lattice, validate_stencil

PRESETS = {
    "xy_chain": (XYChainParams, xy_chain_stencil),
    "critical_boson": (CriticalBosonParams, critical_boson_stencil),
}

_TOP_CUSTOM = {"statistics", "dims", "bands", "extent", "h", "ell", "m"}
_TOP_PRESET = {"preset", "extent", "params"}


def _check_keys(table: Mapping, allowed: set, where: str) -> None:
    extra = sorted(set(table) - allowed)
    if extra:
        raise ParseError(f"unknown key(s) {extra} in {where}; allowed: {sorted(allowed)}")


def _require(table: Mapping, key: str, where: str):
    if key not in table:
        raise ParseError(f"missing key {key!r} in {where}")
    return table[key]


def _int_vector(value, length: int, where: str) -> tuple[int, ...]:
    if not isinstance(value, list) or len(value) != length or not all(isinstance(v, int) for v in value):
        raise ParseError(f"{where} must be a list of {length} integers")
    return tuple(value)


def _complex_array(table: Mapping, shape: tuple[int, ...], where: str) -> np.ndarray:
    try:
        re = np.asarray(_require(table, "re", where), float)
        im = np.asarray(table.get("im", np.zeros(shape)), float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{where}: matrix entries must be numbers ({exc})") from None
    if re.shape != shape or im.shape != shape:
        raise ParseError(f"{where}: expected shape {shape}, got re {re.shape} and im {im.shape}")
    return re + 1j * im


def _extent(value, dims: int | None, where: str):
    if value is None:
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, list) and all(isinstance(v, int) for v in value) and (dims is None or len(value) == dims):
        return tuple(value)
    raise ParseError(f"{where}: extent must be an integer or one integer per axis")


def coerce_params(cls, params: Mapping[str, Any], where: str = "params"):
    """Instantiate a parameter dataclass, rejecting unknown or non-numeric keys."""
    allowed = set(cls.__dataclass_fields__)
    _check_keys(params, allowed, where)
    out = {}
    for key, val in params.items():
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise ParseError(f"{where}.{key} must be a number")
        out[key] = int(val) if key == "D" else float(val)
    try:
        return cls(**out)
    except ValueError as exc:
        raise ParseError(f"{where}: {exc}") from None


def preset_stencil(name: str, params: Mapping[str, Any] | None = None, extent=None) -> CouplingStencil:
    """Stencil of a named preset (``xy_chain`` or ``critical_boson``)."""
    if name not in PRESETS:
        raise ParseError(f"unknown preset {name!r}; available: {sorted(PRESETS)}")
    cls, build = PRESETS[name]
    return build(coerce_params(cls, params or {}), extent=extent)


def parse_model(data: Mapping[str, Any]) -> CouplingStencil:
    """Build a stencil from an already-decoded TOML document."""
    if "preset" in data:
        _check_keys(data, _TOP_PRESET, "model")
        params = data.get("params", {})
        if not isinstance(params, dict):
            raise ParseError("params must be a table")
        return preset_stencil(str(data["preset"]), params, _extent(data.get("extent"), None, "model"))
    _check_keys(data, _TOP_CUSTOM, "model")
    stats = _require(data, "statistics", "model")
    dims = _require(data, "dims", "model")
    bands = _require(data, "bands", "model")
    if not isinstance(dims, int) or not isinstance(bands, int) or dims < 1 or bands < 1:
        raise ParseError("dims and bands must be positive integers")
    n = 2 * bands
    h = {}
    for i, entry in enumerate(data.get("h", [])):
        where = f"h[{i}]"
        _check_keys(entry, {"r", "re", "im"}, where)
        r = _int_vector(_require(entry, "r", where), dims, where + ".r")
        h[r] = h.get(r, 0) + _complex_array(entry, (n, n), where)
    ells = []
    for i, fam in enumerate(data.get("ell", [])):
        _check_keys(fam, {"term"}, f"ell[{i}]")
        d = {}
        for j, entry in enumerate(fam.get("term", [])):
            where = f"ell[{i}].term[{j}]"
            _check_keys(entry, {"r", "re", "im"}, where)
            r = _int_vector(_require(entry, "r", where), dims, where + ".r")
            d[r] = d.get(r, 0) + _complex_array(entry, (n,), where)
        ells.append(d)
    ms = []
    for i, fam in enumerate(data.get("m", [])):
        _check_keys(fam, {"term"}, f"m[{i}]")
        d = {}
        for j, entry in enumerate(fam.get("term", [])):
            where = f"m[{i}].term[{j}]"
            _check_keys(entry, {"a", "b", "re", "im"}, where)
            a = _int_vector(_require(entry, "a", where), dims, where + ".a")
            b = _int_vector(_require(entry, "b", where), dims, where + ".b")
            d[(a, b)] = d.get((a, b), 0) + _complex_array(entry, (n, n), where)
        ms.append(d)
    try:
        lattice = Lattice(dims, bands, _extent(data.get("extent"), dims, "model"))
        st = CouplingStencil(stats, lattice, h, tuple(ells), tuple(ms))
    except (InvalidStencil, ValueError) as exc:
        raise ParseError(str(exc)) from None
    report = validate_stencil(st.canonical())
    if not report:
        bad = "; ".join(f"{c.rule} violated by {c.max_violation:.3g} at {c.worst}" for c in report.failures())
        raise InvalidStencil(f"model couplings break the symmetry rules: {bad}")
    return st


def loads_model(text: str) -> CouplingStencil:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"invalid TOML: {exc}") from None
    return parse_model(data)


def load_model(path: str | Path) -> CouplingStencil:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read model file {path}: {exc}") from None
    return loads_model(text)


def dumps_model(stencil: CouplingStencil) -> str:
    """Serialize a stencil in the custom-model grammar (round-trips through :func:`loads_model`)."""

    def vec(v):
        return "[" + ", ".join(repr(float(x)) for x in v) + "]"

    def mat(a):
        return "[" + ", ".join(vec(row) for row in a) + "]"

    def ivec(r):
        return "[" + ", ".join(str(int(x)) for x in r) + "]"

    lat = stencil.lattice
    lines = [f'statistics = "{stencil.statistics.value}"', f"dims = {lat.dims}", f"bands = {lat.bands}"]
    if lat.extent is not None:
        lines.append(f"extent = {ivec(lat.extent)}")
    for r, v in sorted(stencil.h.items()):
        lines += ["", "[[h]]", f"r = {ivec(r)}", f"re = {mat(v.real)}", f"im = {mat(v.imag)}"]
    for fam in stencil.ell:
        lines += ["", "[[ell]]"]
        for r, v in sorted(fam.items()):
            lines += ["[[ell.term]]", f"r = {ivec(r)}", f"re = {vec(v.real)}", f"im = {vec(v.imag)}"]
    for fam in stencil.m:
        lines += ["", "[[m]]"]
        for (a, b), v in sorted(fam.items()):
            lines += ["[[m.term]]", f"a = {ivec(a)}", f"b = {ivec(b)}", f"re = {mat(v.real)}", f"im = {mat(v.imag)}"]
    return "\n".join(lines) + "\n"
