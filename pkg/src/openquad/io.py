"""Deterministic tabular output for analysis results.

Every result becomes a :class:`Table`: named columns, rows of numbers and a
metadata block that records the run configuration, the library version and
solver residuals.

* CSV: metadata as ``# key: <json>`` comment lines, then one header line and
  the rows. Floats carry 10 significant digits.
* JSON: one object ``{"meta": ..., "columns": [...], "rows": [[...], ...]}``
  with floats at 17 significant digits. NaN and infinities are written as
  ``null``.

Covariance fields are written one row per displacement ``r`` (or per grid
momentum ``k``) followed by the ``(2b)^2`` matrix entries in row-major order;
momentum-space entries are split into real and imaginary columns.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .correlation import DecayReport
from .spectral import GapCurve
from .steady import CovarianceField

CSV_DIGITS = 10
JSON_DIGITS = 17


@dataclass
class Table:
    columns: list[str]
    rows: list[list[Any]]
    meta: dict = field(default_factory=dict)


def _fmt(x, digits: int) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            return "null"
        s = format(x, f".{digits}g")
        return "0" if s == "-0" else s
    if isinstance(x, str):
        return json.dumps(x)
    raise TypeError(f"cannot format {type(x).__name__}")


def _to_json(obj, digits: int) -> str:
    """Compact JSON with fixed float precision and sorted keys."""
    if obj is None:
        return "null"
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ", ".join(f"{json.dumps(k)}: {_to_json(v, digits)}" for k, v in items) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_to_json(v, digits) for v in obj) + "]"
    if isinstance(obj, np.ndarray):
        return _to_json(obj.tolist(), digits)
    if isinstance(obj, (complex, np.complexfloating)):
        return _to_json([obj.real, obj.imag], digits)
    return _fmt(obj, digits)


def _with_version(meta: dict) -> dict:
    out = {"library": "openquad", "version": __version__}
    out.update(meta)
    return out


def dumps_csv(table: Table) -> str:
    lines = [f"# {k}: {_to_json(v, JSON_DIGITS)}" for k, v in sorted(_with_version(table.meta).items())]
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join("nan" if v is None else _csv_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _csv_cell(v) -> str:
    s = _fmt(v, CSV_DIGITS)
    return "nan" if s == "null" else s


def dumps_json(table: Table) -> str:
    doc = {"meta": _with_version(table.meta), "columns": table.columns, "rows": table.rows}
    return _to_json(doc, JSON_DIGITS) + "\n"


def write_table(table: Table, path: str | Path | None, fmt: str = "csv") -> str:
    """Serialize ``table``; writes to ``path`` when given and returns the text."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unknown format {fmt!r}")
    text = dumps_csv(table) if fmt == "csv" else dumps_json(table)
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path_or_text: str | Path) -> Table:
    """Parse a CSV written by :func:`dumps_csv` (metadata included)."""
    p = Path(path_or_text) if not str(path_or_text).startswith("#") and "\n" not in str(path_or_text) else None
    text = p.read_text() if p is not None else str(path_or_text)
    meta, columns, rows = {}, None, []
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, val = line[2:].partition(": ")
            meta[key] = json.loads(val)
        elif columns is None:
            columns = line.split(",")
        elif line:
            rows.append([float(v) for v in line.split(",")])
    return Table(columns or [], rows, meta)


# -- conversions ---------------------------------------------------------------


def covariance_table(cov: CovarianceField, meta: dict | None = None, space: str = "real") -> Table:
    """One row per displacement (``space="real"``) or grid momentum (``"momentum"``)."""
    n = cov.block
    d = len(cov.grid)
    info = {
        "statistics": cov.statistics.value if cov.statistics is not None else None,
        "grid": list(cov.grid),
        "bands": cov.bands,
        "shift": list(cov.shift),
        "residual": cov.residual,
        "method": cov.method,
        "space": space,
    }
    info.update({k: v for k, v in cov.info.items() if isinstance(v, (int, float, str, bool))})
    info.update(meta or {})
    ent = [f"g_{i}_{j}" for i in range(n) for j in range(n)]
    if space == "real":
        if cov.real_space is None:
            raise ValueError("the covariance field has no real-space data")
        columns = [f"r{a}" for a in range(d)] + ent
        rows = []
        for idx in np.ndindex(*cov.grid):
            r = [i if i <= L // 2 else i - L for i, L in zip(idx, cov.grid)]
            rows.append(r + [float(v) for v in np.real(cov.real_space[idx]).reshape(-1)])
        rows.sort(key=lambda row: row[:d])
        return Table(columns, rows, info)
    if cov.momentum_space is None:
        raise ValueError("the covariance field has no momentum-space data")
    axes = cov.k_axes()
    columns = [f"k{a}" for a in range(d)] + [f"{e}_{part}" for e in ent for part in ("re", "im")]
    rows = []
    for idx in np.ndindex(*cov.grid):
        vals = cov.momentum_space[idx].reshape(-1)
        rows.append([float(ax[i]) for ax, i in zip(axes, idx)] + [float(x) for v in vals for x in (v.real, v.imag)])
    return Table(columns, rows, info)


def gap_curve_table(curve: GapCurve, meta: dict | None = None) -> Table:
    """Two columns (parameter, gap); maximizing momenta and extras go to the metadata."""
    info = {
        "label": curve.label,
        "argmax_k": [list(k) if k is not None else None for k in curve.argmax_k],
        "n_closed": int(np.sum(curve.closed)),
    }
    info.update(curve.meta)
    info.update(meta or {})
    rows = [[float(p), float(g)] for p, g in zip(curve.params, curve.gaps)]
    return Table([curve.label, "gap"], rows, info)


def write_gap_curve(curve: GapCurve, path: str | Path, fmt: str = "csv", meta: dict | None = None) -> list[Path]:
    """CSV: two-column file plus a ``.json`` sidecar that adds the maximizing momenta; JSON: a single file."""
    table = gap_curve_table(curve, meta)
    path = Path(path)
    if fmt == "json":
        write_table(table, path, "json")
        return [path]
    slim = {k: v for k, v in table.meta.items() if k != "argmax_k"}
    write_table(Table(table.columns, table.rows, slim), path, "csv")
    side = path.with_suffix(path.suffix + ".json")
    side.write_text(dumps_json(table))
    return [path, side]


def decay_table(report: DecayReport, meta: dict | None = None) -> Table:
    mult = report.multiplicities if report.multiplicities is not None else [1] * len(report.modes)
    rows = [[i, float(b.real), float(b.imag), float(abs(b)), int(m)] for i, (b, m) in enumerate(zip(report.modes, mult))]
    info = {
        "method": report.method,
        "xi_bound": list(report.xi_bound),
        "poles": [complex(z) for z in report.poles],
        "residues": [complex(z) for z in report.residues],
    }
    if report.fit is not None:
        info["fit"] = {
            "rate": report.fit.rate,
            "prefactor": report.fit.prefactor,
            "rms": report.fit.rms,
            "exponential": report.fit.exponential,
        }
    info.update({k: v for k, v in (report.info or {}).items() if isinstance(v, (int, float, str, bool))})
    info.update(meta or {})
    return Table(["index", "re", "im", "modulus", "multiplicity"], rows, info)


def columns_table(columns: Sequence[str], data: Sequence[Sequence[float]], meta: dict | None = None) -> Table:
    """Table from column arrays of equal length."""
    arrs = [np.asarray(c, float) for c in data]
    n = len(arrs[0]) if arrs else 0
    if any(len(a) != n for a in arrs):
        raise ValueError("columns must have equal length")
    rows = [[float(a[i]) for a in arrs] for i in range(n)]
    return Table(list(columns), rows, dict(meta or {}))
