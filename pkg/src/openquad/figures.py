"""Datasets behind the figure panels of the two built-in models.

Each builder returns an :class:`~openquad.io.Table` with the columns needed to
replot the panel; no plotting is done here.

* ``fig1-left``: XY-chain correlations ``|gamma(r)|`` for ``zeta = 0`` and
  ``1/4`` with the predicted ``|beta|^r`` line of the dominant decay mode.
* ``fig1-right``: XY-chain gap versus ``phi`` for ``kappa = 0, 1/2, 1``.
* ``fig2-a`` ... ``fig2-f``: critical-boson correlations in ``D = 1, 2, 3``
  with the exact (closed form or Bessel integral) values and the asymptotic laws.
"""

from __future__ import annotations

import numpy as np

from .correlation import decay_report_1d
from .errors import UnknownFigure
from .io import Table
from .models import (
    CriticalBosonParams,
    XYChainParams,
    critical_boson_asymptotics,
    critical_boson_bessel,
    critical_boson_exact_1d,
    critical_boson_grid_correlator,
    critical_boson_stencil,
    xy_chain_gap,
    xy_chain_stencil,
)
from .spectral import gap_curve
from .steady import solve_steady_dense, solve_steady_momentum
from .dense import build_dense

FIGURES = ("fig1-left", "fig1-right", "fig2-a", "fig2-b", "fig2-c", "fig2-d", "fig2-e", "fig2-f")

DEFAULT_GRIDS = {
    "fig1-left": 400,
    "fig1-right": 512,
    "fig2-a": 4096,
    "fig2-b": 4096,
    "fig2-c": 1024,
    "fig2-d": 1024,
    "fig2-e": 128,
    "fig2-f": 128,
}

XY_FIG1_LEFT = dict(mu=0.0, alpha=0.2, eta=1.0, phi=2 * np.pi / 5)
XY_FIG1_RIGHT = dict(mu=0.0, alpha=0.5, eta=1.0)
FIG1_RIGHT_KAPPAS = (0.0, 0.5, 1.0)
FIG2_ETA_OFFSETS = {
    "fig2-a": (1e-3, 1e-4, 1e-5, 1e-6),
    "fig2-b": (1e-3, 1e-4, 1e-5, 1e-6, 0.0),
    "fig2-c": (1e-4, 1e-6),
    "fig2-d": (0.0,),
    "fig2-e": (0.0,),
    "fig2-f": (0.0,),
}
N_EXACT = 24  # Bessel-integral reference points per direction


def _fig1_left(grid: int) -> Table:
    r_max = min(60, grid // 2)
    rows = []
    meta = {"model": "xy_chain", "params": XY_FIG1_LEFT, "extent": grid}
    for zeta in (0.0, 0.25):
        p = XYChainParams(zeta=zeta, **XY_FIG1_LEFT)
        st = xy_chain_stencil(p, extent=grid)
        cov = solve_steady_dense(build_dense(st))
        modes = decay_report_1d(st).modes
        beta = max((b for b in modes if abs(b) < 1), key=abs)
        r = np.arange(r_max + 1)
        g = np.array([cov.gamma((int(i),)) for i in r])
        amp = np.max(np.abs(g.reshape(len(r), -1)), axis=1)
        r0 = 4
        pred = amp[r0] * abs(beta) ** (r - r0)
        for i in r:
            rows.append([zeta, int(i)] + [float(v) for v in np.abs(g[i]).reshape(-1)] + [float(pred[i])])
        meta[f"zeta={zeta:g}"] = {"beta": complex(beta), "residual": cov.residual}
    cols = ["zeta", "r", "abs_g00", "abs_g01", "abs_g10", "abs_g11", "predicted"]
    return Table(cols, rows, meta)


def _fig1_right(grid: int) -> Table:
    phis = np.linspace(-np.pi / 2, 3 * np.pi / 2, 201)
    cols = ["phi", "gap_closed_form"]
    data = [phis, np.array([xy_chain_gap(XYChainParams(phi=f, **XY_FIG1_RIGHT)).gap for f in phis])]
    for kappa in FIG1_RIGHT_KAPPAS:
        curve = gap_curve(
            lambda f: xy_chain_stencil(XYChainParams(phi=f, **XY_FIG1_RIGHT)), phis, grid=(grid,), kappa=kappa, label="phi"
        )
        cols.append(f"gap_kappa={kappa:g}")
        data.append(curve.gaps)
    rows = [[float(c[i]) for c in data] for i in range(len(phis))]
    return Table(cols, rows, {"model": "xy_chain", "params": XY_FIG1_RIGHT, "k_grid": grid, "kappas": list(FIG1_RIGHT_KAPPAS)})


def _fig2_1d(name: str, grid: int) -> Table:
    entry = (0, 0) if name == "fig2-a" else (0, 1)
    rows = []
    meta = {"model": "critical_boson", "D": 1, "grid": grid, "entry": "++" if entry == (0, 0) else "+-"}
    r = np.arange(1, grid // 2 + 1)
    for off in FIG2_ETA_OFFSETS[name]:
        eta = 1.0 + off
        shift = 0.5 if off == 0 else 0.0
        cov = solve_steady_momentum(critical_boson_stencil(CriticalBosonParams(1, eta)), grid=(grid,), shift=shift)
        num = np.array([cov.gamma((int(i),))[entry] for i in r]).real
        ex = critical_boson_exact_1d(r, eta)
        exact = ex.gamma_pp if entry == (0, 0) else ex.gamma_pm
        meta[f"residual(eta-1={off:g})"] = cov.residual
        for i in range(len(r)):
            rows.append([off, int(r[i]), float(num[i]), float(exact[i])])
    return Table(["eta_minus_1", "r", "numeric", "exact"], rows, meta)


def _directions(D: int) -> list[np.ndarray]:
    return [np.eye(D, dtype=int)[0], np.ones(D, dtype=int)]


def _fig2_nd(name: str, grid: int) -> Table:
    D = 2 if name in ("fig2-c", "fig2-d") else 3
    entry = "++" if name in ("fig2-c", "fig2-e") else "+-"
    idx = (0, 0) if entry == "++" else (0, 1)
    rows = []
    meta = {"model": "critical_boson", "D": D, "grid": grid, "entry": entry, "directions": [[1] + [0] * (D - 1), [1] * D]}
    for off in FIG2_ETA_OFFSETS[name]:
        p = CriticalBosonParams(D, 1.0 + off)
        cov = critical_boson_grid_correlator(p, grid)
        meta[f"residual(eta-1={off:g})"] = cov.residual
        meta[f"method(eta-1={off:g})"] = "singular-subtracted" if cov.info["subtracted"] else "plain"
        for di, e in enumerate(_directions(D)):
            steps = np.arange(1, grid // 2 // int(e.max()) + 1)
            steps = steps[steps * np.linalg.norm(e) <= grid / 2]
            exact_at = set(np.unique(np.geomspace(1, steps[-1], N_EXACT).round().astype(int)).tolist())
            for n in steps:
                vec = n * e
                rr = float(np.linalg.norm(vec))
                num = float(cov.gamma(tuple(int(v) for v in vec))[idx].real)
                exact = np.nan
                if int(n) in exact_at:
                    exact = critical_boson_bessel(vec, p)[0 if entry == "++" else 1]
                if D == 2 and entry == "++" and off == 0:
                    asym = np.nan
                else:
                    asym = float(critical_boson_asymptotics(vec.astype(float), p, entry))
                rows.append([off, di, rr, float(np.log(rr)), num, float(exact), asym])
    cols = ["eta_minus_1", "direction", "r", "ln_r", "numeric", "exact", "asymptotic"]
    return Table(cols, rows, meta)


def figure_table(name: str, grid: int | None = None) -> Table:
    """Dataset for a named panel; ``grid`` overrides the default size per axis."""
    if name not in FIGURES:
        raise UnknownFigure(f"unknown figure {name!r}; available: {list(FIGURES)}")
    g = int(grid) if grid is not None else DEFAULT_GRIDS[name]
    if name == "fig1-left":
        table = _fig1_left(g)
    elif name == "fig1-right":
        table = _fig1_right(g)
    elif name in ("fig2-a", "fig2-b"):
        table = _fig2_1d(name, g)
    else:
        table = _fig2_nd(name, g)
    table.meta["figure"] = name
    return table
