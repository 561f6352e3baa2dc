"""Dissipative gaps, the auxiliary dissipator and gap curves along paths."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dense import build_dense
from .errors import InvalidStencil, NegativeRate, QuadraticNotSupported
from .stencil import CouplingStencil, k_axes, momentum_grid, superpose

DEFAULT_GAP_GRID = 512


@dataclass(frozen=True)
class GapPoint:
    """Gap ``-max Re(spectrum)`` with the maximizing momentum (momentum route)."""

    gap: float
    k: tuple[float, ...] | None
    eigenvalue: complex
    degeneracy: int
    route: str


@dataclass(frozen=True, eq=False)
class GapCurve:
    """Dissipative gap sampled along a scalar parameter.

    Negative gaps signal instability and are reported unchanged.
    """

    params: np.ndarray
    gaps: np.ndarray
    argmax_k: list
    label: str = "parameter"
    meta: dict = field(default_factory=dict)

    @property
    def closed(self) -> np.ndarray:
        """Mask of samples with ``gap <= 0``."""
        return self.gaps <= 0

    @property
    def min_gap(self) -> float:
        return float(np.min(self.gaps)) if len(self.gaps) else np.nan


def _max_re(eigs: np.ndarray, tol: float = 1e-10) -> tuple[int, int]:
    """Index of the eigenvalue with the largest real part and its degeneracy."""
    re = eigs.real
    i = int(np.argmax(re))
    deg = int(np.sum(np.abs(re - re[i]) <= tol * max(1.0, abs(re[i]))))
    return i, deg


def dissipative_gap(stencil: CouplingStencil, grid: Sequence[int] | None = None, route: str = "auto", shift=0.0) -> GapPoint:
    """Dissipative gap of a stencil.

    Parameters
    ----------
    stencil : CouplingStencil
    grid : sequence of int, optional
        Momentum grid per axis for the momentum route. Defaults to the
        lattice extent, or ``512`` points per axis on an infinite lattice.
    route : {"auto", "momentum", "dense"}
        ``momentum`` maximizes ``Re eig x~(k)`` over the grid (quasifree
        stencils only); ``dense`` uses ``eig(X)`` on the finite lattice.
        ``auto`` prefers the momentum route for quasifree stencils.
    """
    if route == "auto":
        route = "momentum" if stencil.quasifree else "dense"
    if route == "dense":
        ev = build_dense(stencil)
        eigs = np.linalg.eigvals(ev.X) if ev.size else np.zeros(1)
        i, deg = _max_re(eigs)
        return GapPoint(float(-eigs[i].real), None, complex(eigs[i]), deg, "dense")
    if route != "momentum":
        raise ValueError(f"unknown route {route!r}")
    if not stencil.quasifree:
        raise QuadraticNotSupported("momentum gap needs a quasifree stencil; use route='dense'")
    if grid is None:
        grid = stencil.lattice.extent or (DEFAULT_GAP_GRID,) * stencil.dims
    grid = tuple(int(g) for g in np.atleast_1d(grid))
    xt, _ = momentum_grid(stencil, grid, shift)
    n = stencil.block
    blocks = xt.reshape(-1, n, n)
    # remove the trace part first: it shifts eigenvalues exactly, and near-defective
    # blocks then lose only sqrt(eps) relative to the traceless remainder
    mean = np.trace(blocks, axis1=1, axis2=2) / n
    eigs = np.linalg.eigvals(blocks - mean[:, None, None] * np.eye(n)) + mean[:, None]
    flat = eigs.reshape(-1)
    i, deg = _max_re(flat)
    p = i // n
    idx = np.unravel_index(p, grid)
    axes = k_axes(grid, shift)
    k = tuple(float(ax[j]) for ax, j in zip(axes, idx))
    return GapPoint(float(-flat[i].real), k, complex(flat[i]), deg, "momentum")


def aux_dissipator(stencil: CouplingStencil, kappa: float) -> CouplingStencil:
    """On-site Lindblad set of rate ``kappa`` that shifts the gap by at least ``kappa``.

    Fermions: ``L_{i,+-} = sqrt(kappa) w_{i,+-}`` for every band; bosons:
    ``L_i = sqrt(kappa) (w_{i+} - i w_{i-})``.
    """
    if kappa < 0:
        raise NegativeRate(f"kappa must be non-negative, got {kappa}")
    b = stencil.bands
    n = stencil.block
    origin = tuple([0] * stencil.dims)
    amp = np.sqrt(kappa)
    ell = []
    if stencil.is_fermion:
        for j in range(n):
            e = np.zeros(n, complex)
            e[j] = amp
            ell.append({origin: e})
    else:
        for j in range(b):
            e = np.zeros(n, complex)
            e[j] = amp
            e[b + j] = -1j * amp
            ell.append({origin: e})
    return CouplingStencil(stencil.statistics, stencil.lattice, {}, tuple(ell), ())


def append_aux_dissipator(stencil: CouplingStencil, kappa: float) -> CouplingStencil:
    """``stencil`` plus the auxiliary dissipator at rate ``kappa``."""
    if kappa < 0:
        raise NegativeRate(f"kappa must be non-negative, got {kappa}")
    if kappa == 0:
        return stencil
    return superpose([stencil, aux_dissipator(stencil, kappa)])


# -- paths ---------------------------------------------------------------------


def _check_waypoints(points) -> np.ndarray:
    pts = np.asarray(points, float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise InvalidStencil("a schedule needs at least two (parameter, kappa) waypoints")
    if np.any(pts[:, 1] < 0):
        raise NegativeRate("kappa waypoints must be non-negative")
    return pts


def _along(points: np.ndarray, s: float) -> tuple[float, float]:
    """Piecewise-linear position at ``s in [0, 1]``; waypoints are equally spaced in ``s``."""
    m = len(points) - 1
    t = min(max(s, 0.0), 1.0) * m
    i = min(int(np.floor(t)), m - 1)
    f = t - i
    p = (1 - f) * points[i] + f * points[i + 1]
    return float(p[0]), float(p[1])


@dataclass(frozen=True, eq=False)
class PathSpec:
    """Interpolation ``(1-g) L_start + g L_end + kappa D`` along ``(g, kappa)`` waypoints.

    Hamiltonians are mixed linearly; both endpoint dissipator sets are kept
    with rates scaled by ``1-g`` and ``g`` so that the Liouvillian is the
    convex combination.
    """

    start: CouplingStencil
    end: CouplingStencil
    schedule: tuple = ((0.0, 0.0), (1.0, 0.0))

    def __post_init__(self):
        if self.start.statistics is not self.end.statistics or self.start.lattice != self.end.lattice:
            raise InvalidStencil("path endpoints must share statistics and lattice")
        pts = _check_waypoints(self.schedule)
        if not (np.allclose(pts[0], (0, 0)) and np.allclose(pts[-1], (1, 0))):
            raise InvalidStencil("schedule must start at (0, 0) and end at (1, 0)")
        object.__setattr__(self, "schedule", tuple(map(tuple, pts)))

    def at(self, s: float) -> tuple[CouplingStencil, float, float]:
        g, kappa = _along(np.asarray(self.schedule), s)
        st = superpose([self.start.scaled(1 - g, 1 - g), self.end.scaled(g, g)])
        return append_aux_dissipator(st, kappa), g, kappa


@dataclass(frozen=True, eq=False)
class FamilyPath:
    """Path through a one-parameter model family with an auxiliary-dissipator schedule.

    ``waypoints`` are ``(parameter, kappa)`` pairs visited in order.
    """

    family: Callable[[float], CouplingStencil]
    waypoints: tuple

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(map(tuple, _check_waypoints(self.waypoints))))

    def at(self, s: float) -> tuple[CouplingStencil, float, float]:
        p, kappa = _along(np.asarray(self.waypoints), s)
        return append_aux_dissipator(self.family(p), kappa), p, kappa


def gap_along_path(path, samples: int | Sequence[float] = 101, grid: Sequence[int] | None = None, route: str = "auto") -> GapCurve:
    """Gap at evenly spaced path positions ``s in [0, 1]`` (or the given positions)."""
    ss = np.linspace(0.0, 1.0, int(samples)) if np.isscalar(samples) else np.asarray(samples, float)
    gaps, ks, params, kappas = [], [], [], []
    for s in ss:
        st, p, kappa = path.at(float(s))
        gp = dissipative_gap(st, grid, route)
        gaps.append(gp.gap)
        ks.append(gp.k)
        params.append(p)
        kappas.append(kappa)
    gaps = np.asarray(gaps)
    meta = {"model_parameter": params, "kappa": kappas, "n_closed": int(np.sum(gaps <= 0))}
    return GapCurve(ss, gaps, ks, "s", meta)


def gap_curve(family: Callable[[float], CouplingStencil], values: Sequence[float], grid=None, route="auto", kappa: float = 0.0, label: str = "parameter") -> GapCurve:
    """Gap of ``family(v) + kappa D`` for each ``v`` in ``values``."""
    gaps, ks = [], []
    for v in values:
        gp = dissipative_gap(append_aux_dissipator(family(float(v)), kappa), grid, route)
        gaps.append(gp.gap)
        ks.append(gp.k)
    return GapCurve(np.asarray(values, float), np.asarray(gaps), ks, label, {"kappa": kappa})
