"""Spatial decay of steady-state correlations.

One-dimensional models: far from the origin the steady state obeys the matrix
difference equation ``sum_{n=0}^{R} C_n vec(gamma(r + n)) = 0`` with
``C_n = x(d - n) (x) 1 + 1 (x) x(n - d)`` and ``R = 2d``. Its solutions are
combinations of ``beta^r`` with ``beta`` an eigenvalue of the companion
(transfer) matrix or, equivalently, ``beta = 1/z`` for roots of
``det sum_n z^(R-n) C_n``.

Quasifree models in any dimension: the poles of ``gamma~`` as a function of
``z = exp(i k_a)`` inside the unit disc bound the correlation length along
axis ``a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import (
    InsufficientData,
    IrregularPencil,
    NotOneDimensional,
    PoleOnUnitCircle,
    SingularLeadingBlock,
)
from .rational import aaa
from .stencil import CouplingStencil, evolution_stencil

UNIT_TOL = 1e-9
COND_LIMIT = 1e12
DEFAULT_RMS_THRESHOLD = 0.1


@dataclass(frozen=True, eq=False)
class DifferenceStencil:
    """Coefficients ``C_0 .. C_R`` of the one-dimensional matrix difference equation."""

    C: tuple[np.ndarray, ...]
    reach: int
    block: int

    @property
    def order(self) -> int:
        return len(self.C) - 1

    def residual(self, gamma_of, r_start: int, r_stop: int) -> float:
        """Max-norm of ``sum_n C_n vec(gamma(r + n))`` over ``r_start <= r < r_stop``."""
        worst = 0.0
        for r in range(r_start, r_stop):
            acc = sum(c @ np.asarray(gamma_of(r + n)).reshape(-1) for n, c in enumerate(self.C))
            worst = max(worst, float(np.max(np.abs(acc))))
        return worst


@dataclass(frozen=True)
class DecayFit:
    rate: float
    prefactor: float
    rms: float
    exponential: bool
    n_samples: int
    envelope: bool


@dataclass(frozen=True, eq=False)
class DecayReport:
    """Decay modes, poles, correlation-length bounds and an optional fit."""

    modes: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    multiplicities: np.ndarray | None = None
    poles: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    residues: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    xi_bound: tuple[float, ...] = ()
    fit: DecayFit | None = None
    method: str = ""
    info: dict = field(default_factory=dict)

    @property
    def dominant(self) -> complex | None:
        """Largest-modulus mode strictly inside the unit disc."""
        inside = [b for b in self.modes if abs(b) < 1 - UNIT_TOL]
        return max(inside, key=abs) if inside else None


def _x_blocks(stencil: CouplingStencil) -> dict:
    if stencil.dims != 1:
        raise NotOneDimensional("the difference equation is only defined for D = 1")
    return evolution_stencil(stencil).x


def build_difference_stencil(stencil: CouplingStencil) -> DifferenceStencil:
    """``C_n = x(d - n) (x) 1 + 1 (x) x(n - d)`` for ``n = 0 .. 2d``."""
    x = _x_blocks(stencil)
    n = stencil.block
    d = max((abs(r[0]) for r, v in x.items() if np.any(v)), default=0)
    eye = np.eye(n)
    zero = np.zeros((n, n))
    C = []
    for k in range(2 * d + 1):
        C.append(np.kron(x.get((d - k,), zero), eye) + np.kron(eye, x.get((k - d,), zero)))
    return DifferenceStencil(tuple(C), d, n)


def transfer_matrix(ds: DifferenceStencil) -> tuple[np.ndarray, np.ndarray]:
    """Companion matrix of the difference equation and its eigenvalues.

    Blocks of the first row are ``A_m = -C_R^{-1} C_m`` in the order
    ``m = R-1, ..., 0``.

    Raises
    ------
    SingularLeadingBlock
        If ``cond(C_R) >= 1e12``; use :func:`pencil_poles` instead.
    """
    R = ds.order
    CR = ds.C[-1]
    m = CR.shape[0]
    if R == 0:
        return np.zeros((0, 0)), np.zeros(0, complex)
    cond = np.linalg.cond(CR)
    if not np.isfinite(cond) or cond >= COND_LIMIT:
        raise SingularLeadingBlock(f"leading block is singular (cond = {cond:.3e})")
    T = np.zeros((R * m, R * m))
    for col, k in enumerate(range(R - 1, -1, -1)):
        T[:m, col * m : (col + 1) * m] = -np.linalg.solve(CR, ds.C[k])
    T[m:, :-m] = np.eye((R - 1) * m)
    return T, np.linalg.eigvals(T)


def decay_modes(eigenvalues, tol: float = UNIT_TOL) -> np.ndarray:
    """Eigenvalues with ``|beta| <= 1 + tol``, sorted by decreasing modulus."""
    ev = np.asarray(eigenvalues, complex)
    ev = ev[np.abs(ev) <= 1 + tol]
    return ev[np.argsort(-np.abs(ev), kind="stable")]


def _pencil(ds: DifferenceStencil, z) -> np.ndarray:
    R = ds.order
    return sum(z ** (R - n) * c for n, c in enumerate(ds.C))


def _cluster(roots: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    remaining = list(roots)
    centers, mult = [], []
    while remaining:
        r0 = remaining.pop(0)
        group = [r0] + [r for r in remaining if abs(r - r0) <= tol * max(1.0, abs(r0))]
        remaining = [r for r in remaining if abs(r - r0) > tol * max(1.0, abs(r0))]
        centers.append(np.mean(group))
        mult.append(len(group))
    return np.asarray(centers, complex), np.asarray(mult, int)


def _reversed_pencil(ds: DifferenceStencil, beta) -> np.ndarray:
    """``M(beta) = sum_n beta^n C_n = beta^R L(1/beta)``."""
    return sum(beta**n * c for n, c in enumerate(ds.C))


def _reversed_pencil_deriv(ds: DifferenceStencil, beta) -> np.ndarray:
    return sum(n * beta ** (n - 1) * c for n, c in enumerate(ds.C) if n > 0)


def _newton_step(ds: DifferenceStencil, beta, mult: int = 1):
    """Newton step on ``det M`` using ``(det M)'/det M = tr(M^-1 M')``; scaled by the multiplicity."""
    try:
        tr = np.trace(np.linalg.solve(_reversed_pencil(ds, beta), _reversed_pencil_deriv(ds, beta)))
    except np.linalg.LinAlgError:
        return None
    step = mult / tr
    return step if np.isfinite(step) else None


def _polish(ds: DifferenceStencil, beta, mult: int = 1, iters: int = 30):
    for _ in range(iters):
        step = _newton_step(ds, beta, mult)
        if step is None:
            break
        # stay near the algebraic root; a large step means a poor start
        if abs(step) > 1e-3 * max(1.0, abs(beta)):
            break
        beta = beta - step
        if abs(step) <= 1e-15 * max(1.0, abs(beta)):
            break
    return beta


def _regularity_check(ds: DifferenceStencil, rng: np.random.Generator) -> float:
    """Raise :class:`IrregularPencil` if ``det L`` vanishes at random points; returns the coefficient scale."""
    deg = ds.C[0].shape[0] * ds.order
    scale = max(float(np.max(np.abs(c))) for c in ds.C) if ds.C else 0.0
    if scale == 0.0:
        raise IrregularPencil("all pencil coefficients vanish")
    # random points in the annulus 1/2 < |z| < 2
    pts = np.exp(rng.uniform(-np.log(2), np.log(2), deg + 1) + 2j * np.pi * rng.uniform(size=deg + 1))
    vals = [abs(np.linalg.det(_pencil(ds, z) / scale)) for z in pts]
    if max(vals) <= 1e-13:
        raise IrregularPencil("det L(z) vanishes identically")
    return scale


def _modes_qz(ds: DifferenceStencil, scale: float) -> tuple[np.ndarray, int]:
    """Finite eigenvalues of the block-companion pencil ``A - beta B`` of ``M(beta)``.

    ``v = (u, beta u, ..., beta^(R-1) u)``, ``B = diag(1, ..., 1, C_R)`` and the
    last block row of ``A`` is ``(-C_0, ..., -C_(R-1))``. A singular ``C_R``
    produces infinite eigenvalues (roots ``z = 0`` of ``det L``), which are dropped.
    """
    R = ds.order
    m = ds.C[0].shape[0]
    if R == 0:
        return np.zeros(0, complex), 0
    C = [c / scale for c in ds.C]
    A = np.zeros((R * m, R * m))
    B = np.eye(R * m)
    A[: (R - 1) * m, m:] = np.eye((R - 1) * m)
    for n in range(R):
        A[(R - 1) * m :, n * m : (n + 1) * m] = -C[n]
    B[(R - 1) * m :, (R - 1) * m :] = C[R]
    ab = sla.eigvals(A, B, homogeneous_eigvals=True)
    alpha, beta = ab[0], ab[1]
    finite = np.abs(beta) > 1e-13 * np.maximum(np.abs(alpha), 1.0)
    return alpha[finite] / beta[finite], int(np.sum(~finite))


def _modes_determinant(ds: DifferenceStencil, scale: float) -> tuple[np.ndarray, int]:
    """Roots of the interpolated ``det M(beta)`` polynomial, polished on the matrix pencil."""
    R = ds.order
    m = ds.C[0].shape[0]
    deg = m * R
    n_nodes = 2 * deg + 1
    nodes = np.exp(2j * np.pi * np.arange(n_nodes) / n_nodes)
    dets = np.array([np.linalg.det(_pencil(ds, z) / scale) for z in nodes])
    coef = np.fft.fft(dets) / n_nodes  # coef[j] multiplies z^j
    coef = coef[: deg + 1]
    # exact end coefficients: det C_R (z^0) and det C_0 (z^deg)
    coef[0] = np.linalg.det(ds.C[-1] / scale)
    coef[deg] = np.linalg.det(ds.C[0] / scale)
    cmax = np.max(np.abs(coef))
    # det M(beta) = sum_j coef[j] beta^(deg - j); np.roots wants coef[0], coef[1], ...
    lo = 0
    while lo < deg and abs(coef[lo]) <= 1e-11 * cmax:
        lo += 1  # leading zeros: roots at beta = infinity
    poly = coef[lo:]
    roots = np.roots(poly) if len(poly) > 1 else np.zeros(0, complex)
    return np.array([_polish(ds, b) for b in roots], complex), lo


def pencil_poles(
    ds: DifferenceStencil,
    rng: np.random.Generator | None = None,
    cluster_tol: float = 1e-6,
    method: str = "qz",
) -> DecayReport:
    """Roots of ``det L(z)``, ``L(z) = sum_n z^(R-n) C_n``, and the decay modes ``1/z``.

    The modes ``beta = 1/z`` are the roots of ``det M(beta)`` with
    ``M(beta) = beta^R L(1/beta) = sum_n beta^n C_n``; decay modes are those
    with ``|beta| <= 1 + 1e-9``. Two root finders are available:

    * ``"qz"``: generalized eigenvalues of the block-companion linearization.
      Backward stable for any degree and any (singular) ``C_R``.
    * ``"determinant"``: ``det L`` sampled at ``2 * 4b^2 R + 1`` roots of
      unity, converted to monomial coefficients by an FFT and solved with the
      companion matrix of the scalar polynomial, then polished by Newton steps
      on the matrix pencil. Accurate for low degree; the monomial coefficients
      lose relative accuracy once ``4b^2 R`` reaches a few dozen.

    Roots are clustered with relative tolerance ``cluster_tol`` and multiple
    roots are re-polished with multiplicity-scaled Newton steps.

    Raises
    ------
    IrregularPencil
        If ``det L`` vanishes at random test points.
    """
    rng = rng or np.random.default_rng(0)
    scale = _regularity_check(ds, rng)
    if method == "qz":
        betas, n_inf = _modes_qz(ds, scale)
    elif method == "determinant":
        betas, n_inf = _modes_determinant(ds, scale)
    else:
        raise ValueError(f"unknown pencil method {method!r}")
    centers, mult = _cluster(betas, cluster_tol)
    centers = np.array([_polish(ds, c, int(k)) if k > 1 else c for c, k in zip(centers, mult)], complex)
    keep = np.abs(centers) <= 1 + UNIT_TOL
    modes = centers[keep]
    order = np.argsort(-np.abs(modes), kind="stable")
    nonzero = np.abs(centers) > 0
    return DecayReport(
        modes=modes[order],
        multiplicities=mult[keep][order],
        poles=1.0 / centers[nonzero],
        method=f"pencil-{method}",
        info={"degree": int(len(betas)), "infinite_modes": n_inf, "multiplicities_all": mult.tolist()},
    )


def decay_report_1d(stencil: CouplingStencil) -> DecayReport:
    """Transfer-matrix decay modes, falling back to the pencil when ``C_R`` is singular."""
    ds = build_difference_stencil(stencil)
    try:
        _, ev = transfer_matrix(ds)
    except SingularLeadingBlock:
        return pencil_poles(ds)
    modes = decay_modes(ev)
    return DecayReport(modes=modes, method="transfer")


# -- momentum-space poles ------------------------------------------------------


def _gamma_complex(x: dict, y: dict, axis: int, z: np.ndarray, transverse: np.ndarray) -> np.ndarray:
    """``gamma~`` at complex ``z = exp(i k_axis)`` and real transverse momenta.

    Solves ``x~(z) g + g x~(1/z)^T = -y~(z)`` with ``x~(z) = sum_r x(r) z^(-r_axis) e^(-i k_perp r_perp)``.
    """
    n = next(iter(x.values())).shape[0]
    P = len(z)

    def ft(d, zz, sign):
        out = np.zeros((P, n, n), complex)
        for r, v in d.items():
            ra = r[axis]
            perp = sum(kp * rp for a, (kp, rp) in enumerate(zip(transverse, r)) if a != axis)
            out += (zz ** (-sign * ra) * np.exp(-1j * sign * perp))[:, None, None] * v
        return out

    xk = ft(x, z, 1)
    xm = ft(x, z, -1)
    yk = ft(y, z, 1) if y else np.zeros((P, n, n), complex)
    eye = np.eye(n)
    A = np.einsum("pij,kl->pikjl", xk, eye).reshape(P, n * n, n * n)
    A += np.einsum("ij,pkl->pikjl", eye, xm).reshape(P, n * n, n * n)
    return np.linalg.solve(A, -yk.reshape(P, n * n, 1)).reshape(P, n, n)


def _interior_poles(x, y, axis, transverse, radii, n_per_circle, res_tol):
    zs = np.concatenate([rho * np.exp(2j * np.pi * (np.arange(n_per_circle) + 0.5) / n_per_circle) for rho in radii])
    g = _gamma_complex(x, y, axis, zs, transverse)
    n = g.shape[1]
    scale = max(float(np.max(np.abs(g))), 1e-300)
    poles, residues = [], []
    for a in range(n):
        for b in range(n):
            f = g[:, a, b]
            if np.max(np.abs(f)) <= 1e-13 * scale:
                continue
            fit = aaa(zs, f)
            p = fit.poles()
            if p.size == 0:
                continue
            res = fit.residues(p)
            ok = (np.abs(res) > res_tol * scale) & (np.abs(p) > 1e-8)
            poles.extend(p[ok])
            residues.extend(res[ok])
    return np.asarray(poles, complex), np.asarray(residues, complex)


def momentum_poles(
    stencil: CouplingStencil,
    axis: int = 0,
    transverse_grid: int = 256,
    radii=(0.90, 0.95, 0.99),
    n_per_circle: int = 128,
    residue_tol: float = 1e-9,
) -> DecayReport:
    """Poles of ``gamma~`` in ``z = exp(i k_axis)`` inside the unit disc.

    The correlation length along ``axis`` (positive direction) obeys
    ``xi <= -1 / ln|zeta|`` with ``|zeta|`` the largest interior pole modulus,
    maximized over real transverse momenta on a ``transverse_grid``-point mesh
    per transverse axis. ``xi = 0`` when there are no interior poles.

    Raises
    ------
    PoleOnUnitCircle
        If a pole with non-negligible residue lies on ``|z| = 1``.
    """
    ev = evolution_stencil(stencil)
    if not stencil.quasifree:
        from .errors import QuadraticNotSupported

        raise QuadraticNotSupported("momentum poles require a quasifree stencil")
    D = stencil.dims
    others = [a for a in range(D) if a != axis]
    ks = 2 * np.pi * np.arange(transverse_grid) / transverse_grid
    if others:
        mesh = np.meshgrid(*([ks] * len(others)), indexing="ij")
        transverse_pts = np.stack([m.ravel() for m in mesh], axis=1)
    else:
        transverse_pts = np.zeros((1, 0))
    all_poles, all_res = [], []
    worst = 0.0
    worst_k = None
    for tp in transverse_pts:
        kvec = np.zeros(D)
        kvec[others] = tp
        p, res = _interior_poles(ev.x, ev.y, axis, kvec, radii, n_per_circle, residue_tol)
        near_unit = np.abs(np.abs(p) - 1) <= 1e-6
        if np.any(near_unit):
            raise PoleOnUnitCircle(f"pole on the unit circle at transverse k={tuple(tp)}")
        inside = np.abs(p) < 1 - UNIT_TOL
        p, res = p[inside], res[inside]
        if p.size:
            mx = float(np.max(np.abs(p)))
            if mx > worst:
                worst, worst_k = mx, tuple(tp)
        all_poles.append(p)
        all_res.append(res)
    poles = np.concatenate(all_poles) if all_poles else np.zeros(0, complex)
    residues = np.concatenate(all_res) if all_res else np.zeros(0, complex)
    xi = 0.0 if worst == 0.0 else -1.0 / np.log(worst)
    bound = [np.nan] * D
    bound[axis] = xi
    info = {"max_pole_modulus": worst, "transverse_maximizer": worst_k, "transverse_grid": transverse_grid}
    if D == 1:
        poles, residues = _dedupe(poles, residues)
    return DecayReport(poles=poles, residues=residues, xi_bound=tuple(bound), method="momentum", info=info)


def _dedupe(poles, residues, tol=1e-6):
    if poles.size == 0:
        return poles, residues
    keep_p, keep_r = [], []
    for p, r in zip(poles, residues):
        if all(abs(p - q) > tol * max(1, abs(q)) for q in keep_p):
            keep_p.append(p)
            keep_r.append(r)
    return np.asarray(keep_p), np.asarray(keep_r)


def momentum_poles_1d(stencil: CouplingStencil, **kw) -> DecayReport:
    if stencil.dims != 1:
        raise NotOneDimensional("use momentum_poles for D > 1")
    return momentum_poles(stencil, axis=0, **kw)


# -- fitting -------------------------------------------------------------------


def _local_maxima(v: np.ndarray) -> np.ndarray:
    idx = [i for i in range(1, len(v) - 1) if v[i] >= v[i - 1] and v[i] >= v[i + 1]]
    return np.asarray(idx, int)


def fit_exponential_decay(
    r,
    values,
    burn_in: int | None = 0,
    floor: float = 1e-14,
    rms_threshold: float = DEFAULT_RMS_THRESHOLD,
    min_samples: int = 6,
) -> DecayFit:
    """Fit ``|value| ~ A rate^r`` by linear least squares on ``log|value|``.

    Samples with ``r < burn_in`` or ``|value| <= floor`` are dropped. When the
    remaining ``|value|`` sequence is not monotone (oscillating modes) the fit
    uses the envelope formed by its local maxima. ``exponential`` is False
    when the rms of the log residual exceeds ``rms_threshold``.

    Raises
    ------
    InsufficientData
        If fewer than ``min_samples`` samples (or envelope points) remain.
    """
    r = np.asarray(r, float)
    v = np.abs(np.asarray(values, float))
    order = np.argsort(r)
    r, v = r[order], v[order]
    keep = v > floor
    if burn_in is not None:
        keep &= r >= burn_in
    r, v = r[keep], v[keep]
    if len(r) < min_samples:
        raise InsufficientData(f"need at least {min_samples} usable samples, got {len(r)}")
    logv = np.log(v)
    d = np.diff(logv)
    envelope = not (np.all(d <= 0) or np.all(d >= 0))
    if envelope:
        idx = _local_maxima(v)
        if len(idx) < min_samples:
            raise InsufficientData(f"envelope has only {len(idx)} peaks")
        r, logv = r[idx], logv[idx]
    slope, icpt = np.polyfit(r, logv, 1)
    resid = logv - (slope * r + icpt)
    rms = float(np.sqrt(np.mean(resid**2)))
    return DecayFit(float(np.exp(slope)), float(np.exp(icpt)), rms, rms <= rms_threshold, len(r), envelope)
