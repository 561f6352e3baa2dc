"""Steady-state covariance matrices.

Three independent routes are provided and cross-checked in the tests:

* :func:`solve_steady_dense` solves ``X G + G X^T + sum_u Z_u G Z_u^T = -Y``
  for a finite lattice,
* :func:`solve_steady_momentum` solves one ``2b x 2b`` Lyapunov equation per
  lattice momentum and transforms back,
* :func:`evolve_covariance` integrates the equation of motion with RK4.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dense import DenseEvolution, cell_coordinates
from .errors import (
    Diverged,
    InvalidStencil,
    MissingRepresentation,
    NonFiniteSolve,
    SingularAtK,
    SingularSteadyState,
)
from .stencil import CouplingStencil, Statistics, k_axes, momentum_grid

SINGULAR_RATIO = 1e-12
DENSE_RESIDUAL_TOL = 1e-9
KRON_MAX_SIZE = 48
LYAPUNOV_CHUNK = 1 << 15


# -- covariance field --------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CovarianceField:
    """Translation-invariant steady-state covariance.

    ``real_space[r]`` holds ``gamma(r)`` for ``r`` reduced modulo the grid and
    ``momentum_space[m]`` holds ``gamma~(k)`` at ``k_a = 2 pi (m_a + shift_a) / L_a``.
    A nonzero ``shift`` makes the real-space data twisted-periodic,
    ``gamma(r + L e_a) = exp(2 pi i shift_a) gamma(r)``.
    """

    statistics: Statistics | None
    grid: tuple[int, ...]
    bands: int
    real_space: np.ndarray | None = None
    momentum_space: np.ndarray | None = None
    shift: tuple[float, ...] = ()
    residual: float = 0.0
    method: str = ""
    spread: float = 0.0
    matrix: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(int(g) for g in self.grid))
        sh = self.shift if len(self.shift) else (0.0,) * len(self.grid)
        object.__setattr__(self, "shift", tuple(float(s) for s in np.broadcast_to(sh, (len(self.grid),))))

    @property
    def dims(self) -> int:
        return len(self.grid)

    @property
    def block(self) -> int:
        return 2 * self.bands

    def k_axes(self) -> list[np.ndarray]:
        return k_axes(self.grid, self.shift)

    def gamma(self, r) -> np.ndarray:
        """``gamma(r)`` for any integer displacement, using the (twisted) periodicity."""
        if self.real_space is None:
            raise MissingRepresentation("real-space representation not available")
        r = np.atleast_1d(np.asarray(r, int))
        idx = tuple(int(v) % L for v, L in zip(r, self.grid))
        wraps = [int(v) // L for v, L in zip(r, self.grid)]
        phase = np.exp(2j * np.pi * sum(w * s for w, s in zip(wraps, self.shift)))
        out = self.real_space[idx]
        return out if phase == 1 else (phase * out).real

    def entry(self, alpha: int, beta: int) -> np.ndarray:
        """Real-space array of one matrix entry ``gamma_{alpha beta}(r)``."""
        if self.real_space is None:
            raise MissingRepresentation("real-space representation not available")
        return self.real_space[..., alpha, beta]


def _twist(grid, shift, sign: int) -> np.ndarray:
    """``exp(sign * 2 pi i sum_a s_a r_a / L_a)`` on the real-space mesh."""
    phase = np.zeros(grid)
    for a, (L, s) in enumerate(zip(grid, shift)):
        shape = [1] * len(grid)
        shape[a] = L
        phase = phase + (s * np.arange(L) / L).reshape(shape)
    return np.exp(sign * 2j * np.pi * phase)


def to_momentum(real_space: np.ndarray, grid, shift) -> np.ndarray:
    axes = tuple(range(len(grid)))
    tw = _twist(grid, shift, -1)[(...,) + (None, None)]
    return np.fft.fftn(real_space * tw, axes=axes)


def to_real(momentum_space: np.ndarray, grid, shift) -> np.ndarray:
    axes = tuple(range(len(grid)))
    tw = _twist(grid, shift, +1)[(...,) + (None, None)]
    return np.fft.ifftn(momentum_space, axes=axes) * tw


def fourier_pair(cov: CovarianceField, direction: str = "auto") -> CovarianceField:
    """Fill the missing representation of ``cov`` by a discrete Fourier transform.

    ``direction`` is ``"to_momentum"``, ``"to_real"`` or ``"auto"`` (whichever
    representation is missing).
    """
    if direction == "auto":
        direction = "to_real" if cov.real_space is None else "to_momentum"
    if direction == "to_momentum":
        if cov.real_space is None:
            raise MissingRepresentation("no real-space data to transform")
        mom = to_momentum(cov.real_space, cov.grid, cov.shift)
        return _replace(cov, momentum_space=mom)
    if direction == "to_real":
        if cov.momentum_space is None:
            raise MissingRepresentation("no momentum-space data to transform")
        real = to_real(cov.momentum_space, cov.grid, cov.shift)
        if not np.iscomplexobj(cov.momentum_space) or np.max(np.abs(real.imag), initial=0) <= 1e-9:
            real = real.real
        return _replace(cov, real_space=real)
    raise ValueError(f"unknown direction {direction!r}")


def _replace(cov: CovarianceField, **kw) -> CovarianceField:
    base = dict(
        statistics=cov.statistics,
        grid=cov.grid,
        bands=cov.bands,
        real_space=cov.real_space,
        momentum_space=cov.momentum_space,
        shift=cov.shift,
        residual=cov.residual,
        method=cov.method,
        spread=cov.spread,
        matrix=cov.matrix,
        info=dict(cov.info),
    )
    base.update(kw)
    return CovarianceField(**base)


# -- per-momentum Lyapunov equations -----------------------------------------


def lyapunov_operator(xk: np.ndarray, xmk: np.ndarray) -> np.ndarray:
    """Row-major vectorization of ``g -> x(k) g + g x(-k)^T``."""
    n = xk.shape[-1]
    eye = np.eye(n)
    return np.kron(xk, eye) + np.kron(eye, xmk)


def solve_lyapunov_k(xk, yk, k=None, xmk=None) -> tuple[np.ndarray, float]:
    """Solve ``x~(k) g + g x~(-k)^T = -y~(k)`` for one momentum.

    Parameters
    ----------
    xk, yk : (2b, 2b) complex arrays
    k : sequence of float, optional
        Only used to label :class:`SingularAtK`.
    xmk : (2b, 2b) complex array, optional
        ``x~(-k)``; defaults to ``conj(x~(k))``, valid for real stencils.

    Returns
    -------
    gk : ndarray
    residual : float
        Max-norm residual of the Lyapunov equation.
    """
    xk = np.asarray(xk, complex)
    yk = np.asarray(yk, complex)
    xmk = np.conj(xk) if xmk is None else np.asarray(xmk, complex)
    n = xk.shape[0]
    A = lyapunov_operator(xk, xmk)
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] <= SINGULAR_RATIO * sv[0] or sv[0] == 0:
        raise SingularAtK(() if k is None else np.atleast_1d(k), sv[-1] / sv[0] if sv[0] else 0.0)
    g = np.linalg.solve(A, -yk.reshape(-1)).reshape(n, n)
    res = float(np.max(np.abs(xk @ g + g @ xmk.T + yk)))
    return g, res


def solve_lyapunov_batch(xk: np.ndarray, yk: np.ndarray, xmk: np.ndarray | None = None, on_singular: str = "raise", k_of=None):
    """Vectorized :func:`solve_lyapunov_k` over a leading batch axis.

    ``on_singular="nan"`` fills singular points with NaN instead of raising.
    Returns ``(g, residual, n_singular)``.
    """
    xk = np.asarray(xk, complex)
    yk = np.asarray(yk, complex)
    xmk = np.conj(xk) if xmk is None else np.asarray(xmk, complex)
    P, n, _ = xk.shape
    eye = np.eye(n)
    out = np.empty((P, n, n), complex)
    worst = 0.0
    n_sing = 0
    # absolute floor so that a block that vanishes up to roundoff counts as singular
    floor = 2 * float(np.max(np.abs(xk))) if xk.size else 0.0
    for lo in range(0, P, LYAPUNOV_CHUNK):
        hi = min(P, lo + LYAPUNOV_CHUNK)
        a = xk[lo:hi]
        b = xmk[lo:hi]
        A = np.einsum("pij,kl->pikjl", a, eye).reshape(-1, n * n, n * n)
        A += np.einsum("ij,pkl->pikjl", eye, b).reshape(-1, n * n, n * n)
        sv = np.linalg.svd(A, compute_uv=False)
        bad = sv[:, -1] <= SINGULAR_RATIO * np.maximum(sv[:, 0], floor)
        if np.any(bad):
            if on_singular == "raise":
                p = lo + int(np.flatnonzero(bad)[0])
                kk = k_of(p) if k_of is not None else (p,)
                raise SingularAtK(kk, sv[p - lo, -1] / max(sv[p - lo, 0], 1e-300))
            n_sing += int(bad.sum())
            A[bad] = np.eye(n * n)
        rhs = -yk[lo:hi].reshape(-1, n * n, 1)
        g = np.linalg.solve(A, rhs).reshape(-1, n, n)
        g[bad] = np.nan
        out[lo:hi] = g
        good = ~bad
        if np.any(good):
            r = a @ g + g @ np.swapaxes(b, -1, -2) + yk[lo:hi]
            worst = max(worst, float(np.max(np.abs(r[good]))))
    return out, worst, n_sing


def solve_steady_momentum(
    stencil: CouplingStencil,
    grid: Sequence[int] | None = None,
    shift=0.0,
    on_singular: str = "raise",
) -> CovarianceField:
    """Steady state from per-momentum Lyapunov solves on a uniform grid.

    Parameters
    ----------
    stencil : CouplingStencil
        Quasifree stencil.
    grid : sequence of int, optional
        Number of momenta per axis (defaults to the lattice extent).
    shift : float or sequence of float
        Offset of the momentum mesh in units of ``2 pi / L``; ``0.5`` avoids
        ``k = 0``.
    on_singular : {"raise", "nan"}
        Policy for momenta where the Lyapunov operator is singular. With
        ``"nan"`` these points are NaN in ``momentum_space`` and the real-space
        transform is left empty.

    Notes
    -----
    ``info["stable"]`` is False when some ``x~(k)`` has an eigenvalue with
    positive real part. The Lyapunov solution then exists but is not the
    long-time limit of the dynamics. An uncoupled fermionic model returns
    the maximally mixed state, as in :func:`solve_steady_dense`.
    """
    if grid is None:
        if stencil.lattice.extent is None:
            raise InvalidStencil("grid required for an infinite lattice")
        grid = stencil.lattice.extent
    grid = tuple(int(g) for g in np.atleast_1d(grid))
    shifts = tuple(float(s) for s in np.broadcast_to(np.asarray(shift, float), (len(grid),)))
    xt, yt = momentum_grid(stencil, grid, shifts)
    n = stencil.block
    axes = k_axes(grid, shifts)

    def k_of(p):
        idx = np.unravel_index(p, grid)
        return tuple(ax[i] for ax, i in zip(axes, idx))

    if _trivial_fermion(stencil.statistics, xt, yt):
        # no coupling at all: every state is stationary, report the maximally mixed one
        g = np.zeros(grid + (n, n), complex)
        info = {"singular_points": 0, "max_re_eig": 0.0, "stable": True, "trivial": True}
        real = np.zeros(grid + (n, n))
        return CovarianceField(stencil.statistics, grid, stencil.bands, real, g, shifts, 0.0, "trivial", info=info)
    g, res, n_sing = solve_lyapunov_batch(xt.reshape(-1, n, n), yt.reshape(-1, n, n), None, on_singular, k_of)
    # a solution exists for unstable models too; record whether it is an attractor
    max_re = float(np.max(np.linalg.eigvals(xt.reshape(-1, n, n)).real))
    del xt, yt
    g = g.reshape(grid + (n, n))
    info = {"singular_points": n_sing, "max_re_eig": max_re, "stable": max_re <= 0.0}
    if n_sing:
        return CovarianceField(stencil.statistics, grid, stencil.bands, None, g, shifts, res, "momentum", info=info)
    real = to_real(g, grid, shifts)
    imag = float(np.max(np.abs(real.imag)))
    info["imag_residual"] = imag
    if imag > 1e-9:
        raise NonFiniteSolve(f"real-space covariance has imaginary residue {imag:.3e}")
    return CovarianceField(stencil.statistics, grid, stencil.bands, real.real, g, shifts, res, "momentum", info=info)


# -- dense steady state --------------------------------------------------------


def _trivial_fermion(statistics, X, Y, Zs=()) -> bool:
    """True for a fermionic generator that vanishes identically."""
    if statistics is None or statistics.value != "fermion":
        return False
    return not np.any(X) and not np.any(Y) and all(z.nnz == 0 or not np.any(z.data) for z in Zs)


def _pair_spectrum_check(X: np.ndarray):
    """Raise if ``lambda_i + lambda_j`` vanishes for eigenvalues of ``X``."""
    ev = np.linalg.eigvals(X)
    scale = max(np.max(np.abs(ev)), 1.0)
    sums = np.abs(ev[:, None] + ev[None, :])
    if np.min(sums) <= 1e-10 * scale:
        raise SingularSteadyState("X has eigenvalue pairs summing to zero; the steady state is not unique")


def _solve_sylvester(ev: DenseEvolution) -> np.ndarray:
    _pair_spectrum_check(ev.X)
    return sla.solve_continuous_lyapunov(ev.X, -ev.Y)


def _solve_kron(ev: DenseEvolution) -> np.ndarray:
    n = ev.size
    eye = np.eye(n)
    A = np.kron(ev.X, eye) + np.kron(eye, ev.X)
    for z in ev.Zs:
        zd = z.toarray()
        A += np.kron(zd, zd)
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        try:
            g = sla.solve(A, -ev.Y.reshape(-1))
        except (np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
            raise SingularSteadyState(f"steady-state system is singular: {exc}") from None
    return g.reshape(n, n)


def _translation_system(ev: DenseEvolution):
    """Sparse system for translation-invariant ``Gamma`` restricted to rows in cell 0."""
    lat = ev.lattice
    nb = lat.block
    C = lat.n_cells
    size = ev.size
    coords = cell_coordinates(lat.extent)
    ext = np.asarray(lat.extent)
    cell = np.repeat(np.arange(C), nb)
    loc = np.tile(np.arange(nb), C)

    def uid(p, q):
        diff = (coords[cell[p]] - coords[cell[q]]) % ext
        return np.ravel_multi_index(tuple(diff.T), lat.extent) * nb * nb + loc[p] * nb + loc[q]

    rows_a = np.arange(nb)  # global indices of cell 0
    Xs = sp.coo_matrix(ev.X)
    Xc = sp.csr_matrix(ev.X)
    R, Cc, V = [], [], []
    jall = np.arange(size)
    # X Gamma
    for a in rows_a:
        lo, hi = Xc.indptr[a], Xc.indptr[a + 1]
        for c, v in zip(Xc.indices[lo:hi], Xc.data[lo:hi]):
            R.append(a * size + jall)
            Cc.append(uid(np.full(size, c), jall))
            V.append(np.full(size, v))
    # Gamma X^T: eq(a, j) += X[j, c] u(a, c)
    for a in rows_a:
        R.append(a * size + Xs.row)
        Cc.append(uid(np.full(Xs.nnz, a), Xs.col))
        V.append(Xs.data)
    # Z Gamma Z^T
    for z in ev.Zs:
        zc = sp.csr_matrix(z)
        zo = zc.tocoo()
        for a in rows_a:
            lo, hi = zc.indptr[a], zc.indptr[a + 1]
            for c, v in zip(zc.indices[lo:hi], zc.data[lo:hi]):
                R.append(a * size + zo.row)
                Cc.append(uid(np.full(zo.nnz, c), zo.col))
                V.append(v * zo.data)
    n_unknown = C * nb * nb
    A = sp.csr_matrix(
        (np.concatenate(V), (np.concatenate(R), np.concatenate(Cc))), shape=(nb * size, n_unknown)
    )
    rhs = -ev.Y[:nb, :].reshape(-1)
    # equation (a, j) with j = (cell_j, beta) targets unknown u(a, j); map rows to that order
    return A, rhs, uid


def _solve_translation(ev: DenseEvolution) -> np.ndarray:
    lat = ev.lattice
    nb = lat.block
    A, rhs, uid = _translation_system(ev)
    if A.shape[0] != A.shape[1]:
        raise SingularSteadyState("translation-reduced system is not square")
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        try:
            if A.shape[0] <= 6000:
                sol = sla.solve(A.toarray(), rhs)
            else:
                sol = spla.splu(A.tocsc()).solve(rhs)
        except (np.linalg.LinAlgError, sla.LinAlgWarning, RuntimeError) as exc:
            raise SingularSteadyState(f"steady-state system is singular: {exc}") from None
    gam = sol.reshape((lat.n_cells, nb, nb))
    return _assemble_gamma(gam, lat)


def _assemble_gamma(gam: np.ndarray, lat) -> np.ndarray:
    """Dense ``Gamma`` with blocks ``gamma(i - j)`` from per-displacement blocks."""
    nb = lat.block
    coords = cell_coordinates(lat.extent)
    diff = (coords[:, None, :] - coords[None, :, :]) % np.asarray(lat.extent)
    idx = np.ravel_multi_index(tuple(np.moveaxis(diff, -1, 0)), lat.extent)
    blocks = gam[idx]  # (C, C, nb, nb)
    C = lat.n_cells
    return blocks.transpose(0, 2, 1, 3).reshape(C * nb, C * nb)


def _solve_iterative(ev: DenseEvolution, tol: float) -> np.ndarray:
    n = ev.size
    op = spla.LinearOperator((n * n, n * n), matvec=lambda v: ev.linear_part(v.reshape(n, n)).reshape(-1))
    sol, info = spla.lgmres(op, -ev.Y.reshape(-1), rtol=tol * 1e-3, atol=0.0, maxiter=2000)
    if info != 0:
        raise SingularSteadyState(f"iterative solve did not converge (info={info})")
    return sol.reshape(n, n)


def extract_translation_blocks(Gamma: np.ndarray, lat) -> tuple[np.ndarray, float]:
    """Average ``Gamma`` over translations; returns ``(gamma, spread)``.

    ``gamma`` has shape ``(*extent, 2b, 2b)``; ``spread`` is the largest
    deviation of any block from its average.
    """
    nb = lat.block
    C = lat.n_cells
    coords = cell_coordinates(lat.extent)
    diff = (coords[:, None, :] - coords[None, :, :]) % np.asarray(lat.extent)
    idx = np.ravel_multi_index(tuple(np.moveaxis(diff, -1, 0)), lat.extent)
    blocks = Gamma.reshape(C, nb, C, nb).transpose(0, 2, 1, 3)
    acc = np.zeros((C, nb, nb))
    np.add.at(acc, idx.ravel(), blocks.reshape(C * C, nb, nb))
    acc /= C
    spread = float(np.max(np.abs(blocks - acc[idx]))) if C else 0.0
    return acc.reshape(tuple(lat.extent) + (nb, nb)), spread


def steady_residual(ev: DenseEvolution, Gamma: np.ndarray) -> float:
    return float(np.linalg.norm(ev.apply(Gamma)))


def solve_steady_dense(ev: DenseEvolution, method: str = "auto", tol: float = DENSE_RESIDUAL_TOL) -> CovarianceField:
    """Solve ``X G + G X^T + sum_u Z_u G Z_u^T = -Y``.

    Parameters
    ----------
    ev : DenseEvolution
    method : {"auto", "sylvester", "kron", "translation", "iterative"}
        ``sylvester`` uses the Bartels-Stewart algorithm (quasifree only);
        ``kron`` solves the explicit ``4N^2`` system; ``translation`` solves the
        exact reduced system for translation-invariant ``G`` (needs lattice
        information); ``iterative`` runs LGMRES on the full linear map.
        ``auto`` picks the first applicable in that order, with ``kron`` only
        for ``2N <= 48``.
    tol : float
        Relative residual bound; the result is rejected if
        ``||residual||_F > tol * (||X||_F + ||Y||_F)``.

    Raises
    ------
    SingularSteadyState, NonFiniteSolve

    Notes
    -----
    A fermionic model without any coupling (``X``, ``Y`` and every ``Z_u``
    zero) leaves every state invariant; the maximally mixed state ``G = 0``
    is returned with ``method="trivial"``. Bosonic models have no such
    canonical choice and raise.
    """
    if _trivial_fermion(ev.statistics, ev.X, ev.Y, ev.Zs):
        method = "trivial"
    elif method == "auto":
        if ev.quasifree:
            method = "sylvester"
        elif ev.size <= KRON_MAX_SIZE:
            method = "kron"
        elif ev.lattice is not None:
            method = "translation"
        else:
            method = "iterative"
    if method == "trivial":
        G = np.zeros((ev.size, ev.size))
    elif method == "sylvester":
        if not ev.quasifree:
            raise ValueError("the Sylvester route only applies to quasifree systems")
        G = _solve_sylvester(ev)
    elif method == "kron":
        G = _solve_kron(ev)
    elif method == "translation":
        if ev.lattice is None:
            raise ValueError("translation route needs lattice information")
        G = _solve_translation(ev)
    elif method == "iterative":
        G = _solve_iterative(ev, tol)
    else:
        raise ValueError(f"unknown method {method!r}")
    if not np.all(np.isfinite(G)):
        raise NonFiniteSolve("steady-state solve produced non-finite entries")
    res = steady_residual(ev, G)
    scale = np.linalg.norm(ev.X) + np.linalg.norm(ev.Y)
    if res > tol * max(scale, 1e-300) and res > 1e-14:
        raise SingularSteadyState(f"steady-state residual {res:.3e} exceeds {tol:g} * {scale:.3e}")
    if ev.lattice is not None:
        gam, spread = extract_translation_blocks(G, ev.lattice)
        return CovarianceField(
            ev.statistics, ev.lattice.extent, ev.lattice.bands, gam, None, (), res, method, spread, G
        )
    return CovarianceField(ev.statistics, (1,), ev.size // 2, G[None], None, (), res, method, 0.0, G)


# -- time integration ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    samples: list
    gamma: np.ndarray
    converged: bool
    steps: int
    derivative_norm: float
    dt: float


def evolve_covariance(
    ev: DenseEvolution,
    gamma0: np.ndarray | None = None,
    dt: float | None = None,
    t_max: float = 1e3,
    stop_tol: float = 1e-10,
    sample_every: int = 0,
    bound: float = 1e8,
) -> Trajectory:
    """Classical RK4 integration of the covariance equation of motion.

    Parameters
    ----------
    gamma0 : ndarray, optional
        Initial covariance (zero by default).
    dt : float, optional
        Step size; defaults to ``0.1 / max|X_ij|``.
    t_max : float
        Integration horizon.
    stop_tol : float
        Stop once ``max |dG/dt| < stop_tol``.
    sample_every : int
        Keep every n-th state in ``samples`` (0 keeps only start and end).
    bound : float
        Raise :class:`Diverged` once ``max |G|`` exceeds this value.
    """
    n = ev.size
    G = np.zeros((n, n)) if gamma0 is None else np.array(gamma0, dtype=float)
    if dt is None:
        xmax = float(np.max(np.abs(ev.X))) if ev.X.size else 0.0
        dt = 0.1 / xmax if xmax > 0 else 0.1
    if dt <= 0:
        raise ValueError("dt must be positive")
    f = ev.apply
    times, samples = [0.0], [G.copy()]
    t = 0.0
    steps = 0
    converged = False
    fG = f(G)
    dnorm = float(np.max(np.abs(fG))) if n else 0.0
    while t < t_max:
        if dnorm < stop_tol:
            converged = True
            break
        k1 = fG
        k2 = f(G + 0.5 * dt * k1)
        k3 = f(G + 0.5 * dt * k2)
        k4 = f(G + dt * k3)
        G = G + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
        steps += 1
        gmax = float(np.max(np.abs(G)))
        if not np.isfinite(gmax) or gmax > bound:
            raise Diverged(f"covariance exceeded {bound:g} at t={t:.4g}")
        fG = f(G)
        dnorm = float(np.max(np.abs(fG)))
        if sample_every and steps % sample_every == 0:
            times.append(t)
            samples.append(G.copy())
    else:
        converged = dnorm < stop_tol
    if times[-1] != t:
        times.append(t)
        samples.append(G.copy())
    return Trajectory(np.asarray(times), samples, G, converged, steps, dnorm, dt)
