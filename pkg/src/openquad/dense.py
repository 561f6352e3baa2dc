"""Dense real-space evolution matrices on a finite periodic lattice."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import InvalidStencil, NonRealResult
from .stencil import REALNESS_TOL, CouplingStencil, Lattice, Statistics, build_b_stencil, tau_matrix


@dataclass(frozen=True, eq=False)
class DenseEvolution:
    """Real matrices ``X``, ``Y`` and ``Z_u`` of the covariance equation of motion.

    ``dGamma/dt = X Gamma + Gamma X^T + Y + sum_u Z_u Gamma Z_u^T``.

    ``lattice`` and ``statistics`` are set when the matrices come from a
    translation-invariant stencil; they enable the reduced steady-state solver
    and the extraction of ``gamma(r)``.
    """

    X: np.ndarray
    Y: np.ndarray
    Zs: tuple = ()
    statistics: Statistics | None = None
    lattice: Lattice | None = None
    imag_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or X.shape[0] != X.shape[1] or Y.shape != X.shape:
            raise InvalidStencil("X and Y must be square matrices of equal shape")
        zs = tuple(sp.csr_matrix(z, dtype=float) for z in self.Zs)
        if any(z.shape != X.shape for z in zs):
            raise InvalidStencil("every Z_u must match the shape of X")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Zs", zs)

    @property
    def size(self) -> int:
        return self.X.shape[0]

    @property
    def quasifree(self) -> bool:
        return not self.Zs

    def apply(self, gamma: np.ndarray) -> np.ndarray:
        """Time derivative ``X G + G X^T + Y + sum_u Z_u G Z_u^T``."""
        return self.linear_part(gamma) + self.Y

    def linear_part(self, gamma: np.ndarray) -> np.ndarray:
        """Homogeneous part ``X G + G X^T + sum_u Z_u G Z_u^T``."""
        out = self.X @ gamma + gamma @ self.X.T
        for z in self.Zs:
            out += np.asarray((z @ gamma) @ z.T)
        return out


def cell_coordinates(extent) -> np.ndarray:
    """Integer coordinates of all cells in cell-major (C) order, shape ``(n_cells, D)``."""
    grids = np.meshgrid(*[np.arange(L) for L in extent], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _wrap_index(coords: np.ndarray, shift, extent) -> np.ndarray:
    tgt = (coords + np.asarray(shift, int)) % np.asarray(extent)
    return np.ravel_multi_index(tuple(tgt.T), tuple(extent))


def assemble_translation(d, lattice: Lattice) -> sp.csr_matrix:
    """Global sparse matrix with blocks ``A_{i,j} = sum_{r = i - j mod L} d(r)``."""
    if not lattice.finite:
        raise InvalidStencil("dense assembly needs a finite lattice extent")
    n = lattice.block
    coords = cell_coordinates(lattice.extent)
    cells = np.arange(len(coords))
    rows, cols, vals = [], [], []
    loc_r, loc_c = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    for r, mat in d.items():
        mat = np.asarray(mat)
        j = _wrap_index(coords, -np.asarray(r), lattice.extent)
        rows.append((cells[:, None, None] * n + loc_r[None]).ravel())
        cols.append((j[:, None, None] * n + loc_c[None]).ravel())
        vals.append(np.broadcast_to(mat, (len(cells), n, n)).ravel())
    size = n * len(cells)
    if not rows:
        return sp.csr_matrix((size, size), dtype=complex)
    return sp.csr_matrix(
        (np.concatenate(vals).astype(complex), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size)
    )


def assemble_bilinear(fam, lattice: Lattice, n_cell: int) -> sp.csr_matrix:
    """``M_n`` with blocks ``m(i - n, j - n)`` on the periodic lattice."""
    nb = lattice.block
    coords = cell_coordinates(lattice.extent)
    origin = coords[n_cell]
    size = nb * len(coords)
    rows, cols, vals = [], [], []
    li, lj = np.meshgrid(np.arange(nb), np.arange(nb), indexing="ij")
    for (a, c), mat in fam.items():
        i = _wrap_index(origin[None], a, lattice.extent)[0]
        j = _wrap_index(origin[None], c, lattice.extent)[0]
        rows.append((i * nb + li).ravel())
        cols.append((j * nb + lj).ravel())
        vals.append(np.asarray(mat, complex).ravel())
    if not rows:
        return sp.csr_matrix((size, size), dtype=complex)
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(size, size))


def _real(a, name: str, tol: float) -> tuple[np.ndarray | sp.csr_matrix, float]:
    if sp.issparse(a):
        imag = abs(a.imag).max() if a.nnz else 0.0
        scale = abs(a).max() if a.nnz else 0.0
        out = sp.csr_matrix(a.real)
        out.eliminate_zeros()
    else:
        imag = float(np.max(np.abs(a.imag))) if a.size else 0.0
        scale = float(np.max(np.abs(a))) if a.size else 0.0
        out = np.ascontiguousarray(a.real)
    if imag > tol * max(1.0, scale):
        raise NonRealResult(f"{name} has an imaginary residue {imag:.3e} (stencil violates symmetry rules?)")
    return out, float(imag)


def build_dense(stencil: CouplingStencil, lattice: Lattice | None = None) -> DenseEvolution:
    """Assemble ``X``, ``Y`` and ``Z_u`` for the stencil wrapped on a finite periodic lattice.

    Parameters
    ----------
    stencil : CouplingStencil
        Model; canonicalized before use.
    lattice : Lattice, optional
        Finite lattice (defaults to the stencil's own lattice).

    Raises
    ------
    NonRealResult
        If an assembled matrix keeps an imaginary part above ``1e-12``.
    """
    lat = lattice or stencil.lattice
    if lat.extent is None:
        raise InvalidStencil("build_dense needs a finite lattice extent")
    if (lat.dims, lat.bands) != (stencil.dims, stencil.bands):
        raise InvalidStencil("lattice does not match the stencil's dims/bands")
    s = stencil.canonical()
    H = assemble_translation(s.h, lat)
    B = assemble_translation(build_b_stencil(s), lat)
    Br = (B + B.conj()) * 0.5
    Bi = (B - B.conj()) * (-0.5j)
    Ms = [assemble_bilinear(fam, lat, n) for fam in s.m for n in range(lat.n_cells)]
    if s.is_fermion:
        X = -2j * H - Br
        Y = Bi
        for M in Ms:
            X = X - 2 * (M @ M)
        Zs = [2j * M for M in Ms]
    else:
        tau = sp.kron(sp.identity(lat.n_cells), sp.csr_matrix(tau_matrix(lat.bands)), format="csr")
        X = -2j * (tau @ H) + 1j * (tau @ Bi)
        Y = tau @ Br @ tau
        for M in Ms:
            tm = tau @ M
            X = X - 2 * (tm @ tm)
        Zs = [2j * (tau @ M) for M in Ms]
    Xr, ix = _real(X.toarray(), "X", REALNESS_TOL)
    Yr, iy = _real(Y.toarray(), "Y", REALNESS_TOL)
    zr = [_real(sp.csr_matrix(z), "Z", REALNESS_TOL) for z in Zs]
    imag = max([ix, iy] + [v for _, v in zr])
    return DenseEvolution(Xr, Yr, tuple(z for z, _ in zr), s.statistics, lat, imag)
