"""Brute-force many-body Liouvillian for a handful of fermionic modes.

Used as an independent oracle: it never touches ``X``, ``Y`` or ``Z_u``.
Majorana operators come from a Jordan-Wigner construction,
``w_{j+} = Z..Z X / sqrt(2)`` and ``w_{j-} = -Z..Z Y / sqrt(2)``, so that
``w_{j+} = (a_j + a_j^dagger)/sqrt(2)`` and ``w_{j-} = i (a_j - a_j^dagger)/sqrt(2)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .dense import assemble_bilinear, assemble_translation
from .errors import InvalidStencil, TooLarge
from .stencil import CouplingStencil, Lattice

MAX_MODES = 5

_I = np.eye(2)
_X = np.array([[0, 1], [1, 0]], complex)
_Y = np.array([[0, -1j], [1j, 0]])
_Z = np.diag([1.0, -1.0])


def majorana_operators(n_modes: int) -> list[np.ndarray]:
    """``2N`` Majorana matrices in the cell-major ``(+ bands, - bands)`` order for one band per mode.

    The returned list is indexed by mode ``j`` and sign, ``[w_{0+}, w_{0-}, w_{1+}, ...]``.
    """
    ops = []
    for j in range(n_modes):
        for P in (_X, -_Y):
            factors = [_Z] * j + [P] + [_I] * (n_modes - j - 1)
            ops.append(reduce(np.kron, factors) / np.sqrt(2))
    return ops


def _ordered_majoranas(lat: Lattice) -> list[np.ndarray]:
    """Majoranas in the library's global index order ``cell * 2b + sign * b + band``."""
    b = lat.bands
    C = lat.n_cells
    raw = majorana_operators(C * b)
    out = []
    for c in range(C):
        for sign in range(2):
            for band in range(b):
                mode = c * b + band
                out.append(raw[2 * mode + sign])
    return out


@dataclass(frozen=True, eq=False)
class DenseLiouvillian:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    majoranas: list
    n_modes: int

    @property
    def gap(self) -> float:
        """``-max Re`` over the spectrum with the eigenvalue closest to zero removed."""
        ev = self.eigenvalues
        i0 = int(np.argmin(np.abs(ev)))
        rest = np.delete(ev, i0)
        return float(-np.max(rest.real)) if rest.size else np.inf

    def steady_state(self) -> np.ndarray:
        """Density matrix of the (assumed unique) steady state."""
        w, v = np.linalg.eig(self.matrix)
        i0 = int(np.argmin(np.abs(w)))
        dim = 2**self.n_modes
        rho = v[:, i0].reshape(dim, dim)
        rho = rho / np.trace(rho)
        return 0.5 * (rho + rho.conj().T)

    def covariance(self) -> np.ndarray:
        """``Gamma_ij = (i/2) <[w_i, w_j]>`` in the steady state."""
        rho = self.steady_state()
        w = self.majoranas
        n = len(w)
        G = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                G[i, j] = (0.5j * np.trace(rho @ (w[i] @ w[j] - w[j] @ w[i]))).real
        return G


def _superop(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-major vectorization of ``rho -> A rho B``."""
    return np.kron(A, B.T)


def dense_liouvillian_fermion(stencil: CouplingStencil, lattice: Lattice | None = None) -> DenseLiouvillian:
    """Full ``4^N x 4^N`` Liouvillian of a fermionic stencil on a tiny periodic lattice.

    Raises
    ------
    TooLarge
        For more than five modes.
    """
    if not stencil.is_fermion:
        raise InvalidStencil("the dense Liouvillian oracle is implemented for fermions only")
    lat = lattice or stencil.lattice
    if lat.extent is None:
        raise InvalidStencil("a finite lattice is required")
    if lat.n_modes > MAX_MODES:
        raise TooLarge(f"{lat.n_modes} modes exceed the limit of {MAX_MODES}")
    s = stencil.canonical()
    w = _ordered_majoranas(lat)
    dim = 2**lat.n_modes
    eye = np.eye(dim)
    H = assemble_translation(s.h, lat).toarray()
    Hop = sum(w[i] @ w[j] * H[i, j] for i, j in zip(*np.nonzero(H)))
    Hop = Hop if not np.isscalar(Hop) else np.zeros((dim, dim), complex)
    L = -1j * (_superop(Hop, eye) - _superop(eye, Hop))
    C = lat.n_cells
    n = lat.block
    from .dense import cell_coordinates, _wrap_index

    coords = cell_coordinates(lat.extent)
    jumps = []
    for fam in s.ell:
        for c in range(C):
            vec = np.zeros(C * n, complex)
            for r, v in fam.items():
                tgt = _wrap_index(coords[c][None], r, lat.extent)[0]
                vec[tgt * n : (tgt + 1) * n] += v
            jumps.append(sum(vec[i] * w[i] for i in np.flatnonzero(vec)) if np.any(vec) else None)
    for fam in s.m:
        for c in range(C):
            M = assemble_bilinear(fam, lat, c).toarray()
            if not np.any(M):
                continue
            Mop = sum(w[i] @ w[j] * M[i, j] for i, j in zip(*np.nonzero(M)))
            jumps.append(Mop)
    for J in jumps:
        if J is None:
            continue
        JdJ = J.conj().T @ J
        L = L + _superop(J, J.conj().T) - 0.5 * _superop(JdJ, eye) - 0.5 * _superop(eye, JdJ)
    ev = np.linalg.eigvals(L)
    return DenseLiouvillian(L, ev, w, lat.n_modes)


def subset_sums(values: np.ndarray) -> np.ndarray:
    """All ``2^n`` sums over subsets of ``values``."""
    sums = np.zeros(1, complex)
    for v in values:
        sums = np.concatenate([sums, sums + v])
    return sums
