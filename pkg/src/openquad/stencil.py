"""Translation-invariant quadratic Lindblad models.

A model is given by three finite-range stencils over lattice displacements:

* ``h[r]``: ``2b x 2b`` Hamiltonian block, ``H_{i,j} = h(i - j)``
* ``ell[s][r]``: ``2b`` coefficient vector of the linear Lindblad family ``s``
  centred at the origin, ``L_{n,s} = sum_j ell_s(j - n) w_j``
* ``m[u][(r, r')]``: ``2b x 2b`` block of the Hermitian bilinear Lindblad
  family ``u``, ``M_{n,u} = sum w_i m_u(i - n, j - n) w_j``

Within a unit cell the ``2b`` Majorana operators are ordered as
``(w_{1+}, ..., w_{b+}, w_{1-}, ..., w_{b-})``; globally the index space is
cell-major.  Hamiltonian and bilinear blocks may be given in raw form (as they
appear in the operator sums); :meth:`CouplingStencil.canonical` projects them
onto the antisymmetric (fermions) or symmetric (bosons) class, which changes
the operators only by constants.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidStencil, NonRealResult, QuadraticNotSupported

SYMMETRY_TOL = 1e-12
REALNESS_TOL = 1e-12


class Statistics(enum.Enum):
    FERMION = "fermion"
    BOSON = "boson"

    @classmethod
    def parse(cls, value) -> "Statistics":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidStencil(f"unknown statistics {value!r}") from None


@dataclass(frozen=True)
class Lattice:
    """Hypercubic lattice with ``bands`` modes per cell.

    ``extent`` is ``None`` for the infinite lattice (momentum-space and
    asymptotic analyses) or one periodic length per dimension.
    """

    dims: int = 1
    bands: int = 1
    extent: tuple[int, ...] | None = None

    def __post_init__(self):
        if int(self.dims) < 1 or int(self.bands) < 1:
            raise InvalidStencil("dims and bands must be >= 1")
        object.__setattr__(self, "dims", int(self.dims))
        object.__setattr__(self, "bands", int(self.bands))
        if self.extent is not None:
            ext = self.extent
            if np.isscalar(ext):
                ext = (int(ext),) * self.dims
            ext = tuple(int(v) for v in ext)
            if len(ext) != self.dims or min(ext) < 1:
                raise InvalidStencil(f"extent {ext} does not match dims={self.dims}")
            object.__setattr__(self, "extent", ext)

    @property
    def finite(self) -> bool:
        return self.extent is not None

    @property
    def n_cells(self) -> int:
        if self.extent is None:
            raise InvalidStencil("infinite lattice has no cell count")
        return int(np.prod(self.extent))

    @property
    def n_modes(self) -> int:
        return self.bands * self.n_cells

    @property
    def block(self) -> int:
        return 2 * self.bands

    def with_extent(self, extent) -> "Lattice":
        return Lattice(self.dims, self.bands, extent)


def tau_matrix(bands: int) -> np.ndarray:
    """Symplectic form ``[[0, -i 1], [i 1, 0]]`` on one cell."""
    one = np.eye(bands)
    z = np.zeros((bands, bands))
    return np.block([[z, -1j * one], [1j * one, z]])


def _key(r, dims: int) -> tuple[int, ...]:
    if np.isscalar(r):
        r = (r,)
    r = tuple(int(v) for v in r)
    if len(r) != dims:
        raise InvalidStencil(f"displacement {r} does not have {dims} components")
    return r


def _neg(r: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(-v for v in r)


def _sub(a, b) -> tuple[int, ...]:
    return tuple(x - y for x, y in zip(a, b))


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class CouplingStencil:
    """Finite-range translation-invariant quadratic Lindblad model."""

    statistics: Statistics
    lattice: Lattice
    h: Mapping[tuple[int, ...], np.ndarray] = field(default_factory=dict)
    ell: tuple[Mapping[tuple[int, ...], np.ndarray], ...] = ()
    m: tuple[Mapping[tuple[tuple[int, ...], tuple[int, ...]], np.ndarray], ...] = ()

    def __post_init__(self):
        stats = Statistics.parse(self.statistics)
        object.__setattr__(self, "statistics", stats)
        lat = self.lattice
        n = lat.block
        h = {}
        for r, mat in dict(self.h).items():
            mat = np.asarray(mat, dtype=complex)
            if mat.shape != (n, n):
                raise InvalidStencil(f"h{r} has shape {mat.shape}, expected {(n, n)}")
            key = _key(r, lat.dims)
            h[key] = h.get(key, 0) + mat
        ells = []
        for fam in self.ell:
            out = {}
            for r, vec in dict(fam).items():
                vec = np.asarray(vec, dtype=complex).reshape(-1)
                if vec.shape != (n,):
                    raise InvalidStencil(f"ell{r} has shape {vec.shape}, expected {(n,)}")
                key = _key(r, lat.dims)
                out[key] = out.get(key, 0) + vec
            ells.append({k: _frozen(v) for k, v in out.items()})
        ms = []
        for fam in self.m:
            out = {}
            for rr, mat in dict(fam).items():
                mat = np.asarray(mat, dtype=complex)
                if mat.shape != (n, n):
                    raise InvalidStencil(f"m{rr} has shape {mat.shape}, expected {(n, n)}")
                a, c = rr
                key = (_key(a, lat.dims), _key(c, lat.dims))
                out[key] = out.get(key, 0) + mat
            ms.append({k: _frozen(v) for k, v in out.items()})
        object.__setattr__(self, "h", {k: _frozen(v) for k, v in h.items()})
        object.__setattr__(self, "ell", tuple(ells))
        object.__setattr__(self, "m", tuple(ms))

    # -- basic properties -------------------------------------------------
    @property
    def dims(self) -> int:
        return self.lattice.dims

    @property
    def bands(self) -> int:
        return self.lattice.bands

    @property
    def block(self) -> int:
        return self.lattice.block

    @property
    def is_fermion(self) -> bool:
        return self.statistics is Statistics.FERMION

    @property
    def quasifree(self) -> bool:
        return not any(fam for fam in self.m)

    @property
    def range(self) -> int:
        """Largest displacement (max-norm) carrying a nonzero coupling."""
        keys: list[tuple[int, ...]] = []
        keys += [r for r, v in self.h.items() if np.any(v)]
        for fam in self.ell:
            keys += [r for r, v in fam.items() if np.any(v)]
        for fam in self.m:
            for (a, c), v in fam.items():
                if np.any(v):
                    keys += [a, c]
        return max((max(abs(x) for x in r) for r in keys), default=0)

    def with_extent(self, extent) -> "CouplingStencil":
        return CouplingStencil(self.statistics, self.lattice.with_extent(extent), self.h, self.ell, self.m)

    def canonical(self) -> "CouplingStencil":
        """Project ``h`` and ``m`` onto the symmetry class of the statistics."""
        sign = -1.0 if self.is_fermion else 1.0
        h = {}
        for r in set(self.h) | {_neg(r) for r in self.h}:
            a = self.h.get(r, 0)
            b = self.h.get(_neg(r), None)
            bt = 0 if b is None else b.T
            h[r] = 0.5 * (a + sign * bt) * np.ones((self.block, self.block))
        ms = []
        for fam in self.m:
            out = {}
            keys = set(fam) | {(c, a) for a, c in fam}
            for a, c in keys:
                x = fam.get((a, c), 0)
                y = fam.get((c, a), None)
                yt = 0 if y is None else y.T
                out[(a, c)] = 0.5 * (x + sign * yt) * np.ones((self.block, self.block))
            ms.append(out)
        return CouplingStencil(self.statistics, self.lattice, h, self.ell, tuple(ms))

    def scaled(self, h_weight: float = 1.0, rate_weight: float = 1.0) -> "CouplingStencil":
        """Scale the Hamiltonian by ``h_weight`` and every dissipator by ``rate_weight``."""
        s = np.sqrt(rate_weight)
        return CouplingStencil(
            self.statistics,
            self.lattice,
            {r: h_weight * v for r, v in self.h.items()},
            tuple({r: s * v for r, v in fam.items()} for fam in self.ell),
            tuple({k: s * v for k, v in fam.items()} for fam in self.m),
        )


def superpose(parts: Sequence[CouplingStencil]) -> CouplingStencil:
    """Model whose Liouvillian is the sum of the parts' Liouvillians."""
    first = parts[0]
    for p in parts[1:]:
        if p.statistics is not first.statistics or p.lattice != first.lattice:
            raise InvalidStencil("superposed stencils must share statistics and lattice")
    h: dict = {}
    for p in parts:
        for r, v in p.h.items():
            h[r] = h.get(r, 0) + v
    ell = tuple(fam for p in parts for fam in p.ell)
    m = tuple(fam for p in parts for fam in p.m)
    return CouplingStencil(first.statistics, first.lattice, h, ell, m)


# -- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class RuleCheck:
    rule: str
    passed: bool
    max_violation: float
    worst: tuple | None


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[RuleCheck, ...]
    tol: float = SYMMETRY_TOL

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self) -> bool:
        return self.passed

    def failures(self) -> list[RuleCheck]:
        return [c for c in self.checks if not c.passed]


def _check(rule, pairs, tol) -> RuleCheck:
    worst, where = 0.0, None
    for key, diff in pairs:
        v = float(np.max(np.abs(diff))) if np.size(diff) else 0.0
        if v > worst:
            worst, where = v, key
    return RuleCheck(rule, worst <= tol, worst, where)


def validate_stencil(stencil: CouplingStencil, tol: float = SYMMETRY_TOL) -> ValidationReport:
    """Check the Hermiticity and exchange-symmetry rules of the stencil as given."""
    n = stencil.block
    zero = np.zeros((n, n))
    sign = -1.0 if stencil.is_fermion else 1.0
    hkeys = set(stencil.h) | {_neg(r) for r in stencil.h}
    herm = [(r, stencil.h.get(r, zero) - stencil.h.get(_neg(r), zero).conj().T) for r in hkeys]
    exch = [(r, stencil.h.get(r, zero) - sign * stencil.h.get(_neg(r), zero).T) for r in hkeys]
    name = "antisymmetric" if stencil.is_fermion else "symmetric"
    checks = [
        _check("h(r) = h(-r)^dagger", herm, tol),
        _check(f"h(r) = {'-' if sign < 0 else ''}h(-r)^T ({name})", exch, tol),
    ]
    for u, fam in enumerate(stencil.m):
        keys = set(fam) | {(c, a) for a, c in fam}
        mh = [((u,) + k, fam.get(k, zero) - fam.get((k[1], k[0]), zero).conj().T) for k in keys]
        mx = [((u,) + k, fam.get(k, zero) - sign * fam.get((k[1], k[0]), zero).T) for k in keys]
        checks.append(_check(f"m[{u}](r,r') = m[{u}](r',r)^dagger", mh, tol))
        checks.append(_check(f"m[{u}](r,r') = {'-' if sign < 0 else ''}m[{u}](r',r)^T ({name})", mx, tol))
    return ValidationReport(tuple(checks), tol)


# -- real-space evolution stencils -------------------------------------------


def build_b_stencil(stencil: CouplingStencil) -> dict[tuple[int, ...], np.ndarray]:
    """``b(r) = sum_{n,s} ell_s(r - n) ell_s(-n)^dagger``."""
    out: dict[tuple[int, ...], np.ndarray] = {}
    for fam in stencil.ell:
        for p, lp in fam.items():
            for q, lq in fam.items():
                r = _sub(p, q)
                out[r] = out.get(r, 0) + np.outer(lp, lq.conj())
    return out


def _real_part_stencil(b: Mapping) -> tuple[dict, dict]:
    br = {r: 0.5 * (v + v.conj()) for r, v in b.items()}
    bi = {r: (v - v.conj()) / 2j for r, v in b.items()}
    return br, bi


def _msq_stencil(fam: Mapping, pre: np.ndarray | None) -> dict:
    """``sum_n (P M_n)^2`` as a displacement stencil, ``P`` = ``pre`` or identity."""
    g = {k: (v if pre is None else pre @ v) for k, v in fam.items()}
    out: dict = {}
    for (a, c), v in g.items():
        for (c2, e), w in g.items():
            if c2 != c:
                continue
            r = _sub(a, e)
            out[r] = out.get(r, 0) + v @ w
    return out


def _as_real(d: Mapping, what: str) -> dict:
    out = {}
    for r, v in d.items():
        v = np.asarray(v)
        imag = float(np.max(np.abs(v.imag))) if np.size(v) else 0.0
        if imag > REALNESS_TOL * max(1.0, float(np.max(np.abs(v)))):
            raise NonRealResult(f"{what}{r} has imaginary part {imag:.3e}")
        out[r] = np.ascontiguousarray(v.real)
    return out


@dataclass(frozen=True, eq=False)
class EvolutionStencil:
    """Real ``x(r)``, ``y(r)`` and ``z_u(a, c)`` blocks of the covariance equation of motion."""

    x: dict
    y: dict
    z: tuple[dict, ...]

    @property
    def x_range(self) -> int:
        return max((max(abs(v) for v in r) for r, a in self.x.items() if np.any(a)), default=0)


def evolution_stencil(stencil: CouplingStencil) -> EvolutionStencil:
    """Displacement blocks of X, Y and Z_u for a canonicalized stencil."""
    s = stencil.canonical()
    n = s.block
    b = build_b_stencil(s)
    br, bi = _real_part_stencil(b)
    x: dict = {}
    y: dict = {}
    if s.is_fermion:
        for r, v in s.h.items():
            x[r] = x.get(r, 0) - 2j * v
        for r, v in br.items():
            x[r] = x.get(r, 0) - v
        for r, v in bi.items():
            y[r] = y.get(r, 0) + v
        pre = None
    else:
        tau = tau_matrix(s.bands)
        for r, v in s.h.items():
            x[r] = x.get(r, 0) - 2j * tau @ v
        for r, v in bi.items():
            x[r] = x.get(r, 0) + 1j * tau @ v
        for r, v in br.items():
            y[r] = y.get(r, 0) + tau @ v @ tau
        pre = tau
    zs = []
    for fam in s.m:
        for r, v in _msq_stencil(fam, pre).items():
            x[r] = x.get(r, 0) - 2 * v
        zs.append(_as_real({k: 2j * (v if pre is None else pre @ v) for k, v in fam.items()}, "z"))
    x = _as_real({r: np.broadcast_to(v, (n, n)) for r, v in x.items()}, "x")
    y = _as_real({r: np.broadcast_to(v, (n, n)) for r, v in y.items()}, "y")
    return EvolutionStencil(x, y, tuple(zs))


# -- momentum space ------------------------------------------------------------


def _ft(d: Mapping, k) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    return sum(np.exp(-1j * np.dot(k, r)) * v for r, v in d.items())


def build_momentum(stencil: CouplingStencil, k) -> tuple[np.ndarray, np.ndarray]:
    """Blocks ``(x~(k), y~(k))`` of the per-momentum Lyapunov equation.

    Built from the Fourier sums of ``h`` and ``ell_s`` with
    ``b~(k) = sum_s l~_s(k) l~_s(k)^dagger``.
    """
    if not stencil.quasifree:
        raise QuadraticNotSupported("momentum blocks require a stencil without bilinear Lindblad operators")
    s = stencil.canonical()
    n = s.block
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (s.dims,):
        raise InvalidStencil(f"k must have {s.dims} components")

    def bt(kk):
        out = np.zeros((n, n), complex)
        for fam in s.ell:
            lk = _ft(fam, kk) if fam else np.zeros(n, complex)
            out += np.outer(lk, np.conj(lk))
        return out

    hk = _ft(s.h, k) if s.h else np.zeros((n, n), complex)
    bk, bmk = bt(k), bt(-k)
    br = 0.5 * (bk + bmk.conj())
    bi = (bk - bmk.conj()) / 2j
    if s.is_fermion:
        return -2j * hk - br, bi
    tau = tau_matrix(s.bands)
    return -2j * tau @ hk + 1j * tau @ bi, tau @ br @ tau


def k_axes(grid: Sequence[int], shift=0.0) -> list[np.ndarray]:
    """Momenta ``2 pi (m + shift) / L`` for ``m = 0..L-1`` on every axis."""
    shifts = np.broadcast_to(np.asarray(shift, float), (len(grid),))
    return [2 * np.pi * (np.arange(L) + s) / L for L, s in zip(grid, shifts)]


def stencil_on_grid(d: Mapping, grid: Sequence[int], shift=0.0) -> np.ndarray:
    """Fourier transform of a displacement stencil on the ``k_axes(grid, shift)`` mesh.

    Returns an array of shape ``(*grid, ...)``; uses the FFT of the wrapped stencil.
    """
    grid = tuple(int(g) for g in grid)
    shifts = np.broadcast_to(np.asarray(shift, float), (len(grid),))
    tail = np.shape(next(iter(d.values()))) if d else ()
    arr = np.zeros(grid + tail, complex)
    for r, v in d.items():
        idx = tuple(int(ra) % L for ra, L in zip(r, grid))
        twist = np.exp(-2j * np.pi * sum(s * ra / L for s, ra, L in zip(shifts, r, grid)))
        arr[idx] += twist * np.asarray(v)
    return np.fft.fftn(arr, axes=tuple(range(len(grid))))


def momentum_grid(stencil: CouplingStencil, grid: Sequence[int], shift=0.0) -> tuple[np.ndarray, np.ndarray]:
    """``x~`` and ``y~`` on the whole momentum mesh, shapes ``(*grid, 2b, 2b)``."""
    if not stencil.quasifree:
        raise QuadraticNotSupported("momentum blocks require a stencil without bilinear Lindblad operators")
    ev = evolution_stencil(stencil)
    n = stencil.block
    grid = tuple(int(g) for g in grid)
    if len(grid) != stencil.dims:
        raise InvalidStencil(f"grid {grid} does not match dims={stencil.dims}")
    zero = {tuple([0] * stencil.dims): np.zeros((n, n))}
    return stencil_on_grid(ev.x or zero, grid, shift), stencil_on_grid(ev.y or zero, grid, shift)


# -- transformations and random models ---------------------------------------


def transform_stencil(stencil: CouplingStencil, O: np.ndarray) -> CouplingStencil:
    """Express the model in rotated Majorana operators ``w' = O w`` (per cell).

    Fermions accept any real orthogonal ``O``; bosons additionally need ``O`` to
    commute with the symplectic form (a passive single-particle rotation).
    """
    O = np.asarray(O)
    n = stencil.block
    if O.shape != (n, n) or not np.allclose(O @ O.T, np.eye(n), atol=1e-12) or np.abs(O.imag).max(initial=0) > 0:
        raise InvalidStencil("O must be a real orthogonal 2b x 2b matrix")
    if not stencil.is_fermion:
        tau = tau_matrix(stencil.bands)
        if not np.allclose(O @ tau, tau @ O, atol=1e-12):
            raise InvalidStencil("bosonic rotations must commute with the symplectic form")
    O = O.real
    return CouplingStencil(
        stencil.statistics,
        stencil.lattice,
        {r: O @ v @ O.T for r, v in stencil.h.items()},
        tuple({r: O @ v for r, v in fam.items()} for fam in stencil.ell),
        tuple({k: O @ v @ O.T for k, v in fam.items()} for fam in stencil.m),
    )


def passive_rotation(unitary: np.ndarray) -> np.ndarray:
    """Real orthogonal Majorana rotation induced by ``a -> U a`` on the bands of a cell."""
    U = np.asarray(unitary)
    return np.block([[U.real, -U.imag], [U.imag, U.real]])


def _displacements(dims: int, reach: int) -> list[tuple[int, ...]]:
    return list(itertools.product(range(-reach, reach + 1), repeat=dims))


def random_stencil(
    rng: np.random.Generator,
    statistics="fermion",
    dims: int = 1,
    bands: int = 1,
    reach: int = 1,
    n_linear: int = 2,
    n_quadratic: int = 0,
    extent=None,
    h_scale: float = 1.0,
    l_scale: float = 1.0,
    m_scale: float = 0.5,
) -> CouplingStencil:
    """Random canonical stencil with couplings up to distance ``reach``."""
    stats = Statistics.parse(statistics)
    lat = Lattice(dims, bands, extent)
    n = lat.block
    fermion = stats is Statistics.FERMION
    sign = -1.0 if fermion else 1.0
    disp = _displacements(dims, reach)
    h = {}
    for r in disp:
        if _neg(r) in h:
            continue
        a = h_scale * rng.normal(size=(n, n))
        if r == _neg(r):
            a = 0.5 * (a + sign * a.T)
        # fermions: h = i A with A real and A(-r) = -A(r)^T; bosons: real, h(-r) = h(r)^T
        h[r] = 1j * a if fermion else a
        h[_neg(r)] = sign * h[r].T
    ell = []
    for _ in range(n_linear):
        fam = {}
        for r in disp:
            if rng.random() < 0.6 or r == tuple([0] * dims):
                fam[r] = l_scale * (rng.normal(size=n) + 1j * rng.normal(size=n)) / np.sqrt(2)
        ell.append(fam)
    ms = []
    for _ in range(n_quadratic):
        fam = {}
        local = [r for r in disp if max(abs(v) for v in r) <= min(reach, 1)]
        for a in local:
            for c in local:
                if (c, a) in fam:
                    continue
                base = m_scale * rng.normal(size=(n, n))
                if a == c:
                    base = 0.5 * (base + sign * base.T)
                fam[(a, c)] = 1j * base if fermion else base
                if a != c:
                    fam[(c, a)] = sign * fam[(a, c)].T
        ms.append(fam)
    return CouplingStencil(stats, lat, h, tuple(ell), tuple(ms))


def iter_displacements(stencil: CouplingStencil) -> Iterable[tuple[int, ...]]:
    """All displacements that appear in any of the stencil maps."""
    seen = set(stencil.h)
    for fam in stencil.ell:
        seen |= set(fam)
    for fam in stencil.m:
        for a, c in fam:
            seen |= {a, c}
    return sorted(seen)
