"""Built-in models with closed-form reference results.

* The dissipative XY chain: fermions with nearest-neighbour hopping ``1``,
  pairing ``alpha``, chemical potential ``mu``, Lindblad operators
  ``sqrt(eta) (w_{j+} + e^{i phi} w_{(j+1)+})`` and optional dephasing
  ``sqrt(zeta) M`` with ``M = w^T sigma_y w`` on every site.
* The critical dissipative boson: one mode per site of ``Z^D`` with on-site
  loss ``sqrt(2 D eta) a_j`` and four edge operators per direction. Stable
  for ``eta >= 1``; the gap ``2 D (eta - 1)`` closes at ``k = 0``.

Hamiltonian convention for the XY chain: the operator
``sum_j (a_j^dag a_{j+1} + alpha a_j^dag a_{j+1}^dag + h.c.) - mu sum_j a_j^dag a_j``
corresponds, after antisymmetrization, to ``h(0) = -(mu/2) sigma_y`` and
``h(+-1) = (sigma_y -+ i alpha sigma_x)/2``, which gives
``h~(k) = (cos k - mu/2) sigma_y - alpha sin k sigma_x``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate, optimize, special

from .errors import GaplessInput, PhaseSingular, UnsupportedDimension
from .stencil import CouplingStencil, Lattice, k_axes, momentum_grid
from .steady import CovarianceField, solve_lyapunov_batch, to_real

SIGMA_X = np.array([[0, 1], [1, 0]], complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]])
SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)


# -- dissipative XY chain ------------------------------------------------------


@dataclass(frozen=True)
class XYChainParams:
    mu: float = 0.0
    alpha: float = 0.0
    eta: float = 1.0
    phi: float = 0.0
    zeta: float = 0.0

    def __post_init__(self):
        if self.eta < 0 or self.zeta < 0:
            raise ValueError("eta and zeta must be non-negative")

    @property
    def transfer_invertible(self) -> bool:
        """Whether the leading difference-equation block is invertible."""
        return self.eta > 0 and abs(self.alpha) != 1 and abs(np.cos(self.phi)) > 1e-14


def xy_chain_stencil(p: XYChainParams | None = None, extent=None, **kw) -> CouplingStencil:
    """Fermionic stencil of the dissipative XY chain (one band)."""
    p = p or XYChainParams(**kw)
    h = {
        (0,): -0.5 * p.mu * SIGMA_Y,
        (1,): 0.5 * (SIGMA_Y - 1j * p.alpha * SIGMA_X),
        (-1,): 0.5 * (SIGMA_Y + 1j * p.alpha * SIGMA_X),
    }
    e = np.array([1.0, 0.0])
    ell = ({(0,): np.sqrt(p.eta) * e, (1,): np.sqrt(p.eta) * np.exp(1j * p.phi) * e},)
    m = ({((0,), (0,)): np.sqrt(p.zeta) * SIGMA_Y},) if p.zeta > 0 else ()
    return CouplingStencil("fermion", Lattice(1, 1, extent), h, ell, m)


def xy_chain_xi(k, p: XYChainParams) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues ``xi_+-(k) = (f +- sqrt(f^2 - |2c|^2))/2`` of ``x~(k)`` (quasifree)."""
    k = np.asarray(k, float)
    f = -2 * p.eta * (1 + np.cos(p.phi) * np.cos(k))
    c = p.mu - 2 * np.cos(k) + 2j * p.alpha * np.sin(k)
    root = np.sqrt((f**2 - 4 * np.abs(c) ** 2).astype(complex))
    return (f + root) / 2, (f - root) / 2


class XYGap(NamedTuple):
    gap: float
    k: float


def xy_chain_gap(p: XYChainParams, grid: int = 4096) -> XYGap:
    """``Delta = -max_k Re xi_+(k)``: grid search refined by bounded scalar maximization."""
    if p.zeta != 0:
        raise ValueError("the closed-form gap applies to the quasifree chain (zeta = 0)")
    ks = 2 * np.pi * np.arange(grid) / grid
    re = xy_chain_xi(ks, p)[0].real
    i = int(np.argmax(re))
    h = 2 * np.pi / grid
    res = optimize.minimize_scalar(
        lambda k: -xy_chain_xi(k, p)[0].real, bounds=(ks[i] - h, ks[i] + h), method="bounded", options={"xatol": 1e-13}
    )
    best_k, best = (float(res.x), float(-res.fun)) if -res.fun >= re[i] else (float(ks[i]), float(re[i]))
    return XYGap(-best, best_k % (2 * np.pi))


def xy_chain_momentum_gamma(k, phi: float) -> np.ndarray:
    """``gamma~(k) = sin(phi) sin(k) / (2i (1 + cos(phi) cos(k))) 1_2`` (quasifree chain)."""
    k = np.asarray(k, float)
    val = np.sin(phi) * np.sin(k) / (2j * (1 + np.cos(phi) * np.cos(k)))
    return val[..., None, None] * np.eye(2)


def xy_chain_exact_gamma(r, phi: float, eta: float = 1.0, limit: bool = False) -> np.ndarray:
    """Infinite-chain steady state ``gamma(r)`` of the quasifree chain.

    ``gamma(r) = (1/2) sin(phi)/(1 + |sin phi|) z_-^(r-1) 1_2`` for ``r >= 1`` with
    ``z_- = -(1 - |sin phi|)/cos phi``; ``gamma(0) = 0`` and
    ``gamma(-r) = -gamma(r)``. Independent of ``mu``, ``alpha`` and ``eta > 0``.

    Raises
    ------
    PhaseSingular
        At ``cos(phi) = 0`` unless ``limit=True``, which returns the continuous
        limit ``+-(1/4) delta_{r,1}``.
    """
    if eta <= 0:
        raise ValueError("eta must be positive")
    r = np.asarray(r, int)
    s, c = np.sin(phi), np.cos(phi)
    pre = 0.5 * s / (1 + abs(s))
    ar = np.abs(r)
    if abs(c) < 1e-14:
        if not limit:
            raise PhaseSingular("cos(phi) = 0: use limit=True for the continuous limit")
        val = np.where(ar == 1, pre, 0.0)
    else:
        zm = -(1 - abs(s)) / c
        with np.errstate(divide="ignore"):
            val = np.where(ar >= 1, pre * np.power(zm, np.maximum(ar - 1, 0).astype(float)), 0.0)
    val = np.sign(r) * val
    return val[..., None, None] * np.eye(2)


def xy_chain_z_minus(phi: float) -> float:
    return -(1 - abs(np.sin(phi))) / np.cos(phi)


# -- critical dissipative boson ------------------------------------------------


@dataclass(frozen=True)
class CriticalBosonParams:
    D: int = 1
    eta: float = 1.0

    def __post_init__(self):
        if int(self.D) < 1:
            raise ValueError("D must be >= 1")
        if self.eta < 0:
            raise ValueError("eta must be non-negative")

    @property
    def stable(self) -> bool:
        return self.eta >= 1

    @property
    def gap(self) -> float:
        return 2 * self.D * (self.eta - 1)

    @property
    def epsilon(self) -> float:
        """Mass term ``2D (eta - 1)`` of the small-``k`` expansion ``D(eta+2)/(eps + k^2)``."""
        return 2 * self.D * (self.eta - 1)


def critical_boson_stencil(p: CriticalBosonParams | None = None, extent=None, **kw) -> CouplingStencil:
    """Bosonic stencil with the ``4D + 1`` Lindblad families of the critical model."""
    p = p or CriticalBosonParams(**kw)
    D = int(p.D)
    origin = (0,) * D
    ells = [{origin: np.sqrt(2 * D * p.eta) * np.array([1, -1j])}]
    for a in range(D):
        for sgn in (1, -1):
            e = tuple(sgn if i == a else 0 for i in range(D))
            ells.append({origin: np.array([1, 0], complex), e: np.array([0, 1j])})
            ells.append({origin: np.array([1, 0], complex), e: np.array([0, sgn * 1.0 + 0j])})
    return CouplingStencil("boson", Lattice(D, 1, extent), {}, tuple(ells), ())


def critical_boson_momentum(k, p: CriticalBosonParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closed forms ``x~(k)``, ``y~(k)`` and ``gamma~(k)``; ``k`` has shape ``(..., D)``."""
    k = np.asarray(k, float)
    D = p.D
    c = np.mean(np.cos(k), axis=-1)
    s = np.mean(np.sin(k), axis=-1)
    eye = np.eye(2)
    x = (2 * D * (c - p.eta))[..., None, None] * eye
    y = np.zeros(c.shape + (2, 2), complex)
    y[..., 0, 0] = y[..., 1, 1] = 2 * D * (p.eta + 2)
    y[..., 0, 1] = 2j * D * s
    y[..., 1, 0] = -2j * D * s
    with np.errstate(divide="ignore", invalid="ignore"):
        den = 2 * (p.eta - c)
        g = np.zeros_like(y)
        g[..., 0, 0] = g[..., 1, 1] = (p.eta + 2) / den
        g[..., 0, 1] = 1j * s / den
        g[..., 1, 0] = -1j * s / den
    return x, y, g


class BosonExact1D(NamedTuple):
    gamma_pp: np.ndarray
    gamma_pm: np.ndarray
    gapless: bool


def critical_boson_exact_1d(r, eta: float) -> BosonExact1D:
    """Infinite-chain ``gamma_{++}(r)`` and ``gamma_{+-}(r)`` of the critical boson, ``D = 1``.

    ``gamma_{++}(r) = (eta+2) z_-^|r| / (2 sqrt(eta^2-1))`` and, for ``r >= 1``,
    ``gamma_{+-}(r) = -z_-^(r-1) (1 - z_-^2) / (4 sqrt(eta^2-1)) = -z_-^r / 2``,
    with ``z_- = eta - sqrt(eta^2 - 1)``; ``gamma_{+-}`` is odd in ``r``.
    At ``eta = 1`` the diagonal diverges and ``gamma_{+-}(r >= 1) = -1/2`` is
    returned with ``gapless=True``.

    Raises
    ------
    GaplessInput
        For ``eta < 1`` (unstable model).
    """
    r = np.asarray(r, int)
    if eta < 1:
        raise GaplessInput(f"eta = {eta} < 1: the model has no steady state")
    ar = np.abs(r).astype(float)
    sgn = np.sign(r)
    if eta == 1:
        return BosonExact1D(np.full(r.shape, np.inf), -0.5 * sgn.astype(float), True)
    root = np.sqrt(eta**2 - 1)
    zm = eta - root
    gpp = (eta + 2) * zm**ar / (2 * root)
    gpm = np.where(ar >= 1, -(zm ** (ar - 1)) * (1 - zm**2) / (4 * root), 0.0) * sgn
    return BosonExact1D(gpp, gpm, False)


BESSEL_T_MAX = 2.0**24
"""Upper panel edge; ``scipy.special.ive`` loses accuracy for arguments beyond about ``2^29``."""


def _laplace_bessel(f, decay: float, tail_power: float) -> float:
    """``int_0^inf f(t) dt`` on log-spaced panels.

    ``f`` decays like ``exp(-decay t) t^-tail_power``. Beyond ``BESSEL_T_MAX``
    the remainder is integrated analytically from that law.
    """
    edges = [0.0, 0.5] + [2.0**j for j in range(0, 25)]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(f, a, b, limit=200, epsabs=1e-300, epsrel=1e-12)
        total += val
        if decay * b > 60:
            return total
    B = edges[-1]
    # f(t) ~ f(B) exp(-d (t - B)) (t/B)^-p, and int_B^inf exp(-d t) (t/B)^-p dt = B E_p(d B)
    ep = 1 / (tail_power - 1) if decay == 0 else np.exp(decay * B) * _gen_expint(tail_power, decay * B)
    return total + f(B) * B * ep


def _gen_expint(p: float, x: float) -> float:
    """Generalized exponential integral ``E_p(x) = x^(p-1) Gamma(1-p, x)``."""
    val, _ = integrate.quad(lambda u: np.exp(-x * u) * u**-p, 1, np.inf, epsrel=1e-12)
    return val


def critical_boson_bessel(r, p: CriticalBosonParams) -> tuple[float, float]:
    """Infinite-lattice ``(gamma_{++}(r), gamma_{+-}(r))`` from modified-Bessel integrals.

    Uses ``1/(eta - c_k) = D int_0^inf exp(-t sum_a (eta - cos k_a)) dt`` and
    ``(1/2pi) int exp(i k r + t cos k) dk = I_r(t)``:

    ``gamma_{++}(r) = (eta+2) D/2 int exp(-D(eta-1)t) prod_a ive(r_a, t) dt``,
    ``gamma_{+-}(r) = -1/2 sum_a r_a int exp(-D(eta-1)t) ive(r_a,t)/t prod_{b!=a} ive(r_b,t) dt``.

    Independent of the momentum-grid route. At ``eta = 1`` the diagonal
    integral diverges for ``D <= 2`` and is returned as ``inf``.

    Raises
    ------
    GaplessInput
        For ``eta < 1``.
    """
    r = np.atleast_1d(np.asarray(r, int))
    D = p.D
    if len(r) != D:
        raise ValueError("r must have D components")
    decay = D * (p.eta - 1)
    if p.eta < 1:
        raise GaplessInput(f"eta = {p.eta} < 1: the model has no steady state")

    def diag(t):
        return np.exp(-decay * t) * np.prod([special.ive(ra, t) for ra in r])

    # at eta = 1 the diagonal integral diverges for D <= 2 (infrared divergence)
    gpp = np.inf if decay == 0 and D <= 2 else (p.eta + 2) * D / 2 * _laplace_bessel(diag, decay, D / 2)
    gpm = 0.0
    for a in range(D):
        if r[a] == 0:
            continue

        def off(t, a=a):
            if t == 0:
                return 0.0
            rest = np.prod([special.ive(r[b], t) for b in range(D) if b != a]) if D > 1 else 1.0
            return np.exp(-decay * t) * special.ive(r[a], t) / t * rest

        gpm += -0.5 * r[a] * _laplace_bessel(off, decay, D / 2 + 1)
    return float(gpp), float(gpm)


# -- asymptotic laws -----------------------------------------------------------

FRESNEL_TERM = float(
    2 * np.sin(0.5) + 2 * np.cos(0.5) + 2 * np.sqrt(np.pi) * np.subtract(*special.fresnel(1 / np.sqrt(np.pi)))
)
"""``2 sin(1/2) + 2 cos(1/2) + 2 sqrt(pi) [S(pi^-1/2) - C(pi^-1/2)]`` = ``int_{1/2}^inf q^-3/2 cos(q - pi/4) dq``."""

D2_CONSTANT = float(-2 * np.log(2) + np.sqrt(2 / np.pi) * FRESNEL_TERM)
"""Offset in the two-dimensional logarithmic law, ``-ln 4 + sqrt(2/pi) * FRESNEL_TERM`` (about ``-0.5159``)."""

D2_CONSTANT_ROUNDED = -0.5159


def _polar(r):
    r = np.asarray(r, float)
    return np.linalg.norm(r, axis=-1), r


def critical_boson_asymptotics(r, p: CriticalBosonParams, entry: str = "++", K: float = np.pi) -> np.ndarray:
    """Large-distance laws of the critical boson correlations for ``D = 2, 3``.

    Parameters
    ----------
    r : array_like, shape (..., D)
        Displacements.
    entry : {"++", "+-"}
        Diagonal or off-diagonal element.
    K : float
        Momentum cutoff standing in for the Brillouin-zone boundary.

    Notes
    -----
    * ``D = 2``, ``++`` (``eta > 1``): ``(eta+2)/pi (-ln sqrt(eta-1) + D2_CONSTANT - ln r)``
    * ``D = 2``, ``+-``: ``-sin(phi_r + pi/4) / (sqrt(2) pi r) (1 - J_1(K r))``
    * ``D = 3``, ``++``: ``9/(2 pi^2 r) Si(K r)``
    * ``D = 3``, ``+-``: dipolar ``l = 1`` harmonic times ``[pi/2 - sin(K r)] / r^2``
    """
    D = p.D
    rr, vec = _polar(r)
    if vec.shape[-1] != D:
        raise ValueError("r must have D components")
    if D == 2:
        phi = np.arctan2(vec[..., 1], vec[..., 0])
        if entry == "++":
            if p.eta <= 1:
                raise GaplessInput("the two-dimensional diagonal law needs eta > 1")
            return (p.eta + 2) / np.pi * (-np.log(np.sqrt(p.eta - 1)) + D2_CONSTANT - np.log(rr))
        return -np.sin(phi + np.pi / 4) / (np.sqrt(2) * np.pi * rr) * (1 - special.j1(K * rr))
    if D == 3:
        if entry == "++":
            return 9 / (2 * np.pi**2 * rr) * special.sici(K * rr)[0]
        theta = np.arccos(np.clip(vec[..., 2] / rr, -1, 1))
        phi = np.arctan2(vec[..., 1], vec[..., 0])
        y10 = special.sph_harm_y(1, 0, theta, phi) if hasattr(special, "sph_harm_y") else special.sph_harm(0, 1, phi, theta)
        y11 = special.sph_harm_y(1, 1, theta, phi) if hasattr(special, "sph_harm_y") else special.sph_harm(1, 1, phi, theta)
        y1m = special.sph_harm_y(1, -1, theta, phi) if hasattr(special, "sph_harm_y") else special.sph_harm(-1, 1, phi, theta)
        ang = y10 + (1j - 1) / np.sqrt(2) * y11 + (1j + 1) / np.sqrt(2) * y1m
        val = -1 / (np.pi**1.5 * np.sqrt(3)) * ang * (np.pi / 2 - np.sin(K * rr)) / rr**2
        return val.real
    raise UnsupportedDimension(f"no asymptotic law for D = {D}")


# -- numerical correlators on large grids ---------------------------------------


def _minimal_k(grid) -> list[np.ndarray]:
    return [2 * np.pi * np.fft.fftfreq(L) for L in grid]


def _minimal_r(grid) -> list[np.ndarray]:
    return [np.fft.fftfreq(L) * L for L in grid]


def _radial_pieces(rr: np.ndarray, m: float, sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """``F(r)`` = 3D Fourier transform of ``exp(-sigma^2 k^2)/(m^2 + k^2)`` and ``dF/dr``."""
    rr = np.asarray(rr, float)
    safe = np.where(rr == 0, 1.0, rr)
    u = safe / (2 * sigma)
    if m == 0:
        F = special.erf(u) / (4 * np.pi * safe)
        dF = (np.exp(-(u**2)) / (sigma * np.sqrt(np.pi)) - special.erf(u) / safe) / (4 * np.pi * safe)
        F0 = 1 / (4 * np.pi**1.5 * sigma)
    else:
        a = sigma * m
        # e^{sigma^2 m^2} e^{-m r} erfc(a - u) = erfcx(a - u) e^{-u^2} (stable for large r)
        P = special.erfcx(a - u) * np.exp(-(u**2))
        Q = special.erfcx(a + u) * np.exp(-(u**2))
        F = (P - Q) / (8 * np.pi * safe)
        g = np.exp(-(u**2)) / (sigma * np.sqrt(np.pi))  # d/dr of the bracket's erfc parts
        dP = -m * P + g
        dQ = m * Q + -g
        dF = (dP - dQ) / (8 * np.pi * safe) - F / safe
        F0 = (1 / (4 * np.pi**1.5 * sigma)) - m * special.erfcx(a) / (4 * np.pi)
    F = np.where(rr == 0, F0, F)
    dF = np.where(rr == 0, 0.0, dF)
    return F, dF


def critical_boson_grid_correlator(
    p: CriticalBosonParams,
    grid,
    shift: float | None = None,
    subtract: bool | None = None,
    sigma: float = 1.5,
) -> CovarianceField:
    """Infinite-lattice estimate of ``gamma(r)`` from the generic momentum route.

    ``gamma~(k)`` is obtained by solving the per-momentum Lyapunov equations of
    :func:`critical_boson_stencil` on the grid. For ``D = 3`` the continuum
    singular part ``D(eta+2) e^{-sigma^2 k^2}/(eps + k^2)`` (and its
    off-diagonal gradient partner) is subtracted before the FFT and added back
    through its analytic real-space transform, which removes the slowly decaying
    periodic images. Points where the Lyapunov operator is singular are filled by
    the average of their neighbours.

    ``real_space`` is indexed by ``r mod L``; values represent displacements in
    the minimal-image range.
    """
    D = p.D
    grid = tuple(int(g) for g in np.broadcast_to(np.atleast_1d(grid), (D,)))
    if subtract is None:
        subtract = D == 3
    if shift is None:
        shift = 0.0 if (subtract or p.eta > 1) else 0.5
    st = critical_boson_stencil(p)
    xt, yt = momentum_grid(st, grid, shift)
    g, res, n_sing = solve_lyapunov_batch(xt.reshape(-1, 2, 2), yt.reshape(-1, 2, 2), None, "nan")
    del xt, yt
    g = g.reshape(grid + (2, 2))
    if subtract:
        if D != 3 or shift != 0.0:
            raise UnsupportedDimension("singular-part subtraction is implemented for D = 3 on an unshifted grid")
        kax = _minimal_k(grid)
        kk = np.meshgrid(*kax, indexing="ij", sparse=True)
        k2 = sum(k**2 for k in kk)
        eps = p.epsilon
        ksum = sum(kk)
        with np.errstate(divide="ignore", invalid="ignore"):
            base = np.exp(-(sigma**2) * k2) / (eps + k2)
            g[..., 0, 0] -= D * (p.eta + 2) * base
            g[..., 1, 1] -= D * (p.eta + 2) * base
            g[..., 0, 1] -= 1j * ksum * base
            g[..., 1, 0] += 1j * ksum * base
    bad = ~np.all(np.isfinite(g.reshape(grid + (4,))), axis=-1)
    if np.any(bad):
        for idx in zip(*np.nonzero(bad)):
            nbrs = []
            for a in range(D):
                for d in (-1, 1):
                    j = list(idx)
                    j[a] = (j[a] + d) % grid[a]
                    nbrs.append(g[tuple(j)])
            g[idx] = np.nanmean(np.stack(nbrs), axis=0)
    real = to_real(g, grid, (shift,) * D)
    imag = float(np.max(np.abs(real.imag)))
    real = real.real
    if subtract:
        rax = _minimal_r(grid)
        rv = np.meshgrid(*rax, indexing="ij", sparse=True)
        rr = np.sqrt(sum(x**2 for x in rv))
        F, dF = _radial_pieces(rr, np.sqrt(p.epsilon), sigma)
        with np.errstate(invalid="ignore", divide="ignore"):
            grad = np.where(rr == 0, 0.0, dF * sum(rv) / np.where(rr == 0, 1, rr))
        real[..., 0, 0] += D * (p.eta + 2) * F
        real[..., 1, 1] += D * (p.eta + 2) * F
        real[..., 0, 1] += grad
        real[..., 1, 0] -= grad
    info = {"singular_points": n_sing, "imag_residual": imag, "subtracted": bool(subtract), "sigma": sigma}
    return CovarianceField(st.statistics, grid, 1, real, None, (shift,) * D, res, "momentum", info=info)
