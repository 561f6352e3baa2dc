import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from openquad.dense import build_dense
from openquad.errors import InvalidStencil, NonRealResult, QuadraticNotSupported
from openquad.models import CriticalBosonParams, XYChainParams, critical_boson_momentum, critical_boson_stencil, xy_chain_stencil
from openquad.stencil import (
    CouplingStencil,
    Lattice,
    Statistics,
    build_b_stencil,
    build_momentum,
    evolution_stencil,
    k_axes,
    momentum_grid,
    passive_rotation,
    random_stencil,
    superpose,
    tau_matrix,
    transform_stencil,
    validate_stencil,
)

SX = np.array([[0, 1], [1, 0]], complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.diag([1.0, -1.0])

seeds = st.integers(0, 2**32 - 1)


def xy(**kw):
    base = dict(mu=0.0, alpha=0.2, eta=1.0, phi=2 * np.pi / 5, zeta=0.0)
    base.update(kw)
    return XYChainParams(**base)


# -- lattice and stencil containers ------------------------------------------


def test_lattice_mode_count_and_broadcast():
    lat = Lattice(2, 3, 4)
    assert lat.extent == (4, 4)
    assert lat.n_cells == 16 and lat.n_modes == 48 and lat.block == 6
    assert Lattice(1, 1).extent is None


def test_statistics_parse():
    assert Statistics.parse("Fermion") is Statistics.FERMION
    assert Statistics.parse("boson") is Statistics.BOSON
    with pytest.raises(InvalidStencil):
        Statistics.parse("anyon")


def test_stencil_rejects_bad_shapes():
    with pytest.raises(InvalidStencil):
        CouplingStencil("fermion", Lattice(1, 1), {(0,): np.eye(3)})
    with pytest.raises(InvalidStencil):
        CouplingStencil("fermion", Lattice(1, 1), {}, ({(0,): np.ones(3)},))


def test_stencil_arrays_are_read_only():
    s = xy_chain_stencil(xy())
    with pytest.raises(ValueError):
        s.h[(1,)][0, 0] = 1.0


def test_range_is_max_norm():
    assert xy_chain_stencil(xy()).range == 1
    assert critical_boson_stencil(CriticalBosonParams(3, 1.0)).range == 1


# -- validation ---------------------------------------------------------------


def test_validate_xy_chain_passes():
    assert validate_stencil(xy_chain_stencil(xy(mu=0.0, alpha=0.2))).passed


def test_validate_symmetric_onsite_fermion_fails():
    s = CouplingStencil("fermion", Lattice(1, 1), {(0,): SX})
    rep = validate_stencil(s)
    assert not rep.passed
    fail = rep.failures()[0]
    assert fail.worst == (0,) and fail.max_violation == pytest.approx(2.0)


def test_validate_zero_stencil_passes():
    assert validate_stencil(CouplingStencil("boson", Lattice(2, 2))).passed


def test_validate_quadratic_family():
    s = xy_chain_stencil(xy(zeta=0.25))
    assert validate_stencil(s).passed
    bad = CouplingStencil("fermion", Lattice(1, 1), {}, (), ({((0,), (0,)): SX},))
    assert not validate_stencil(bad).passed


@given(seeds, st.sampled_from(["fermion", "boson"]), st.integers(1, 2), st.integers(1, 2))
def test_random_stencils_validate(seed, stats, dims, bands):
    rng = np.random.default_rng(seed)
    s = random_stencil(rng, stats, dims=dims, bands=bands, n_quadratic=1)
    assert validate_stencil(s).passed


def test_canonical_is_idempotent_on_xy_chain():
    s = xy_chain_stencil(xy(mu=0.7, alpha=0.3))
    c = s.canonical()
    for r in s.h:
        np.testing.assert_allclose(c.h[r], s.h[r], atol=1e-15)
    cc = c.canonical()
    for r in c.h:
        np.testing.assert_allclose(cc.h[r], c.h[r], atol=1e-15)


# -- B stencil ----------------------------------------------------------------


def test_b_stencil_xy_chain():
    eta, phi = 0.7, 0.9
    b = build_b_stencil(xy_chain_stencil(xy(eta=eta, phi=phi)))
    np.testing.assert_allclose(b[(0,)], eta * (SZ + np.eye(2)), atol=1e-14)
    np.testing.assert_allclose(b[(1,)], eta * np.exp(1j * phi) * (SZ + np.eye(2)) / 2, atol=1e-14)
    np.testing.assert_allclose(b[(-1,)], eta * np.exp(-1j * phi) * (SZ + np.eye(2)) / 2, atol=1e-14)


def test_b_stencil_critical_boson_fourier_diagonal():
    for D in (1, 2, 3):
        eta = 1.3
        b = build_b_stencil(critical_boson_stencil(CriticalBosonParams(D, eta)))
        k = np.linspace(0.1, 0.9, D)
        bk = sum(np.exp(-1j * np.dot(k, r)) * v for r, v in b.items())
        assert bk[0, 0].real == pytest.approx(2 * D * (eta + 2))
        assert bk[1, 1].real == pytest.approx(2 * D * (eta + 2))


def test_b_stencil_empty_without_dissipation():
    assert build_b_stencil(CouplingStencil("fermion", Lattice(1, 1), {(1,): 0.5 * SY, (-1,): 0.5 * SY})) == {}


@given(seeds, st.sampled_from(["fermion", "boson"]))
def test_b_stencil_hermitian_pairs(seed, stats):
    s = random_stencil(np.random.default_rng(seed), stats, dims=2, bands=2)
    b = build_b_stencil(s)
    for r, v in b.items():
        np.testing.assert_allclose(v, b[tuple(-x for x in r)].conj().T, atol=1e-13)


# -- dense and momentum evolution matrices -------------------------------------


def test_xy_chain_x_blocks_match_closed_form():
    mu, alpha, eta, phi, zeta = 0.4, 0.3, 0.8, 1.1, 0.25
    x = evolution_stencil(xy_chain_stencil(xy(mu=mu, alpha=alpha, eta=eta, phi=phi, zeta=zeta))).x
    np.testing.assert_allclose(x[(0,)], -np.array([[2 * zeta + 2 * eta, -mu], [mu, 2 * zeta]]), atol=1e-14)
    cphi = np.cos(phi)
    xp = np.array([[-eta * cphi, -1 - alpha], [1 - alpha, 0]])
    xm = np.array([[-eta * cphi, -1 + alpha], [1 + alpha, 0]])
    ks = np.linspace(0, 2 * np.pi, 7)
    for k in ks:
        total = sum(np.exp(-1j * k * r[0]) * v for r, v in x.items())
        ref = 1j * (mu - 2 * np.cos(k)) * SY + 2j * alpha * np.sin(k) * SX - eta * (1 + cphi * np.cos(k)) * (SZ + np.eye(2))
        ref = ref - 2 * zeta * np.eye(2)
        np.testing.assert_allclose(total, ref, atol=1e-13)
    np.testing.assert_allclose(x[(1,)], xp, atol=1e-14)
    np.testing.assert_allclose(x[(-1,)], xm, atol=1e-14)
    y = evolution_stencil(xy_chain_stencil(xy(eta=eta, phi=phi))).y
    np.testing.assert_allclose(y[(1,)], -y[(-1,)], atol=1e-14)


def test_xy_chain_dense_blocks_n4():
    p = xy(mu=0.3, alpha=0.2, eta=1.0, phi=0.7)
    ev = build_dense(xy_chain_stencil(p, extent=4))
    x = evolution_stencil(xy_chain_stencil(p)).x
    assert ev.Zs == () or len(ev.Zs) == 0
    for i in range(4):
        for j in range(4):
            r = (i - j + 2) % 4 - 2
            ref = x.get((r,), np.zeros((2, 2)))
            np.testing.assert_allclose(ev.X[2 * i : 2 * i + 2, 2 * j : 2 * j + 2], ref, atol=1e-14)


def test_xy_momentum_closed_form():
    mu, alpha, eta, phi = 0.5, 0.2, 0.9, 1.3
    s = xy_chain_stencil(xy(mu=mu, alpha=alpha, eta=eta, phi=phi))
    for k in np.linspace(0, 2 * np.pi, 9):
        xk, _ = build_momentum(s, [k])
        ref = 1j * (mu - 2 * np.cos(k)) * SY + 2j * alpha * np.sin(k) * SX - eta * (1 + np.cos(phi) * np.cos(k)) * (SZ + np.eye(2))
        np.testing.assert_allclose(xk, ref, atol=1e-13)


def test_xy_hamiltonian_momentum_form():
    mu, alpha = 0.6, 0.35
    s = xy_chain_stencil(xy(mu=mu, alpha=alpha)).canonical()
    for k in np.linspace(0, 2 * np.pi, 9):
        hk = sum(np.exp(-1j * k * r[0]) * v for r, v in s.h.items())
        np.testing.assert_allclose(hk, (np.cos(k) - mu / 2) * SY - alpha * np.sin(k) * SX, atol=1e-14)


def test_critical_boson_momentum_blocks():
    p = CriticalBosonParams(2, 1.5)
    s = critical_boson_stencil(p)
    for k in [(0.3, -1.2), (np.pi, np.pi), (0.0, 0.0)]:
        xk, yk = build_momentum(s, k)
        xr, yr, _ = critical_boson_momentum(np.array(k), p)
        np.testing.assert_allclose(xk, xr, atol=1e-13)
        np.testing.assert_allclose(yk, yr, atol=1e-13)
        np.testing.assert_allclose(xk, 4 * (np.mean(np.cos(k)) - 1.5) * np.eye(2), atol=1e-13)
    _, yk = build_momentum(s, (np.pi, np.pi))
    assert abs(yk[0, 1]) < 1e-13


def test_critical_boson_y_1d():
    eta = 1.7
    s = critical_boson_stencil(CriticalBosonParams(1, eta))
    for k in (0.2, 1.0, 2.5):
        _, yk = build_momentum(s, [k])
        np.testing.assert_allclose(yk, 2 * (eta + 2) * np.eye(2) + 2 * np.sin(k) * np.array([[0, 1j], [-1j, 0]]), atol=1e-13)


def test_momentum_trivial_single_onsite_lindblad():
    ell = np.array([0.3 + 0.1j, -0.2j])
    s = CouplingStencil("fermion", Lattice(1, 1), {}, ({(0,): ell},))
    xk, _ = build_momentum(s, [0.0])
    np.testing.assert_allclose(xk, -np.outer(ell, ell.conj()).real, atol=1e-15)


def test_momentum_rejects_quadratic():
    with pytest.raises(QuadraticNotSupported):
        build_momentum(xy_chain_stencil(xy(zeta=0.1)), [0.0])
    with pytest.raises(QuadraticNotSupported):
        momentum_grid(xy_chain_stencil(xy(zeta=0.1)), (8,))


@given(seeds, st.sampled_from(["fermion", "boson"]), st.integers(1, 2), st.integers(1, 2))
def test_momentum_grid_matches_literal_fourier(seed, stats, dims, bands):
    """FFT of the real-space x, y stencils equals the literal h~, l~ formulas."""
    s = random_stencil(np.random.default_rng(seed), stats, dims=dims, bands=bands)
    grid = (5,) * dims
    xt, yt = momentum_grid(s, grid, 0.25)
    axes = k_axes(grid, 0.25)
    for idx in [(0,) * dims, (3,) * dims, tuple(range(dims))]:
        k = [ax[i] for ax, i in zip(axes, idx)]
        xk, yk = build_momentum(s, k)
        np.testing.assert_allclose(xt[idx], xk, atol=1e-12)
        np.testing.assert_allclose(yt[idx], yk, atol=1e-12)


@given(seeds, st.sampled_from(["fermion", "boson"]))
def test_momentum_reality(seed, stats):
    s = random_stencil(np.random.default_rng(seed), stats, dims=1, bands=2)
    k = [0.77]
    xk, yk = build_momentum(s, k)
    xm, ym = build_momentum(s, [-0.77])
    np.testing.assert_allclose(xk.conj(), xm, atol=1e-12)
    np.testing.assert_allclose(yk.conj(), ym, atol=1e-12)


@given(seeds, st.sampled_from(["fermion", "boson"]), st.integers(1, 2))
def test_dense_symmetries(seed, stats, bands):
    s = random_stencil(np.random.default_rng(seed), stats, dims=1, bands=bands, n_quadratic=1, extent=4)
    ev = build_dense(s)
    if stats == "fermion":
        np.testing.assert_allclose(ev.Y, -ev.Y.T, atol=1e-12)
        for z in ev.Zs:
            z = z.toarray()
            np.testing.assert_allclose(z, -z.T, atol=1e-12)
    else:
        np.testing.assert_allclose(ev.Y, ev.Y.T, atol=1e-12)
        T = np.kron(np.eye(4), tau_matrix(bands))
        for z in ev.Zs:
            z = z.toarray()
            np.testing.assert_allclose(z, -(T @ z.T @ T).real, atol=1e-12)


@given(seeds, st.integers(1, 2), st.integers(0, 1))
def test_fermion_dissipative_part_negative_semidefinite(seed, bands, n_quad):
    s = random_stencil(np.random.default_rng(seed), "fermion", dims=1, bands=bands, n_quadratic=n_quad, extent=5)
    X = build_dense(s).X
    assert np.max(np.linalg.eigvalsh(X + X.T)) <= 1e-10


@given(seeds, st.sampled_from(["fermion", "boson"]), st.integers(1, 2))
def test_dense_spectrum_is_union_of_momentum_spectra(seed, stats, dims):
    L = 5 if dims == 1 else 3
    s = random_stencil(np.random.default_rng(seed), stats, dims=dims, bands=1, extent=L)
    X = build_dense(s).X
    ev_dense = np.sort_complex(np.linalg.eigvals(X))
    xt, _ = momentum_grid(s, (L,) * dims)
    ev_k = np.sort_complex(np.linalg.eigvals(xt.reshape(-1, 2, 2)).reshape(-1))
    # match as multisets: greedy nearest pairing
    rest = list(ev_k)
    for v in ev_dense:
        j = int(np.argmin(np.abs(np.array(rest) - v)))
        assert abs(rest.pop(j) - v) < 1e-8 * max(1, abs(v))


def test_quasifree_has_no_z():
    assert len(build_dense(xy_chain_stencil(xy(), extent=6)).Zs) == 0
    assert len(build_dense(xy_chain_stencil(xy(zeta=0.2), extent=6)).Zs) == 6


def test_single_mode_w_plus_lindblad():
    # L = w_+: B = e_+ e_+^T, so X = -B_r = -diag(1, 0) and Y = B_i = 0
    s = CouplingStencil("fermion", Lattice(1, 1, 1), {}, ({(0,): np.array([1.0, 0.0])},))
    ev = build_dense(s)
    np.testing.assert_allclose(ev.X, -np.diag([1.0, 0.0]), atol=1e-15)
    np.testing.assert_allclose(ev.Y, 0, atol=1e-15)


def test_non_real_result_for_complex_boson_hamiltonian():
    h = {(0,): np.array([[1j, 0.0], [0.0, 0.0]])}
    with pytest.raises(NonRealResult):
        build_dense(CouplingStencil("boson", Lattice(1, 1, 3), h))


# -- transformations ------------------------------------------------------------


def test_superpose_adds_hamiltonians_and_concatenates_dissipators():
    a = xy_chain_stencil(xy(eta=0.5))
    b = xy_chain_stencil(xy(eta=0.2))
    s = superpose([a, b])
    np.testing.assert_allclose(s.h[(1,)], a.h[(1,)] + b.h[(1,)])
    assert len(s.ell) == 2
    with pytest.raises(InvalidStencil):
        superpose([a, critical_boson_stencil(CriticalBosonParams(1, 1.0))])


@given(seeds)
def test_passive_rotation_is_orthogonal_and_commutes_with_tau(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    U, _ = np.linalg.qr(A)
    O = passive_rotation(U)
    np.testing.assert_allclose(O @ O.T, np.eye(4), atol=1e-12)
    T = tau_matrix(2)
    np.testing.assert_allclose(O @ T, T @ O, atol=1e-12)


def test_transform_rejects_non_orthogonal():
    s = xy_chain_stencil(xy())
    with pytest.raises(InvalidStencil):
        transform_stencil(s, np.array([[2.0, 0], [0, 1]]))


def test_xy_det_c2_symbolic_sign():
    eta, alpha, phi = sympy.symbols("eta alpha phi", real=True)
    # x(+-1) in closed form; C_2 = x(-1) (x) 1 + 1 (x) x(1)
    xp = sympy.Matrix([[-eta * sympy.cos(phi), -1 - alpha], [1 - alpha, 0]])
    xm = sympy.Matrix([[-eta * sympy.cos(phi), -1 + alpha], [1 + alpha, 0]])
    C2 = sympy.kronecker_product(xm, sympy.eye(2)) + sympy.kronecker_product(sympy.eye(2), xp)
    det = sympy.factor(sympy.simplify(C2.det()))
    assert sympy.simplify(det - 4 * eta**2 * sympy.cos(phi) ** 2 * (1 - alpha**2)) == 0
    # magnitude agrees with the alternative form 4 eta^2 (alpha^2 - 1) cos^2(phi)
    alt = 4 * eta**2 * (alpha**2 - 1) * sympy.cos(phi) ** 2
    assert sympy.simplify(det**2 - alt**2) == 0
