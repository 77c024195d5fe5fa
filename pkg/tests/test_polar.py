import numpy as np
import pytest

from wavefactor import (DataError, build, certify, line_search_value,
                        lipschitz_bound, optimal_k, regularizer_column,
                        solve_polar)


@pytest.fixture(scope="module")
def op8():
    return build(8, 1.0)


def theta_constraint(cert, op, gamma):
    r = op.matrix @ cert.d_star + cert.k_star**2 * cert.d_star
    return float(cert.d_star @ cert.d_star + gamma * (r @ r))


def brute_force(Z, op, gamma, npts=100_000):
    """Reference maximizer: uniform grid, full SVD at every point."""
    B = op.eigvecs.T @ Z
    kbars = np.linspace(0.0, 4.0 / op.dl**2, npts)
    W = 1.0 / np.sqrt(1.0 + gamma * (kbars[:, None] + op.eigvals[None, :]) ** 2)
    svals = np.linalg.svd(W[:, :, None] * B[None, :, :], compute_uv=False)[:, 0]
    i = int(np.argmax(svals))
    return float(kbars[i]), float(svals[i])


# --- line_search_value --------------------------------------------------------

def test_line_search_zero_matrix(op8):
    assert line_search_value(np.zeros((8, 5)), 1.0, op8, 3.0) == 0.0


def test_line_search_gamma_zero_constant(op8):
    Z = np.random.default_rng(0).standard_normal((8, 5))
    expect = np.linalg.norm(Z, 2)
    for kbar in (0.0, 1.3, 4.0):
        assert abs(line_search_value(Z, kbar, op8, 0.0) - expect) < 1e-10


def test_line_search_eigen_aligned(op8):
    i = 3
    v = np.random.default_rng(1).standard_normal(5)
    v /= np.linalg.norm(v)
    Z = 3.0 * np.outer(op8.eigvecs[:, i], v)
    gamma = 6.0
    kb = -op8.eigvals[i]
    assert abs(line_search_value(Z, kb, op8, gamma) - 3.0) < 1e-10
    # off resonance the value drops by the filter coefficient
    off = kb + 0.5
    expect = 3.0 / np.sqrt(1 + gamma * 0.25)
    assert abs(line_search_value(Z, off, op8, gamma) - expect) < 1e-10


# --- lipschitz_bound ----------------------------------------------------------

def test_lipschitz_bound_branches():
    Z = np.eye(3)  # spectral norm 1
    assert lipschitz_bound(Z, 0.0) == 0.0
    assert abs(lipschitz_bound(Z, 1.0) - 2.0 / (3 * np.sqrt(3))) < 1e-12
    low = lipschitz_bound(Z, 1.0 / 64.0)
    assert abs(low - (1.0 / 16.0) * 1.25**-1.5) < 1e-12
    assert abs(low - 0.04472) < 1e-5


def test_lipschitz_bound_scales_with_norm():
    rng = np.random.default_rng(2)
    Z = rng.standard_normal((6, 7))
    assert abs(lipschitz_bound(3.0 * Z, 2.0) - 3.0 * lipschitz_bound(Z, 2.0)) < 1e-9


def test_empirical_lipschitz_never_exceeds_bound(op8):
    rng = np.random.default_rng(3)
    Z = rng.standard_normal((8, 6))
    for gamma in (0.5, 5.0, 1.0 / 100.0):
        bound = lipschitz_bound(Z, gamma)
        pairs = rng.uniform(0.0, 4.0, size=(1000, 2))
        for a, b in pairs:
            fa = line_search_value(Z, a, op8, gamma)
            fb = line_search_value(Z, b, op8, gamma)
            assert abs(fa - fb) <= bound * abs(a - b) + 1e-9


# --- solve_polar ---------------------------------------------------------------

def test_solve_polar_zero_matrix(op8):
    cert = solve_polar(np.zeros((8, 4)), op8, 2.0, tol=1e-6)
    assert cert.value == 0.0
    assert cert.k_star == 0.0
    assert not cert.d_star.any()


def test_solve_polar_eigen_aligned(op8):
    rng = np.random.default_rng(4)
    v = rng.standard_normal(6)
    v /= np.linalg.norm(v)
    for gamma in (0.3, 12.0):
        i = 5
        Z = 5.0 * np.outer(op8.eigvecs[:, i], v)
        cert = solve_polar(Z, op8, gamma, tol=1e-9)
        assert abs(cert.value - 5.0) < 1e-6
        assert abs(cert.k_star - np.sqrt(-op8.eigvals[i])) < 1e-4
        assert min(np.linalg.norm(cert.x_star - v),
                   np.linalg.norm(cert.x_star + v)) < 1e-6


def test_solve_polar_matches_brute_force(op8):
    gamma = 10.0
    worst_v = worst_k = 0.0
    for seed in range(5):
        Z = np.random.default_rng(seed).standard_normal((8, 6))
        kb_ref, v_ref = brute_force(Z, op8, gamma)
        cert = solve_polar(Z, op8, gamma, tol=1e-8)
        worst_v = max(worst_v, abs(cert.value - v_ref) / v_ref)
        worst_k = max(worst_k, abs(cert.kbar_star - kb_ref))
    assert worst_v < 1e-6
    assert worst_k < 1e-4


def test_solve_polar_certificate_invariants(op8):
    rng = np.random.default_rng(6)
    for _ in range(10):
        Z = rng.standard_normal((8, 5))
        gamma = float(rng.uniform(0.1, 30.0))
        cert = solve_polar(Z, op8, gamma, tol=1e-6)
        assert abs(np.linalg.norm(cert.x_star) - 1.0) < 1e-10
        assert abs(cert.k_star**2 - cert.kbar_star) < 1e-10
        assert abs(theta_constraint(cert, op8, gamma) - 1.0) < 1e-8
        # sign convention: first significant entry of d_star is positive
        nz = np.flatnonzero(np.abs(cert.d_star) > 1e-12 * np.max(np.abs(cert.d_star)))
        assert cert.d_star[nz[0]] > 0
        assert cert.value > 0
        assert cert.evaluations > 0


def test_solve_polar_positive_homogeneity(op8):
    rng = np.random.default_rng(7)
    Z = rng.standard_normal((8, 6))
    base = solve_polar(Z, op8, 4.0, tol=1e-9)
    for alpha in (0.25, 3.0):
        scaled = solve_polar(alpha * Z, op8, 4.0, tol=1e-9)
        assert abs(scaled.value - alpha * base.value) <= 1e-7 * alpha * base.value


def test_solve_polar_gamma_zero_reduction(op8):
    Z = np.random.default_rng(8).standard_normal((8, 6))
    cert = solve_polar(Z, op8, 0.0, tol=1e-8)
    U, s, Vt = np.linalg.svd(Z)
    assert abs(cert.value - s[0]) < 1e-10
    assert cert.k_star == 0.0  # plateau ties break toward the smallest kbar
    assert min(np.linalg.norm(cert.d_star - U[:, 0]),
               np.linalg.norm(cert.d_star + U[:, 0])) < 1e-8
    assert min(np.linalg.norm(cert.x_star - Vt[0]),
               np.linalg.norm(cert.x_star + Vt[0])) < 1e-8


def test_solve_polar_scaled_spacing_consistency():
    # the same data on a rescaled grid reports rescaled wavenumbers
    rng = np.random.default_rng(9)
    Z = rng.standard_normal((8, 6))
    op_unit = build(8, 1.0)
    op_half = build(8, 0.5)
    cert_unit = solve_polar(Z, op_unit, 3.0, tol=1e-9)
    # gamma rescaled so the weighted metric matches: gamma_phys = gamma * dl^4
    cert_half = solve_polar(Z, op_half, 3.0 * 0.5**4, tol=1e-9)
    assert abs(cert_unit.value - cert_half.value) < 1e-7
    assert abs(cert_half.k_star - cert_unit.k_star / 0.5) < 1e-5


def test_solve_polar_lipo_agrees(op8):
    Z = np.random.default_rng(10).standard_normal((8, 6))
    grid = solve_polar(Z, op8, 5.0, tol=1e-6, method="grid")
    lipo = solve_polar(Z, op8, 5.0, tol=1e-6, method="lipo", seed=3)
    assert abs(grid.value - lipo.value) <= 2e-6 * grid.value


def test_solve_polar_rejects_bad_input(op8):
    with pytest.raises(DataError):
        solve_polar(np.full((8, 3), np.nan), op8, 1.0, tol=1e-6)
    with pytest.raises(ValueError):
        solve_polar(np.ones((8, 3)), op8, 1.0, tol=0.0)
    with pytest.raises(ValueError):
        solve_polar(np.ones((8, 3)), op8, 1.0, tol=1e-6, method="annealing")


# --- certify -------------------------------------------------------------------

def test_certify_zero_residual(op8):
    cert = certify(np.zeros((8, 7)), op8, 3.0, tol=1e-6)
    assert cert.value == 0.0


def test_certify_feasible_point_reaches_one(op8):
    # a residual equal to lam * d x' built from a unit-norm feasible triplet
    # with active constraint (an eigenmode, so the wave penalty vanishes)
    # must produce a value of at least its own inner product, here 1
    rng = np.random.default_rng(11)
    gamma = 2.0
    d = op8.eigvecs[:, 4]
    x = rng.standard_normal(5)
    x /= np.linalg.norm(x)
    lam = 0.8
    residual_scaled = lam * np.outer(d, x) / lam
    cert = certify(residual_scaled, op8, gamma, tol=1e-8)
    assert cert.value >= 1.0 - 1e-6
    # the general feasible lower bound: value >= d'Zx for any feasible pair
    d2 = rng.standard_normal(8)
    k2 = optimal_k(d2, op8)
    r2 = op8.matrix @ d2 + k2**2 * d2
    d2 /= np.sqrt(d2 @ d2 + gamma * (r2 @ r2))
    Z2 = rng.standard_normal((8, 5))
    cert2 = certify(Z2, op8, gamma, tol=1e-8)
    assert cert2.value >= float(d2 @ Z2 @ x) - 1e-9
