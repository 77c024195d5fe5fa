import numpy as np
import pytest

from wavefactor import (DataError, DegenerateColumnError, DimensionError,
                        FactorModel, WaveField, build, gradients,
                        objective_value, optimal_k, regularizer_column)


@pytest.fixture
def op3():
    return build(3, 1.0)


def random_instance(seed, n_space=5, n_time=4, rank=2, gamma=2.5, lam=0.8, masked=False):
    rng = np.random.default_rng(seed)
    field = WaveField(Y=rng.standard_normal((n_space, n_time)), dl=1.0, dt=1.0,
                      mask=(rng.random((n_space, n_time)) < 0.7).astype(float) if masked else None)
    model = FactorModel(D=rng.standard_normal((n_space, rank)),
                        X=rng.standard_normal((n_time, rank)),
                        k=rng.uniform(0.0, 2.0, rank), gamma=gamma, lam=lam)
    return field, model


# --- regularizer_column -----------------------------------------------------

def test_regularizer_zero_inputs(op3):
    assert regularizer_column(np.zeros(3), np.zeros(7), 1.3, op3, 4.0) == 0.0


def test_regularizer_eigenvector_is_half(op3):
    for i in range(3):
        d = op3.eigvecs[:, i]
        k = np.sqrt(-op3.eigvals[i])
        val = regularizer_column(d, np.zeros(2), k, op3, gamma=50.0)
        assert abs(val - 0.5) < 1e-10


def test_regularizer_hand_value(op3):
    # L @ e0 = (-2, 1, 0), so the penalty is 5 and the norm term is 0.5
    val = regularizer_column(np.array([1.0, 0.0, 0.0]), np.zeros(4), 0.0, op3, 1.0)
    assert abs(val - 5.5) < 1e-12


def test_regularizer_positive_homogeneity(op3):
    rng = np.random.default_rng(1)
    for _ in range(25):
        d = rng.standard_normal(3)
        x = rng.standard_normal(6)
        k = float(rng.uniform(0, 2))
        gamma = float(rng.uniform(0, 10))
        alpha = float(rng.uniform(0, 3))
        base = regularizer_column(d, x, k, op3, gamma)
        scaled = regularizer_column(alpha * d, alpha * x, k, op3, gamma)
        assert abs(scaled - alpha**2 * base) <= 1e-9 * max(1.0, base)


def test_regularizer_lower_bound(op3):
    rng = np.random.default_rng(2)
    for _ in range(25):
        d = rng.standard_normal(3)
        x = rng.standard_normal(5)
        gamma = float(rng.uniform(0, 10))
        val = regularizer_column(d, x, optimal_k(d, op3), op3, gamma)
        assert np.linalg.norm(np.outer(d, x)) <= val + 1e-12


def test_regularizer_dimension_error(op3):
    with pytest.raises(DimensionError):
        regularizer_column(np.zeros(4), np.zeros(2), 0.0, op3, 1.0)


# --- optimal_k ---------------------------------------------------------------

def test_optimal_k_eigenvectors(op3):
    for i in range(3):
        k = optimal_k(op3.eigvecs[:, i], op3)
        assert abs(k - np.sqrt(-op3.eigvals[i])) < 1e-12


def test_optimal_k_hand_values(op3):
    assert abs(optimal_k(np.array([1.0, 0.0, 0.0]), op3) - np.sqrt(2.0)) < 1e-12
    assert abs(optimal_k(np.array([1.0, 1.0, 1.0]), op3) - np.sqrt(2.0 / 3.0)) < 1e-12


def test_optimal_k_zero_column(op3):
    with pytest.raises(DegenerateColumnError):
        optimal_k(np.zeros(3), op3)


@pytest.mark.parametrize("dl", [1.0, 0.2])
def test_optimal_k_beats_grid(dl):
    op = build(9, dl)
    rng = np.random.default_rng(4)
    grid = np.linspace(0.0, 2.0 / dl, 10_000)
    for _ in range(10):
        d = rng.standard_normal(9)
        k_star = optimal_k(d, op)
        assert 0.0 <= k_star <= 2.0 / dl + 1e-12

        def penalty(k):
            r = op.matrix @ d + k**2 * d
            return r @ r

        best_grid = min(penalty(k) for k in grid)
        assert penalty(k_star) <= best_grid + 1e-10


# --- objective_value ---------------------------------------------------------

def test_objective_empty_model():
    field, _ = random_instance(0)
    op = build(5, 1.0)
    model = FactorModel.empty(5, 4, gamma=1.0, lam=0.5)
    expected = 0.5 * np.sum(field.Y**2)
    assert abs(objective_value(model, field, op) - expected) < 1e-12


def test_objective_exact_fit_gamma_zero():
    rng = np.random.default_rng(5)
    D = rng.standard_normal((6, 2))
    X = rng.standard_normal((8, 2))
    field = WaveField(Y=D @ X.T, dl=1.0, dt=1.0)
    model = FactorModel(D=D, X=X, k=np.zeros(2), gamma=0.0, lam=0.7)
    op = build(6, 1.0)
    expected = 0.5 * 0.7 * (np.sum(D**2) + np.sum(X**2))
    assert abs(objective_value(model, field, op) - expected) < 1e-10


def scalar_objective(model, field, op):
    # independent entrywise re-implementation
    n_space, n_time = field.shape
    mask = field.mask if field.mask is not None else np.ones((n_space, n_time))
    total = 0.0
    for m in range(n_space):
        for t in range(n_time):
            pred = 0.0
            for j in range(model.rank):
                pred += model.D[m, j] * model.X[t, j]
            total += 0.5 * mask[m, t] * (field.Y[m, t] - pred) ** 2
    for j in range(model.rank):
        total += 0.5 * model.lam * (model.X[:, j] @ model.X[:, j])
        total += 0.5 * model.lam * (model.D[:, j] @ model.D[:, j])
        r = op.matrix @ model.D[:, j] + model.k[j] ** 2 * model.D[:, j]
        total += 0.5 * model.lam * model.gamma * (r @ r)
    return total


@pytest.mark.parametrize("masked", [False, True])
def test_objective_matches_scalar_loop(masked):
    field, model = random_instance(6, n_space=4, n_time=5, masked=masked)
    op = build(4, 1.0)
    a = objective_value(model, field, op)
    b = scalar_objective(model, field, op)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


def test_objective_gamma_zero_formula():
    field, model = random_instance(7, gamma=0.0)
    op = build(5, 1.0)
    expected = (0.5 * np.sum((field.Y - model.product())**2)
                + 0.5 * model.lam * (np.sum(model.D**2) + np.sum(model.X**2)))
    assert abs(objective_value(model, field, op) - expected) < 1e-10


def test_objective_shape_mismatch():
    field, model = random_instance(8)
    op = build(6, 1.0)
    with pytest.raises(DimensionError):
        objective_value(model, field, op)


# --- gradients ---------------------------------------------------------------

def test_gradients_zero_at_exact_fit_lambda_free():
    # lam must be positive for a valid model; emulate lam -> 0 with a tiny value
    rng = np.random.default_rng(9)
    D = rng.standard_normal((5, 2))
    X = rng.standard_normal((4, 2))
    field = WaveField(Y=D @ X.T, dl=1.0, dt=1.0)
    op = build(5, 1.0)
    model = FactorModel(D=D, X=X, k=np.zeros(2), gamma=0.0, lam=1e-300)
    gd, gx = gradients(model, field, op)
    assert np.linalg.norm(gd) < 1e-250
    assert np.linalg.norm(gx) < 1e-250


@pytest.mark.parametrize("masked", [False, True])
def test_gradients_match_finite_differences(masked):
    field, model = random_instance(10, n_space=5, n_time=4, rank=2, masked=masked)
    op = build(5, 1.0)
    gd, gx = gradients(model, field, op)
    step = 1e-6

    def obj(D, X):
        return objective_value(FactorModel(D=D, X=X, k=model.k, gamma=model.gamma,
                                           lam=model.lam), field, op)

    fd_d = np.zeros_like(gd)
    for idx in np.ndindex(*model.D.shape):
        dp = model.D.copy(); dp[idx] += step
        dm = model.D.copy(); dm[idx] -= step
        fd_d[idx] = (obj(dp, model.X) - obj(dm, model.X)) / (2 * step)
    fd_x = np.zeros_like(gx)
    for idx in np.ndindex(*model.X.shape):
        xp = model.X.copy(); xp[idx] += step
        xm = model.X.copy(); xm[idx] -= step
        fd_x[idx] = (obj(model.D, xp) - obj(model.D, xm)) / (2 * step)

    assert np.linalg.norm(gd - fd_d) <= 1e-5 * (1 + np.linalg.norm(fd_d))
    assert np.linalg.norm(gx - fd_x) <= 1e-5 * (1 + np.linalg.norm(fd_x))


def test_gradients_mask_of_ones_matches_unmasked():
    field, model = random_instance(11)
    op = build(5, 1.0)
    masked = WaveField(Y=field.Y, dl=field.dl, dt=field.dt,
                       mask=np.ones_like(field.Y))
    gd0, gx0 = gradients(model, field, op)
    gd1, gx1 = gradients(model, masked, op)
    assert np.array_equal(gd0, gd1)
    assert np.array_equal(gx0, gx1)


# --- WaveField / FactorModel validation --------------------------------------

def test_wavefield_rejects_bad_mask():
    Y = np.ones((3, 3))
    with pytest.raises(DimensionError):
        WaveField(Y=Y, dl=1.0, dt=1.0, mask=np.ones((2, 3)))
    with pytest.raises(DataError):
        WaveField(Y=Y, dl=1.0, dt=1.0, mask=np.full((3, 3), 0.5))
    with pytest.raises(DataError):
        WaveField(Y=Y, dl=1.0, dt=1.0, mask=np.zeros((3, 3)))


def test_factor_model_validation():
    with pytest.raises(DimensionError):
        FactorModel(D=np.ones((3, 2)), X=np.ones((4, 1)), k=np.zeros(2),
                    gamma=1.0, lam=1.0)
    with pytest.raises(DataError):
        FactorModel(D=np.full((3, 1), np.nan), X=np.ones((4, 1)), k=np.zeros(1),
                    gamma=1.0, lam=1.0)
