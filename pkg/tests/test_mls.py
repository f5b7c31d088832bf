import numpy as np
import pytest

from mopkit.benchmarks import quadratic_2d
from mopkit.dataset import DesignTable, VariableMeta
from mopkit.errors import DimensionMismatch, Underdetermined
from mopkit.mls import MlsModel, fit_mls, gaussian_weight
from mopkit.polyreg import BasisSpec, fit_polynomial

LIN = BasisSpec("linear")
QUAD = BasisSpec("quadratic")


def table_from(X, y):
    X = np.atleast_2d(X)
    return DesignTable(X, {"y": y},
                       [VariableMeta(f"x{j}", j) for j in range(X.shape[1])])


def normal_quad2d(n, seed):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 2))
    return table_from(X, quadratic_2d(X))


class TestWeight:
    def test_zero_distance(self):
        assert gaussian_weight(0.0, 2.0, 0.5) == pytest.approx(1.0)

    def test_forced_values(self):
        D, alpha = 1.7, 0.4
        assert gaussian_weight(alpha * D, D, alpha) == pytest.approx(np.exp(-1))
        assert gaussian_weight(3 * alpha * D, D, alpha) == pytest.approx(np.exp(-9))

    def test_range_and_monotonicity(self):
        distances = np.linspace(0, 10, 200)
        w = gaussian_weight(distances, 1.3, 1 / 3)
        assert np.all(w > 0) and np.all(w <= 1)
        assert w[0] == 1.0 and np.all(np.diff(w) < 0)


class TestFit:
    def test_huge_radius_matches_global_least_squares(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1, 1, size=(40, 2))
        y = 1.0 + 2.0 * X[:, 0] - 3.0 * X[:, 1]
        table = table_from(X, y)
        mls = fit_mls(table, "y", LIN, D=1e6)
        poly = fit_polynomial(table, "y", LIN)
        queries = rng.uniform(-1, 1, size=(20, 2))
        np.testing.assert_allclose(mls.predict(queries), poly.predict(queries),
                                   atol=1e-6)

    def test_automatic_radius_deterministic(self):
        table = normal_quad2d(100, seed=3)
        a = fit_mls(table, "y", QUAD, seed=5)
        b = fit_mls(table, "y", QUAD, seed=5)
        assert a.radius == b.radius

    def test_smooths_noisy_linear_data(self):
        rng = np.random.default_rng(1)
        x = np.linspace(-1, 1, 60)
        noise = rng.uniform(-0.4, 0.4, 60)
        y = x + noise
        table = table_from(x[:, None], y)
        model = fit_mls(table, "y", LIN, D=0.8)
        smoothed_error = np.abs(model.predict(x[:, None]) - x).max()
        raw_error = np.abs(y - x).max()
        assert smoothed_error < raw_error

    def test_underdetermined(self):
        table = normal_quad2d(4, seed=0)
        with pytest.raises(Underdetermined):
            fit_mls(table, "y", QUAD, D=1.0)


class TestPredict:
    def test_support_point_recovery_small_radius(self):
        rng = np.random.default_rng(2)
        X = rng.uniform(-1, 1, size=(50, 2))
        y = 0.5 - X[:, 0] + 0.25 * X[:, 1] ** 2
        model = fit_mls(table_from(X, y), "y", QUAD, D=0.3)
        predictions = model.predict(X)
        assert np.abs(predictions - y).max() <= 1e-4

    def test_constant_response(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 2))
        for D in (0.2, 1.0, 50.0):
            model = fit_mls(table_from(X, np.full(30, 7.5)), "y", LIN, D=D)
            np.testing.assert_allclose(model.predict(rng.normal(size=(10, 2))),
                                       7.5, atol=1e-8)

    def test_heldout_error_decreases_with_n(self):
        # fixed Monte Carlo test grid, growing training sets
        rng = np.random.default_rng(4)
        grid = rng.normal(size=(400, 2))
        truth = quadratic_2d(grid)
        errors = []
        for n in (25, 100, 400):
            model = fit_mls(normal_quad2d(n, seed=10), "y", QUAD, seed=0)
            rmse = np.sqrt(np.mean((model.predict(grid) - truth) ** 2))
            errors.append(rmse)
        assert errors[0] > errors[1] > errors[2]

    def test_reproduction_of_in_basis_response(self):
        rng = np.random.default_rng(5)
        X = rng.uniform(-2, 2, size=(60, 2))
        y = 1 + X[:, 0] - 2 * X[:, 1] + 0.5 * X[:, 0] ** 2
        table = table_from(X, y)
        queries = rng.uniform(-2, 2, size=(40, 2))
        truth = 1 + queries[:, 0] - 2 * queries[:, 1] + 0.5 * queries[:, 0] ** 2
        for D in (0.5, 2.0, 20.0):
            model = fit_mls(table, "y", QUAD, D=D)
            np.testing.assert_allclose(model.predict(queries), truth, atol=1e-6)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(6)
        table = normal_quad2d(80, seed=7)
        model = fit_mls(table, "y", QUAD, D=1.0)
        perm = rng.permutation(80)
        shuffled = DesignTable(table.inputs[perm],
                               {"y": table.response("y")[perm]}, table.variables)
        permuted = fit_mls(shuffled, "y", QUAD, D=1.0)
        queries = rng.normal(size=(25, 2))
        np.testing.assert_allclose(model.predict(queries), permuted.predict(queries),
                                   atol=1e-10)

    def test_dimension_mismatch(self):
        model = fit_mls(normal_quad2d(30, seed=1), "y", LIN, D=1.0)
        with pytest.raises(DimensionMismatch):
            model.predict(np.zeros(3))


def test_serialization_preserves_predictions_exactly():
    table = normal_quad2d(50, seed=9)
    model = fit_mls(table, "y", QUAD, seed=2)
    back = MlsModel.from_dict(model.to_dict())
    rng = np.random.default_rng(10)
    queries = rng.normal(size=(30, 2))
    np.testing.assert_array_equal(back.predict(queries), model.predict(queries))
