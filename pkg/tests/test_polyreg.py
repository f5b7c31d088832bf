import numpy as np
import pytest

from mopkit.dataset import DesignTable, VariableMeta
from mopkit.errors import DimensionMismatch, SingularDesign, Underdetermined
from mopkit.polyreg import (
    BasisSpec,
    PolynomialModel,
    basis_matrix,
    basis_vector,
    fit_polynomial,
)

LIN = BasisSpec("linear")
QUAD = BasisSpec("quadratic")
QUADC = BasisSpec("quadratic", coupling=True)


def table_from(X, y):
    X = np.atleast_2d(X)
    return DesignTable(X, {"y": y},
                       [VariableMeta(f"x{j}", j) for j in range(X.shape[1])])


class TestBasis:
    def test_quadratic_coupling_expansion(self):
        np.testing.assert_array_equal(basis_vector(QUADC, [2.0, 3.0]),
                                      [1, 2, 3, 4, 9, 6])

    def test_linear_zeros(self):
        np.testing.assert_array_equal(basis_vector(LIN, [0.0, 0.0, 0.0]),
                                      [1, 0, 0, 0])

    def test_sign_single_variable(self):
        np.testing.assert_array_equal(basis_vector(QUAD, [-1.0]), [1, -1, 1])

    def test_coupling_requires_quadratic(self):
        with pytest.raises(ValueError):
            BasisSpec("linear", coupling=True)

    @pytest.mark.parametrize("m", range(1, 11))
    def test_term_count_formula(self, m):
        assert LIN.term_count(m) == 1 + m
        assert QUAD.term_count(m) == 1 + 2 * m
        assert QUADC.term_count(m) == 1 + 2 * m + m * (m - 1) // 2
        x = np.ones(m)
        for spec in (LIN, QUAD, QUADC):
            assert basis_vector(spec, x).size == spec.term_count(m)


class TestFit:
    def test_exact_line(self):
        table = table_from(np.array([[0.0], [1.0], [2.0]]), [0.0, 2.0, 4.0])
        model = fit_polynomial(table, "y", LIN)
        np.testing.assert_allclose(model.coefficients, [0.0, 2.0], atol=1e-12)

    def test_recovers_coupled_quadratic(self):
        # in-basis response, so the fit is forced to the generating values
        rng = np.random.default_rng(42)
        X = rng.normal(size=(20, 2))
        y = 2 * X[:, 0] + 4 * X[:, 1] + 0.5 * X[:, 0] ** 2 + X[:, 0] * X[:, 1]
        model = fit_polynomial(table_from(X, y), "y", QUADC)
        np.testing.assert_allclose(model.coefficients, [0, 2, 4, 0.5, 0, 1],
                                   atol=1e-8)

    def test_conflicting_duplicates_average(self):
        # duplicate support points with different responses: least squares
        # settles on the pseudo-inverse solution of the 3x2 system
        X = np.array([[1.0], [1.0], [2.0]])
        y = np.array([0.0, 2.0, 3.0])
        model = fit_polynomial(table_from(X, y), "y", LIN)
        P = np.column_stack([np.ones(3), X[:, 0]])
        expected = np.linalg.pinv(P) @ y
        np.testing.assert_allclose(model.coefficients, expected, atol=1e-10)

    def test_pseudo_inverse_oracle_random_instances(self):
        rng = np.random.default_rng(7)
        specs = (LIN, QUAD, QUADC)
        for _ in range(100):
            n = int(rng.integers(12, 51))
            m = int(rng.integers(1, 4))
            spec = specs[rng.integers(3)]
            if spec.term_count(m) > n:
                spec = LIN
            X = rng.normal(size=(n, m))
            y = rng.normal(size=n)
            model = fit_polynomial(table_from(X, y), "y", spec)
            expected = np.linalg.pinv(basis_matrix(spec, X)) @ y
            predicted = basis_matrix(spec, X) @ expected
            np.testing.assert_allclose(model.predict(X), predicted,
                                       rtol=1e-8, atol=1e-8)

    def test_in_basis_residuals_tiny(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(40, 3))
        y = 1 - X[:, 0] + 2 * X[:, 2] ** 2 + 0.3 * X[:, 0] * X[:, 1]
        model = fit_polynomial(table_from(X, y), "y", QUADC)
        assert np.abs(model.predict(X) - y).max() <= 1e-8

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(30, 2))
        y = rng.normal(size=30)
        a = fit_polynomial(table_from(X, y), "y", QUAD)
        perm = rng.permutation(30)
        b = fit_polynomial(table_from(X[perm], y[perm]), "y", QUAD)
        np.testing.assert_allclose(a.coefficients, b.coefficients, atol=1e-10)

    def test_underdetermined(self):
        X = np.zeros((3, 2))
        X[:, 0] = [1, 2, 3]
        X[:, 1] = [2, 1, 0]
        with pytest.raises(Underdetermined):
            fit_polynomial(table_from(X, [1.0, 2.0, 3.0]), "y", QUADC)

    def test_singular_design(self):
        X = np.column_stack([np.arange(10.0), 2 * np.arange(10.0)])
        with pytest.raises(SingularDesign):
            fit_polynomial(table_from(X, np.arange(10.0)), "y", LIN)


class TestPredict:
    def test_direct_evaluation(self):
        model = PolynomialModel(LIN, np.array([0.0, 2.0]), (0,))
        assert model.predict(np.array([3.0])) == pytest.approx(6.0)

    def test_constant_model(self):
        model = PolynomialModel(QUAD, np.array([1.0, 0, 0, 0, 0]), (0, 1))
        rng = np.random.default_rng(0)
        assert model.predict(rng.normal(size=2)) == pytest.approx(1.0)

    def test_dimension_mismatch(self):
        model = PolynomialModel(LIN, np.array([0.0, 2.0]), (0,))
        with pytest.raises(DimensionMismatch):
            model.predict(np.array([1.0, 2.0]))

    def test_reproduces_in_basis_support_values(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(-2, 2, size=(25, 2))
        y = 3 + X[:, 0] - 0.5 * X[:, 1] ** 2
        model = fit_polynomial(table_from(X, y), "y", QUAD)
        np.testing.assert_allclose(model.predict(X), y, atol=1e-9)


def test_serialization_round_trip():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(15, 2))
    y = rng.normal(size=15)
    model = fit_polynomial(table_from(X, y), "y", QUADC)
    back = PolynomialModel.from_dict(model.to_dict())
    np.testing.assert_array_equal(back.coefficients, model.coefficients)
    assert back.basis == model.basis
    np.testing.assert_array_equal(back.predict(X), model.predict(X))
