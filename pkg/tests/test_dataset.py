import numpy as np
import pytest

from mopkit.dataset import (
    DesignTable,
    VariableMeta,
    load_csv,
    make_partition,
    sample_lhs,
    write_csv,
)
from mopkit.errors import (
    EmptyTable,
    IndexOutOfRange,
    InvalidPartition,
    MalformedCell,
    NamedColumnAbsent,
)


def small_table():
    X = np.array([[0.0, 1.0], [1.0, 2.0], [2.0, 3.0]])
    return DesignTable(X, {"y": [1.0, 2.0, 3.0]},
                       [VariableMeta("x1", 0), VariableMeta("x2", 1)])


class TestLoadCsv:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,x2,y\n1,2,3\n4,5,6\n7,8,9\n")
        table = load_csv(path, ["y"])
        assert table.n == 3 and table.m == 2
        assert table.input_names == ["x1", "x2"]
        np.testing.assert_array_equal(table.response("y"), [3, 6, 9])

    def test_missing_response_column(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,y\n1,2\n")
        with pytest.raises(NamedColumnAbsent):
            load_csv(path, ["z"])

    def test_nan_cell(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,y\n1,2\nNaN,3\n")
        with pytest.raises(MalformedCell) as err:
            load_csv(path, ["y"])
        assert err.value.row == 2 and err.value.column == "x1"

    def test_non_numeric_cell(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,y\nhello,3\n")
        with pytest.raises(MalformedCell):
            load_csv(path, ["y"])

    def test_header_only(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("x1,y\n")
        with pytest.raises(EmptyTable):
            load_csv(path, ["y"])

    def test_round_trip_full_precision(self, tmp_path):
        rng = np.random.default_rng(3)
        X = rng.standard_normal((17, 3)) * np.array([1e-7, 1.0, 1e9])
        y = rng.standard_normal(17) / 3.0
        table = DesignTable(X, {"y": y}, [VariableMeta(f"x{j}", j) for j in range(3)])
        path = tmp_path / "round.csv"
        write_csv(table, path)
        back = load_csv(path, ["y"])
        np.testing.assert_array_equal(back.inputs, table.inputs)
        np.testing.assert_array_equal(back.response("y"), y)


class TestSampleLhs:
    def test_uniform_stratification(self):
        var = [VariableMeta.uniform("u", 0, 0.0, 1.0)]
        values = np.sort(sample_lhs(var, 4, seed=9)[:, 0])
        strata = np.floor(values * 4).astype(int)
        assert sorted(strata) == [0, 1, 2, 3]

    def test_deterministic(self):
        vars_ = [VariableMeta.uniform("a", 0, -1, 1), VariableMeta.normal("b", 1, 0, 2)]
        np.testing.assert_array_equal(sample_lhs(vars_, 50, seed=4),
                                      sample_lhs(vars_, 50, seed=4))

    def test_bounds(self):
        vars_ = [VariableMeta.uniform(f"x{j}", j, -np.pi, np.pi) for j in range(3)]
        X = sample_lhs(vars_, 500, seed=1)
        assert X.min() >= -np.pi and X.max() <= np.pi

    def test_normal_strata_are_quantiles(self):
        var = [VariableMeta.normal("g", 0, 0.0, 1.0)]
        values = sample_lhs(var, 200, seed=2)[:, 0]
        # each stratum holds probability 1/200, so the empirical CDF is flat
        from scipy.stats import norm
        u = np.sort(norm.cdf(values))
        assert np.all(np.abs(u - (np.arange(200) + 0.5) / 200) <= 0.5 / 200)


class TestMakePartition:
    def test_balanced(self):
        part = make_partition(10, 5, seed=0)
        assert sorted(np.bincount(part.assignment)) == [2] * 5

    def test_remainder(self):
        part = make_partition(7, 5, seed=0)
        assert sorted(np.bincount(part.assignment)) == [1, 1, 1, 2, 2]

    @pytest.mark.parametrize("q", [1, 0, 11])
    def test_invalid_q(self, q):
        with pytest.raises(InvalidPartition):
            make_partition(10, q, seed=0)

    def test_function_of_inputs_only(self):
        a = make_partition(23, 4, seed=7)
        b = make_partition(23, 4, seed=7)
        np.testing.assert_array_equal(a.assignment, b.assignment)
        c = make_partition(23, 4, seed=8)
        assert not np.array_equal(a.assignment, c.assignment)


class TestProject:
    def test_identity(self):
        table = small_table()
        same = table.project([0, 1])
        np.testing.assert_array_equal(same.inputs, table.inputs)
        assert same.input_names == table.input_names

    def test_single_column(self):
        table = small_table()
        proj = table.project([1])
        assert proj.m == 1
        np.testing.assert_array_equal(proj.inputs[:, 0], table.inputs[:, 1])
        assert proj.variables[0].name == "x2" and proj.variables[0].index == 0

    def test_out_of_range(self):
        with pytest.raises(IndexOutOfRange):
            small_table().project([5])

    def test_no_aliasing(self):
        table = small_table()
        proj = table.project([0])
        assert not np.shares_memory(proj.inputs, table.inputs)
        assert not table.inputs.flags.writeable
        assert not proj.inputs.flags.writeable


class TestDesignTable:
    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            DesignTable([[np.inf]], {"y": [1.0]}, [VariableMeta("x", 0)])
        with pytest.raises(ValueError):
            DesignTable([[1.0]], {"y": [np.nan]}, [VariableMeta("x", 0)])

    def test_rejects_bad_response_length(self):
        with pytest.raises(ValueError):
            DesignTable([[1.0], [2.0]], {"y": [1.0]}, [VariableMeta("x", 0)])

    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError):
            DesignTable([[1.0, 2.0]], {"y": [1.0]},
                        [VariableMeta("x", 0), VariableMeta("x", 1)])

    def test_unknown_response(self):
        with pytest.raises(NamedColumnAbsent):
            small_table().response("nope")


class TestVariableMeta:
    def test_uniform_requires_order(self):
        with pytest.raises(ValueError):
            VariableMeta.uniform("u", 0, 2.0, 1.0)

    def test_normal_requires_positive_std(self):
        with pytest.raises(ValueError):
            VariableMeta.normal("g", 0, 0.0, 0.0)

    def test_undeclared_cannot_sample(self):
        with pytest.raises(ValueError):
            VariableMeta("x", 0).ppf(0.5)
