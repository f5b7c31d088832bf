"""Built-in benchmark responses used by the CLI and the test suite.

Each builder returns a seeded, Latin-hypercube sampled :class:`DesignTable`
with a single response named ``y``.
"""

from __future__ import annotations

import numpy as np

from .dataset import DesignTable, VariableMeta, sample_lhs


def ishigami(X, a=7.0, b=0.1):
    """Three-input nonlinear, nonmonotonic test response on [-pi, pi]^3."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    return np.sin(x1) + a * np.sin(x2) ** 2 + b * x3**4 * np.sin(x1)


def ishigami_analytic_indices(a=7.0, b=0.1):
    """Closed-form first-order and total sensitivity indices.

    The response decomposes exactly into a main effect of each of the first
    two inputs plus one interaction between inputs 1 and 3.
    """
    v1 = 0.5 * (1.0 + b * np.pi**4 / 5.0) ** 2
    v2 = a**2 / 8.0
    v13 = b**2 * np.pi**8 * 8.0 / 225.0
    total_variance = v1 + v2 + v13
    first = np.array([v1, v2, 0.0]) / total_variance
    total = np.array([v1 + v13, v2, v13]) / total_variance
    return first, total


def quadratic_2d(X):
    """Coupled quadratic response of two standard normal inputs."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x1, x2 = X[:, 0], X[:, 1]
    return 2.0 * x1 + 4.0 * x2 + 0.5 * x1**2 + x1 * x2


def _ishigami_table(n, seed):
    variables = [VariableMeta.uniform(f"x{j + 1}", j, -np.pi, np.pi) for j in range(3)]
    inputs = sample_lhs(variables, n, seed)
    return DesignTable(inputs, {"y": ishigami(inputs)}, variables)


def _quad2d_table(n, seed):
    variables = [VariableMeta.normal(f"x{j + 1}", j, 0.0, 1.0) for j in range(2)]
    inputs = sample_lhs(variables, n, seed)
    return DesignTable(inputs, {"y": quadratic_2d(inputs)}, variables)


def _active2of8_table(n, seed):
    # the coupled quadratic of the first two inputs, six inert inputs, and a
    # small noise floor; a stand-in for screening studies on industrial data
    variables = [VariableMeta.normal(f"x{j + 1}", j, 0.0, 1.0) for j in range(8)]
    inputs = sample_lhs(variables, n, seed)
    noise = np.random.default_rng([seed, 1]).standard_normal(n)
    y = quadratic_2d(inputs[:, :2]) + 0.1 * noise
    return DesignTable(inputs, {"y": y}, variables)


BUILTIN_TABLES = {
    "ishigami": _ishigami_table,
    "quad2d": _quad2d_table,
    "active2of8": _active2of8_table,
}


def make_table(name, n, seed):
    """Instantiate a named builtin benchmark with ``n`` LHS samples."""
    try:
        builder = BUILTIN_TABLES[name]
    except KeyError:
        raise ValueError(f"unknown builtin benchmark {name!r}; "
                         f"choose from {sorted(BUILTIN_TABLES)}") from None
    return builder(n, seed)
