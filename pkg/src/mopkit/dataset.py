"""Sample tables, variable metadata, benchmark sampling and subset bookkeeping.

A :class:`DesignTable` is the package's exchange format: an immutable
``(n, m)`` input matrix plus one or more named response vectors.  All other
modules consume tables and never mutate them; every transformation
(projection, row selection) builds a new table.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri


from .errors import (
    EmptyTable,
    IndexOutOfRange,
    InvalidPartition,
    MalformedCell,
    NamedColumnAbsent,
)


@dataclass(frozen=True)
class VariableMeta:
    """Name, column position and (optionally) the sampling distribution of an
    input variable.

    ``kind`` is only consulted by the built-in samplers and the sensitivity
    estimators; tables loaded from CSV carry ``kind=None``.
    """

    name: str
    index: int
    kind: str | None = None  # "uniform" | "normal" | None
    lower: float | None = None
    upper: float | None = None
    mean: float | None = None
    std_dev: float | None = None

    def __post_init__(self):
        if self.kind == "uniform":
            if self.lower is None or self.upper is None or not self.lower < self.upper:
                raise ValueError(f"uniform variable {self.name!r} requires lower < upper")
        elif self.kind == "normal":
            if self.std_dev is None or not self.std_dev > 0:
                raise ValueError(f"normal variable {self.name!r} requires std_dev > 0")
        elif self.kind is not None:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def uniform(cls, name, index, lower, upper):
        return cls(name, index, "uniform", lower=float(lower), upper=float(upper))

    @classmethod
    def normal(cls, name, index, mean, std_dev):
        return cls(name, index, "normal", mean=float(mean), std_dev=float(std_dev))

    def ppf(self, u):
        """Inverse CDF of the declared distribution, vectorized over ``u``."""
        if self.kind == "uniform":
            return self.lower + np.asarray(u) * (self.upper - self.lower)
        if self.kind == "normal":
            return self.mean + self.std_dev * ndtri(u)
        raise ValueError(f"variable {self.name!r} has no declared distribution")

    def sample(self, rng, size):
        """Plain random draws from the declared distribution."""
        if self.kind == "uniform":
            return rng.uniform(self.lower, self.upper, size)
        if self.kind == "normal":
            return rng.normal(self.mean, self.std_dev, size)
        raise ValueError(f"variable {self.name!r} has no declared distribution")


class DesignTable:
    """Immutable set of support points: inputs, responses, variable metadata."""

    def __init__(self, inputs, responses, variables):
        inputs = np.array(inputs, dtype=float)
        if inputs.ndim != 2:
            raise ValueError("inputs must be a 2-D matrix")
        n, m = inputs.shape
        if n < 1 or m < 1:
            raise EmptyTable("a table needs at least one sample and one input")
        if not np.all(np.isfinite(inputs)):
            raise ValueError("inputs contain non-finite entries")
        if len(variables) != m:
            raise ValueError(f"{m} input columns but {len(variables)} variable entries")
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        for j, v in enumerate(variables):
            if v.index != j:
                raise ValueError(f"variable {v.name!r} has index {v.index}, expected {j}")

        clean = {}
        for name, values in responses.items():
            values = np.array(values, dtype=float)
            if values.shape != (n,):
                raise ValueError(f"response {name!r} has length {values.size}, expected {n}")
            if not np.all(np.isfinite(values)):
                raise ValueError(f"response {name!r} contains non-finite entries")
            if name in names:
                raise ValueError(f"response name {name!r} collides with an input")
            values.setflags(write=False)
            clean[name] = values

        inputs.setflags(write=False)
        self.inputs = inputs
        self.responses = clean
        self.variables = tuple(variables)

    @property
    def n(self):
        return self.inputs.shape[0]

    @property
    def m(self):
        return self.inputs.shape[1]

    @property
    def input_names(self):
        return [v.name for v in self.variables]

    def response(self, name):
        try:
            return self.responses[name]
        except KeyError:
            raise NamedColumnAbsent(name, self.responses.keys()) from None

    def column(self, index):
        if not 0 <= index < self.m:
            raise IndexOutOfRange(index, self.m)
        return self.inputs[:, index]

    def project(self, keep):
        """New table restricted to the input columns in ``keep`` (responses
        unchanged).  Indices must be distinct and valid."""
        keep = list(keep)
        if not keep:
            raise ValueError("keep must name at least one input column")
        if len(set(keep)) != len(keep):
            raise ValueError("keep contains duplicate indices")
        for i in keep:
            if not 0 <= i < self.m:
                raise IndexOutOfRange(i, self.m)
        variables = []
        for new_index, old_index in enumerate(keep):
            old = self.variables[old_index]
            variables.append(VariableMeta(old.name, new_index, old.kind,
                                          old.lower, old.upper, old.mean, old.std_dev))
        return DesignTable(self.inputs[:, keep], dict(self.responses), variables)

    def take_rows(self, rows):
        """New table containing the selected sample rows (mask or index array)."""
        return DesignTable(self.inputs[rows], {k: v[rows] for k, v in self.responses.items()},
                           self.variables)


def load_csv(path, response_names):
    """Read a comma-separated table with a header row.

    Columns named in ``response_names`` become responses; every other column
    becomes an input, in header order.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyTable(f"{path} is empty") from None
        header = [h.strip() for h in header]
        for name in response_names:
            if name not in header:
                raise NamedColumnAbsent(name, header)

        rows = []
        for row_number, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise MalformedCell(row_number, header[min(len(row), len(header)) - 1],
                                    "wrong field count")
            parsed = []
            for name, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise MalformedCell(row_number, name, cell) from None
                if not np.isfinite(value):
                    raise MalformedCell(row_number, name, cell)
                parsed.append(value)
            rows.append(parsed)

    if not rows:
        raise EmptyTable(f"{path} has a header but no data rows")

    data = np.array(rows, dtype=float)
    columns = {name: data[:, j] for j, name in enumerate(header)}
    input_names = [h for h in header if h not in response_names]
    if not input_names:
        raise EmptyTable(f"{path} has no input columns")
    inputs = np.column_stack([columns[name] for name in input_names])
    responses = {name: columns[name] for name in response_names}
    variables = [VariableMeta(name, j) for j, name in enumerate(input_names)]
    return DesignTable(inputs, responses, variables)


def write_csv(table, path):
    """Write a table back to CSV; inputs first, then responses.

    Values are printed with ``repr`` so a reload reproduces them exactly.
    """
    response_names = list(table.responses)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.input_names + response_names)
        for row in range(table.n):
            cells = [repr(v) for v in table.inputs[row]]
            cells += [repr(table.responses[name][row]) for name in response_names]
            writer.writerow(cells)


def sample_lhs(variables, n, seed):
    """Latin hypercube design over the declared variable distributions.

    Every variable's ``n`` values occupy distinct equiprobable strata; the
    draw is deterministic for a fixed seed.  Returns the ``(n, m)`` input
    matrix.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    out = np.empty((n, len(variables)))
    for j, var in enumerate(variables):
        strata = (rng.permutation(n) + rng.uniform(size=n)) / n
        out[:, j] = var.ppf(strata)
    return out


def make_partition(n, q, seed):
    """Map ``n`` samples to ``q`` subsets by a seeded shuffle.

    Subset sizes differ by at most one.
    """
    if not 2 <= q <= n:
        raise InvalidPartition(f"q={q} must satisfy 2 <= q <= n={n}")
    base, extra = divmod(n, q)
    labels = np.repeat(np.arange(q), base)
    labels = np.concatenate([labels, np.arange(extra)])
    rng = np.random.default_rng(seed)
    assignment = labels[rng.permutation(n)]
    return SubsetPartition(q, assignment, seed)


@dataclass(frozen=True)
class SubsetPartition:
    """Assignment of each sample row to one of ``q`` subsets."""

    q: int
    assignment: np.ndarray
    seed: int

    def __post_init__(self):
        assignment = np.asarray(self.assignment)
        if self.q > assignment.size:
            raise InvalidPartition(f"q={self.q} exceeds n={assignment.size}")
        present = np.unique(assignment)
        if present.size != self.q or present[0] != 0 or present[-1] != self.q - 1:
            raise InvalidPartition("every label in [0, q) must appear at least once")
        assignment.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)

    def members(self, label):
        return np.flatnonzero(self.assignment == label)
