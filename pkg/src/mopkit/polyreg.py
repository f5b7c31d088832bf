"""Polynomial basis construction and global least-squares regression.

Bases are linear or quadratic, the quadratic one optionally extended with
pairwise cross terms.  Term ordering is fixed: constant, all linear terms,
all square terms, all cross terms ``x_i x_j`` with ``i < j`` lexicographic.

Fitting standardizes the inputs column-wise before the basis expansion (the
cross and square terms otherwise wreck the conditioning), solves by SVD, and
maps the coefficients back to original coordinates, so the stored vector can
be evaluated directly against raw inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SingularDesign, Underdetermined

# Smallest acceptable singular-value ratio before a design counts as singular.
RANK_TOLERANCE = 1e-10


@dataclass(frozen=True)
class BasisSpec:
    """Descriptor of a polynomial basis family."""

    order: str  # "linear" | "quadratic"
    coupling: bool = False

    def __post_init__(self):
        if self.order not in ("linear", "quadratic"):
            raise ValueError(f"unknown basis order {self.order!r}")
        if self.coupling and self.order != "quadratic":
            raise ValueError("cross terms require a quadratic basis")

    def term_count(self, m):
        """Number of coefficients p for m input variables."""
        p = 1 + m
        if self.order == "quadratic":
            p += m
            if self.coupling:
                p += m * (m - 1) // 2
        return p

    def term_labels(self, names):
        labels = ["1"] + list(names)
        if self.order == "quadratic":
            labels += [f"{x}^2" for x in names]
            if self.coupling:
                labels += [f"{a}*{b}" for k, a in enumerate(names) for b in names[k + 1:]]
        return labels


def basis_matrix(spec, X):
    """Evaluate the basis at every row of ``X``; returns an ``(n, p)`` matrix."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, m = X.shape
    columns = [np.ones(n), X]
    if spec.order == "quadratic":
        columns.append(X**2)
        if spec.coupling:
            for i in range(m):
                for j in range(i + 1, m):
                    columns.append(X[:, i] * X[:, j])
    return np.column_stack(columns)


def basis_vector(spec, x):
    """Basis evaluated at a single point; returns a length-p vector."""
    return basis_matrix(spec, np.asarray(x, dtype=float).reshape(1, -1))[0]


@dataclass(frozen=True)
class PolynomialModel:
    """A fitted polynomial: basis descriptor plus its coefficient vector in
    original (unstandardized) coordinates."""

    basis: BasisSpec
    coefficients: np.ndarray
    variable_indices: tuple

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=float)
        coeffs.setflags(write=False)
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "variable_indices", tuple(self.variable_indices))

    @property
    def m(self):
        return len(self.variable_indices)

    @property
    def term_count(self):
        return self.coefficients.size

    # quality reports consult this to decide whether an adjusted CoD applies
    @property
    def coefficient_count(self):
        return self.coefficients.size

    def predict(self, x):
        """Evaluate at one point (length-m vector -> float) or a batch
        ((k, m) matrix -> length-k vector)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if X.shape[1] != self.m:
            raise DimensionMismatch(self.m, X.shape[1])
        out = basis_matrix(self.basis, X) @ self.coefficients
        return float(out[0]) if single else out

    def to_dict(self):
        return {
            "kind": "polynomial",
            "basis": {"order": self.basis.order, "coupling": self.basis.coupling},
            "coefficients": [float(c) for c in self.coefficients],
            "variable_indices": list(self.variable_indices),
        }

    @classmethod
    def from_dict(cls, payload):
        basis = BasisSpec(payload["basis"]["order"], payload["basis"]["coupling"])
        return cls(basis, np.array(payload["coefficients"], dtype=float),
                   tuple(payload["variable_indices"]))


def fit_polynomial(table, response, spec):
    """Least-squares fit of ``response`` on the table's inputs.

    Raises :class:`Underdetermined` when there are fewer samples than
    coefficients and :class:`SingularDesign` when the design matrix is
    numerically rank deficient.
    """
    X = table.inputs
    y = table.response(response)
    n, m = X.shape
    p = spec.term_count(m)
    if n < p:
        raise Underdetermined(p, n)

    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd = np.where(sd > 0, sd, 1.0)
    P = basis_matrix(spec, (X - mu) / sd)

    beta_std, _, _, singular_values = np.linalg.lstsq(P, y, rcond=None)
    if singular_values[-1] < RANK_TOLERANCE * singular_values[0]:
        raise SingularDesign(
            f"design matrix is rank deficient (singular value ratio "
            f"{singular_values[-1] / singular_values[0]:.2e})")

    coefficients = _destandardize(spec, beta_std, mu, sd)
    return PolynomialModel(spec, coefficients,
                           tuple(v.index for v in table.variables))


def _destandardize(spec, beta, mu, sd):
    """Rewrite coefficients fit on z = (x - mu)/sd as coefficients on x.

    The basis family is closed under affine substitution, so the mapping is
    exact.
    """
    m = mu.size
    quadratic = spec.order == "quadratic"
    const = beta[0]
    lin = np.array(beta[1:1 + m])
    sq = np.array(beta[1 + m:1 + 2 * m]) if quadratic else np.zeros(m)
    cross = np.zeros((m, m))
    if spec.coupling:
        k = 1 + 2 * m
        for i in range(m):
            for j in range(i + 1, m):
                cross[i, j] = cross[j, i] = beta[k]
                k += 1

    out_const = const - np.sum(lin * mu / sd) + np.sum(sq * mu**2 / sd**2)
    out_lin = lin / sd - 2 * sq * mu / sd**2
    out_sq = sq / sd**2
    out_cross = []
    for i in range(m):
        for j in range(i + 1, m):
            c = cross[i, j]
            out_const += c * mu[i] * mu[j] / (sd[i] * sd[j])
            out_lin[i] -= c * mu[j] / (sd[i] * sd[j])
            out_lin[j] -= c * mu[i] / (sd[i] * sd[j])
            out_cross.append(c / (sd[i] * sd[j]))

    parts = [np.array([out_const]), out_lin]
    if quadratic:
        parts.append(out_sq)
        if spec.coupling:
            parts.append(np.array(out_cross))
    return np.concatenate(parts)
