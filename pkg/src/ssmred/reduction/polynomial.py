"""Multivariate polynomial maps with multi-index coefficients."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np


class RegressionError(RuntimeError):
    """Least-squares problem is rank deficient or ill-conditioned."""


MAX_CONDITION = 1e10


def multi_indices(dim: int, lo: int, hi: int) -> np.ndarray:
    """All exponent vectors ``k`` with ``lo <= |k| <= hi``, graded and lexicographic."""
    rows = []
    for order in range(lo, hi + 1):
        block = []
        for combo in combinations_with_replacement(range(dim), order):
            k = np.zeros(dim, dtype=int)
            for i in combo:
                k[i] += 1
            block.append(k)
        block.sort(key=lambda k: tuple(-k))
        rows.extend(block)
    return np.array(rows, dtype=int).reshape(-1, dim)


def monomials(z: np.ndarray, exponents: np.ndarray) -> np.ndarray:
    """Feature matrix ``(n_terms, N)`` of ``z`` with shape ``(d, N)``."""
    z = np.atleast_2d(z)
    feats = np.ones((len(exponents), z.shape[1]))
    for i, k in enumerate(exponents):
        for j, power in enumerate(k):
            if power:
                feats[i] *= z[j] ** power
    return feats


@dataclass
class PolynomialMap:
    """``y = sum_k coeffs[:, k] * z**exponents[k]`` from ``R^d_in`` to ``R^d_out``."""

    exponents: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        exps = np.asarray(self.exponents, dtype=int)
        self.exponents = exps.reshape(-1, 1) if exps.ndim == 1 else exps
        self.coeffs = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if self.coeffs.shape[1] != len(self.exponents):
            raise ValueError("one coefficient column per multi-index required")

    @classmethod
    def zeros(cls, d_in: int, d_out: int, lo: int, hi: int) -> "PolynomialMap":
        exps = multi_indices(d_in, lo, hi)
        return cls(exps, np.zeros((d_out, len(exps))))

    @property
    def input_dim(self) -> int:
        return self.exponents.shape[1]

    @property
    def output_dim(self) -> int:
        return self.coeffs.shape[0]

    @property
    def max_order(self) -> int:
        return int(self.exponents.sum(axis=1).max()) if len(self.exponents) else 0

    @property
    def min_order(self) -> int:
        return int(self.exponents.sum(axis=1).min()) if len(self.exponents) else 0

    def __call__(self, z) -> np.ndarray:
        """Evaluate at a point (returns ``(d_out,)``) or at columns of ``(d_in, N)``.

        For ``d_in == 1`` a 1-D array is read as ``N`` scalar points.
        """
        z = np.asarray(z, dtype=float)
        if z.ndim == 0 or (z.ndim == 1 and self.input_dim > 1):
            return self.coeffs @ monomials(z.reshape(-1, 1), self.exponents)[:, 0]
        return self.coeffs @ monomials(z.reshape(self.input_dim, -1), self.exponents)

    def block(self, order: int) -> np.ndarray:
        """Coefficient columns of all terms with total degree ``order``."""
        mask = self.exponents.sum(axis=1) == order
        return self.coeffs[:, mask]

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        """Derivative ``(d_out, d_in)`` at a single point ``z``."""
        z = np.asarray(z, dtype=float).reshape(self.input_dim)
        jac = np.zeros((self.output_dim, self.input_dim))
        for j in range(self.input_dim):
            exps = self.exponents.copy()
            factor = exps[:, j].astype(float)
            exps[:, j] = np.maximum(exps[:, j] - 1, 0)
            jac[:, j] = self.coeffs @ (factor * monomials(z[:, None], exps)[:, 0])
        return jac

    def to_dict(self) -> dict:
        return {",".join(map(str, k)): list(map(float, c)) for k, c in zip(self.exponents, self.coeffs.T)}

    @classmethod
    def from_dict(cls, d_in: int, data: dict) -> "PolynomialMap":
        exps = np.array([[int(v) for v in key.split(",")] for key in data], dtype=int).reshape(-1, d_in)
        coeffs = np.array([data[key] for key in data], dtype=float).T
        return cls(exps, coeffs)


def fit_polynomial(
    z: np.ndarray,
    y: np.ndarray,
    lo: int,
    hi: int,
    weights: np.ndarray | None = None,
) -> tuple[PolynomialMap, float]:
    """Ordinary least squares of ``y (d_out, N)`` on monomials of ``z (d_in, N)``.

    Inputs are rescaled per dimension before building features so the
    condition number reflects the problem rather than the units.  Returns the
    map and the condition number of the scaled feature matrix.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    exps = multi_indices(z.shape[0], lo, hi)
    scale = np.max(np.abs(z), axis=1)
    if np.any(scale == 0) and hi >= 1:
        raise RegressionError("regressor is identically zero")
    scale[scale == 0] = 1.0
    feats = monomials(z / scale[:, None], exps)
    if weights is not None:
        sw = np.sqrt(weights)
        feats_w, y_w = feats * sw, y * sw
    else:
        feats_w, y_w = feats, y
    if feats_w.shape[1] < len(exps):
        raise RegressionError("fewer samples than polynomial terms")
    cond = float(np.linalg.cond(feats_w.T))
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise RegressionError(f"regression matrix condition number {cond:.3g} exceeds {MAX_CONDITION:g}")
    sol, *_ = np.linalg.lstsq(feats_w.T, y_w.T, rcond=None)
    coeffs = sol.T / np.prod(scale[None, :] ** exps, axis=1)[None, :]
    return PolynomialMap(exps, coeffs), cond
