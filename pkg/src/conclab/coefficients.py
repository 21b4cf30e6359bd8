"""Coefficient multivectors a = (a_1, ..., a_n) in (R^d)^n.

Holds the Gram matrix N = sum_k a_k a_k^T with its determinant, the
projection t.a = (<t, a_1>, ..., <t, a_n>), and the Euclidean distance of
a point of R^n to the integer lattice.  These are the raw ingredients of
every arithmetic-structure quantity downstream.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError

# Eigenvalues of the Gram matrix within this relative distance of zero are
# clamped: N is PSD by construction, tiny negatives are rounding noise.
_EIG_CLAMP_REL = 1e-12


class CoefficientMatrix:
    """Immutable n x d array of coefficient rows a_k."""

    def __init__(self, rows):
        arr = np.array(rows, dtype=float, copy=True)
        if arr.ndim == 1:
            arr = arr[:, None]
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise DomainError("coefficients must form a nonempty 2-d array")
        if not np.all(np.isfinite(arr)):
            raise DomainError("coefficient entries must be finite")
        arr.setflags(write=False)
        self._arr = arr

    @property
    def array(self) -> np.ndarray:
        return self._arr

    @property
    def n(self) -> int:
        return self._arr.shape[0]

    @property
    def d(self) -> int:
        return self._arr.shape[1]

    @cached_property
    def row_norms(self) -> np.ndarray:
        norms = np.linalg.norm(self._arr, axis=1)
        norms.setflags(write=False)
        return norms

    def scaled(self, factor: float) -> "CoefficientMatrix":
        return CoefficientMatrix(self._arr * factor)

    def __repr__(self):
        return f"CoefficientMatrix(n={self.n}, d={self.d})"


def ones(n: int) -> CoefficientMatrix:
    """n unit coefficients in dimension 1."""
    if n < 1:
        raise DomainError("n must be at least 1")
    return CoefficientMatrix(np.ones((n, 1)))


def arith(n: int) -> CoefficientMatrix:
    """Arithmetic progression a_k = k in dimension 1."""
    if n < 1:
        raise DomainError("n must be at least 1")
    return CoefficientMatrix(np.arange(1.0, n + 1.0)[:, None])


def random_sphere(n: int, d: int, seed: int) -> CoefficientMatrix:
    """n rows drawn uniformly from the unit sphere in R^d."""
    if n < 1 or d < 1:
        raise DomainError("n and d must be at least 1")
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((n, d))
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return CoefficientMatrix(raw / norms)


@dataclass(frozen=True)
class GramMatrix:
    """d x d Gram matrix N = sum_k a_k a_k^T with spectrum-derived scalars."""

    matrix: np.ndarray
    determinant: float
    lambda_max: float

    def __post_init__(self):
        self.matrix.setflags(write=False)


def gram(a: CoefficientMatrix) -> GramMatrix:
    """Gram matrix of the rows, determinant via symmetric eigendecomposition.

    Eigenvalues within 1e-12 * lambda_max of zero clamp to zero, so
    rank-deficient inputs report determinant exactly 0.
    """
    arr = a.array
    mat = arr.T @ arr
    mat = 0.5 * (mat + mat.T)
    eigs = np.linalg.eigvalsh(mat)
    lam_max = float(max(eigs[-1], 0.0))
    clamped = np.where(np.abs(eigs) <= _EIG_CLAMP_REL * max(lam_max, 1e-300), 0.0, eigs)
    clamped = np.maximum(clamped, 0.0)
    det = float(np.prod(clamped))
    return GramMatrix(mat, det, lam_max)


def project(a: CoefficientMatrix, t) -> np.ndarray:
    """t.a = (<t, a_1>, ..., <t, a_n>)."""
    tv = np.asarray(t, dtype=float)
    if tv.shape != (a.d,):
        raise DomainError(f"direction has shape {tv.shape}, expected ({a.d},)")
    return a.array @ tv


def lattice_dist(v) -> float:
    """Euclidean distance from v to the nearest point of Z^n.

    Half-integer ties round to even; any nearest lattice point gives the
    same distance.
    """
    vv = np.asarray(v, dtype=float)
    frac = vv - np.rint(vv)
    return float(np.sqrt(np.dot(frac, frac)))


def nearest_lattice(v) -> np.ndarray:
    vv = np.asarray(v, dtype=float)
    return np.rint(vv)


def check_identity_4s(a: CoefficientMatrix, t) -> tuple[float, float]:
    """Squared lattice distance of t.a versus sum_k <t, a_k>^2.

    Valid only when max_k |<t, a_k>| <= 1/2, where the nearest integer to
    each coordinate is 0 and the two sides agree exactly.
    """
    proj = project(a, t)
    worst = int(np.argmax(np.abs(proj)))
    if abs(proj[worst]) > 0.5:
        raise DomainError(
            f"|<t, a_k>| = {abs(proj[worst])!r} > 1/2 at k={worst}; identity regime requires <= 1/2"
        )
    frac = proj - np.rint(proj)
    lhs = float(np.dot(frac, frac))
    rhs = float(np.dot(proj, proj))
    return lhs, rhs
