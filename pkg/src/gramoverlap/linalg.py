"""Dense symmetric-matrix primitives.

Gram and entrywise (Hadamard) products, power iteration for the leading
eigenpair, and a full dense eigendecomposition capped at small orders that
serves as the independent oracle for the iterative path.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import SizeLimitError

# Hard cap for dense_eig / the dense spectral_norm path; keeps accidental
# O(n^3) factorizations out of large runs.
DENSE_EIG_MAX_ORDER = 512

# Entry-sum magnitudes at or below this count as "zero" for the sign rule.
_ZERO_SUM_TOL = 1e-12

POWER_TOL_DEFAULT = 1e-10
POWER_MAX_ITER_DEFAULT = 1000


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and return a 2-D float64 array with finite entries."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} has a zero dimension: shape={arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def check_symmetric(a, name: str = "matrix") -> np.ndarray:
    """Validate a square matrix that is exactly symmetric as stored."""
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape={arr.shape}")
    if not np.array_equal(arr, arr.T):
        raise ValueError(f"{name} is not exactly symmetric")
    return arr


def _mirror_upper(a: np.ndarray) -> np.ndarray:
    # One stored value per unordered pair: keep the upper triangle, mirror it.
    upper = np.triu(a)
    return upper + np.triu(a, 1).T


def gram(x) -> np.ndarray:
    """Pairwise inner products of the columns of ``x`` (an n-by-n matrix).

    The result is exactly symmetric: each unordered pair is stored once and
    mirrored.
    """
    x = as_matrix(x, "x")
    return _mirror_upper(x.T @ x)


def hadamard(a, b) -> np.ndarray:
    """Entrywise product of two symmetric matrices of equal order."""
    a = check_symmetric(a, "a")
    b = check_symmetric(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"order mismatch: {a.shape[0]} vs {b.shape[0]}")
    return a * b


def fix_sign(v: np.ndarray) -> np.ndarray:
    """Resolve the sign ambiguity of an eigenvector deterministically.

    The entry sum is made nonnegative; when it is zero (within 1e-12) the
    entry of largest magnitude is made positive instead.
    """
    s = float(v.sum())
    if s < -_ZERO_SUM_TOL:
        return -v
    if s <= _ZERO_SUM_TOL:
        k = int(np.argmax(np.abs(v)))
        if v[k] < 0:
            return -v
    return v


@dataclass(frozen=True)
class SpectralPair:
    """Leading eigenpair estimate with convergence bookkeeping."""

    value: float
    vector: np.ndarray  # unit norm, sign-fixed
    iterations: int
    residual: float  # ||A v - value * v||
    converged: bool


def power_iteration(
    a,
    tol: float = POWER_TOL_DEFAULT,
    max_iter: int = POWER_MAX_ITER_DEFAULT,
) -> SpectralPair:
    """Leading eigenpair of a symmetric matrix by power iteration.

    Starts from the normalized all-ones vector and stops when
    ``||A v - lambda v|| <= tol * max(1, |lambda|)``.  On non-convergence the
    best iterate seen (smallest residual) is returned with ``converged`` set
    to False and ``iterations = max_iter``.
    """
    a = check_symmetric(a, "a")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    n = a.shape[0]
    v = np.full(n, 1.0 / math.sqrt(n))
    best_residual = math.inf
    best = (0.0, v)
    for k in range(1, max_iter + 1):
        av = a @ v
        value = float(v @ av)
        residual = float(np.linalg.norm(av - value * v))
        if residual < best_residual:
            best_residual = residual
            best = (value, v)
        if residual <= tol * max(1.0, abs(value)):
            return SpectralPair(value, fix_sign(v), k, residual, True)
        norm_av = float(np.linalg.norm(av))
        if norm_av == 0.0:
            # v is in the null space; the residual test above already
            # accepted value = 0, so this is unreachable in practice.
            break
        v = av / norm_av
    value, v = best
    return SpectralPair(value, fix_sign(v), max_iter, best_residual, False)


def dense_eig(a) -> tuple[np.ndarray, np.ndarray]:
    """Full eigendecomposition of a symmetric matrix of order <= 512.

    Returns ``(values, vectors)`` with eigenvalues sorted descending and the
    matching eigenvectors as columns, each sign-fixed via :func:`fix_sign`.
    """
    a = check_symmetric(a, "a")
    n = a.shape[0]
    if n > DENSE_EIG_MAX_ORDER:
        raise SizeLimitError(
            f"dense_eig is capped at order {DENSE_EIG_MAX_ORDER}, got {n}"
        )
    values, vectors = np.linalg.eigh(a)
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()
    for j in range(n):
        vectors[:, j] = fix_sign(vectors[:, j])
    return values, vectors


def spectral_norm(a) -> float:
    """Largest eigenvalue magnitude of a symmetric matrix.

    Uses the dense decomposition up to order 512 and power iteration on both
    ``a`` and ``-a`` beyond that.
    """
    a = check_symmetric(a, "a")
    if a.shape[0] <= DENSE_EIG_MAX_ORDER:
        values, _ = dense_eig(a)
        return float(np.max(np.abs(values)))
    top = power_iteration(a)
    bottom = power_iteration(-a)
    return max(abs(top.value), abs(bottom.value))
