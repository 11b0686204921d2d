"""From paired point sets to the overlap matrix, plus its exact population model.

The overlap matrix of two d-by-n point sets X and Y is the entrywise product
of their Gram matrices.  When a subset of columns of Y is a common rotation of
the matching columns of X, that inlier block carries squared inner products of
X ("agreement"), while entries touching unmatched columns average out to zero.
The population functions give the exact expectation of the overlap matrix, its
leading eigenpair, and its row-sum means under the rotated-inlier Gaussian
model; they are the oracles most tests check against.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import linalg
from .errors import DegenerateColumnError


class PreprocessMode(str, Enum):
    NONE = "none"
    CENTER_NORMALIZE = "center_normalize"


def preprocess(x, mode: PreprocessMode) -> np.ndarray:
    """Optionally row-center then column-normalize a d-by-n matrix.

    ``CENTER_NORMALIZE`` subtracts each row's mean (every feature sums to zero
    across points) and then scales every column to unit Euclidean norm, in that
    order.  A column with zero norm after centering raises
    :class:`DegenerateColumnError` naming the first such column.
    """
    x = linalg.as_matrix(x, "x")
    mode = PreprocessMode(mode)
    if mode is PreprocessMode.NONE:
        return x
    centered = x - x.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=0)
    tol = 1e-12 * max(1.0, float(np.abs(x).max()))
    bad = np.flatnonzero(norms <= tol)
    if bad.size:
        raise DegenerateColumnError(column=int(bad[0]))
    return centered / norms


@dataclass(frozen=True, eq=False)
class OverlapMatrix:
    """Entrywise product of two Gram matrices, with build provenance."""

    h: np.ndarray
    d: int  # feature dimension of the original point sets
    mode: PreprocessMode

    def __post_init__(self):
        linalg.check_symmetric(self.h, "h")
        if self.d < 1:
            raise ValueError("d must be at least 1")

    @property
    def n(self) -> int:
        return self.h.shape[0]


def build_overlap(x, y, mode: PreprocessMode) -> OverlapMatrix:
    """Build the overlap matrix of two equally-shaped d-by-n point sets."""
    x = linalg.as_matrix(x, "x")
    y = linalg.as_matrix(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: x is {x.shape}, y is {y.shape}")
    d, n = x.shape
    if n < 2:
        raise ValueError("need at least two points")
    h = linalg.hadamard(
        linalg.gram(preprocess(x, mode)), linalg.gram(preprocess(y, mode))
    )
    return OverlapMatrix(h=h, d=d, mode=PreprocessMode(mode))


def row_sums(h) -> np.ndarray:
    """Row sums of an overlap matrix (accepts OverlapMatrix or square array)."""
    a = h.h if isinstance(h, OverlapMatrix) else linalg.check_symmetric(h, "h")
    return a.sum(axis=1)


@dataclass(frozen=True, eq=False)
class PopulationModel:
    """Inlier/outlier layout for the rotated-inlier Gaussian model.

    ``inliers`` holds the sorted indices whose points match across the two
    sets; the rest are independent.  The inlier fraction must be strictly
    between 0 and 1.
    """

    d: int
    n: int
    inliers: np.ndarray

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be at least 1")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        g = np.unique(np.asarray(self.inliers, dtype=np.intp))
        if g.size and (g[0] < 0 or g[-1] >= self.n):
            raise ValueError("inlier indices out of range")
        if not 1 <= g.size <= self.n - 1:
            raise ValueError("inlier fraction must be strictly between 0 and 1")
        object.__setattr__(self, "inliers", g)

    @classmethod
    def from_rate(cls, d: int, n: int, r: float) -> "PopulationModel":
        """Model with inliers 0..rn-1; r*n must be integral."""
        k = r * n
        if abs(k - round(k)) > 1e-9:
            raise ValueError(f"r*n must be integral, got r={r}, n={n}")
        return cls(d=d, n=n, inliers=np.arange(int(round(k))))

    @property
    def r(self) -> float:
        return self.inliers.size / self.n

    @property
    def n_inliers(self) -> int:
        return int(self.inliers.size)

    @property
    def outliers(self) -> np.ndarray:
        mask = np.ones(self.n, dtype=bool)
        mask[self.inliers] = False
        return np.flatnonzero(mask)


def population_overlap(m: PopulationModel) -> np.ndarray:
    """Exact expectation of the overlap matrix under the model.

    d^2 on every diagonal entry, plus d on every inlier-by-inlier entry, plus
    an extra d on inlier diagonal entries; all remaining entries are zero.
    """
    d = float(m.d)
    e = d * d * np.eye(m.n)
    g = m.inliers
    e[np.ix_(g, g)] += d
    e[g, g] += d
    return e


def population_spectrum(m: PopulationModel) -> tuple[float, np.ndarray, float]:
    """Leading eigenpair and eigengap of the expected overlap matrix.

    Returns ``(value, vector, gap)``: the top eigenvalue d^2 + d(k+1) for k
    inliers, its unit eigenvector (1/sqrt(k) on inliers, 0 elsewhere), and the
    gap k*d down to the next eigenvalue.
    """
    d = float(m.d)
    k = m.n_inliers
    value = d * d + d * (k + 1)
    vector = np.zeros(m.n)
    vector[m.inliers] = 1.0 / np.sqrt(k)
    gap = d * k
    return value, vector, gap


def population_row_sum_mean(m: PopulationModel, i: int) -> float:
    """Expected row sum of the overlap matrix at index ``i``."""
    if not 0 <= i < m.n:
        raise IndexError(f"index {i} out of range for n={m.n}")
    d = float(m.d)
    if i in m.inliers:
        return d * d + d * (m.n_inliers + 1)
    return d * d
