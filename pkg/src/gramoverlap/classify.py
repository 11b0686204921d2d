"""Turn an overlap matrix into an inlier/outlier partition.

Two matchers: one thresholds (or 2-means clusters) the coordinates of the
leading eigenvector of the overlap matrix, the other does the same with the
shifted row sums.  Both share an exact 1-D 2-means solver, and the error
metrics compare a partition against ground truth.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DegenerateValuesError
from .overlap import OverlapMatrix, PreprocessMode, row_sums

METHOD_EIGENVECTOR = "eigenvector"
METHOD_ROW_SUM = "row_sum"
_METHODS = (METHOD_EIGENVECTOR, METHOD_ROW_SUM)

# Fixed-threshold defaults when no explicit value is supplied: t for the
# eigenvector rule, and T = d*(r*n+1)/2 for the row-sum rule (needs r).
DEFAULT_EIG_THRESHOLD = 0.5


@dataclass(frozen=True, eq=False)
class LabelPartition:
    """Disjoint cover of 0..n-1 into estimated inliers and outliers."""

    n: int
    inliers: np.ndarray
    outliers: np.ndarray

    def __post_init__(self):
        g = np.unique(np.asarray(self.inliers, dtype=np.intp))
        b = np.unique(np.asarray(self.outliers, dtype=np.intp))
        if g.size + b.size != self.n:
            raise ValueError("partition does not cover 0..n-1 exactly once")
        merged = np.concatenate([g, b])
        merged.sort()
        if not np.array_equal(merged, np.arange(self.n)):
            raise ValueError("partition is not a disjoint cover of 0..n-1")
        object.__setattr__(self, "inliers", g)
        object.__setattr__(self, "outliers", b)

    @classmethod
    def from_inlier_mask(cls, mask) -> "LabelPartition":
        mask = np.asarray(mask, dtype=bool)
        return cls(
            n=mask.size,
            inliers=np.flatnonzero(mask),
            outliers=np.flatnonzero(~mask),
        )

    @classmethod
    def from_inliers(cls, n: int, inliers) -> "LabelPartition":
        mask = np.zeros(n, dtype=bool)
        mask[np.asarray(inliers, dtype=np.intp)] = True
        return cls.from_inlier_mask(mask)

    def inlier_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[self.inliers] = True
        return mask

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabelPartition):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.inliers, other.inliers)


@dataclass(frozen=True)
class MatchConfig:
    """Matcher selection and its branch parameters.

    ``threshold`` and ``use_two_means`` are mutually exclusive; with neither a
    fixed default threshold is used (t = 0.5 for the eigenvector rule, and the
    row-sum rule derives T = d*(r*n+1)/2 from ``inlier_rate``).
    """

    method: str = METHOD_ROW_SUM
    threshold: float | None = None
    use_two_means: bool = True
    inlier_rate: float | None = None
    preprocess: PreprocessMode = PreprocessMode.CENTER_NORMALIZE
    seed: int = 0

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if self.threshold is not None:
            if self.use_two_means:
                raise ValueError("threshold and use_two_means are mutually exclusive")
            if not self.threshold > 0:
                raise ValueError("threshold must be positive")
        if self.inlier_rate is not None and not 0 < self.inlier_rate < 1:
            raise ValueError("inlier_rate must be in (0, 1)")
        object.__setattr__(self, "preprocess", PreprocessMode(self.preprocess))


@dataclass
class MatchDiagnostics:
    """Side-channel facts about one matcher run."""

    method: str
    branch: str  # "threshold" | "two_means"
    n: int
    stat_min: float
    stat_max: float
    threshold: float | None = None  # the cut actually compared against
    centroids: tuple[float, float] | None = None
    centroid_gap: float | None = None
    degenerate: bool = False  # constant statistic; fell back to all-outliers
    leading_eigenvalue: float | None = None
    residual: float | None = None
    iterations: int | None = None
    converged: bool | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        if self.centroids is not None:
            out["centroids"] = list(self.centroids)
        return out


def two_means_1d(values) -> tuple[LabelPartition, tuple[float, float]]:
    """Globally optimal 2-cluster SSE partition of scalars.

    Sorts the values and scans every contiguous split, so the result is the
    exact 2-means optimum (the optimal bipartition of scalars is always a
    sorted split).  The upper cluster becomes the inliers.  SSE ties break
    toward the larger inlier cluster.  Constant input raises
    :class:`DegenerateValuesError`.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("values must be 1-D")
    n = v.size
    if n < 2:
        raise ValueError("need at least two values")
    if not np.all(np.isfinite(v)):
        raise ValueError("values contain non-finite entries")
    spread_tol = 1e-12 * max(1.0, float(np.abs(v).max()))
    if float(v.max() - v.min()) <= spread_tol:
        raise DegenerateValuesError("all values equal; no 2-cluster split exists")

    order = np.argsort(v, kind="stable")
    s = v[order]
    ps = np.concatenate([[0.0], np.cumsum(s)])
    pq = np.concatenate([[0.0], np.cumsum(s * s)])

    def seg_sse(a: int, b: int) -> float:
        total = ps[b] - ps[a]
        quad = pq[b] - pq[a]
        return quad - total * total / (b - a)

    costs = np.array([seg_sse(0, k) + seg_sse(k, n) for k in range(1, n)])
    # argmin takes the first minimum = smallest lower cluster = largest upper
    # cluster, which is the required tie-break.
    k = int(np.argmin(costs)) + 1
    low, high = float(s[:k].mean()), float(s[k:].mean())
    partition = LabelPartition.from_inliers(n, order[k:])
    return partition, (low, high)


def _classify_stat(
    stat: np.ndarray,
    cut: float | None,
    use_two_means: bool,
    diag: MatchDiagnostics,
) -> LabelPartition:
    if use_two_means:
        diag.branch = "two_means"
        try:
            partition, centroids = two_means_1d(stat)
        except DegenerateValuesError:
            diag.degenerate = True
            diag.warnings.append(
                "statistic is constant; no cluster split exists; labeling all "
                "points as outliers"
            )
            return LabelPartition.from_inlier_mask(np.zeros(stat.size, dtype=bool))
        diag.centroids = centroids
        diag.centroid_gap = centroids[1] - centroids[0]
        return partition
    diag.branch = "threshold"
    diag.threshold = cut
    return LabelPartition.from_inlier_mask(stat >= cut)


def eigenvector_match(
    h: OverlapMatrix, cfg: MatchConfig
) -> tuple[LabelPartition, MatchDiagnostics]:
    """Classify indices by the leading eigenvector of the overlap matrix.

    The threshold branch keeps index i as an inlier when the (sign-fixed)
    eigenvector coordinate is >= t / sqrt(n); the 2-means branch clusters the
    coordinates and keeps the upper cluster.
    """
    if cfg.method != METHOD_EIGENVECTOR:
        raise ValueError(f"config method is {cfg.method!r}, not eigenvector")
    pair = linalg.power_iteration(h.h)
    v = pair.vector
    diag = MatchDiagnostics(
        method=METHOD_EIGENVECTOR,
        branch="",
        n=h.n,
        stat_min=float(v.min()),
        stat_max=float(v.max()),
        leading_eigenvalue=pair.value,
        residual=pair.residual,
        iterations=pair.iterations,
        converged=pair.converged,
    )
    if not pair.converged:
        diag.warnings.append(
            f"power iteration did not reach tolerance after {pair.iterations} "
            f"iterations (residual {pair.residual:.3e})"
        )
    cut = None
    if not cfg.use_two_means:
        t = DEFAULT_EIG_THRESHOLD if cfg.threshold is None else cfg.threshold
        cut = t / math.sqrt(h.n)
    partition = _classify_stat(v, cut, cfg.use_two_means, diag)
    return partition, diag


def row_sum_match(
    h: OverlapMatrix, cfg: MatchConfig
) -> tuple[LabelPartition, MatchDiagnostics]:
    """Classify indices by the shifted row sums of the overlap matrix.

    The statistic is S_i - d^2, which (for k inliers, no preprocessing) has
    mean d*(k+1) on inliers and 0 on outliers.
    The threshold branch keeps i when S_i - d^2 >= T; the 2-means branch
    clusters the shifted sums.  Under column normalization the shift is still
    applied as a constant (the 2-means partition is shift-invariant; a fixed T
    must be calibrated on the normalized scale).
    """
    if cfg.method != METHOD_ROW_SUM:
        raise ValueError(f"config method is {cfg.method!r}, not row_sum")
    stat = row_sums(h) - float(h.d) ** 2
    diag = MatchDiagnostics(
        method=METHOD_ROW_SUM,
        branch="",
        n=h.n,
        stat_min=float(stat.min()),
        stat_max=float(stat.max()),
    )
    cut = None
    if not cfg.use_two_means:
        if cfg.threshold is not None:
            cut = cfg.threshold
        else:
            if cfg.inlier_rate is None:
                raise ValueError(
                    "default row-sum threshold requires inlier_rate to be set"
                )
            cut = h.d * (cfg.inlier_rate * h.n + 1) / 2.0
    partition = _classify_stat(stat, cut, cfg.use_two_means, diag)
    return partition, diag


def match(h: OverlapMatrix, cfg: MatchConfig) -> tuple[LabelPartition, MatchDiagnostics]:
    """Dispatch to the matcher selected by ``cfg.method``."""
    if cfg.method == METHOD_EIGENVECTOR:
        return eigenvector_match(h, cfg)
    return row_sum_match(h, cfg)


@dataclass(frozen=True)
class ThresholdInterval:
    """Admissible fixed-threshold interval for exact row-sum recovery."""

    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return self.lo >= self.hi


def threshold_interval(
    d: int, n: int, r: float, c1: float, c2: float
) -> ThresholdInterval:
    """Evaluate the exact-recovery interval for the row-sum threshold.

    ``lo = c2 * d * sqrt(log n) * (sqrt(d) + sqrt(n))`` bounds the outlier
    row-sum fluctuations; ``hi = d*(r*n+1) - c1 * sqrt(d log n) * (d +
    sqrt(d*n) + r*n)`` is the inlier mean minus its fluctuation bound.  The
    pair is returned even when empty.
    """
    if d < 1 or n < 1:
        raise ValueError("d and n must be positive")
    if not 0 < r < 1:
        raise ValueError("r must be in (0, 1)")
    if c1 < 0 or c2 < 0:
        raise ValueError("constants must be nonnegative")
    logn = math.log(n)
    lo = c2 * d * math.sqrt(logn) * (math.sqrt(d) + math.sqrt(n))
    hi = d * (r * n + 1) - c1 * math.sqrt(d * logn) * (
        d + math.sqrt(d * n) + r * n
    )
    return ThresholdInterval(lo=lo, hi=hi)


@dataclass(frozen=True)
class ErrorReport:
    """Misclassification counts and rates against ground truth."""

    n: int
    n_inliers: int
    n_outliers: int
    missed_inliers: int  # true inliers labeled outlier
    missed_outliers: int  # true outliers labeled inlier

    @property
    def error_g(self) -> float:
        return self.missed_inliers / self.n_inliers

    @property
    def error_b(self) -> float:
        return self.missed_outliers / self.n_outliers

    @property
    def error_w(self) -> float:
        return (self.missed_inliers + self.missed_outliers) / self.n


def error_rates(truth_inliers, partition: LabelPartition) -> ErrorReport:
    """Error rates of a partition against the true inlier set.

    Both the true inlier set and its complement must be nonempty.
    """
    g = np.unique(np.asarray(truth_inliers, dtype=np.intp))
    n = partition.n
    if g.size and (g[0] < 0 or g[-1] >= n):
        raise ValueError("truth indices out of range")
    if not 1 <= g.size <= n - 1:
        raise ValueError("true inlier set and its complement must be nonempty")
    truth_mask = np.zeros(n, dtype=bool)
    truth_mask[g] = True
    est_mask = partition.inlier_mask()
    missed_inliers = int(np.count_nonzero(truth_mask & ~est_mask))
    missed_outliers = int(np.count_nonzero(~truth_mask & est_mask))
    return ErrorReport(
        n=n,
        n_inliers=int(g.size),
        n_outliers=int(n - g.size),
        missed_inliers=missed_inliers,
        missed_outliers=missed_outliers,
    )
