"""Split-merge matching: shard the data, match shards independently, merge.

Preprocessing happens once, globally, before the split; each shard then builds
its own (much smaller) overlap matrix.  Shard tasks are pure and may run
concurrently; the merged partition is identical for any execution order or
worker count.  When the row-sum matcher derives its default threshold from an
inlier rate, each shard uses its own size in the formula.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import linalg
from .classify import LabelPartition, MatchConfig, MatchDiagnostics, match
from .overlap import PreprocessMode, build_overlap, preprocess

THREADS_ENV_VAR = "GRAMOVERLAP_THREADS"


@dataclass(frozen=True, eq=False)
class SplitPlan:
    """Random balanced assignment of 0..n-1 to s shards (sizes differ by <= 1)."""

    n: int
    s: int
    seed: int
    shards: tuple

    def membership(self) -> np.ndarray:
        """Shard id of every original index."""
        owner = np.empty(self.n, dtype=np.intp)
        for j, idx in enumerate(self.shards):
            owner[idx] = j
        return owner


def make_split(n: int, s: int, seed: int) -> SplitPlan:
    """Uniformly random balanced split of 0..n-1 into s shards.

    Requires 1 <= s <= n/2 so every shard holds at least two points.
    """
    if not 1 <= s <= n // 2:
        raise ValueError(f"s must satisfy 1 <= s <= n/2, got s={s}, n={n}")
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    perm = rng.permutation(n)
    base, extra = divmod(n, s)
    shards = []
    start = 0
    for j in range(s):
        size = base + (1 if j < extra else 0)
        shards.append(np.sort(perm[start : start + size]))
        start += size
    return SplitPlan(n=n, s=s, seed=seed, shards=tuple(shards))


@dataclass
class ParallelReport:
    """Merged partition with per-shard timing and diagnostics."""

    partition: LabelPartition
    plan: SplitPlan
    shard_times_ms: list[float]
    total_time_ms: float
    shard_diagnostics: list[MatchDiagnostics]

    @property
    def warnings(self) -> list[str]:
        out = []
        for j, diag in enumerate(self.shard_diagnostics):
            out.extend(f"shard {j}: {w}" for w in diag.warnings)
        return out


def resolve_workers(requested: int | None, s: int) -> int:
    """Worker count: explicit request, else the env var, else one per core."""
    if requested is None:
        env = os.environ.get(THREADS_ENV_VAR)
        if env is not None:
            requested = int(env)
    if requested is None:
        requested = os.cpu_count() or 1
    if requested < 1:
        raise ValueError("worker count must be at least 1")
    return min(requested, s)


def parallel_match(
    x, y, s: int, cfg: MatchConfig, max_workers: int | None = None
) -> ParallelReport:
    """Match a paired point set by splitting it into s shards.

    Shard results are merged by original index, so the outcome does not depend
    on scheduling.  Degenerate-clustering fallbacks inside a shard surface as
    warnings, not errors.
    """
    x = linalg.as_matrix(x, "x")
    y = linalg.as_matrix(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: x is {x.shape}, y is {y.shape}")
    n = x.shape[1]

    t_start = time.perf_counter()
    xp = preprocess(x, cfg.preprocess)
    yp = preprocess(y, cfg.preprocess)
    plan = make_split(n, s, cfg.seed)

    def run_shard(j: int):
        idx = plan.shards[j]
        t0 = time.perf_counter()
        h = build_overlap(xp[:, idx], yp[:, idx], PreprocessMode.NONE)
        part, diag = match(h, cfg)
        return part, diag, (time.perf_counter() - t0) * 1e3

    workers = resolve_workers(max_workers, s)
    if workers == 1:
        results = [run_shard(j) for j in range(s)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_shard, range(s)))

    inlier_mask = np.zeros(n, dtype=bool)
    for j, (part, _, _) in enumerate(results):
        inlier_mask[plan.shards[j][part.inliers]] = True
    total_ms = (time.perf_counter() - t_start) * 1e3
    return ParallelReport(
        partition=LabelPartition.from_inlier_mask(inlier_mask),
        plan=plan,
        shard_times_ms=[ms for _, _, ms in results],
        total_time_ms=total_ms,
        shard_diagnostics=[diag for _, diag, _ in results],
    )
