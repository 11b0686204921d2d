"""Sweep harnesses: error-vs-inlier-rate, error-vs-noise, and split timing.

Each grid point runs seeded trials; within a trial the overlap matrix is built
once and every requested method classifies it, so methods are compared on
identical data.  Per-method wall time charges the shared build plus that
method's own classification, i.e. what a solo run would cost.
"""

import csv
import time
from dataclasses import dataclass, replace

import numpy as np

from .classify import (
    METHOD_EIGENVECTOR,
    METHOD_ROW_SUM,
    MatchConfig,
    error_rates,
    match,
)
from .overlap import PreprocessMode, build_overlap
from .parallel import parallel_match
from .synth import ScenarioSpec, derive_seed, generate

SWEEP_COLUMNS = [
    "sweep",
    "value",
    "method",
    "trials",
    "error_g_mean",
    "error_g_std",
    "error_b_mean",
    "error_b_std",
    "error_w_mean",
    "error_w_std",
    "time_ms_mean",
    "time_ms_std",
]

DEFAULT_METHODS = ("eig:0.3", "eig:0.5", "eig:0.7", "eig:kmeans", "rowsum:kmeans")

_METHOD_PREFIXES = {"eig": METHOD_EIGENVECTOR, "rowsum": METHOD_ROW_SUM}


@dataclass(frozen=True)
class MethodSpec:
    """One matcher variant in a sweep, e.g. 'eig:0.5' or 'rowsum:kmeans'.

    The branch token is either 'kmeans', a positive fixed threshold, or 'auto'
    (fixed threshold derived from the true inlier rate of the sweep point).
    """

    label: str
    method: str
    threshold: float | None
    use_two_means: bool
    auto_threshold: bool

    def config(self, preprocess: PreprocessMode, seed: int, r: float) -> MatchConfig:
        return MatchConfig(
            method=self.method,
            threshold=self.threshold,
            use_two_means=self.use_two_means,
            inlier_rate=r if self.auto_threshold else None,
            preprocess=preprocess,
            seed=seed,
        )


def parse_method(text: str) -> MethodSpec:
    parts = text.split(":")
    if len(parts) != 2 or parts[0] not in _METHOD_PREFIXES:
        raise ValueError(
            f"bad method spec {text!r}; expected eig:<t|kmeans> or "
            f"rowsum:<T|kmeans|auto>"
        )
    method = _METHOD_PREFIXES[parts[0]]
    branch = parts[1]
    if branch == "kmeans":
        return MethodSpec(text, method, None, True, False)
    if branch == "auto":
        return MethodSpec(text, method, None, False, True)
    try:
        value = float(branch)
    except ValueError:
        raise ValueError(f"bad threshold in method spec {text!r}") from None
    if not value > 0:
        raise ValueError(f"threshold must be positive in {text!r}")
    return MethodSpec(text, method, value, False, False)


def _summary_row(sweep: str, value, label: str, errs, times_ms) -> dict:
    eg = np.array([e.error_g for e in errs])
    eb = np.array([e.error_b for e in errs])
    ew = np.array([e.error_w for e in errs])
    ts = np.asarray(times_ms)
    return {
        "sweep": sweep,
        "value": value,
        "method": label,
        "trials": len(errs),
        "error_g_mean": eg.mean(),
        "error_g_std": eg.std(),
        "error_b_mean": eb.mean(),
        "error_b_std": eb.std(),
        "error_w_mean": ew.mean(),
        "error_w_std": ew.std(),
        "time_ms_mean": ts.mean(),
        "time_ms_std": ts.std(),
    }


def _run_grid_point(
    sweep: str,
    value,
    spec: ScenarioSpec,
    trials: int,
    methods: list[MethodSpec],
    preprocess: PreprocessMode,
) -> list[dict]:
    errs = {m.label: [] for m in methods}
    times = {m.label: [] for m in methods}
    for t in range(trials):
        trial = replace(spec, seed=derive_seed(spec.seed, t))
        pair = generate(trial)
        t0 = time.perf_counter()
        h = build_overlap(pair.x, pair.y, preprocess)
        build_ms = (time.perf_counter() - t0) * 1e3
        for m in methods:
            cfg = m.config(preprocess, trial.seed, spec.r)
            t1 = time.perf_counter()
            part, _ = match(h, cfg)
            ms = (time.perf_counter() - t1) * 1e3
            errs[m.label].append(error_rates(pair.inliers, part))
            times[m.label].append(build_ms + ms)
    return [
        _summary_row(sweep, value, m.label, errs[m.label], times[m.label])
        for m in methods
    ]


def run_rate_sweep(
    d: int,
    n: int,
    r_values,
    trials: int,
    seed: int,
    methods=DEFAULT_METHODS,
    kind: str = "permuted_inliers",
    sigma2: float = 0.0,
    preprocess: PreprocessMode = PreprocessMode.CENTER_NORMALIZE,
) -> list[dict]:
    """Mean error rates as the inlier fraction varies."""
    specs = [parse_method(m) if isinstance(m, str) else m for m in methods]
    rows = []
    for r in r_values:
        base = ScenarioSpec(d=d, n=n, r=r, kind=kind, sigma2=sigma2, seed=seed)
        rows.extend(_run_grid_point("r", r, base, trials, specs, preprocess))
    return rows


def run_noise_sweep(
    d: int,
    n: int,
    r: float,
    sigma2_values,
    trials: int,
    seed: int,
    methods=DEFAULT_METHODS,
    kind: str = "permuted_inliers",
    preprocess: PreprocessMode = PreprocessMode.CENTER_NORMALIZE,
) -> list[dict]:
    """Mean error rates as the noise variance on Y varies."""
    specs = [parse_method(m) if isinstance(m, str) else m for m in methods]
    rows = []
    for sigma2 in sigma2_values:
        base = ScenarioSpec(d=d, n=n, r=r, kind=kind, sigma2=sigma2, seed=seed)
        rows.extend(_run_grid_point("sigma2", sigma2, base, trials, specs, preprocess))
    return rows


def run_splits_sweep(
    d: int,
    n: int,
    r: float,
    split_values,
    trials: int,
    seed: int,
    method="rowsum:kmeans",
    kind: str = "gaussian_outliers",
    sigma2: float = 0.0,
    preprocess: PreprocessMode = PreprocessMode.NONE,
    max_workers: int | None = None,
) -> list[dict]:
    """Error rates and wall time of split-merge matching as s varies.

    Wall time covers matching only (the split, per-shard overlap build, and
    classification); data generation is excluded.
    """
    spec = parse_method(method) if isinstance(method, str) else method
    rows = []
    for s in split_values:
        errs = []
        times = []
        for t in range(trials):
            trial = ScenarioSpec(
                d=d, n=n, r=r, kind=kind, sigma2=sigma2, seed=derive_seed(seed, t)
            )
            pair = generate(trial)
            cfg = spec.config(preprocess, trial.seed, r)
            report = parallel_match(pair.x, pair.y, s, cfg, max_workers=max_workers)
            errs.append(error_rates(pair.inliers, report.partition))
            times.append(report.total_time_ms)
        rows.append(_summary_row("splits", s, spec.label, errs, times))
    return rows


def write_sweep_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_sweep_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = []
        for raw in reader:
            row = dict(raw)
            for key in SWEEP_COLUMNS[3:]:
                row[key] = float(row[key])
            row["value"] = float(row["value"])
            row["trials"] = int(float(row["trials"]))
            rows.append(row)
        return rows
