"""Command-line interface: gen | match | eval | bench | imgdiff.

Exit codes: 0 on success, 1 on runtime/data errors, 2 on usage errors.  Every
command writes a ``manifest.json`` next to its outputs with the full set of
options needed to regenerate them (timing fields excluded).
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__, bench, fileio
from .classify import (
    METHOD_EIGENVECTOR,
    METHOD_ROW_SUM,
    MatchConfig,
    error_rates,
    match,
)
from .overlap import PreprocessMode, build_overlap
from .parallel import THREADS_ENV_VAR, parallel_match, resolve_workers
from .synth import ScenarioSpec, generate

_PREPROCESS_ALIASES = {
    "none": PreprocessMode.NONE,
    "cn": PreprocessMode.CENTER_NORMALIZE,
}
_METHOD_ALIASES = {"eig": METHOD_EIGENVECTOR, "rowsum": METHOD_ROW_SUM}

DEFAULT_PIXEL_CAP = 20000


class UsageError(Exception):
    """Inconsistent or invalid flags; exits with status 2."""


def _parse_float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad numeric list: {text!r}") from None


def _parse_int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad integer list: {text!r}") from None


def _add_match_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--method", required=True, choices=sorted(_METHOD_ALIASES), help="matcher"
    )
    p.add_argument(
        "--threshold",
        nargs="?",
        const="auto",
        default=None,
        metavar="VALUE",
        help="fixed threshold; bare flag uses the built-in default "
        "(0.5 for eig, d*(r*n+1)/2 for rowsum, which needs --inlier-rate)",
    )
    p.add_argument(
        "--kmeans", action="store_true", help="classify by exact 1-D 2-means"
    )
    p.add_argument(
        "--inlier-rate",
        type=float,
        default=None,
        help="known inlier fraction, used by the default rowsum threshold",
    )
    p.add_argument(
        "--preprocess",
        choices=sorted(_PREPROCESS_ALIASES),
        default="cn",
        help="cn = row-center then column-normalize (default), none = raw",
    )


def _match_config(args) -> MatchConfig:
    method = _METHOD_ALIASES[args.method]
    if args.threshold is not None and args.kmeans:
        raise UsageError("--threshold and --kmeans are mutually exclusive")
    if args.threshold is None and not args.kmeans:
        raise UsageError("choose exactly one of --threshold or --kmeans")
    threshold = None
    if args.threshold is not None and args.threshold != "auto":
        try:
            threshold = float(args.threshold)
        except ValueError:
            raise UsageError(f"bad --threshold value: {args.threshold!r}") from None
    if (
        method == METHOD_ROW_SUM
        and args.threshold == "auto"
        and args.inlier_rate is None
    ):
        raise UsageError("bare --threshold with rowsum needs --inlier-rate")
    try:
        return MatchConfig(
            method=method,
            threshold=threshold,
            use_two_means=args.kmeans,
            inlier_rate=args.inlier_rate,
            preprocess=_PREPROCESS_ALIASES[args.preprocess],
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _base_manifest(command: str, args_dict: dict, outputs: dict) -> dict:
    return {
        "tool": "gramoverlap",
        "version": __version__,
        "command": command,
        "options": args_dict,
        "outputs": outputs,
    }


# --- gen ---


def _cmd_gen(args) -> int:
    try:
        spec = ScenarioSpec(
            d=args.d,
            n=args.n,
            r=args.r,
            kind=args.kind,
            sigma2=args.sigma2,
            seed=args.seed,
        )
        pair = generate(spec)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args)
    fileio.write_matrix_csv(out / "X.csv", pair.x)
    fileio.write_matrix_csv(out / "Y.csv", pair.y)
    fileio.write_labels(out / "labels.csv", pair.inliers)
    fileio.write_manifest(
        out / "manifest.json",
        _base_manifest(
            "gen",
            {
                "d": args.d,
                "n": args.n,
                "r": args.r,
                "kind": args.kind,
                "sigma2": args.sigma2,
                "seed": args.seed,
            },
            {"x": "X.csv", "y": "Y.csv", "labels": "labels.csv"},
        ),
    )
    return 0


# --- match ---


def _diagnostics_payload(cfg: MatchConfig, splits: int, diag=None, report=None) -> dict:
    payload = {
        "method": cfg.method,
        "preprocess": cfg.preprocess.value,
        "splits": splits,
        "seed": cfg.seed,
    }
    if report is None:
        payload.update(diag.to_dict())
    else:
        payload["shards"] = [d.to_dict() for d in report.shard_diagnostics]
        payload["shard_times_ms"] = report.shard_times_ms
        payload["shard_sizes"] = [int(s.size) for s in report.plan.shards]
        payload["warnings"] = report.warnings
    return payload


def _cmd_match(args) -> int:
    cfg = _match_config(args)
    if args.splits < 1:
        raise UsageError("--splits must be at least 1")
    x = fileio.read_matrix_csv(args.x)
    y = fileio.read_matrix_csv(args.y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch: X is {x.shape}, Y is {y.shape}")

    if args.splits == 1:
        t0 = time.perf_counter()
        h = build_overlap(x, y, cfg.preprocess)
        partition, diag = match(h, cfg)
        wall_ms = (time.perf_counter() - t0) * 1e3
        payload = _diagnostics_payload(cfg, 1, diag=diag)
    else:
        workers = resolve_workers(args.threads, args.splits)
        report = parallel_match(x, y, args.splits, cfg, max_workers=workers)
        partition = report.partition
        wall_ms = report.total_time_ms
        payload = _diagnostics_payload(cfg, args.splits, report=report)
    payload["n_estimated_inliers"] = int(partition.inliers.size)
    payload["wall_time_ms"] = wall_ms

    out = _out_dir(args)
    fileio.write_partition_csv(out / "partition.csv", partition)
    fileio.write_manifest(out / "diagnostics.json", payload)
    fileio.write_manifest(
        out / "manifest.json",
        _base_manifest(
            "match",
            {
                "x": str(args.x),
                "y": str(args.y),
                "method": args.method,
                "threshold": args.threshold,
                "kmeans": args.kmeans,
                "inlier_rate": args.inlier_rate,
                "preprocess": args.preprocess,
                "splits": args.splits,
                "seed": args.seed,
                "threads": args.threads,
            },
            {"partition": "partition.csv", "diagnostics": "diagnostics.json"},
        ),
    )
    return 0


# --- eval ---


def _cmd_eval(args) -> int:
    partition = fileio.read_partition_csv(args.partition)
    truth = fileio.read_labels(args.labels)
    report = error_rates(truth, partition)
    print(f"{report.error_g:.6f},{report.error_b:.6f},{report.error_w:.6f}")
    return 0


# --- bench ---


def _cmd_bench(args) -> int:
    preprocess = _PREPROCESS_ALIASES[args.preprocess]
    out = _out_dir(args)
    options = {
        "sweep": args.sweep,
        "d": args.d,
        "n": args.n,
        "trials": args.trials,
        "seed": args.seed,
        "kind": args.kind,
        "preprocess": args.preprocess,
    }
    if args.sweep == "r":
        if args.r_grid is None:
            raise UsageError("--sweep r needs --r-grid")
        grid = _parse_float_list(args.r_grid)
        methods = [bench.parse_method(m) for m in args.methods.split(",")]
        rows = bench.run_rate_sweep(
            d=args.d,
            n=args.n,
            r_values=grid,
            trials=args.trials,
            seed=args.seed,
            methods=methods,
            kind=args.kind,
            sigma2=args.sigma2,
            preprocess=preprocess,
        )
        name = "sweep_r.csv"
        options.update({"r_grid": grid, "methods": args.methods, "sigma2": args.sigma2})
    elif args.sweep == "sigma2":
        if args.sigma2_grid is None or args.r is None:
            raise UsageError("--sweep sigma2 needs --sigma2-grid and --r")
        grid = _parse_float_list(args.sigma2_grid)
        methods = [bench.parse_method(m) for m in args.methods.split(",")]
        rows = bench.run_noise_sweep(
            d=args.d,
            n=args.n,
            r=args.r,
            sigma2_values=grid,
            trials=args.trials,
            seed=args.seed,
            methods=methods,
            kind=args.kind,
            preprocess=preprocess,
        )
        name = "sweep_sigma2.csv"
        options.update({"sigma2_grid": grid, "methods": args.methods, "r": args.r})
    else:
        if args.splits_grid is None or args.r is None:
            raise UsageError("--sweep splits needs --splits-grid and --r")
        grid = _parse_int_list(args.splits_grid)
        rows = bench.run_splits_sweep(
            d=args.d,
            n=args.n,
            r=args.r,
            split_values=grid,
            trials=args.trials,
            seed=args.seed,
            method=bench.parse_method(args.single_method),
            kind=args.kind,
            preprocess=preprocess,
            max_workers=args.threads,
        )
        name = "sweep_splits.csv"
        options.update(
            {"splits_grid": grid, "method": args.single_method, "r": args.r}
        )
    bench.write_sweep_csv(out / name, rows)
    fileio.write_manifest(
        out / "manifest.json", _base_manifest("bench", options, {"sweep": name})
    )
    return 0


# --- imgdiff ---


def _cmd_imgdiff(args) -> int:
    cfg = _match_config(args)
    bytes_a = Path(args.image_a).read_bytes()
    bytes_b = Path(args.image_b).read_bytes()
    img_a = fileio.read_ppm(args.image_a)
    img_b = fileio.read_ppm(args.image_b)
    if img_a.shape != img_b.shape:
        raise ValueError(
            f"image dimensions differ: {img_a.shape[:2]} vs {img_b.shape[:2]}"
        )
    height, width = img_a.shape[:2]
    n = height * width
    out = _out_dir(args)

    luma = fileio.luminance(img_a)
    mask_img = np.repeat(luma[:, :, None], 3, axis=2)

    identical = bytes_a == bytes_b
    highlighted: np.ndarray
    payload: dict
    if identical:
        # Identical inputs mean "no difference"; skip matching entirely
        # instead of letting a constant statistic fall back to all-outliers.
        highlighted = np.empty(0, dtype=np.intp)
        payload = {"identical_inputs": True, "n_pixels": n, "n_classified": 0}
    else:
        if args.sample is not None and args.sample < n:
            if args.sample < 2:
                raise UsageError("--sample must be at least 2")
            rng = np.random.Generator(
                np.random.PCG64(np.random.SeedSequence(args.seed))
            )
            selected = np.sort(rng.choice(n, size=args.sample, replace=False))
        else:
            selected = np.arange(n)
        if selected.size > args.max_pixels:
            raise ValueError(
                f"{selected.size} pixels exceeds the cap of {args.max_pixels}; "
                f"use --sample or raise --max-pixels"
            )
        points_a = fileio.image_to_points(img_a)[:, selected]
        points_b = fileio.image_to_points(img_b)[:, selected]
        t0 = time.perf_counter()
        h = build_overlap(points_a, points_b, cfg.preprocess)
        partition, diag = match(h, cfg)
        wall_ms = (time.perf_counter() - t0) * 1e3
        highlighted = selected[partition.outliers]
        payload = {
            "identical_inputs": False,
            "n_pixels": n,
            "n_classified": int(selected.size),
            "n_highlighted": int(highlighted.size),
            "wall_time_ms": wall_ms,
        }
        payload.update(_diagnostics_payload(cfg, 1, diag=diag))
        payload["n_estimated_inliers"] = int(partition.inliers.size)

    flat = mask_img.reshape(-1, 3)
    flat[highlighted] = (255, 255, 0)
    fileio.write_ppm(out / "mask.ppm", mask_img)
    fileio.write_manifest(out / "diagnostics.json", payload)
    fileio.write_manifest(
        out / "manifest.json",
        _base_manifest(
            "imgdiff",
            {
                "image_a": str(args.image_a),
                "image_b": str(args.image_b),
                "method": args.method,
                "threshold": args.threshold,
                "kmeans": args.kmeans,
                "inlier_rate": args.inlier_rate,
                "preprocess": args.preprocess,
                "sample": args.sample,
                "max_pixels": args.max_pixels,
                "seed": args.seed,
            },
            {"mask": "mask.ppm", "diagnostics": "diagnostics.json"},
        ),
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gramoverlap",
        description="Recover matched (inlier) points of two paired point sets "
        "by comparing their Gram matrices.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic labeled instance")
    p.add_argument("--d", type=int, required=True, help="feature dimension")
    p.add_argument("--n", type=int, required=True, help="number of points")
    p.add_argument("--r", type=float, required=True, help="inlier fraction")
    p.add_argument(
        "--kind",
        choices=["gaussian_outliers", "permuted_inliers"],
        default="gaussian_outliers",
    )
    p.add_argument("--sigma2", type=float, default=0.0, help="noise variance on Y")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("match", help="classify indices of a paired point set")
    p.add_argument("x", metavar="X.csv")
    p.add_argument("y", metavar="Y.csv")
    _add_match_flags(p)
    p.add_argument("--splits", type=int, default=1, help="split-merge shard count")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"shard worker count (default: ${THREADS_ENV_VAR} or cpu count)",
    )
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("eval", help="error rates of a partition vs. truth labels")
    p.add_argument("partition", metavar="partition.csv")
    p.add_argument("labels", metavar="labels.csv")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bench", help="run a parameter sweep and write a CSV")
    p.add_argument("--sweep", choices=["r", "sigma2", "splits"], required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--r", type=float, default=None, help="fixed inlier fraction")
    p.add_argument("--sigma2", type=float, default=0.0, help="fixed noise variance")
    p.add_argument("--r-grid", default=None, help="comma list of inlier fractions")
    p.add_argument("--sigma2-grid", default=None, help="comma list of variances")
    p.add_argument("--splits-grid", default=None, help="comma list of shard counts")
    p.add_argument(
        "--methods",
        default=",".join(bench.DEFAULT_METHODS),
        help="comma list like eig:0.5,eig:kmeans,rowsum:kmeans",
    )
    p.add_argument(
        "--method",
        dest="single_method",
        default="rowsum:kmeans",
        help="method for the splits sweep",
    )
    p.add_argument(
        "--kind",
        choices=["gaussian_outliers", "permuted_inliers"],
        default="permuted_inliers",
    )
    p.add_argument(
        "--preprocess", choices=sorted(_PREPROCESS_ALIASES), default="cn"
    )
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("imgdiff", help="highlight differing pixels of two images")
    p.add_argument("image_a", metavar="A.ppm")
    p.add_argument("image_b", metavar="B.ppm")
    _add_match_flags(p)
    p.add_argument(
        "--sample", type=int, default=None, help="classify only k sampled pixels"
    )
    p.add_argument(
        "--max-pixels",
        type=int,
        default=DEFAULT_PIXEL_CAP,
        help="refuse to classify more pixels than this without sampling",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=_cmd_imgdiff)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
