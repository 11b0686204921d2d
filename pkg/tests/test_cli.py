"""End-to-end CLI behavior: files, exit codes, flag validation."""

import json

import numpy as np

from gramoverlap import (
    MatchConfig,
    PreprocessMode,
    build_overlap,
    error_rates,
    match,
)
from gramoverlap.cli import main
from gramoverlap.fileio import (
    read_labels,
    read_matrix_csv,
    read_partition_csv,
    read_ppm,
    write_ppm,
)

# 2x2 image with fat margins: pixel 3 (bottom-right) has its channels
# permuted in B; both matchers isolate it (verified by direct arithmetic
# in TestImgdiff.test_permuted_pixel_highlighted)
PIXELS_A = [(111, 241, 158), (245, 68, 165), (100, 222, 130), (206, 108, 141)]
PIXEL_3_PERMUTED = (108, 206, 141)


def run(argv) -> int:
    try:
        return main(argv)
    except SystemExit as exc:
        return int(exc.code or 0)


def write_test_images(tmp_path, identical=False):
    a = np.array(PIXELS_A, dtype=np.uint8).reshape(2, 2, 3)
    b = a.copy()
    if not identical:
        b[1, 1] = PIXEL_3_PERMUTED
    path_a, path_b = tmp_path / "a.ppm", tmp_path / "b.ppm"
    write_ppm(path_a, a)
    write_ppm(path_b, b)
    return path_a, path_b


class TestGen:
    def test_shapes_and_labels(self, tmp_path):
        out = tmp_path / "run"
        code = run(
            "gen --d 3 --n 4 --r 0.5 --kind gaussian_outliers --seed 7 "
            f"--out {out}".split()
        )
        assert code == 0
        assert read_matrix_csv(out / "X.csv").shape == (3, 4)
        assert read_matrix_csv(out / "Y.csv").shape == (3, 4)
        assert read_labels(out / "labels.csv").size == 2
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "gen" and manifest["options"]["seed"] == 7

    def test_regeneration_is_byte_identical(self, tmp_path):
        flags = "gen --d 4 --n 10 --r 0.5 --kind permuted_inliers --seed 3"
        out1, out2 = tmp_path / "one", tmp_path / "two"
        assert run(f"{flags} --out {out1}".split()) == 0
        assert run(f"{flags} --out {out2}".split()) == 0
        for name in ("X.csv", "Y.csv", "labels.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_label_count_matches_rate_grid(self, tmp_path):
        for i, (n, r) in enumerate([(10, 0.1), (10, 0.5), (8, 0.75), (20, 0.9)]):
            out = tmp_path / f"g{i}"
            code = run(f"gen --d 2 --n {n} --r {r} --seed 1 --out {out}".split())
            assert code == 0
            assert read_labels(out / "labels.csv").size == round(n * r)

    def test_invalid_spec_is_usage_error(self, tmp_path):
        code = run(f"gen --d 3 --n 10 --r 0.33 --seed 0 --out {tmp_path/'x'}".split())
        assert code == 2


class TestMatch:
    def make_instance(self, tmp_path, seed=11, n=100, r=0.8):
        out = tmp_path / "data"
        assert (
            run(
                f"gen --d 50 --n {n} --r {r} --kind gaussian_outliers "
                f"--seed {seed} --out {out}".split()
            )
            == 0
        )
        return out

    def test_rowsum_kmeans_recovers_labels(self, tmp_path):
        data = self.make_instance(tmp_path)
        out = tmp_path / "m"
        code = run(
            f"match {data/'X.csv'} {data/'Y.csv'} --method rowsum --kmeans "
            f"--preprocess cn --out {out}".split()
        )
        assert code == 0
        part = read_partition_csv(out / "partition.csv")
        truth = read_labels(data / "labels.csv")
        assert np.array_equal(part.inliers, truth)

    def test_eig_threshold_recovers_labels(self, tmp_path):
        data = self.make_instance(tmp_path)
        out = tmp_path / "m"
        code = run(
            f"match {data/'X.csv'} {data/'Y.csv'} --method eig --threshold 0.5 "
            f"--preprocess cn --out {out}".split()
        )
        assert code == 0
        part = read_partition_csv(out / "partition.csv")
        truth = read_labels(data / "labels.csv")
        assert np.array_equal(part.inliers, truth)

    def test_matches_api_results(self, tmp_path):
        data = self.make_instance(tmp_path, seed=12)
        x = read_matrix_csv(data / "X.csv")
        y = read_matrix_csv(data / "Y.csv")
        for flags, cfg in [
            (
                "--method rowsum --kmeans --preprocess none",
                MatchConfig(method="row_sum", preprocess=PreprocessMode.NONE),
            ),
            (
                "--method eig --threshold 0.7 --preprocess cn",
                MatchConfig(
                    method="eigenvector",
                    threshold=0.7,
                    use_two_means=False,
                    preprocess=PreprocessMode.CENTER_NORMALIZE,
                ),
            ),
        ]:
            out = tmp_path / ("m" + flags.replace(" ", ""))
            code = run(
                f"match {data/'X.csv'} {data/'Y.csv'} {flags} --out {out}".split()
            )
            assert code == 0
            h = build_overlap(x, y, cfg.preprocess)
            expected, _ = match(h, cfg)
            assert read_partition_csv(out / "partition.csv") == expected

    def test_splits_route_matches_single(self, tmp_path):
        data = self.make_instance(tmp_path, seed=13, n=200, r=0.9)
        out1, out2 = tmp_path / "s1", tmp_path / "s2"
        base = f"match {data/'X.csv'} {data/'Y.csv'} --method rowsum --kmeans --seed 5"
        assert run(f"{base} --out {out1}".split()) == 0
        assert run(f"{base} --splits 2 --threads 2 --out {out2}".split()) == 0
        d1 = json.loads((out1 / "diagnostics.json").read_text())
        d2 = json.loads((out2 / "diagnostics.json").read_text())
        assert "shards" not in d1
        assert len(d2["shards"]) == 2 and len(d2["shard_sizes"]) == 2
        # the split route must reproduce the library's own result exactly
        from gramoverlap import parallel_match

        x = read_matrix_csv(data / "X.csv")
        y = read_matrix_csv(data / "Y.csv")
        cfg = MatchConfig(
            method="row_sum", preprocess=PreprocessMode.CENTER_NORMALIZE, seed=5
        )
        expected = parallel_match(x, y, 2, cfg, max_workers=2).partition
        assert read_partition_csv(out2 / "partition.csv") == expected

    def test_threshold_and_kmeans_conflict(self, tmp_path):
        data = self.make_instance(tmp_path, seed=14)
        code = run(
            f"match {data/'X.csv'} {data/'Y.csv'} --method eig --threshold 0.5 "
            f"--kmeans --out {tmp_path/'m'}".split()
        )
        assert code == 2

    def test_neither_branch_is_usage_error(self, tmp_path):
        data = self.make_instance(tmp_path, seed=15)
        code = run(
            f"match {data/'X.csv'} {data/'Y.csv'} --method eig "
            f"--out {tmp_path/'m'}".split()
        )
        assert code == 2

    def test_shape_mismatch_no_partial_outputs(self, tmp_path):
        data = self.make_instance(tmp_path, seed=16)
        other = tmp_path / "other"
        assert run(f"gen --d 50 --n 98 --r 0.5 --seed 2 --out {other}".split()) == 0
        out = tmp_path / "m"
        code = run(
            f"match {data/'X.csv'} {other/'Y.csv'} --method rowsum --kmeans "
            f"--out {out}".split()
        )
        assert code == 1
        assert not (out / "partition.csv").exists()

    def test_bare_threshold_uses_default(self, tmp_path):
        data = self.make_instance(tmp_path, seed=17)
        out1, out2 = tmp_path / "auto", tmp_path / "explicit"
        base = f"match {data/'X.csv'} {data/'Y.csv'} --method eig --preprocess cn"
        assert run(f"{base} --threshold --out {out1}".split()) == 0
        assert run(f"{base} --threshold 0.5 --out {out2}".split()) == 0
        assert (out1 / "partition.csv").read_bytes() == (
            out2 / "partition.csv"
        ).read_bytes()

    def test_bare_rowsum_threshold_needs_rate(self, tmp_path):
        data = self.make_instance(tmp_path, seed=18)
        base = f"match {data/'X.csv'} {data/'Y.csv'} --method rowsum --threshold"
        assert run(f"{base} --out {tmp_path/'m'}".split()) == 2
        code = run(
            f"{base} --inlier-rate 0.8 --preprocess none --out {tmp_path/'m2'}".split()
        )
        assert code == 0


class TestEval:
    def test_perfect_recovery(self, tmp_path, capsys):
        part = tmp_path / "partition.csv"
        labels = tmp_path / "labels.csv"
        part.write_text("0,G\n1,G\n2,B\n3,B\n4,B\n")
        labels.write_text("0\n1\n")
        assert run([ "eval", str(part), str(labels)]) == 0
        assert capsys.readouterr().out.strip() == "0.000000,0.000000,0.000000"

    def test_counting_example(self, tmp_path, capsys):
        part = tmp_path / "partition.csv"
        labels = tmp_path / "labels.csv"
        part.write_text("0,G\n1,G\n2,B\n3,B\n4,B\n")
        labels.write_text("0\n1\n2\n")
        assert run(["eval", str(part), str(labels)]) == 0
        assert capsys.readouterr().out.strip() == "0.333333,0.000000,0.200000"

    def test_matches_api(self, tmp_path, capsys):
        rng = np.random.default_rng(3)
        n = 23
        truth = np.sort(rng.choice(n, size=9, replace=False))
        est = np.sort(rng.choice(n, size=11, replace=False))
        part = tmp_path / "partition.csv"
        labels = tmp_path / "labels.csv"
        mask = np.zeros(n, dtype=bool)
        mask[est] = True
        part.write_text("".join(f"{i},{'G' if mask[i] else 'B'}\n" for i in range(n)))
        labels.write_text("".join(f"{i}\n" for i in truth))
        assert run(["eval", str(part), str(labels)]) == 0
        from gramoverlap import LabelPartition

        rep = error_rates(truth, LabelPartition.from_inlier_mask(mask))
        expected = f"{rep.error_g:.6f},{rep.error_b:.6f},{rep.error_w:.6f}"
        assert capsys.readouterr().out.strip() == expected

    def test_universe_mismatch(self, tmp_path):
        part = tmp_path / "partition.csv"
        labels = tmp_path / "labels.csv"
        part.write_text("0,G\n1,B\n")
        labels.write_text("5\n")
        assert run(["eval", str(part), str(labels)]) == 1


class TestBench:
    def test_rate_sweep_smoke(self, tmp_path):
        out = tmp_path / "bench"
        code = run(
            "bench --sweep r --d 6 --n 40 --trials 3 --seed 1 "
            "--r-grid 0.5,0.75 --methods rowsum:kmeans,eig:0.5 "
            f"--out {out}".split()
        )
        assert code == 0
        text = (out / "sweep_r.csv").read_text().splitlines()
        assert text[0].startswith("sweep,value,method,trials,error_g_mean")
        assert len(text) == 1 + 2 * 2  # header + grid x methods
        assert (out / "manifest.json").exists()

    def test_splits_sweep_smoke(self, tmp_path):
        out = tmp_path / "bench"
        code = run(
            "bench --sweep splits --d 8 --n 64 --r 0.5 --trials 2 --seed 1 "
            f"--splits-grid 1,2 --method rowsum:kmeans --out {out}".split()
        )
        assert code == 0
        assert (out / "sweep_splits.csv").exists()

    def test_missing_grid_is_usage_error(self, tmp_path):
        code = run(f"bench --sweep r --d 6 --n 40 --out {tmp_path/'b'}".split())
        assert code == 2


class TestImgdiff:
    def test_permuted_pixel_highlighted(self, tmp_path):
        path_a, path_b = write_test_images(tmp_path)
        out = tmp_path / "diff"
        code = run(
            f"imgdiff {path_a} {path_b} --method rowsum --kmeans "
            f"--preprocess cn --out {out}".split()
        )
        assert code == 0
        mask = read_ppm(out / "mask.ppm")
        # independent expectation: grayscale of A everywhere, yellow at the
        # permuted pixel (bottom-right)
        a = np.array(PIXELS_A, dtype=np.float64).reshape(2, 2, 3)
        luma = np.rint(
            0.299 * a[..., 0] + 0.587 * a[..., 1] + 0.114 * a[..., 2]
        ).astype(np.uint8)
        expected = np.repeat(luma[:, :, None], 3, axis=2)
        expected[1, 1] = (255, 255, 0)
        assert np.array_equal(mask, expected)

    def test_eigenvector_method_agrees(self, tmp_path):
        path_a, path_b = write_test_images(tmp_path)
        out = tmp_path / "diff"
        code = run(
            f"imgdiff {path_a} {path_b} --method eig --threshold 0.5 "
            f"--preprocess cn --out {out}".split()
        )
        assert code == 0
        mask = read_ppm(out / "mask.ppm")
        assert tuple(mask[1, 1]) == (255, 255, 0)
        assert np.sum(np.all(mask == (255, 255, 0), axis=2)) == 1

    def test_identical_images_no_highlights(self, tmp_path):
        path_a, path_b = write_test_images(tmp_path, identical=True)
        out = tmp_path / "diff"
        code = run(
            f"imgdiff {path_a} {path_b} --method rowsum --kmeans --out {out}".split()
        )
        assert code == 0
        mask = read_ppm(out / "mask.ppm")
        assert not np.any(np.all(mask == (255, 255, 0), axis=2))
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag["identical_inputs"] is True

    def test_dimension_mismatch(self, tmp_path):
        path_a, _ = write_test_images(tmp_path)
        wide = np.zeros((1, 3, 3), dtype=np.uint8)
        path_w = tmp_path / "w.ppm"
        write_ppm(path_w, wide)
        code = run(
            f"imgdiff {path_a} {path_w} --method rowsum --kmeans "
            f"--out {tmp_path/'d'}".split()
        )
        assert code == 1

    def test_pixel_cap(self, tmp_path):
        path_a, path_b = write_test_images(tmp_path)
        code = run(
            f"imgdiff {path_a} {path_b} --method rowsum --kmeans --max-pixels 2 "
            f"--out {tmp_path/'d'}".split()
        )
        assert code == 1
        out = tmp_path / "d2"
        code = run(
            f"imgdiff {path_a} {path_b} --method rowsum --kmeans --max-pixels 2 "
            f"--sample 2 --seed 4 --out {out}".split()
        )
        assert code == 0
        diag = json.loads((out / "diagnostics.json").read_text())
        assert diag["n_classified"] == 2

    def test_malformed_ppm(self, tmp_path):
        bad = tmp_path / "bad.ppm"
        bad.write_bytes(b"P6 2 2 255 123")
        good, _ = write_test_images(tmp_path)
        code = run(
            f"imgdiff {bad} {good} --method rowsum --kmeans "
            f"--out {tmp_path/'d'}".split()
        )
        assert code == 1


class TestParser:
    def test_unknown_command_exits_2(self):
        assert run(["frobnicate"]) == 2

    def test_version_flag(self, capsys):
        assert run(["--version"]) == 0
        assert capsys.readouterr().out.strip()
