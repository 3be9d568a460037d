"""
End-to-end tests of the command line.
"""
import json

import numpy as np
import pandas as pd
import pytest

from app.main import run
from app.services.dlearner import d_learner
from app.services.matrix_core import truncated_svd
from app.storage import read_matrix, write_matrix
from tests.constants import Defaults


class TestUsage:
    """Invocation errors"""

    def test_help(self, capsys):
        assert run(["--help"]) == 0
        assert "cv-fit" in capsys.readouterr().out

    def test_unknown_command(self, cli):
        code, out, err = cli("transmogrify")
        assert code == 2
        assert out is None
        assert err["success"] is False
        assert err["error"] == "UsageError"

    def test_missing_penalty(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        code, _, err = cli("fit", "--y0", y0, "--y1", y1, "--lambda2", 1, "--step", 0.01, "--rank", 3, "--out-dir", tmp_path / "out")
        assert code == 2
        assert "lambda1" in err["message"]

    def test_bad_step(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        code, _, _ = cli("fit", "--y0", y0, "--y1", y1, "--lambda1", 1, "--lambda2", 1, "--step", "huge", "--out-dir", tmp_path)
        assert code == 2

    @pytest.mark.parametrize(
        "command, extra",
        [
            ("fit", ["--lambda1", 1, "--lambda2", 1, "--step", 0.01, "--max-iter", 0]),
            ("cv-fit", ["--step", 0.01, "--tol", 0]),
            ("cv-fit", ["--step", 0.01, "--folds", 1]),
            ("ext-fit", ["--y0-ext", "absent_ext.csv", "--step", 0.01, "--max-iter", 0]),
            ("evaluate", ["--lambda1", 1, "--lambda2", 1, "--step", 0.01, "--divergence-factor", 0]),
            ("dlearner", ["--completion-max-iter", 0]),
        ],
    )
    def test_settings_checked_before_reading_inputs(self, cli, tmp_path, command, extra):
        """Invalid settings are a usage error even when the input files do not exist"""
        code, out, err = cli(
            command, "--y0", tmp_path / "absent0.csv", "--y1", tmp_path / "absent1.csv", *extra,
            "--out-dir", tmp_path / "out",
        )
        assert code == 2
        assert out is None
        assert err["error"] == "UsageError"
        assert not (tmp_path / "out").exists()


class TestDataErrors:
    """Problems with the input files"""

    def test_ragged_input(self, cli, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("1,2\n3\n")
        code, _, err = cli("rank", "--input", path)
        assert code == 3
        assert err["error"] == "StorageError"

    def test_missing_file(self, cli, tmp_path):
        code, _, _ = cli("rank", "--input", tmp_path / "absent.csv")
        assert code == 3

    def test_rank_above_limit(self, cli, matrix_files, tmp_path):
        _, y1 = matrix_files
        code, _, err = cli("rank", "--input", y1, "--upper-bound", 8)
        assert code == 3
        assert err["error"] == "DataError"


class TestRank:
    def test_prints_rank(self, cli, matrix_files):
        _, y1 = matrix_files
        code, out, _ = cli("rank", "--input", y1, "--upper-bound", 5, "--strategy", "gap")
        assert code == 0
        assert out["success"] is True
        assert out["data"]["rank"] == 3
        assert out["data"]["upper_bound"] == 5

    def test_screenot_with_outputs(self, cli, matrix_files, tmp_path):
        _, y1 = matrix_files
        out_dir = tmp_path / "rank"
        code, out, _ = cli("rank", "--input", y1, "--upper-bound", 5, "--out-dir", out_dir)
        assert code == 0
        assert out["data"]["threshold"] > 0
        scree = pd.read_csv(out_dir / "scree.csv")
        assert len(scree) == 8
        assert scree["retained"].sum() == out["data"]["rank"]
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["command"] == "rank"
        assert manifest["parameters"]["rank"]["upper_bound"] == 5


class TestFit:
    def test_outputs(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        out_dir = tmp_path / "fit"
        code, out, _ = cli(
            "fit", "--y0", y0, "--y1", y1,
            "--lambda1", 215.4, "--lambda2", 1, "--step", 0.04, "--max-iter", 100,
            "--rank", 3, "--out-dir", out_dir,
        )
        assert code == 0
        assert out["data"]["rank"] == 3
        theta = read_matrix(out_dir / "theta.csv")
        assert theta.shape == (30, 8)
        trajectory = pd.read_csv(out_dir / "trajectory.csv")
        assert len(trajectory) == out["data"]["iterations"] + 1
        assert out["data"]["best_objective"] == pytest.approx(trajectory["objective"].min())
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["parameters"]["fit"]["lambda1_row"] == 215.4
        assert manifest["parameters"]["fit"]["max_iter"] == 100
        assert sorted(manifest["outputs"]) == ["U.csv", "V.csv", "theta.csv", "trajectory.csv"]

    def test_step_preset_and_separate_penalties(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        code, _, _ = cli(
            "fit", "--y0", y0, "--y1", y1,
            "--lambda1-row", 1, "--lambda1-col", 100, "--lambda2", 1, "--step", "moderate",
            "--rank", 3, "--out-dir", tmp_path,
        )
        assert code == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert manifest["parameters"]["fit"]["step_size"] == Defaults.STEP_PRESETS["moderate"]
        assert manifest["parameters"]["fit"]["lambda1_col"] == 100

    def test_missing_entries_and_impute_zero(self, cli, small_pair, matrix_files, tmp_path):
        _, Y0, _ = small_pair
        _, y1 = matrix_files
        holes = Y0.copy()
        holes[0, 0] = np.nan
        write_matrix(holes, tmp_path / "holes.csv")
        for flag in ([], ["--impute-zero"]):
            code, _, _ = cli(
                "fit", "--y0", tmp_path / "holes.csv", "--y1", y1, "--lambda1", 1, "--lambda2", 1,
                "--step", 0.01, "--rank", 3, "--out-dir", tmp_path / "o", *flag,
            )
            assert code == 0
        manifest = json.loads((tmp_path / "o" / "manifest.json").read_text())
        assert manifest["parameters"]["impute_zero"] is True


class TestSelection:
    def test_cv_fit(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        out_dir = tmp_path / "cv"
        code, out, _ = cli(
            "cv-fit", "--y0", y0, "--y1", y1, "--rank", 3, "--step", 0.035, "--max-iter", 10,
            "--grid-size", 2, "--lambda1-range", 1, 100, "--lambda2-range", 0.1, 1,
            "--folds", 2, "--seed", 3, "--threads", 1, "--out-dir", out_dir,
        )
        assert code == 0
        table = pd.read_csv(out_dir / "selection.csv")
        assert len(table) == 4
        assert list(table.columns[3:5]) == ["mse_fold_1", "mse_fold_2"]
        winner = table.loc[table["mse_mean"].idxmin()]
        assert bool(winner["selected"])
        assert out["data"]["best_lambdas"] == pytest.approx(
            [winner["lambda1_row"], winner["lambda1_col"], winner["lambda2"]]
        )

    def test_cv_fit_thread_count(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        args = [
            "cv-fit", "--y0", y0, "--y1", y1, "--rank", 3, "--step", 0.035, "--max-iter", 5,
            "--grid-size", 2, "--folds", 2,
        ]
        cli(*args, "--threads", 1, "--out-dir", tmp_path / "one")
        cli(*args, "--threads", 2, "--out-dir", tmp_path / "two")
        first = pd.read_csv(tmp_path / "one" / "selection.csv")
        second = pd.read_csv(tmp_path / "two" / "selection.csv")
        pd.testing.assert_frame_equal(first, second)

    def test_ext_fit(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        out_dir = tmp_path / "ext"
        code, out, _ = cli(
            "ext-fit", "--y0", y0, "--y1", y1, "--y0-ext", y0, "--rank", 3, "--step", 0.035,
            "--max-iter", 5, "--grid-size", 2, "--out-dir", out_dir,
        )
        assert code == 0
        assert out["data"]["method"] == "external"
        assert list(pd.read_csv(out_dir / "selection.csv").columns).count("mse_fold_1") == 1

    def test_bad_range(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        code, _, _ = cli(
            "cv-fit", "--y0", y0, "--y1", y1, "--step", 0.035, "--lambda1-range", 10, 1, "--out-dir", tmp_path,
        )
        assert code == 2


class TestDLearnerCommand:
    def test_projection(self, cli, small_pair, matrix_files, tmp_path):
        _, Y0, Y1 = small_pair
        y0, y1 = matrix_files
        code, out, _ = cli("dlearner", "--y0", y0, "--y1", y1, "--rank", 3, "--out-dir", tmp_path / "d")
        assert code == 0
        assert out["data"]["completed"] is False
        theta = read_matrix(tmp_path / "d" / "theta.csv").values
        expected = d_learner(read_matrix(y0).values, truncated_svd(read_matrix(y1), 3).bases())
        np.testing.assert_allclose(theta, expected, rtol=1e-12, atol=1e-12)

    def test_selected_rank(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        code, out, _ = cli("dlearner", "--y0", y0, "--y1", y1, "--strategy", "gap", "--upper-bound", 5, "--out-dir", tmp_path)
        assert code == 0
        assert out["data"]["rank"] == 3


class TestSimulate:
    def test_reports_identical_on_rerun(self, cli, tmp_path):
        args = ["simulate", "--preset", "desk-high", "--reps", 2, "--seed", 7, "--methods", "TargetSvd", "DLearner", "--threads", 1]
        code, out, _ = cli(*args, "--out-dir", tmp_path / "a")
        assert code == 0
        cli(*args, "--out-dir", tmp_path / "b")
        assert (tmp_path / "a" / "report.json").read_bytes() == (tmp_path / "b" / "report.json").read_bytes()
        summary = pd.read_csv(tmp_path / "a" / "summary.csv")
        assert summary["method"].tolist() == ["TargetSvd", "DLearner"]
        assert set(out["data"]["summaries"]) == {"TargetSvd", "DLearner"}

    def test_sigma1_ratio(self, cli, tmp_path):
        code, _, _ = cli(
            "simulate", "--preset", "desk-low", "--reps", 1, "--methods", "TargetSvd",
            "--sigma1-ratio", 5, "--out-dir", tmp_path,
        )
        assert code == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["scenario"]["sigma1_sq"] == pytest.approx(0.02)
        assert report["schema_version"]

    def test_invalid_rho(self, cli, tmp_path):
        code, _, _ = cli("simulate", "--preset", "desk-low", "--rho", 1.2, "--out-dir", tmp_path)
        assert code == 2


class TestAnalyze:
    def test_tables(self, cli, small_pair, tmp_path):
        theta0, Y0, _ = small_pair
        write_matrix(theta0, tmp_path / "theta.csv")
        write_matrix(Y0, tmp_path / "ref.csv")
        (tmp_path / "cols.txt").write_text("\n".join(f"phenotype {i}" for i in range(8)) + "\n")
        out_dir = tmp_path / "an"
        code, out, _ = cli(
            "analyze", "--input", tmp_path / "theta.csv", "--rank", 3, "--scree", 4, "--varimax",
            "--top", 2, "--col-labels", tmp_path / "cols.txt", "--reference", tmp_path / "ref.csv",
            "--subset-size", 10, "--out-dir", out_dir,
        )
        assert code == 0
        cols = pd.read_csv(out_dir / "col_scores.csv")
        np.testing.assert_allclose(cols[["factor_1", "factor_2", "factor_3"]].sum(axis=0), 1.0, atol=1e-10)
        assert cols["column"].tolist()[0] == "phenotype 0"
        assert len(pd.read_csv(out_dir / "row_scores.csv")) == 30
        assert len(pd.read_csv(out_dir / "col_top.csv")) == 6
        assert len(pd.read_csv(out_dir / "scree.csv")) == 4
        assert len(pd.read_csv(out_dir / "projection_rows.csv")) == 100
        assert len(pd.read_csv(out_dir / "projection_cols.csv")) == 64
        assert out["data"]["varimax"]["converged"] in (True, False)

    def test_label_count_mismatch(self, cli, small_pair, tmp_path):
        theta0, _, _ = small_pair
        write_matrix(theta0, tmp_path / "theta.csv")
        (tmp_path / "cols.txt").write_text("a\nb\n")
        code, _, _ = cli(
            "analyze", "--input", tmp_path / "theta.csv", "--rank", 3,
            "--col-labels", tmp_path / "cols.txt", "--out-dir", tmp_path / "x",
        )
        assert code == 3


class TestEvaluate:
    def test_comparison_table(self, cli, matrix_files, tmp_path):
        y0, y1 = matrix_files
        code, out, _ = cli(
            "evaluate", "--y0", y0, "--y1", y1, "--lambda1", 10, "--lambda2", 1, "--step", 0.035,
            "--max-iter", 10, "--rank", 3, "--folds", 4, "--out-dir", tmp_path,
        )
        assert code == 0
        table = pd.read_csv(tmp_path / "comparison.csv")
        assert len(table) == 16
        assert set(out["data"]["mean_mse"]) == {"Learner", "DLearner", "TargetHardImpute", "SourceSvd"}
