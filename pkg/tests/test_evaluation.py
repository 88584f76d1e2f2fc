import numpy as np
import pandas as pd
import pytest

from dataset.folds import FoldAssignment
from evaluation import aggregate, plots
from evaluation.evaluation_exceptions import EmptyMaskError, ConstantTruthError, MissingModelError, UnknownGroupKeyError, EvaluationError
from evaluation.experiment import ExperimentMatrix, EvalReport, COLUMNS, run_experiment, evaluation_mask, mean_by_model
from evaluation.metrics import mse_masked, r2_masked
from models.bundle import build_model

SMALL_AE2D = {"Channels": [4, 4], "Kernel": 3, "Bottleneck": 16}


@pytest.fixture(scope="function")
def five_sites(make_weekly_image):
    images = [make_weekly_image(meter_id=f"site{site}_electricity_00", site_id=f"site{site}") for site in range(5)]
    return images, FoldAssignment(fold_count=5, sites={f"site{site}": site for site in range(5)})


def persistence_matrix(folds=(0, 1)):
    return ExperimentMatrix(models=("persistence",), kinds=("random_days", "continuous"), rates=(0.1, 0.2), folds=folds)


def frame(rows):
    defaults = dict(model="persistence", meter_id="m", site_id="s", meter_type="electricity", kind="random_days", rate=0.1, fold=0, n_cells=24)
    return pd.DataFrame([dict(defaults, **row) for row in rows], columns=list(COLUMNS))


class TestMetrics(object):
    @staticmethod
    def test_mse():
        assert mse_masked([1.0, 0.0], [0.0, 0.0], [True, True]) == 0.5
        assert mse_masked([1.0, 0.0], [0.0, 0.0], [True, False]) == 1.0

    @staticmethod
    @pytest.mark.parametrize(("pred", "expected"), (([0.0, 2.0], 1.0), ([1.0, 1.0], 0.0), ([1.0, 2.0], 0.5)))
    def test_r2(pred, expected):
        assert r2_masked(pred, [0.0, 2.0], [True, True]) == expected

    @staticmethod
    def test_empty_mask():
        with pytest.raises(EmptyMaskError):
            mse_masked([1.0], [1.0], [False])
        with pytest.raises(EmptyMaskError):
            r2_masked([1.0], [1.0], [False])

    @staticmethod
    def test_constant_truth():
        with pytest.raises(ConstantTruthError):
            r2_masked([0.0, 1.0], [3.0, 3.0], [True, True])

    @staticmethod
    def test_masked_cells_only():
        pred = np.array([[0.0, 100.0], [2.0, 100.0]])
        truth = np.array([[0.0, 0.0], [2.0, 0.0]])
        mask = np.array([[True, False], [True, False]])
        assert mse_masked(pred, truth, mask) == 0.0
        assert r2_masked(pred, truth, mask) == 1.0


class TestExperiment(object):
    @staticmethod
    def test_persistence_on_weekly_meter(five_sites):
        images, assignment = five_sites
        report = run_experiment(persistence_matrix(), images, assignment, {}, seed=0)
        assert len(report.rows) == 2 * 2 * 2
        assert all(row.mse == 0.0 and row.r2 == 1.0 for row in report.rows)
        assert {row.meter_id for row in report.rows if row.fold == 0} == {"site4_electricity_00"}
        assert not report.excluded

    @staticmethod
    def test_rows_sorted_and_counted(five_sites):
        images, assignment = five_sites
        report = run_experiment(persistence_matrix(), images, assignment, {}, seed=0)
        assert [row.sort_key() for row in report.rows] == sorted(row.sort_key() for row in report.rows)
        assert {row.n_cells for row in report.rows if row.rate == 0.1} == {36 * 24}

    @staticmethod
    def test_models_share_masks(five_sites):
        images, assignment = five_sites
        model = build_model("ae2d", seed=0, config=SMALL_AE2D)
        model.provenance["trained"] = True
        matrix = ExperimentMatrix(models=("ae2d", "persistence"), kinds=("continuous",), rates=(0.3,), folds=(0,))
        report = run_experiment(matrix, images, assignment, {("ae2d", 0): model}, seed=0)
        by_model = {row.model: row for row in report.rows}
        assert set(by_model) == {"ae2d", "persistence"}
        assert by_model["ae2d"].n_cells == by_model["persistence"].n_cells
        assert by_model["persistence"].mse <= by_model["ae2d"].mse
        assert mean_by_model(report)["persistence"] == 0.0

    @staticmethod
    def test_missing_model(five_sites):
        images, assignment = five_sites
        matrix = ExperimentMatrix(models=("pconv",), kinds=("continuous",), rates=(0.1,), folds=(0,))
        with pytest.raises(MissingModelError):
            run_experiment(matrix, images, assignment, {}, seed=0)

    @staticmethod
    def test_evaluation_mask_replays():
        first = evaluation_mask(0, "m", "random_days", 0.1, 2)
        assert np.array_equal(first.grid, evaluation_mask(0, "m", "random_days", 0.1, 2).grid)
        assert not np.array_equal(first.grid, evaluation_mask(0, "m", "random_days", 0.1, 3).grid)

    @staticmethod
    def test_constant_meter_excluded(five_sites, make_weekly_image):
        images, assignment = five_sites
        images[4] = make_weekly_image(meter_id="site4_electricity_00", site_id="site4", profile=np.full(168, 0.5))
        report = run_experiment(persistence_matrix(folds=(0,)), images, assignment, {}, seed=0)
        assert not report.rows
        assert len(report.excluded) == 4

    @staticmethod
    def test_examples_kept_at_example_rate(five_sites):
        images, assignment = five_sites
        report = run_experiment(persistence_matrix(), images, assignment, {}, seed=0, example_rate=0.1)
        assert len(report.examples) == 2
        assert {example.mask.kind.value for example in report.examples} == {"random_days", "continuous"}
        assert all(set(example.imputations) == {"persistence"} for example in report.examples)

    @staticmethod
    def test_csv_header(five_sites):
        images, assignment = five_sites
        text = run_experiment(persistence_matrix(folds=(0,)), images, assignment, {}, seed=0).to_csv()
        lines = text.splitlines()
        assert lines[0] == "model,meter_id,site_id,meter_type,kind,rate,fold,mse,r2,n_cells"
        assert lines[1] == "persistence,site4_electricity_00,site4,electricity,continuous,0.1,0,0.0,1.0,864"


class TestAggregate(object):
    @staticmethod
    def test_single_row():
        table = aggregate.aggregate(frame([{"mse": 0.5, "r2": 0.25}]), aggregate.BY_RATE)
        assert len(table) == 1
        assert table.loc[0, "mse_mean"] == 0.5 and table.loc[0, "mse_median"] == 0.5 and table.loc[0, "r2_count"] == 1

    @staticmethod
    def test_quartiles():
        table = aggregate.aggregate(frame([{"mse": value, "r2": 0.0, "meter_id": f"m{value}"} for value in (1.0, 2.0, 3.0, 4.0)]), ("model",))
        assert table.loc[0, "mse_median"] == 2.5
        assert table.loc[0, "mse_q1"] == 1.75
        assert table.loc[0, "mse_q3"] == 3.25
        assert table.loc[0, "mse_mean"] == 2.5

    @staticmethod
    def test_groups_sorted():
        rows = [{"mse": 1.0, "r2": 0.0, "rate": rate} for rate in (0.3, 0.1, 0.2)]
        assert aggregate.aggregate(frame(rows), ("rate",))["rate"].tolist() == [0.1, 0.2, 0.3]

    @staticmethod
    def test_unknown_key():
        with pytest.raises(UnknownGroupKeyError):
            aggregate.aggregate(frame([{"mse": 0.5, "r2": 0.25}]), ("building",))

    @staticmethod
    def test_empty_report():
        with pytest.raises(EvaluationError):
            aggregate.aggregate(EvalReport(), aggregate.BY_RATE)

    @staticmethod
    def test_summary_tables(tmp_path):
        report = frame([{"mse": 0.5, "r2": 0.25}, {"mse": 0.25, "r2": 0.5, "kind": "continuous"}])
        tables = aggregate.summary_tables(report)
        assert set(tables) == {"summary_by_rate", "summary_by_meter_type", "r2_trend"}
        assert list(tables["r2_trend"].columns) == ["model", "kind", "rate", "r2_mean", "r2_count"]
        assert aggregate.table_to_csv(tables["r2_trend"]) == "model,kind,rate,r2_mean,r2_count\npersistence,continuous,0.1,0.5,1\npersistence,random_days,0.1,0.25,1\n"


class TestPlots(object):
    @staticmethod
    def test_emit_plots(tmp_path, five_sites):
        images, assignment = five_sites
        report = run_experiment(persistence_matrix(), images, assignment, {}, seed=0, example_rate=0.1)
        paths = plots.emit_plots(report, tmp_path / "first")
        names = {path.name for path in paths}
        assert {"boxplot_by_rate.csv", "boxplot_by_meter_type.csv", "overlay_site4_electricity_00_continuous.csv"} <= names
        assert "heatmap_site4_electricity_00_continuous_input.txt" in names

        overlay = pd.read_csv(tmp_path / "first" / "overlay_site4_electricity_00_continuous.csv")
        assert len(overlay) == 8736
        assert list(overlay.columns) == ["timestamp", "hour", "truth", "mask", "persistence"]
        assert overlay.loc[0, "timestamp"] == "2016-01-04T00:00:00"

        heatmap = (tmp_path / "first" / "heatmap_site4_electricity_00_continuous_input.txt").read_text().splitlines()
        assert len(heatmap) == 168 and all(len(line.split(" ")) == 52 for line in heatmap)
        assert any("nan" in line for line in heatmap)

        boxplot = pd.read_csv(tmp_path / "first" / "boxplot_by_rate.csv")
        assert len(boxplot) == 2 * len(report.rows)

        again = plots.emit_plots(report, tmp_path / "second")
        assert [path.read_bytes() for path in paths] == [path.read_bytes() for path in again]

    @staticmethod
    def test_empty_report(tmp_path):
        with pytest.raises(EvaluationError):
            plots.emit_plots(EvalReport(), tmp_path)

    @staticmethod
    def test_matrix_to_text():
        assert plots.matrix_to_text(np.array([[0.5, np.nan], [1.0, 0.25]])) == "0.5 nan\n1.0 0.25\n"
