import json
import os

import pandas as pd
import pytest

import main_file

METER = "site000_electricity_00"


def run(*argv) -> int:
    return main_file.main([str(arg) for arg in argv])


@pytest.fixture(scope="module")
def store(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert run("synth", "--sites", 5, "--meters-per-site", 2, "--seed", 1, "--out", root / "synth") == 0
    assert run("prepare", "--input", root / "synth" / "fleet.csv", "--seed", 1, "--out", root / "store") == 0
    return root / "store"


@pytest.fixture(scope="module")
def train_config(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli_config") / "train.cfg"
    path.write_text("max_epochs = 2\npatience = 1\nbatch_size = 8\n")
    return path


class TestParser(object):
    @staticmethod
    def test_help_documents_every_flag():
        parser = main_file.build_parser()
        subparsers = next(action for action in parser._actions if action.dest == "command")
        assert set(subparsers.choices) == set(main_file.COMMANDS)
        for name, subparser in subparsers.choices.items():
            text = subparser.format_help()
            for action in subparser._actions:
                for option in action.option_strings:
                    assert option in text, f"{name} {option}"
                assert action.help, f"{name} {action.dest}"

    @staticmethod
    def test_command_required():
        with pytest.raises(SystemExit):
            main_file.build_parser().parse_args([])

    @staticmethod
    def test_out_is_a_file(tmp_path):
        (tmp_path / "taken").write_text("")
        assert run("gradcheck", "--points", 2, "--out", tmp_path / "taken") == 1

    @staticmethod
    def test_unexpected_error_logged(tmp_path, monkeypatch):
        def broken(args, manifest):
            raise ValueError("boom")
        monkeypatch.setitem(main_file.COMMANDS, "gradcheck", broken)
        assert run("gradcheck", "--out", tmp_path) == 1
        assert (tmp_path / "manifest.json").exists()

    @staticmethod
    def test_checkpoint_name():
        assert main_file.checkpoint_name("pconv", 3) == "pconv_fold3.gfm"


class TestSynthCommand(object):
    @staticmethod
    def test_invalid_sites(tmp_path):
        assert run("synth", "--sites", 0, "--out", tmp_path) == 2

    @staticmethod
    def test_replay(tmp_path):
        assert run("synth", "--sites", 2, "--meters-per-site", 2, "--seed", 5, "--out", tmp_path / "a") == 0
        assert run("synth", "--sites", 2, "--meters-per-site", 2, "--seed", 5, "--out", tmp_path / "b") == 0
        assert (tmp_path / "a" / "fleet.csv").read_bytes() == (tmp_path / "b" / "fleet.csv").read_bytes()
        manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["seeds"] == {"synth": 5}
        assert manifest["version"] == main_file.VERSION


class TestPrepareCommand(object):
    @staticmethod
    def test_store_written(store):
        assert len(list((store / "images").iterdir())) == 10
        assert len((store / "folds.csv").read_text().splitlines()) == 5

    @staticmethod
    def test_existing_store_needs_force(store, tmp_path):
        fleet = store.parent / "synth" / "fleet.csv"
        target = tmp_path / "store"
        assert run("prepare", "--input", fleet, "--seed", 1, "--out", target) == 0
        assert run("prepare", "--input", fleet, "--seed", 1, "--out", target) == 2
        assert run("prepare", "--input", fleet, "--seed", 1, "--out", target, "--force") == 0

    @staticmethod
    def test_missing_input(tmp_path):
        assert run("prepare", "--input", tmp_path / "absent.csv", "--out", tmp_path / "store") == 2

    @staticmethod
    def test_wide_needs_meter_type(store, tmp_path):
        assert run("prepare", "--input", store.parent / "synth" / "fleet.csv", "--layout", "wide", "--out", tmp_path / "store") == 2


class TestTrainAndImpute(object):
    @staticmethod
    def test_persistence_not_trainable(store, tmp_path):
        assert run("train", "--model", "persistence", "--store", store, "--out", tmp_path) == 2

    @staticmethod
    def test_impute_persistence(store, tmp_path):
        assert run("impute", "--store", store, "--meter-id", METER, "--model", "persistence",
                   "--kind", "continuous", "--rate", 0.1, "--out", tmp_path) == 0
        frame = pd.read_csv(tmp_path / f"{METER}_imputed.csv")
        assert len(frame) == 8736
        assert list(frame.columns) == ["timestamp", "value", "provenance"]
        assert (frame["provenance"] == "imputed").sum() == 36 * 24

    @staticmethod
    def test_impute_mask_file(store, tmp_path):
        from masks.generators import random_day_mask
        (tmp_path / "mask.txt").write_text(random_day_mask(0.2, 3).to_text())
        assert run("impute", "--store", store, "--meter-id", METER, "--model", "persistence",
                   "--mask-file", tmp_path / "mask.txt", "--denormalize", "--out", tmp_path) == 0
        frame = pd.read_csv(tmp_path / f"{METER}_imputed.csv")
        assert (frame["provenance"] == "imputed").sum() == 73 * 24
        assert frame["value"].min() > 1.0  # kWh, not normalized units

    @staticmethod
    def test_impute_needs_mask(store, tmp_path):
        assert run("impute", "--store", store, "--meter-id", METER, "--model", "persistence", "--out", tmp_path) == 2

    @staticmethod
    def test_impute_needs_model(store, tmp_path):
        assert run("impute", "--store", store, "--meter-id", METER, "--kind", "continuous", "--rate", 0.1, "--out", tmp_path) == 2

    @staticmethod
    def test_train_then_evaluate(store, train_config, tmp_path):
        assert run("train", "--model", "ae2d", "--fold", 0, "--store", store, "--config", train_config, "--out", tmp_path / "models") == 0
        assert (tmp_path / "models" / "ae2d_fold0.gfm").exists()
        log = pd.read_csv(tmp_path / "models" / "ae2d_fold0_trainlog.csv")
        assert 1 <= len(log) <= 2
        assert run("evaluate", "--store", store, "--models", "persistence", "ae2d", "--checkpoints", tmp_path / "models",
                   "--folds", 0, "--rates", 0.1, "--out", tmp_path / "eval") == 0
        report = pd.read_csv(tmp_path / "eval" / "report.csv")
        assert set(report["model"]) == {"persistence", "ae2d"}

    @staticmethod
    def test_evaluate_missing_checkpoint(store, tmp_path):
        assert run("evaluate", "--store", store, "--models", "pconv", "--folds", 0, "--out", tmp_path) == 2


class TestEvaluateCommand(object):
    @staticmethod
    def test_replay(store, tmp_path):
        for name in ("a", "b"):
            assert run("evaluate", "--store", store, "--folds", 0, 1, "--rates", 0.1, 0.2, "--seed", 3, "--out", tmp_path / name) == 0
        first = sorted(path.relative_to(tmp_path / "a") for path in (tmp_path / "a").rglob("*") if path.is_file())
        second = sorted(path.relative_to(tmp_path / "b") for path in (tmp_path / "b").rglob("*") if path.is_file())
        assert first == second
        for relative in first:
            if relative.name != "manifest.json":
                assert (tmp_path / "a" / relative).read_bytes() == (tmp_path / "b" / relative).read_bytes(), str(relative)
        assert {"report.csv", "summary_by_rate.csv", "summary_by_meter_type.csv", "r2_trend.csv"} <= {path.name for path in first}

    @staticmethod
    def test_report_rows(store, tmp_path):
        assert run("evaluate", "--store", store, "--folds", 0, "--kinds", "continuous", "--rates", 0.3, "--out", tmp_path) == 0
        report = pd.read_csv(tmp_path / "report.csv")
        assert (report["kind"] == "continuous").all()
        assert (report["fold"] == 0).all()
        assert len(report) == 2  # one test site, two meters


class TestGradcheckCommand(object):
    @staticmethod
    def test_passes(tmp_path):
        assert run("gradcheck", "--points", 10, "--out", tmp_path) == 0
        assert pd.read_csv(tmp_path / "gradcheck.csv")["passed"].all()

    @staticmethod
    def test_corrupt_fails(tmp_path):
        assert run("gradcheck", "--points", 10, "--corrupt", "--out", tmp_path) == 1
        assert not pd.read_csv(tmp_path / "gradcheck.csv")["passed"].any()


@pytest.mark.slow
@pytest.mark.skipif(os.environ.get("GRIDFILL_BENCHMARK") != "1", reason="set GRIDFILL_BENCHMARK=1 for the desk-scale benchmark")
def test_benchmark(tmp_path):
    from models.bundle import ModelBundle
    assert run("synth", "--out", tmp_path / "synth") == 0
    assert run("prepare", "--input", tmp_path / "synth" / "fleet.csv", "--out", tmp_path / "store") == 0
    for model in ("ae1d", "ae2d", "pconv"):
        assert run("train", "--model", model, "--fold", 0, "--store", tmp_path / "store", "--out", tmp_path / "models") == 0
    for model in ("ae2d", "pconv"):
        provenance = ModelBundle.load(tmp_path / "models" / main_file.checkpoint_name(model, 0)).provenance
        assert provenance["stop_reason"] in ("early_stop", "max_epochs")
        assert provenance["epochs_run"] <= 50
        assert provenance["best_val_loss"] < provenance["initial_val_loss"], model
    assert run("evaluate", "--store", tmp_path / "store", "--models", "persistence", "ae1d", "ae2d", "pconv",
               "--checkpoints", tmp_path / "models", "--folds", 0, "--rates", 0.1, "--out", tmp_path / "eval") == 0
    report = pd.read_csv(tmp_path / "eval" / "report.csv")
    assert set(report["model"]) == {"persistence", "ae1d", "ae2d", "pconv"}

    random_days = report[(report["kind"] == "random_days") & (report["rate"] == 0.1)].groupby("model")
    mse = random_days["mse"].mean()
    assert mse["pconv"] <= mse["ae2d"] <= mse["persistence"]
    assert random_days["r2"].mean()["pconv"] >= 0.7

    weather = report[(report["kind"] == "continuous") & (report["rate"] == 0.1) & report["meter_type"].isin(["hotwater", "chilledwater"])]
    weather_mse = weather.groupby("model")["mse"].mean()
    assert weather_mse["ae2d"] < weather_mse["persistence"]
    assert weather_mse["pconv"] < weather_mse["persistence"]
