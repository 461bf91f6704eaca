import io
import json

import numpy as np
import pytest
from click.testing import CliRunner
from PIL import Image

from markguard.cli import main
from markguard.decision import (
    DEFAULT_REJECTION_BUDGETS,
    CostMatrix,
    EvalReport,
    ScoredSet,
    ThresholdBand,
    calibrate_band,
    tradeoff_curve,
)
from markguard.geometry import AffineParams, BBox
from markguard.pipeline import AlignedMark, MarkDetection, ModelHandle
from markguard.service import AuthService
from markguard.training import DatasetManifest, ModelArtifact


@pytest.fixture()
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def gen_config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "gen.json"
    path.write_text(
        json.dumps(
            {
                "n_genuine": 12,
                "n_counterfeit": 12,
                "severity": 4.0,
                "seed": 9,
                "placement": {"scale_range": [0.7, 1.15], "rotation_deg": 25.0, "margin": 6.0},
                "background": "fabric_texture",
                "lighting_jitter": 0.05,
                "sensor_noise": 2.0,
                "split_fractions": [0.5, 0.25, 0.25],
            }
        )
    )
    return path


@pytest.fixture(scope="module")
def train_config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "train.json"
    path.write_text(
        json.dumps(
            {
                "architecture": "small-conv",
                "epochs_max": 2,
                "batch_size": 16,
                "learning_rate": 1e-3,
                "patience": 1,
                "seed": 3,
                "augmentation": {
                    "rotation_deg": 20.0,
                    "translate_frac": 0.1,
                    "scale_range": [0.8, 1.2],
                    "brightness_jitter": 0.1,
                    "enabled": True,
                },
            }
        )
    )
    return path


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory, gen_config_file):
    out = tmp_path_factory.mktemp("cli") / "data"
    result = CliRunner().invoke(
        main, ["synth", "--config", str(gen_config_file), "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    return out


@pytest.fixture(scope="module")
def scores_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("scores") / "val_scores.csv"
    ScoredSet.of(
        [(0.1, "counterfeit"), (0.3, "counterfeit"), (0.55, "genuine"), (0.6, "counterfeit"), (0.8, "genuine"), (0.9, "genuine")]
    ).to_csv(path)
    return path


# -- dispatch and usage ----------------------------------------------------------


def test_unknown_command_is_usage_error(runner):
    result = runner.invoke(main, ["frobnicate"])
    assert result.exit_code == 2
    assert "No such command" in result.output


def test_missing_required_flag_is_usage_error(runner):
    result = runner.invoke(main, ["calibrate", "--costs", "1,1,0.5"])
    assert result.exit_code == 2


def test_malformed_costs_is_usage_error(runner, scores_file, tmp_path):
    result = runner.invoke(
        main,
        ["calibrate", "--scores", str(scores_file), "--costs", "1,1", "--out", str(tmp_path / "b.json")],
    )
    assert result.exit_code == 2
    assert "costs" in result.output


# -- synth -------------------------------------------------------------------------


def test_synth_writes_corpus(corpus_dir):
    manifest = DatasetManifest.from_csv(corpus_dir / "manifest.csv")
    assert manifest.counts() == {"train": 12, "val": 6, "test": 6}
    for entry in manifest.entries[:3]:
        assert manifest.resolve(entry).exists()


def test_synth_refuses_nonempty_target(runner, gen_config_file, tmp_path):
    target = tmp_path / "data"
    target.mkdir()
    (target / "keep.txt").write_text("precious")
    result = runner.invoke(main, ["synth", "--config", str(gen_config_file), "--out", str(target)])
    assert result.exit_code == 1
    assert (target / "keep.txt").read_text() == "precious"


# -- calibrate and curve --------------------------------------------------------------


def test_calibrate_matches_direct_call(runner, scores_file, tmp_path):
    out = tmp_path / "band.json"
    result = runner.invoke(
        main, ["calibrate", "--scores", str(scores_file), "--costs", "1,1,0.5", "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    band = json.loads(out.read_text())
    direct = calibrate_band(ScoredSet.from_csv(scores_file), CostMatrix(1.0, 1.0, 0.5))
    assert (band["lower"], band["upper"], band["version"]) == (direct.lower, direct.upper, direct.version)


def test_calibrate_invalid_costs_is_operational_error(runner, scores_file, tmp_path):
    out = tmp_path / "band.json"
    result = runner.invoke(
        main, ["calibrate", "--scores", str(scores_file), "--costs", "1,1,0", "--out", str(out)]
    )
    assert result.exit_code == 1
    assert not out.exists(), "failed command must not leave an output file"


def test_calibrate_malformed_scores_leaves_no_output(runner, tmp_path):
    bad = tmp_path / "scores.csv"
    bad.write_text("0.5;genuine\n")
    out = tmp_path / "band.json"
    result = runner.invoke(
        main, ["calibrate", "--scores", str(bad), "--costs", "1,1,0.5", "--out", str(out)]
    )
    assert result.exit_code == 1
    assert not out.exists()


def test_curve_emits_table_and_plot(runner, scores_file, tmp_path):
    out = tmp_path / "curve.tsv"
    plot = tmp_path / "curve.png"
    result = runner.invoke(
        main, ["curve", "--scores", str(scores_file), "--out", str(out), "--plot", str(plot)]
    )
    assert result.exit_code == 0, result.output
    expected = tradeoff_curve(ScoredSet.from_csv(scores_file), DEFAULT_REJECTION_BUDGETS)
    assert out.read_text() == expected.to_table()
    header, first = out.read_text().splitlines()[:2]
    assert header.split("\t") == ["rejection", "accuracy"]
    assert len(first.split("\t")) == 2
    assert plot.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


# -- train / eval / matrix --------------------------------------------------------------


@pytest.fixture(scope="module")
def trained_model_dir(tmp_path_factory, corpus_dir, train_config_file):
    out = tmp_path_factory.mktemp("cli") / "model"
    result = CliRunner().invoke(
        main,
        [
            "train",
            "--manifest", str(corpus_dir / "manifest.csv"),
            "--config", str(train_config_file),
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    return out


def test_train_writes_artifact_and_scores(trained_model_dir):
    artifact = ModelArtifact.load(trained_model_dir)
    assert artifact.meta.architecture == "small-conv"
    assert (trained_model_dir / "train_log.jsonl").exists()
    scores = ScoredSet.from_csv(trained_model_dir / "val_scores.csv")
    assert len(scores) == 6


def test_eval_reports_on_test_split(runner, corpus_dir, trained_model_dir, tmp_path):
    out = tmp_path / "report.json"
    result = runner.invoke(
        main,
        [
            "eval",
            "--manifest", str(corpus_dir / "manifest.csv"),
            "--model", str(trained_model_dir),
            "--band", "0.5,0.5",
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    report = EvalReport.from_json_dict(json.loads(out.read_text()))
    assert report.architecture == "small-conv"
    counts = report.confusion
    assert counts.tp + counts.tn + counts.fp + counts.fn + counts.rejected == 6


def test_matrix_writes_two_row_table(runner, corpus_dir, train_config_file, tmp_path):
    out = tmp_path / "report.txt"
    result = runner.invoke(
        main,
        [
            "matrix",
            "--manifest", str(corpus_dir / "manifest.csv"),
            "--arch", "small-conv,small-attn",
            "--costs", "1,1,0.5",
            "--config", str(train_config_file),
            "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    table = out.read_text()
    assert "small-conv" in table and "small-attn" in table
    data_rows = [line for line in table.splitlines() if line.startswith("small-")]
    assert len(data_rows) == 2


# -- export-feedback ----------------------------------------------------------------------


class _BoxLocalizer:
    def localize(self, image):
        return MarkDetection(BBox(8.0, 8.0, 56.0, 56.0), 0.9)


class _FlatAligner:
    def align(self, image, detection):
        level = float(image.pixels.mean()) / 255.0
        pixels = np.full((224, 224, 3), level, dtype=np.float32)
        return AlignedMark(pixels=pixels, applied_transform=AffineParams())


def _png(value: int) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.full((64, 64, 3), value, dtype=np.uint8), "RGB").save(buf, format="PNG")
    return buf.getvalue()


@pytest.fixture()
def feedback_store(tmp_path):
    store = tmp_path / "store"
    service = AuthService(store, localizer=_BoxLocalizer(), aligner=_FlatAligner())
    service.install_snapshot(
        ModelHandle("m-cli", lambda p: float(p.mean())), ThresholdBand(0.2, 0.8, version="t-cli")
    )
    for i, label in enumerate(["genuine", "counterfeit"]):
        record = service.handle_authenticate(_png(70 + 100 * i))
        service.record_feedback(record.request_id, label, "cli-test")
    return store


def test_export_feedback_round_trips(runner, feedback_store, tmp_path):
    out = tmp_path / "retrain.csv"
    result = runner.invoke(main, ["export-feedback", "--store-dir", str(feedback_store), "--out", str(out)])
    assert result.exit_code == 0, result.output
    manifest = DatasetManifest.from_csv(out)
    assert len(manifest.entries) == 2
    assert {e.label.value for e in manifest.entries} == {"genuine", "counterfeit"}
    assert all(e.source == "feedback" for e in manifest.entries)


def test_export_feedback_without_feedback_fails_cleanly(runner, tmp_path):
    store = tmp_path / "store"
    AuthService(store, localizer=_BoxLocalizer(), aligner=_FlatAligner())  # creates empty logs dir
    out = tmp_path / "retrain.csv"
    result = runner.invoke(main, ["export-feedback", "--store-dir", str(store), "--out", str(out)])
    assert result.exit_code == 1
    assert not out.exists()
