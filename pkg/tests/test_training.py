import math
from dataclasses import replace

import numpy as np
import pytest
import torch
from hypothesis import given, settings
from hypothesis import strategies as st

from markguard.decision import (
    Confusion,
    CostMatrix,
    EvalReport,
    format_weight_count,
)
from markguard.geometry import AffineParams
from markguard.pipeline import AlignedMark
from markguard.synthdata import GenConfig, generate_dataset
from markguard.training import (
    AugConfig,
    EmptySplit,
    EpochRecord,
    ModelArtifact,
    ModelMeta,
    NonFiniteLoss,
    Split,
    TrainConfig,
    TrainLog,
    UnknownArchitecture,
    augment,
    bce_from_logits,
    best_epoch,
    build,
    get_spec,
    layer_count,
    load_aligned_dataset,
    pose_loss,
    run_experiment_matrix,
    should_stop,
    stopping_epoch,
    train_classifier,
    weight_count,
)
from markguard.training.gradcheck import max_relative_error
from markguard.training.manifest import DatasetManifest, ManifestEntry


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("train_corpus")
    cfg = GenConfig(
        n_genuine=30,
        n_counterfeit=30,
        severity=4.0,
        seed=7,
        split_fractions=(0.5, 0.3, 0.2),
    )
    manifest, records = generate_dataset(cfg, root)
    return manifest, records


@pytest.fixture(scope="module")
def aligned(corpus):
    manifest, _ = corpus
    return load_aligned_dataset(manifest)


MICRO_TRAIN = TrainConfig(architecture="small-conv", epochs_max=2, patience=1, seed=3)


# ---------------------------------------------------------------------------
# Losses


def test_bce_at_zero_logit_is_ln2():
    z = torch.zeros(5, dtype=torch.float64)
    y = torch.tensor([0.0, 1.0, 0.0, 1.0, 1.0], dtype=torch.float64)
    assert abs(bce_from_logits(z, y).item() - math.log(2.0)) < 1e-9


def test_bce_hand_computed_case():
    # sigmoid(ln 3) = 3/4: loss is ln(4/3) for a genuine, ln 4 for a fake
    z = torch.full((1,), math.log(3.0), dtype=torch.float64)
    one = torch.ones(1, dtype=torch.float64)
    assert abs(bce_from_logits(z, one).item() - math.log(4.0 / 3.0)) < 1e-12
    assert abs(bce_from_logits(z, one * 0).item() - math.log(4.0)) < 1e-12


def test_bce_shape_mismatch_raises():
    with pytest.raises(ValueError):
        bce_from_logits(torch.zeros(3), torch.zeros(4))


@given(st.floats(-30, 30))
def test_bce_label_flip_symmetry(z):
    zt = torch.tensor([z], dtype=torch.float64)
    a = bce_from_logits(zt, torch.ones(1, dtype=torch.float64)).item()
    b = bce_from_logits(-zt, torch.zeros(1, dtype=torch.float64)).item()
    # softplus goes linear above z=20, which costs exp(-|z|) < 3e-9 out there
    assert abs(a - b) < 1e-8


def test_pose_loss_is_mean_squared_error():
    pred = torch.tensor([[1.0, 0.0, 2.0, 0.0]])
    target = torch.zeros(1, 4)
    assert abs(pose_loss(pred, target).item() - 5.0 / 4.0) < 1e-7
    with pytest.raises(ValueError):
        pose_loss(torch.zeros(2, 4), torch.zeros(2, 3))


# ---------------------------------------------------------------------------
# Early stopping (pure function of the loss sequence)


def test_scripted_sequence_stops_after_epoch_five():
    losses = [1.0, 0.9, 0.91, 0.92, 0.93]
    assert stopping_epoch(losses, patience=3) == (5, 2, True)


def test_monotone_improvement_never_stops():
    losses = [1.0, 0.9, 0.8, 0.7]
    assert stopping_epoch(losses, patience=1) == (4, 4, False)
    assert not should_stop(losses, 1)


def test_patience_one_stops_at_first_non_improvement():
    assert stopping_epoch([1.0, 1.1], patience=1) == (2, 1, True)


def test_ties_do_not_count_as_improvement():
    # strict-improvement rule: a repeat of the best is still a stall
    assert stopping_epoch([1.0, 1.0, 1.0], patience=2) == (3, 1, True)


def test_best_epoch_validates_input():
    with pytest.raises(ValueError):
        best_epoch([])
    with pytest.raises(ValueError):
        should_stop([1.0], patience=0)


@given(
    st.lists(st.floats(0.01, 10.0), min_size=1, max_size=30),
    st.integers(min_value=1, max_value=6),
)
def test_stopping_epoch_invariants(losses, patience):
    last, best, stopped = stopping_epoch(losses, patience)
    assert 1 <= best <= last <= len(losses)
    prefix = losses[:last]
    assert best == 1 + int(np.argmin(prefix))
    if stopped:
        assert last == best + patience
    else:
        assert last == len(losses)
        assert len(prefix) - best < patience


# ---------------------------------------------------------------------------
# Registry


def test_desk_scale_backbones_build_and_count():
    for name in ("small-conv", "small-attn"):
        net = build(name)
        n = weight_count(net)
        assert n == sum(p.numel() for p in net.parameters())
        assert 0 < n < 1_000_000
        assert layer_count(net) >= 5


def test_unknown_architecture_raises():
    with pytest.raises(UnknownArchitecture):
        build("frobnicate-net")
    with pytest.raises(UnknownArchitecture):
        get_spec("frobnicate-net")


def test_reference_entries_carry_metadata_but_do_not_build():
    spec = get_spec("AntiCounterfeit")
    assert spec.ref_layer_count == 380
    assert spec.ref_weight_count == 133_000_000
    assert not spec.trainable
    with pytest.raises(UnknownArchitecture):
        build("AntiCounterfeit")


def test_zeroed_network_scores_exactly_half():
    net = build("small-conv")
    with torch.no_grad():
        for p in net.parameters():
            p.zero_()
    meta = ModelMeta(
        architecture="small-conv",
        layer_count=layer_count(net),
        weight_count=weight_count(net),
        version="m-zero",
        train_seed=0,
    )
    handle = ModelArtifact.from_network(net, meta).to_handle()
    pixels = np.random.default_rng(0).random((224, 224, 3)).astype(np.float32)
    assert handle.scorer(pixels) == 0.5


# ---------------------------------------------------------------------------
# Gradient checks (central differences, step 1e-5, 10 random coordinates)


def test_classifier_gradients_match_finite_differences():
    torch.manual_seed(0)
    net = build("small-conv").double()
    x = torch.rand(4, 3, 224, 224, dtype=torch.float64)
    y = torch.tensor([1.0, 0.0, 1.0, 0.0], dtype=torch.float64)
    err = max_relative_error(net, lambda: bce_from_logits(net(x), y), n_coords=10)
    assert err < 1e-4


def test_pose_gradients_match_finite_differences():
    torch.manual_seed(1)
    net = build("pose-regressor").double()
    x = torch.rand(3, 3, 224, 224, dtype=torch.float64)
    y = torch.randn(3, 4, dtype=torch.float64) * 0.3
    err = max_relative_error(net, lambda: pose_loss(net(x), y), n_coords=10)
    assert err < 1e-4


def test_attention_gradients_match_finite_differences():
    torch.manual_seed(2)
    net = build("small-attn").double()
    x = torch.rand(2, 3, 224, 224, dtype=torch.float64)
    y = torch.tensor([1.0, 0.0], dtype=torch.float64)
    err = max_relative_error(net, lambda: bce_from_logits(net(x), y), n_coords=10)
    assert err < 1e-4


# ---------------------------------------------------------------------------
# Augmentation


def _some_mark() -> AlignedMark:
    rng = np.random.default_rng(9)
    pixels = rng.random((224, 224, 3)).astype(np.float32)
    return AlignedMark(pixels=pixels, applied_transform=AffineParams(rotation=3.0))


def test_zero_magnitudes_give_pixel_identical_output():
    mark = _some_mark()
    out = augment(mark, AugConfig.identity(), rng_seed=5)
    assert np.array_equal(out.pixels, mark.pixels)


def test_disabled_augmentation_is_identity():
    mark = _some_mark()
    out = augment(mark, AugConfig(enabled=False), rng_seed=5)
    assert np.array_equal(out.pixels, mark.pixels)


def test_augment_output_contract():
    out = augment(_some_mark(), AugConfig(), rng_seed=11)
    assert out.pixels.shape == (224, 224, 3)
    assert out.pixels.dtype == np.float32
    assert 0.0 <= out.pixels.min() and out.pixels.max() <= 1.0


def test_augment_same_seed_is_byte_identical():
    mark = _some_mark()
    a = augment(mark, AugConfig(), rng_seed=21)
    b = augment(mark, AugConfig(), rng_seed=21)
    assert a.pixels.tobytes() == b.pixels.tobytes()
    c = augment(mark, AugConfig(), rng_seed=22)
    assert not np.array_equal(a.pixels, c.pixels)


def test_augment_keeps_pose_ground_truth():
    mark = _some_mark()
    out = augment(mark, AugConfig(), rng_seed=3)
    assert out.applied_transform == mark.applied_transform


def test_augconfig_validation():
    with pytest.raises(ValueError):
        AugConfig(scale_range=(0.0, 1.0))
    with pytest.raises(ValueError):
        AugConfig(rotation_deg=-1.0)
    with pytest.raises(ValueError):
        AugConfig(scale_range=(1.2, 0.8))


def test_trainconfig_validation():
    with pytest.raises(ValueError):
        TrainConfig(epochs_max=0)
    with pytest.raises(ValueError):
        TrainConfig(patience=0)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=0.0)
    cfg = TrainConfig()
    assert TrainConfig.from_json_dict(cfg.to_json_dict()) == cfg


def test_trainconfig_partial_json_uses_defaults():
    # a config file may override just a few fields (the CLI's --config path)
    cfg = TrainConfig.from_json_dict({"epochs_max": 4, "seed": 7})
    assert cfg == TrainConfig(epochs_max=4, seed=7)
    aug = AugConfig.from_json_dict({"rotation_deg": 5.0})
    assert aug == AugConfig(rotation_deg=5.0)


# ---------------------------------------------------------------------------
# TrainLog and ModelArtifact


def _log_epochs(losses):
    return tuple(
        EpochRecord(epoch=i + 1, train_loss=v + 0.1, val_loss=v, val_accuracy=0.5)
        for i, v in enumerate(losses)
    )


def test_trainlog_invariants():
    log = TrainLog(_log_epochs([1.0, 0.9, 0.95]), stopped_early=False, best_epoch=2)
    assert log.best.val_loss == 0.9
    with pytest.raises(ValueError):
        TrainLog(_log_epochs([1.0, 0.9, 0.95]), stopped_early=False, best_epoch=3)
    with pytest.raises(ValueError):
        TrainLog((), stopped_early=False, best_epoch=1)
    bad = (
        EpochRecord(epoch=1, train_loss=1.0, val_loss=1.0, val_accuracy=0.5),
        EpochRecord(epoch=3, train_loss=1.0, val_loss=0.9, val_accuracy=0.5),
    )
    with pytest.raises(ValueError):
        TrainLog(bad, stopped_early=False, best_epoch=2)


def test_trainlog_file_round_trip(tmp_path):
    log = TrainLog(_log_epochs([1.0, 0.8, 0.85, 0.9]), stopped_early=True, best_epoch=2)
    path = tmp_path / "log.jsonl"
    log.to_jsonl(path)
    assert TrainLog.from_jsonl(path) == log
    (tmp_path / "bare.jsonl").write_text('{"epoch": 1}\n')
    with pytest.raises(ValueError):
        TrainLog.from_jsonl(tmp_path / "bare.jsonl")


def test_artifact_round_trip(tmp_path):
    torch.manual_seed(4)
    net = build("small-conv")
    meta = ModelMeta(
        architecture="small-conv",
        layer_count=layer_count(net),
        weight_count=weight_count(net),
        version="m-roundtrip",
        train_seed=4,
    )
    art = ModelArtifact.from_network(net, meta)
    art.save(tmp_path / "model")
    back = ModelArtifact.load(tmp_path / "model")
    assert back.weights == art.weights
    assert back.meta == meta
    rebuilt = back.build_network()
    assert weight_count(rebuilt) == meta.weight_count
    with pytest.raises(ValueError):
        ModelArtifact.from_network(net, replace(meta, weight_count=1))


# ---------------------------------------------------------------------------
# Training loop on the micro corpus


def test_single_epoch_boundary(corpus, aligned):
    manifest, _ = corpus
    art, log = train_classifier(manifest, replace(MICRO_TRAIN, epochs_max=1), data=aligned)
    assert len(log.epochs) == 1
    assert log.best_epoch == 1
    assert not log.stopped_early
    assert art.meta.weight_count == weight_count(art.build_network())


def test_training_is_deterministic(corpus, aligned):
    manifest, _ = corpus
    a_art, a_log = train_classifier(manifest, MICRO_TRAIN, data=aligned)
    b_art, b_log = train_classifier(manifest, MICRO_TRAIN, data=aligned)
    assert a_art.weights == b_art.weights
    assert a_art.meta.version == b_art.meta.version
    assert a_log == b_log
    c_art, _ = train_classifier(manifest, replace(MICRO_TRAIN, seed=4), data=aligned)
    assert c_art.meta.version != a_art.meta.version


def test_unknown_or_untrainable_architecture(corpus, aligned):
    manifest, _ = corpus
    with pytest.raises(UnknownArchitecture):
        train_classifier(manifest, replace(MICRO_TRAIN, architecture="nope"), data=aligned)
    with pytest.raises(UnknownArchitecture):
        train_classifier(
            manifest, replace(MICRO_TRAIN, architecture="ConvNext-base"), data=aligned
        )


def test_empty_split_rejected(corpus, aligned):
    manifest, _ = corpus
    train_only = DatasetManifest(
        entries=tuple(e for e in manifest.entries if e.split is Split.TRAIN),
        seed=manifest.seed,
        base_dir=manifest.base_dir,
    )
    with pytest.raises(EmptySplit):
        train_classifier(train_only, MICRO_TRAIN, data=aligned)


def test_runaway_learning_rate_aborts_with_diagnostic(corpus, aligned):
    manifest, _ = corpus
    hot = replace(MICRO_TRAIN, learning_rate=1e30, epochs_max=3)
    with pytest.raises(NonFiniteLoss):
        train_classifier(manifest, hot, data=aligned)


def test_loader_matches_manifest_labels(corpus, aligned):
    manifest, _ = corpus
    for split in Split:
        entries = manifest.split(split)
        arrays = aligned[split]
        assert arrays.paths == tuple(e.path for e in entries)
        want = np.array([1.0 if e.label.value == "genuine" else 0.0 for e in entries])
        assert np.array_equal(arrays.labels, want)
        assert arrays.pixels.dtype == np.uint8


def test_loader_requires_records(tmp_path, corpus):
    manifest, _ = corpus
    moved = DatasetManifest(entries=manifest.entries, seed=manifest.seed, base_dir=tmp_path)
    with pytest.raises(FileNotFoundError):
        load_aligned_dataset(moved)


# ---------------------------------------------------------------------------
# Experiment matrix

COSTS = CostMatrix(1.0, 1.0, 0.5)


def test_matrix_two_backbones(corpus, aligned):
    manifest, _ = corpus
    reports = run_experiment_matrix(
        manifest, ["small-conv", "small-attn"], MICRO_TRAIN, COSTS, data=aligned
    )
    assert [r.architecture for r in reports] == ["small-conv", "small-attn"]
    n_test = len(manifest.split(Split.TEST))
    for r in reports:
        assert r.error is None
        assert r.weight_count > 0
        assert r.layer_count > 0
        c = r.confusion
        assert c.tp + c.tn + c.fp + c.fn + c.rejected == n_test


def test_matrix_reruns_identically(corpus, aligned):
    manifest, _ = corpus
    a = run_experiment_matrix(manifest, ["small-conv"], MICRO_TRAIN, COSTS, data=aligned)
    b = run_experiment_matrix(manifest, ["small-conv"], MICRO_TRAIN, COSTS, data=aligned)
    assert a == b


def test_matrix_marks_failed_rows_and_continues(corpus, aligned):
    manifest, _ = corpus
    reports = run_experiment_matrix(
        manifest, ["ConvNext-base", "small-conv"], MICRO_TRAIN, COSTS, data=aligned
    )
    assert len(reports) == 2
    failed, ok = reports
    assert failed.error is not None
    assert failed.accuracy is None
    assert failed.layer_count == 50
    assert failed.weight_count == 89_000_000
    assert ok.error is None


# The published comparison table, kept as a rendering/serialization fixture.
TABLE_ROWS = [
    ("ConvNext-small", 50, 50_000_000, 0.0354, 0.9816),
    ("ConvNext-base", 50, 89_000_000, 0.0, 0.9895),
    ("Swim-transformer base", 12, 88_000_000, 0.0813, 0.9770),
    ("Twins-SVT-base", 12, 56_000_000, 0.1046, 0.9694),
    ("Twins-SVT-large", 12, 99_000_000, 0.1215, 0.9001),
    ("Twins-PCPVT-large", 12, 76_000_000, 0.0434, 0.9865),
    ("ViT-S", 12, 22_000_000, 0.0354, 0.9591),
    ("ViT-L", 24, 307_000_000, 0.0330, 0.9858),
    ("AntiCounterfeit", 380, 133_000_000, 0.0306, 0.9971),
]


def test_reference_row_set_round_trips_and_renders():
    for name, layers, weights, rejection, accuracy in TABLE_ROWS:
        spec = get_spec(name)
        assert (spec.ref_layer_count, spec.ref_weight_count) == (layers, weights)
        report = EvalReport(
            architecture=name,
            layer_count=layers,
            weight_count=weights,
            rejection_rate=rejection,
            accuracy=accuracy,
            confusion=Confusion(0, 0, 0, 0, 0),
        )
        assert EvalReport.from_json_dict(report.to_json_dict()) == report
    assert format_weight_count(307_000_000) == "307M"
    assert format_weight_count(89_000_000) == "89M"
