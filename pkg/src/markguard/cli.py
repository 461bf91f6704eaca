"""Command line entry point: synth, train, eval, calibrate, curve, matrix, serve.

Exit codes: 0 success, 1 operational failure, 2 usage error.  Commands write
outputs to a temporary name and rename on success, so a failed run never
leaves a half-written artifact behind.
"""

from __future__ import annotations

import functools
import json
import sys
import uuid
from dataclasses import replace
from pathlib import Path

import click

from markguard.decision import (
    DEFAULT_REJECTION_BUDGETS,
    CostMatrix,
    ScoredSet,
    ThresholdBand,
    calibrate_band,
    evaluate,
    render_report_table,
    tradeoff_curve,
)


def _fail(message: str) -> "SystemExit":
    click.echo(f"error: {message}", err=True)
    return SystemExit(1)


def operational(fn):
    """Convert uncaught failures into exit code 1 with the error message."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (click.ClickException, click.Abort, SystemExit):
            raise
        except Exception as exc:
            raise _fail(f"{type(exc).__name__}: {exc}")

    return wrapper


def _write_text(path: Path, text: str) -> None:
    tmp = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
    tmp.write_text(text)
    tmp.replace(path)


def _write_json(path: Path, payload) -> None:
    _write_text(path, json.dumps(payload, indent=2) + "\n")


def _parse_costs(text: str) -> CostMatrix:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 3:
        raise click.BadParameter("costs must be three comma-separated numbers, e.g. 1,1,0.5")
    fg, fc, rej = (float(p) for p in parts)
    return CostMatrix(cost_false_genuine=fg, cost_false_counterfeit=fc, cost_reject=rej)


def _parse_band(text: str) -> ThresholdBand:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 2:
        raise click.BadParameter("band must be 'lower,upper', e.g. 0.45,0.55")
    return ThresholdBand(float(parts[0]), float(parts[1]), version="cli")


def _load_train_config(config_path, architecture, seed):
    from markguard.training import TrainConfig

    if config_path is not None:
        cfg = TrainConfig.from_json_dict(json.loads(Path(config_path).read_text()))
    else:
        cfg = TrainConfig()
    if architecture is not None:
        cfg = replace(cfg, architecture=architecture)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    return cfg


@click.group()
def main():
    """Brand-mark authentication workflows."""


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Generator config JSON.")
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Corpus output directory.")
@click.option("--seed", type=int, default=None, help="Override the generator seed.")
@operational
def synth(config_path, out_dir, seed):
    """Generate a synthetic labeled corpus (images + manifest)."""
    from markguard.synthdata import DESK_SCALE_CONFIG, GenConfig, generate_dataset

    cfg = DESK_SCALE_CONFIG if config_path is None else GenConfig.from_json_file(config_path)
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    out = Path(out_dir)
    if out.exists() and any(out.iterdir()):
        raise _fail(f"output directory {out} is not empty")
    # build the corpus next to the target, then move it into place whole
    staging = out.parent / f".{out.name}.{uuid.uuid4().hex}.tmp"
    staging.parent.mkdir(parents=True, exist_ok=True)
    try:
        manifest, _records = generate_dataset(cfg, staging)
    except BaseException:
        import shutil

        shutil.rmtree(staging, ignore_errors=True)
        raise
    if out.exists():
        out.rmdir()
    staging.replace(out)
    counts = manifest.counts()
    click.echo(f"wrote {sum(counts.values())} images to {out} (splits: {counts})")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(), help="Artifact output directory.")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Training config JSON.")
@click.option("--arch", "architecture", default=None, help="Architecture name, e.g. small-conv.")
@click.option("--kind", type=click.Choice(["classifier", "aligner"]), default="classifier")
@click.option("--seed", type=int, default=None)
@operational
def train(manifest_path, out_dir, config_path, architecture, kind, seed):
    """Train a scoring classifier (or the pose regressor) from a manifest."""
    from markguard.service import VALIDATION_SCORES_FILE
    from markguard.training import (
        DatasetManifest,
        Split,
        load_aligned_dataset,
        score_split,
        train_aligner,
        train_classifier,
    )

    manifest = DatasetManifest.from_csv(manifest_path)
    cfg = _load_train_config(config_path, architecture, seed)
    if kind == "aligner" and architecture is None:
        cfg = replace(cfg, architecture="pose-regressor")

    out = Path(out_dir)
    staging = out.parent / f".{out.name}.{uuid.uuid4().hex}.tmp"
    staging.parent.mkdir(parents=True, exist_ok=True)
    try:
        if kind == "classifier":
            data = load_aligned_dataset(manifest)
            artifact, log = train_classifier(manifest, cfg, data=data)
            artifact.save(staging)
            log.to_jsonl(staging / "train_log.jsonl")
            # scores for the service's recalibration endpoint
            score_split(artifact, data[Split.VAL]).to_csv(staging / VALIDATION_SCORES_FILE)
        else:
            artifact = train_aligner(manifest, cfg)
            artifact.save(staging)
    except BaseException:
        import shutil

        shutil.rmtree(staging, ignore_errors=True)
        raise
    if out.exists():
        if any(out.iterdir()):
            raise _fail(f"output directory {out} is not empty")
        out.rmdir()
    staging.replace(out)
    click.echo(f"trained {artifact.meta.architecture} -> {out} (version {artifact.meta.version})")


@main.command("eval")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--split", type=click.Choice(["train", "val", "test"]), default="test")
@click.option("--band", "band_text", default="0.5,0.5", help="Decision band as 'lower,upper'.")
@click.option("--out", "out_path", required=True, type=click.Path())
@operational
def eval_command(manifest_path, model_dir, split, band_text, out_path):
    """Score a manifest split with a saved model and report accuracy."""
    from markguard.training import DatasetManifest, ModelArtifact, Split, load_aligned_dataset, score_split

    band = _parse_band(band_text)
    manifest = DatasetManifest.from_csv(manifest_path)
    artifact = ModelArtifact.load(model_dir)
    data = load_aligned_dataset(manifest)
    scored = score_split(artifact, data[Split(split)])
    report = evaluate(scored, band, artifact.meta.to_json_dict())
    _write_json(Path(out_path), report.to_json_dict())
    accuracy = "undefined" if report.accuracy is None else f"{report.accuracy:.4f}"
    click.echo(f"accuracy {accuracy} at rejection {report.rejection_rate:.4f} -> {out_path}")


@main.command()
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--costs", "costs_text", required=True, help="cost_false_genuine,cost_false_counterfeit,cost_reject")
@click.option("--out", "out_path", required=True, type=click.Path())
@operational
def calibrate(scores_path, costs_text, out_path):
    """Pick the cost-minimal rejection band for a scored validation set."""
    costs = _parse_costs(costs_text)
    scored = ScoredSet.from_csv(scores_path)
    band = calibrate_band(scored, costs)
    _write_json(Path(out_path), {"lower": band.lower, "upper": band.upper, "version": band.version})
    click.echo(f"band [{band.lower:.6f}, {band.upper:.6f}] -> {out_path}")


@main.command()
@click.option("--scores", "scores_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(), help="Two-column table output.")
@click.option("--plot", "plot_path", type=click.Path(), default=None, help="Rendered accuracy-vs-rejection image.")
@operational
def curve(scores_path, out_path, plot_path):
    """Tabulate (and optionally plot) the accuracy/rejection tradeoff."""
    scored = ScoredSet.from_csv(scores_path)
    result = tradeoff_curve(scored, DEFAULT_REJECTION_BUDGETS)
    _write_text(Path(out_path), result.to_table())
    if plot_path is not None:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        xs = [p.achieved_rejection for p in result.points]
        ys = [p.best_accuracy for p in result.points]
        fig, ax = plt.subplots(figsize=(5, 4))
        ax.plot(xs, ys, marker="o")
        ax.set_xlabel("rejection rate")
        ax.set_ylabel("accuracy on accepted")
        ax.set_title("accuracy vs rejection")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        tmp = Path(plot_path).with_suffix(".tmp.png")
        fig.savefig(tmp)
        plt.close(fig)
        tmp.replace(plot_path)
    click.echo(f"{len(result.points)} budget points -> {out_path}")


@main.command()
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--arch", "arch_text", required=True, help="Comma-separated architecture names.")
@click.option("--costs", "costs_text", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Training config JSON.")
@click.option("--seed", type=int, default=None)
@operational
def matrix(manifest_path, arch_text, costs_text, out_path, config_path, seed):
    """Train and evaluate several backbones; write the comparison table."""
    from markguard.training import DatasetManifest, run_experiment_matrix

    manifest = DatasetManifest.from_csv(manifest_path)
    costs = _parse_costs(costs_text)
    architectures = [a.strip() for a in arch_text.split(",") if a.strip()]
    cfg = _load_train_config(config_path, None, seed)
    reports = run_experiment_matrix(manifest, architectures, cfg, costs)
    _write_text(Path(out_path), render_report_table(reports))
    click.echo(f"{len(reports)} rows -> {out_path}")


@main.command()
@click.option("--store-dir", required=True, type=click.Path(), help="Audit log and image store directory.")
@click.option("--artifacts", "artifact_dir", type=click.Path(exists=True, file_okay=False), default=None)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--payload-limit", type=int, default=None, help="Max request image bytes.")
@operational
def serve(store_dir, artifact_dir, host, port, payload_limit):
    """Run the authentication service in the foreground."""
    from markguard.service import DEFAULT_PAYLOAD_LIMIT, AuthService
    from markguard.service.app import serve as run_server

    service = AuthService(
        store_dir,
        artifact_dir=artifact_dir,
        payload_limit=DEFAULT_PAYLOAD_LIMIT if payload_limit is None else payload_limit,
    )
    click.echo(f"serving on http://{host}:{port} (store: {store_dir})")
    run_server(service, host=host, port=port)


@main.command("export-feedback")
@click.option("--store-dir", required=True, type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path())
@operational
def export_feedback(store_dir, out_path):
    """Write the expert-labeled retraining manifest from the audit logs."""
    from markguard.pipeline import GeometricAligner
    from markguard.service import AuthService

    # no scoring happens here; skip the template localizer construction
    service = AuthService(store_dir, localizer=_NullLocalizer(), aligner=GeometricAligner())
    manifest = service.export_retraining_manifest()
    out = Path(out_path)
    tmp = out.with_name(f".{out.name}.{uuid.uuid4().hex}.tmp")
    manifest.to_csv(tmp)
    tmp.replace(out)
    click.echo(f"{len(manifest.entries)} labeled images -> {out_path}")


class _NullLocalizer:
    def localize(self, image):
        from markguard.pipeline import NoMarkFound

        raise NoMarkFound("export-only service instance")


if __name__ == "__main__":
    sys.exit(main())
