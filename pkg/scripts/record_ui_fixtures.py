"""Snapshot service responses for the operator console's contract tests.

Runs the HTTP app in-process against deterministic stand-ins and writes
every response body byte-for-byte under frontend/tests/fixtures/, plus
an index.json mapping fixture name -> status code and body file. The
console tests replay these bytes through a local HTTP server, so they
exercise the real wire format without needing Python at test time.

Rerun after any change to the wire format:

    python3 scripts/record_ui_fixtures.py
"""

from __future__ import annotations

import argparse
import io
import json
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from fastapi.testclient import TestClient
from PIL import Image

from markguard.decision import ScoredSet, ThresholdBand
from markguard.pipeline.run import ModelHandle
from markguard.pipeline.types import AffineParams, AlignedMark, AuthImage, BBox, MarkDetection
from markguard.service import VALIDATION_SCORES_FILE, AuthService, create_app
from markguard.training import ModelArtifact, ModelMeta
from markguard.training import nets

FIXTURE_MODEL_VERSION = "m-fixture01"


def _png_bytes(value: int, size: int = 64) -> bytes:
    arr = np.full((size, size, 3), value, dtype=np.uint8)
    buf = io.BytesIO()
    Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


@dataclass(frozen=True)
class _CenterLocalizer:
    def localize(self, image: AuthImage) -> MarkDetection:
        return MarkDetection(bbox=BBox(8.0, 8.0, 56.0, 56.0), confidence=0.9)


@dataclass(frozen=True)
class _LevelAligner:
    """Flat canonical crop at the source image's mean intensity."""

    def align(self, image: AuthImage, detection: MarkDetection) -> AlignedMark:
        level = float(image.pixels.mean()) / 255.0
        return AlignedMark(
            pixels=np.full((224, 224, 3), level, dtype=np.float32),
            applied_transform=AffineParams.identity(),
        )


def _mean_score(pixels: np.ndarray) -> float:
    return float(pixels.mean())


def _tiny_artifact() -> ModelArtifact:
    torch.manual_seed(0)
    net = nets.build("small-conv")
    meta = ModelMeta(
        architecture="small-conv",
        layer_count=nets.layer_count(net),
        weight_count=nets.weight_count(net),
        version=FIXTURE_MODEL_VERSION,
        train_seed=0,
    )
    return ModelArtifact.from_network(net, meta)


def record(out_dir: Path) -> dict:
    out_dir.mkdir(parents=True, exist_ok=True)
    index: dict[str, dict] = {}

    def save(name: str, response) -> dict:
        body_file = f"{name}.body"
        (out_dir / body_file).write_bytes(response.content)
        index[name] = {"status": response.status_code, "body": body_file}
        return json.loads(response.content)

    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        artifact_dir = root / "artifacts" / FIXTURE_MODEL_VERSION
        _tiny_artifact().save(artifact_dir)
        # overlapping scores so the tradeoff table has distinct rows
        validation = ScoredSet.of(
            [(0.05, "counterfeit"), (0.2, "counterfeit"), (0.38, "genuine"),
             (0.45, "counterfeit"), (0.55, "genuine"), (0.62, "counterfeit"),
             (0.8, "genuine"), (0.95, "genuine")]
        )
        validation.to_csv(artifact_dir / VALIDATION_SCORES_FILE)

        service = AuthService(
            root / "store",
            artifact_dir=root / "artifacts",
            localizer=_CenterLocalizer(),
            aligner=_LevelAligner(),
        )
        client = TestClient(create_app(service))

        # before any model is active
        save("error_no_model", client.post(
            "/v1/authenticate",
            files={"image": ("probe.png", _png_bytes(128), "image/png")},
        ))

        save("activate", client.post(f"/v1/models/{FIXTURE_MODEL_VERSION}/activate"))
        save("models", client.get("/v1/models"))
        save("thresholds", client.put(
            "/v1/thresholds",
            json={"cost_false_genuine": 1.0, "cost_false_counterfeit": 1.0, "cost_reject": 0.5},
        ))
        save("tradeoff", client.get("/v1/tradeoff"))

        # controlled verdicts: score is the flat image's mean level
        service.install_snapshot(
            ModelHandle("m-live02", _mean_score), ThresholdBand(0.2, 0.8, version="t-live02")
        )

        def authenticate(name: str, value: int, device: str, venue: str) -> dict:
            return save(name, client.post(
                "/v1/authenticate",
                files={"image": (f"{name}.png", _png_bytes(value), "image/png")},
                data={"device_id": device, "venue": venue},
            ))

        genuine = authenticate("authenticate_genuine", 240, "desk-1", "retail")
        authenticate("authenticate_reject", 128, "desk-1", "customs")
        authenticate("authenticate_counterfeit", 20, "kiosk-2", "returns_facility")

        save("feedback", client.post("/v1/feedback", json={
            "request_id": genuine["request_id"],
            "expert_label": "genuine",
            "submitter": "console",
        }))

        save("error_unknown_request", client.post("/v1/feedback", json={
            "request_id": "no-such-request",
            "expert_label": "genuine",
            "submitter": "console",
        }))
        save("error_bad_venue", client.post(
            "/v1/authenticate",
            files={"image": ("probe.png", _png_bytes(128), "image/png")},
            data={"venue": "mars"},
        ))
        save("error_bad_label", client.post("/v1/feedback", json={
            "request_id": genuine["request_id"],
            "expert_label": "dubious",
            "submitter": "console",
        }))
        save("error_unknown_model", client.post("/v1/models/m-missing/activate"))

        save("metrics", client.get("/v1/metrics"))

    with open(out_dir / "index.json", "w") as fh:
        json.dump(index, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return index


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    default_out = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"
    parser.add_argument("--out", type=Path, default=default_out)
    args = parser.parse_args()
    index = record(args.out)
    for name, entry in sorted(index.items()):
        print(f"{entry['status']}  {name} -> {entry['body']}")


if __name__ == "__main__":
    main()
