"""Synthetic mark corpus generator.

Genuine marks are draws from a fixed nominal emblem plus small manufacturing
noise (stroke width, aspect, contour jitter, hue, stitch placement).
Counterfeits re-draw that noise and add a systematic offset of
``severity`` noise-sigmas along a fixed direction in four parameter
dimensions, so class separation is a controlled, known quantity: an oracle
thresholding the generator parameters achieves accuracy ~= Phi(severity).
Severity 0 makes the two classes identically distributed by construction.

Every image carries exact placement metadata: re-rendering a record from its
stored params/transform/seed reproduces the image byte for byte.
"""

from __future__ import annotations

import colorsys
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import cv2
import numpy as np
from PIL import Image, ImageDraw

from markguard.decision import Truth
from markguard.geometry import AffineParams, BBox, points_bbox
from markguard.pipeline.types import AuthImage
from markguard.training.manifest import (
    DatasetManifest,
    ManifestEntry,
    Split,
    assign_splits,
)

MARK_CANVAS = 192  # canonical mark raster, px
SCENE_SIZE = 320  # default capture canvas, px
_SS = 4  # supersampling factor for stroke-width fidelity

BACKGROUNDS = ("fabric_texture", "plain", "cluttered")

# Legitimate manufacturing noise, one sigma per perturbable dimension.
SIGMA_STROKE = 0.25  # px
SIGMA_ASPECT = 0.02
SIGMA_POINT = 0.012  # unit contour coords
SIGMA_HUE = 2.0  # degrees

# Counterfeit offsets move along this fixed direction: +stroke, +aspect,
# +hue, and contour point PERTURB_POINT shifted at PERTURB_POINT_ANGLE.
PERTURB_POINT = 2
PERTURB_POINT_ANGLE = 40.0  # degrees

_STITCH_COLOR = (236, 231, 219)
_STITCH_SPACING = 11.0  # px along contour, canonical scale
_STITCH_HALF_LEN = 2.6  # px
_STITCH_WIDTH = 1.5  # px


class OutOfFrame(ValueError):
    """Requested transform places the mark partly outside the canvas."""


@dataclass(frozen=True)
class MarkParams:
    """Parameters of one rendered emblem."""

    stroke_width: float  # px, canonical scale
    primary_color: tuple[float, float, float]  # RGB in [0, 255]
    aspect_ratio: float
    contour_control_points: tuple[tuple[float, float], ...]  # unit coords
    stitch_jitter_sigma: float  # px

    def __post_init__(self):
        if not self.stroke_width > 0:
            raise ValueError("stroke_width must be positive")
        if not self.aspect_ratio > 0:
            raise ValueError("aspect_ratio must be positive")
        if len(self.contour_control_points) < 6:
            raise ValueError("need at least 6 contour control points")
        if self.stitch_jitter_sigma < 0:
            raise ValueError("stitch_jitter_sigma must be non-negative")

    def to_json_dict(self) -> dict:
        return {
            "stroke_width": self.stroke_width,
            "primary_color": list(self.primary_color),
            "aspect_ratio": self.aspect_ratio,
            "contour_control_points": [list(p) for p in self.contour_control_points],
            "stitch_jitter_sigma": self.stitch_jitter_sigma,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "MarkParams":
        return cls(
            stroke_width=d["stroke_width"],
            primary_color=tuple(d["primary_color"]),
            aspect_ratio=d["aspect_ratio"],
            contour_control_points=tuple(tuple(p) for p in d["contour_control_points"]),
            stitch_jitter_sigma=d["stitch_jitter_sigma"],
        )


def _hsv_rgb(h_deg: float, s: float, v: float) -> tuple[float, float, float]:
    r, g, b = colorsys.hsv_to_rgb((h_deg % 360.0) / 360.0, s, v)
    return (r * 255.0, g * 255.0, b * 255.0)


def _rgb_hue(rgb: Sequence[float]) -> float:
    h, _, _ = colorsys.rgb_to_hsv(rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0)
    return h * 360.0


def _shift_hue(rgb: Sequence[float], delta_deg: float) -> tuple[float, float, float]:
    h, s, v = colorsys.rgb_to_hsv(rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0)
    r, g, b = colorsys.hsv_to_rgb((h + delta_deg / 360.0) % 1.0, s, v)
    return (r * 255.0, g * 255.0, b * 255.0)


_NOMINAL_HUE = 210.0
_NOMINAL_RADII = (1.00, 0.86, 1.04, 0.90, 1.00, 0.84, 1.06, 0.88)

NOMINAL_MARK = MarkParams(
    stroke_width=6.0,
    primary_color=_hsv_rgb(_NOMINAL_HUE, 0.62, 0.55),
    aspect_ratio=1.55,
    contour_control_points=tuple(
        (r * math.cos(2 * math.pi * i / 8), r * math.sin(2 * math.pi * i / 8))
        for i, r in enumerate(_NOMINAL_RADII)
    ),
    stitch_jitter_sigma=0.8,
)


@dataclass(frozen=True)
class PlacementRange:
    """Ranges for random mark placement; translation is fit to the frame."""

    scale_range: tuple[float, float] = (0.70, 1.15)
    rotation_deg: float = 25.0
    margin: float = 6.0

    def __post_init__(self):
        lo, hi = self.scale_range
        if not (0 < lo <= hi):
            raise ValueError("scale_range must be 0 < lo <= hi")
        if self.rotation_deg < 0 or self.margin < 0:
            raise ValueError("rotation_deg and margin must be non-negative")


@dataclass(frozen=True)
class GenConfig:
    """Corpus-level generation settings.

    ``n_genuine``/``n_counterfeit`` are class totals, distributed over
    train/val/test by ``split_fractions``.  ``severity`` is the counterfeit
    offset in legitimate-noise sigmas; 0 makes the classes identical.
    """

    n_genuine: int
    n_counterfeit: int
    severity: float
    seed: int
    placement: PlacementRange = PlacementRange()
    background: str = "fabric_texture"
    lighting_jitter: float = 0.05
    sensor_noise: float = 2.0
    split_fractions: tuple[float, float, float] = (0.625, 0.25, 0.125)

    def __post_init__(self):
        if self.n_genuine < 0 or self.n_counterfeit < 0:
            raise ValueError("counts must be non-negative")
        if self.severity < 0:
            raise ValueError("severity must be non-negative")
        if self.background not in BACKGROUNDS:
            raise ValueError(f"background must be one of {BACKGROUNDS}")
        if self.lighting_jitter < 0 or self.sensor_noise < 0:
            raise ValueError("noise magnitudes must be non-negative")

    def to_json_dict(self) -> dict:
        return {
            "n_genuine": self.n_genuine,
            "n_counterfeit": self.n_counterfeit,
            "severity": self.severity,
            "seed": self.seed,
            "placement": {
                "scale_range": list(self.placement.scale_range),
                "rotation_deg": self.placement.rotation_deg,
                "margin": self.placement.margin,
            },
            "background": self.background,
            "lighting_jitter": self.lighting_jitter,
            "sensor_noise": self.sensor_noise,
            "split_fractions": list(self.split_fractions),
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "GenConfig":
        p = d.get("placement", {})
        placement = PlacementRange(
            scale_range=tuple(p.get("scale_range", (0.70, 1.15))),
            rotation_deg=p.get("rotation_deg", 25.0),
            margin=p.get("margin", 6.0),
        )
        return cls(
            n_genuine=d["n_genuine"],
            n_counterfeit=d["n_counterfeit"],
            severity=d["severity"],
            seed=d["seed"],
            placement=placement,
            background=d.get("background", "fabric_texture"),
            lighting_jitter=d.get("lighting_jitter", 0.05),
            sensor_noise=d.get("sensor_noise", 2.0),
            split_fractions=tuple(d.get("split_fractions", (0.625, 0.25, 0.125))),
        )

    def to_json_file(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def from_json_file(cls, path) -> "GenConfig":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


# Desk-scale default: 2,000 train / 800 val / 400 test at severity 4.
DESK_SCALE_CONFIG = GenConfig(n_genuine=1600, n_counterfeit=1600, severity=4.0, seed=0)


@dataclass(frozen=True)
class SynthRecord:
    """Ground truth for one generated image."""

    path: str
    label: Truth
    split: Split
    true_bbox: BBox
    true_transform: AffineParams
    params_used: MarkParams
    rng_seed: int

    def to_json_dict(self) -> dict:
        return {
            "path": self.path,
            "label": self.label.value,
            "split": self.split.value,
            "true_bbox": self.true_bbox.to_json_dict(),
            "true_transform": self.true_transform.to_json_dict(),
            "params_used": self.params_used.to_json_dict(),
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SynthRecord":
        return cls(
            path=d["path"],
            label=Truth(d["label"]),
            split=Split(d["split"]),
            true_bbox=BBox.from_json_dict(d["true_bbox"]),
            true_transform=AffineParams.from_json_dict(d["true_transform"]),
            params_used=MarkParams.from_json_dict(d["params_used"]),
            rng_seed=d["rng_seed"],
        )


def write_records(records: Sequence[SynthRecord], path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r.to_json_dict()) + "\n")


def read_records(path) -> list[SynthRecord]:
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                out.append(SynthRecord.from_json_dict(json.loads(line)))
    return out


# ---------------------------------------------------------------------------
# Parameter draws


def _noisy_params(base: MarkParams, rng: np.random.Generator) -> MarkParams:
    """One draw of legitimate manufacturing noise around ``base``."""
    pts = np.asarray(base.contour_control_points, dtype=float)
    pts = pts + rng.normal(0.0, SIGMA_POINT, size=pts.shape)
    return replace(
        base,
        stroke_width=base.stroke_width + rng.normal(0.0, SIGMA_STROKE),
        aspect_ratio=base.aspect_ratio + rng.normal(0.0, SIGMA_ASPECT),
        primary_color=_shift_hue(base.primary_color, rng.normal(0.0, SIGMA_HUE)),
        contour_control_points=tuple(map(tuple, pts)),
    )


def draw_genuine_params(rng: np.random.Generator, base: MarkParams = NOMINAL_MARK) -> MarkParams:
    return _noisy_params(base, rng)


def perturb_counterfeit(
    params: MarkParams, severity: float, rng_seed: int
) -> MarkParams:
    """Counterfeit draw: fresh legitimate noise plus a fixed-direction offset.

    The offset is ``severity`` noise-sigmas in each of stroke width, aspect
    ratio, hue, and contour point PERTURB_POINT.  Severity 0 is exactly a
    genuine draw.
    """
    if severity < 0:
        raise ValueError("severity must be non-negative")
    rng = np.random.default_rng(rng_seed)
    out = _noisy_params(params, rng)
    if severity == 0:
        return out
    ang = math.radians(PERTURB_POINT_ANGLE)
    pts = np.asarray(out.contour_control_points, dtype=float)
    pts[PERTURB_POINT] += severity * SIGMA_POINT * np.array([math.cos(ang), math.sin(ang)])
    return replace(
        out,
        stroke_width=out.stroke_width + severity * SIGMA_STROKE,
        aspect_ratio=out.aspect_ratio + severity * SIGMA_ASPECT,
        primary_color=_shift_hue(out.primary_color, severity * SIGMA_HUE),
        contour_control_points=tuple(map(tuple, pts)),
    )


def _hue_delta(rgb: Sequence[float], ref: Sequence[float]) -> float:
    d = _rgb_hue(rgb) - _rgb_hue(ref)
    return (d + 180.0) % 360.0 - 180.0


def bayes_score(params: MarkParams, base: MarkParams = NOMINAL_MARK) -> float:
    """Whitened projection along the known counterfeit offset direction.

    Genuine draws score ~ N(0, 1); counterfeits at severity s score
    ~ N(2s, 1), so thresholding at s is the Bayes rule with accuracy Phi(s).
    """
    ang = math.radians(PERTURB_POINT_ANGLE)
    dp = np.asarray(params.contour_control_points[PERTURB_POINT]) - np.asarray(
        base.contour_control_points[PERTURB_POINT]
    )
    feats = (
        (params.stroke_width - base.stroke_width) / SIGMA_STROKE,
        (params.aspect_ratio - base.aspect_ratio) / SIGMA_ASPECT,
        _hue_delta(params.primary_color, base.primary_color) / SIGMA_HUE,
        float(dp @ np.array([math.cos(ang), math.sin(ang)])) / SIGMA_POINT,
    )
    return sum(feats) / 2.0


def bayes_oracle_accuracy(severity: float, n: int = 500, seed: int = 0) -> float:
    """Accuracy of the known-parameters Bayes rule at this severity."""
    ss = np.random.SeedSequence([seed, int(severity * 1000)])
    gen_rng = np.random.default_rng(ss.spawn(1)[0])
    cf_seeds = [int(c.generate_state(1, np.uint32)[0]) for c in ss.spawn(n)]
    threshold = severity  # midpoint of N(0,1) and N(2s,1) means
    correct = 0
    for i in range(n):
        g = draw_genuine_params(gen_rng)
        correct += bayes_score(g) <= threshold
        c = perturb_counterfeit(NOMINAL_MARK, severity, cf_seeds[i])
        correct += bayes_score(c) > threshold
    return correct / (2 * n)


# ---------------------------------------------------------------------------
# Rendering


def _catmull_rom_closed(points: np.ndarray, samples_per_seg: int = 30) -> np.ndarray:
    """Dense closed polyline through control points (centripetal-free CR)."""
    n = len(points)
    t = np.linspace(0.0, 1.0, samples_per_seg, endpoint=False)
    out = []
    for i in range(n):
        p0, p1, p2, p3 = (points[(i + k - 1) % n] for k in range(4))
        a = 2 * p1
        b = p2 - p0
        c = 2 * p0 - 5 * p1 + 4 * p2 - p3
        d = -p0 + 3 * p1 - 3 * p2 + p3
        seg = 0.5 * (
            a[None, :]
            + b[None, :] * t[:, None]
            + c[None, :] * t[:, None] ** 2
            + d[None, :] * t[:, None] ** 3
        )
        out.append(seg)
    return np.concatenate(out, axis=0)


def _emblem_contour(params: MarkParams, canvas: float) -> np.ndarray:
    """Dense contour in canonical mark pixels (canvas x canvas frame)."""
    pts = np.asarray(params.contour_control_points, dtype=float)
    sx = math.sqrt(params.aspect_ratio)
    scaled = pts * np.array([sx, 1.0 / sx]) * (0.26 * canvas)
    return _catmull_rom_closed(scaled) + canvas / 2.0


def _darker(rgb: Sequence[float], factor: float = 0.55) -> tuple[int, int, int]:
    return tuple(int(round(c * factor)) for c in rgb)


def _canonical_mark(params: MarkParams, stitch_rng: np.random.Generator) -> np.ndarray:
    """Render the emblem to an RGBA uint8 raster of MARK_CANVAS^2."""
    size = MARK_CANVAS * _SS
    contour = _emblem_contour(params, size)
    img = Image.new("RGBA", (size, size), (0, 0, 0, 0))
    draw = ImageDraw.Draw(img)

    fill = tuple(int(round(c)) for c in params.primary_color) + (255,)
    outline = _darker(params.primary_color) + (255,)
    poly = [tuple(p) for p in contour]
    draw.polygon(poly, fill=fill)
    draw.line(poly + [poly[0]], fill=outline, width=round(params.stroke_width * _SS), joint="curve")

    # Stitch dashes along an inner offset contour, jittered perpendicular
    # to the local tangent by stitch_jitter_sigma.
    center = contour.mean(axis=0)
    inner = center + (contour - center) * 0.88
    seg = np.linalg.norm(np.diff(inner, axis=0, append=inner[:1]), axis=1)
    arclen = np.concatenate([[0.0], np.cumsum(seg)])
    stations = np.arange(0.0, arclen[-1], _STITCH_SPACING * _SS)
    idx = np.searchsorted(arclen, stations) % len(inner)
    for i in idx:
        p = inner[i]
        tangent = inner[(i + 1) % len(inner)] - inner[i - 1]
        norm = np.linalg.norm(tangent)
        if norm == 0:
            continue
        tangent /= norm
        normal = np.array([-tangent[1], tangent[0]])
        p = p + normal * stitch_rng.normal(0.0, params.stitch_jitter_sigma * _SS)
        a = p - tangent * _STITCH_HALF_LEN * _SS
        b = p + tangent * _STITCH_HALF_LEN * _SS
        draw.line([tuple(a), tuple(b)], fill=_STITCH_COLOR + (255,), width=round(_STITCH_WIDTH * _SS))

    small = img.resize((MARK_CANVAS, MARK_CANVAS), Image.Resampling.BOX)
    return np.asarray(small, dtype=np.uint8)


def _content_bbox(rgba: np.ndarray, alpha_floor: int = 8) -> BBox:
    ys, xs = np.nonzero(rgba[:, :, 3] > alpha_floor)
    if len(xs) == 0:
        raise ValueError("mark raster is empty")
    return BBox(float(xs.min()), float(ys.min()), float(xs.max() + 1), float(ys.max() + 1))


def _background(kind: str, rng: np.random.Generator, size: int) -> np.ndarray:
    if kind == "plain":
        return np.full((size, size, 3), (208, 205, 200), dtype=np.float64)
    if kind == "fabric_texture":
        yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
        ph1, ph2 = rng.uniform(0, 2 * math.pi, size=2)
        period = 6.5
        weave = 0.5 * (
            np.sin(2 * math.pi * xx / period + ph1) + np.sin(2 * math.pi * yy / period + ph2)
        )
        base = np.array([192.0, 188.0, 179.0])
        img = base[None, None, :] * (1.0 + 0.05 * weave[:, :, None])
        img += rng.normal(0.0, 2.5, size=(size, size, 1))
        return cv2.blur(img, (3, 3))
    if kind == "cluttered":
        img = np.full((size, size, 3), (200, 198, 192), dtype=np.uint8)
        for _ in range(10):
            c = tuple(int(v) for v in rng.integers(110, 210, size=3))
            x0, y0 = rng.integers(0, size, size=2)
            w, h = rng.integers(20, 120, size=2)
            cv2.rectangle(img, (int(x0), int(y0)), (int(x0 + w), int(y0 + h)), c, -1)
        for _ in range(6):
            c = tuple(int(v) for v in rng.integers(80, 190, size=3))
            p1 = tuple(int(v) for v in rng.integers(0, size, size=2))
            p2 = tuple(int(v) for v in rng.integers(0, size, size=2))
            cv2.line(img, p1, p2, c, int(rng.integers(1, 4)))
        for _ in range(4):
            c = tuple(int(v) for v in rng.integers(110, 210, size=3))
            ctr = tuple(int(v) for v in rng.integers(0, size, size=2))
            cv2.circle(img, ctr, int(rng.integers(8, 40)), c, -1)
        return img.astype(np.float64)
    raise ValueError(f"unknown background kind: {kind}")


# Detection-bbox convention: a mark's bbox is its transformed canvas square
# (emblem plus canonical margin), not the tight ink box.  A capture that is
# exactly a canonical crop therefore has the full frame as its bbox.
CANVAS_BOX = BBox(0.0, 0.0, float(MARK_CANVAS), float(MARK_CANVAS))


def _sub_rngs(rng_seed: int):
    """Deterministic per-image streams: stitch, background, noise, placement."""
    stitch, bg, noise, placement = np.random.SeedSequence(rng_seed).spawn(4)
    return (
        np.random.default_rng(stitch),
        np.random.default_rng(bg),
        np.random.default_rng(noise),
        np.random.default_rng(placement),
    )


def _transformed_bbox(content: BBox, transform: AffineParams, canvas_size: int) -> BBox:
    m = transform.matrix(
        src_center=(MARK_CANVAS / 2.0, MARK_CANVAS / 2.0),
        dst_center=(canvas_size / 2.0, canvas_size / 2.0),
    )
    x0, y0, x1, y1 = content.as_tuple()
    corners = np.array([[x0, y0, 1], [x1, y0, 1], [x1, y1, 1], [x0, y1, 1]], dtype=float)
    return points_bbox((m @ corners.T).T[:, :2])


def mark_canvas_bbox(transform: AffineParams, canvas_size: int = SCENE_SIZE) -> BBox:
    """Ground-truth detection box: where the transformed mark canvas lands."""
    return _transformed_bbox(CANVAS_BOX, transform, canvas_size)


def _compose_scene(
    mark_rgba: np.ndarray,
    transform: AffineParams,
    background: str,
    bg_rng: np.random.Generator,
    noise_rng: np.random.Generator,
    lighting_jitter: float,
    sensor_noise: float,
    canvas_size: int,
) -> np.ndarray:
    m = transform.matrix(
        src_center=(MARK_CANVAS / 2.0, MARK_CANVAS / 2.0),
        dst_center=(canvas_size / 2.0, canvas_size / 2.0),
    )[:2, :]
    warped = cv2.warpAffine(
        mark_rgba,
        m,
        (canvas_size, canvas_size),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=(0, 0, 0, 0),
    )
    scene = _background(background, bg_rng, canvas_size)
    alpha = warped[:, :, 3:4].astype(np.float64) / 255.0
    scene = scene * (1.0 - alpha) + warped[:, :, :3].astype(np.float64) * alpha

    if lighting_jitter > 0:
        gain = 1.0 + noise_rng.uniform(-lighting_jitter, lighting_jitter)
        tilt = noise_rng.uniform(-lighting_jitter, lighting_jitter)
        ramp = 1.0 + tilt * (np.arange(canvas_size) / (canvas_size - 1) - 0.5)
        scene = scene * gain * ramp[None, :, None]
    if sensor_noise > 0:
        scene = scene + noise_rng.normal(0.0, sensor_noise, size=scene.shape)
    return np.clip(np.rint(scene), 0, 255).astype(np.uint8)


def render_mark(
    params: MarkParams,
    transform: AffineParams,
    background: str = "plain",
    rng_seed: int = 0,
    *,
    lighting_jitter: float = 0.0,
    sensor_noise: float = 0.0,
    canvas_size: int = SCENE_SIZE,
) -> AuthImage:
    """Render one capture: emblem warped onto a background, plus noise.

    Deterministic for fixed arguments.  Raises OutOfFrame when the
    transformed mark does not lie fully inside the canvas.
    """
    stitch_rng, bg_rng, noise_rng, _ = _sub_rngs(rng_seed)
    mark = _canonical_mark(params, stitch_rng)
    bbox = _transformed_bbox(CANVAS_BOX, transform, canvas_size)
    if not bbox.inside(canvas_size, canvas_size):
        raise OutOfFrame(f"mark bbox {bbox.as_tuple()} exceeds {canvas_size}px canvas")
    pixels = _compose_scene(
        mark, transform, background, bg_rng, noise_rng, lighting_jitter, sensor_noise, canvas_size
    )
    return AuthImage(pixels=pixels)


# ---------------------------------------------------------------------------
# Dataset generation


def _record_seed(child: np.random.SeedSequence) -> int:
    return int(child.generate_state(1, np.uint64)[0])


def _sample_transform(
    placement: PlacementRange,
    place_rng: np.random.Generator,
    canvas_size: int,
) -> AffineParams:
    scale = place_rng.uniform(*placement.scale_range)
    rotation = place_rng.uniform(-placement.rotation_deg, placement.rotation_deg)
    base = AffineParams(rotation=rotation, scale=scale)
    b0 = _transformed_bbox(CANVAS_BOX, base, canvas_size)
    lo_dx = placement.margin - b0.x0
    hi_dx = canvas_size - placement.margin - b0.x1
    lo_dy = placement.margin - b0.y0
    hi_dy = canvas_size - placement.margin - b0.y1
    dx = place_rng.uniform(lo_dx, hi_dx) if lo_dx < hi_dx else 0.0
    dy = place_rng.uniform(lo_dy, hi_dy) if lo_dy < hi_dy else 0.0
    return replace(base, translation=(dx, dy))


def generate_dataset(cfg: GenConfig, out_dir) -> tuple[DatasetManifest, list[SynthRecord]]:
    """Write a synthetic corpus and its metadata under ``out_dir``.

    Layout: images/<split>/<label>_<idx>.png, manifest.csv, records.jsonl,
    gen_config.json.  Per-record seeds come from spawning the config seed's
    SeedSequence, so parallel or partial regeneration yields identical bytes.
    """
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)

    plan = [(Truth.GENUINE, i, s) for i, s in enumerate(assign_splits(cfg.n_genuine, cfg.split_fractions))]
    plan += [
        (Truth.COUNTERFEIT, i, s)
        for i, s in enumerate(assign_splits(cfg.n_counterfeit, cfg.split_fractions))
    ]
    children = np.random.SeedSequence(cfg.seed).spawn(len(plan))

    entries: list[ManifestEntry] = []
    records: list[SynthRecord] = []
    for (label, idx, split), child in zip(plan, children):
        seed = _record_seed(child)
        stitch_rng, bg_rng, noise_rng, place_rng = _sub_rngs(seed)
        if label is Truth.GENUINE:
            params = draw_genuine_params(np.random.default_rng(child.spawn(1)[0]))
        else:
            params = perturb_counterfeit(
                NOMINAL_MARK, cfg.severity, _record_seed(child.spawn(1)[0])
            )
        mark = _canonical_mark(params, stitch_rng)
        transform = _sample_transform(cfg.placement, place_rng, SCENE_SIZE)
        bbox = _transformed_bbox(CANVAS_BOX, transform, SCENE_SIZE)
        pixels = _compose_scene(
            mark,
            transform,
            cfg.background,
            bg_rng,
            noise_rng,
            cfg.lighting_jitter,
            cfg.sensor_noise,
            SCENE_SIZE,
        )

        rel = f"images/{split.value}/{label.value}_{idx:05d}.png"
        path = out_dir / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        # low compression: encode speed matters more than corpus size here
        Image.fromarray(pixels, mode="RGB").save(path, compress_level=1)

        entries.append(ManifestEntry(rel, label, split, source="synthetic"))
        records.append(
            SynthRecord(
                path=rel,
                label=label,
                split=split,
                true_bbox=bbox,
                true_transform=transform,
                params_used=params,
                rng_seed=seed,
            )
        )

    manifest = DatasetManifest(entries=tuple(entries), seed=cfg.seed, base_dir=str(out_dir))
    manifest.to_csv(out_dir / "manifest.csv")
    write_records(records, out_dir / "records.jsonl")
    cfg.to_json_file(out_dir / "gen_config.json")
    return manifest, records
