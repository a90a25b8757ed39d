"""Synthetic gaze sessions with known ground truth.

The generator produces a trace from a chosen gaze distribution and the
renderer draws it as a frame sequence (game pane filled with structured
noise, gaze pane black except for the marker disk). Running extraction
over the rendered frames and comparing against the recorded ground truth
exercises the whole pipeline end to end.

Determinism: everything derives from the spec's 64-bit seed through
numpy's default PCG64 generator; the generator identity is recorded in
the ground-truth record. Dropout and mixture allocation use largest-
remainder counting rather than per-frame coin flips, so ground-truth
counts are exact.
"""

from __future__ import annotations

import io
import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Union

import numpy as np

from .detect import GazeSample, GazeTrace, MarkerSpec
from .ingest import DEFAULT_LAYOUT, RecordingLayout
from .roi import RoiLayout, classify, default_roi_layout


@dataclass(frozen=True)
class GaussianGaze:
    """Independent per-axis normal gaze positions, rejection-sampled into
    the renderable scene area."""

    mean_x: float
    mean_y: float
    sigma_x: float
    sigma_y: float

    def __post_init__(self):
        if self.sigma_x < 0 or self.sigma_y < 0:
            raise ValueError("sigma must be nonnegative")


@dataclass(frozen=True)
class RoiMixture:
    """Gaze positions drawn uniformly inside layout regions, with exact
    per-region sample counts proportional to the weights."""

    weights: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if not self.weights:
            raise ValueError("mixture needs at least one region weight")
        total = sum(w for _, w in self.weights)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"mixture weights must sum to 1, got {total}")
        if any(w < 0 for _, w in self.weights):
            raise ValueError("mixture weights must be nonnegative")

    @classmethod
    def from_mapping(cls, weights: Mapping[str, float]) -> "RoiMixture":
        # Sorted so the allocation is independent of mapping order.
        return cls(tuple(sorted(weights.items())))


@dataclass
class SynthSpec:
    n_frames: int
    distribution: Union[GaussianGaze, RoiMixture]
    dropout: float = 0.0
    seed: int = 0
    layout: RecordingLayout = DEFAULT_LAYOUT
    roi_layout: RoiLayout = field(default_factory=default_roi_layout)
    marker_radius: int = 6
    marker_color: tuple[int, int, int] = (0, 255, 0)
    marker_spec: MarkerSpec = field(default_factory=MarkerSpec)

    def __post_init__(self):
        if self.n_frames < 0:
            raise ValueError("n_frames must be nonnegative")
        if not (0.0 <= self.dropout < 1.0):
            raise ValueError("dropout must be in [0, 1)")
        if self.marker_radius < 1:
            raise ValueError("marker radius must be >= 1")
        pane = self.layout.gaze_pane
        if (pane.w, pane.h) != (self.roi_layout.scene_width, self.roi_layout.scene_height):
            raise ValueError(
                f"gaze pane {pane.w}x{pane.h} does not match ROI scene "
                f"{self.roi_layout.scene_width}x{self.roi_layout.scene_height}"
            )
        if not self.marker_spec.matches(*self.marker_color):
            raise ValueError(
                f"marker color {self.marker_color} is not marker-colored under the "
                "detection thresholds; the rendered disk would be undetectable"
            )


@dataclass(frozen=True)
class GroundTruthFrame:
    frame_id: int
    valid: bool
    x: Optional[float]  # exact real-valued position, None when invalid
    y: Optional[float]
    roi: Optional[str]


@dataclass
class GroundTruth:
    """Exact record of what a synthetic session contains."""

    generator: str
    seed: int
    frames: list[GroundTruthFrame]
    label_counts: dict[str, int]

    def valid_points(self) -> np.ndarray:
        return np.array(
            [(f.x, f.y) for f in self.frames if f.valid], dtype=float
        ).reshape(-1, 2)

    def label_fractions(self) -> dict[str, float]:
        total = sum(self.label_counts.values())
        return {label: count / total for label, count in self.label_counts.items()}


def allocate_counts(weights: list[float], n: int) -> list[int]:
    """Split n into integer counts proportional to weights.

    Largest-remainder rule: floor each share, then hand remaining units to
    the largest fractional parts (ties broken by list position). Counts
    always sum to exactly n.
    """
    shares = [w * n for w in weights]
    counts = [math.floor(s + 1e-9) for s in shares]
    remainder = n - sum(counts)
    if remainder < 0:
        raise ValueError("weights must not sum to more than 1")
    order = sorted(range(len(weights)), key=lambda i: (counts[i] - shares[i], i))
    for i in range(remainder):
        counts[order[i]] += 1
    return counts


def _generator_id() -> str:
    return f"numpy.random.default_rng(PCG64) numpy=={np.__version__}"


def gen_trace(spec: SynthSpec) -> tuple[GazeTrace, GroundTruth]:
    """Generate a trace plus its exact ground truth, deterministically.

    Sampling is inset from the scene edges by the marker radius so the
    rendered disk always stays inside the gaze pane. Gaussian draws are
    rejected and resampled until in bounds; mixture draws are uniform over
    the integer pixels of the chosen region.
    """
    rng = np.random.default_rng(spec.seed)
    width, height = spec.roi_layout.scene_width, spec.roi_layout.scene_height
    inset = spec.marker_radius
    lo_x, hi_x = inset, width - 1 - inset
    lo_y, hi_y = inset, height - 1 - inset
    if lo_x > hi_x or lo_y > hi_y:
        raise ValueError(f"scene {width}x{height} too small for marker radius {inset}")

    n = spec.n_frames
    n_invalid = allocate_counts([spec.dropout, 1.0 - spec.dropout], n)[0]
    invalid_ids = set(np.sort(rng.choice(n, size=n_invalid, replace=False)).tolist()) if n else set()
    n_valid = n - n_invalid

    real_points: list[tuple[float, float]] = []
    intended: list[Optional[str]] = []
    if isinstance(spec.distribution, GaussianGaze):
        dist = spec.distribution
        remaining = n_valid
        while remaining > 0:
            xs = rng.normal(dist.mean_x, dist.sigma_x, remaining)
            ys = rng.normal(dist.mean_y, dist.sigma_y, remaining)
            ok = (xs >= lo_x) & (xs <= hi_x) & (ys >= lo_y) & (ys <= hi_y)
            real_points.extend(zip(xs[ok].tolist(), ys[ok].tolist()))
            remaining = n_valid - len(real_points)
        intended = [None] * n_valid
    else:
        mixture = spec.distribution
        regions = {r.name: r for r in spec.roi_layout.regions}
        names = [name for name, _ in mixture.weights]
        for name in names:
            if name not in regions:
                raise ValueError(f"mixture weight names unknown region {name!r}")
            rect = regions[name].rect
            if rect.x < lo_x or rect.y < lo_y or rect.right - 1 > hi_x or rect.bottom - 1 > hi_y:
                raise ValueError(
                    f"region {name!r} is closer than the marker radius ({inset} px) "
                    "to the scene edge; the disk would exit the pane"
                )
        counts = allocate_counts([w for _, w in mixture.weights], n_valid)
        labels = np.repeat(np.arange(len(names)), counts)
        labels = labels[rng.permutation(n_valid)]
        for idx in labels:
            rect = regions[names[idx]].rect
            px = int(rng.integers(rect.x, rect.right))
            py = int(rng.integers(rect.y, rect.bottom))
            real_points.append((float(px), float(py)))
            intended.append(names[idx])

    samples: list[GazeSample] = []
    frames: list[GroundTruthFrame] = []
    label_counts: dict[str, int] = {}
    cursor = 0
    for fid in range(n):
        if fid in invalid_ids:
            samples.append(GazeSample.invalid(fid))
            frames.append(GroundTruthFrame(fid, False, None, None, None))
            continue
        gx, gy = real_points[cursor]
        px = int(math.floor(gx + 0.5))
        py = int(math.floor(gy + 0.5))
        label = intended[cursor]
        if label is None:
            label = classify((px, py), spec.roi_layout)
        cursor += 1
        samples.append(GazeSample(frame_id=fid, x=px, y=py, valid=True))
        frames.append(GroundTruthFrame(fid, True, gx, gy, label))
        label_counts[label] = label_counts.get(label, 0) + 1

    trace = GazeTrace(
        samples=samples,
        scene_width=width,
        scene_height=height,
        participant_id="synthetic",
        trial_id=f"seed{spec.seed}",
        nominal_rate=90.0,
    )
    truth = GroundTruth(
        generator=_generator_id(), seed=spec.seed, frames=frames, label_counts=label_counts
    )
    return trace, truth


def _disk_offsets(radius: int) -> tuple[np.ndarray, np.ndarray]:
    span = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(span, span, indexing="ij")
    inside = dy**2 + dx**2 <= radius**2
    return dy[inside], dx[inside]


def _neutralize(noise: np.ndarray, spec: MarkerSpec) -> None:
    """Rewrite marker-colored noise pixels so detection cannot key on them."""
    hot = spec.mask(noise)
    if not hot.any():
        return
    if spec.r_max < 255:
        noise[..., 0][hot] = spec.r_max + 1
    elif spec.g_min > 0:
        noise[..., 1][hot] = spec.g_min - 1
    elif spec.b_max < 255:
        noise[..., 2][hot] = spec.b_max + 1
    elif spec.r_min > 0:
        noise[..., 0][hot] = spec.r_min - 1
    else:
        raise ValueError("marker thresholds admit every color; cannot render clean noise")


def _noise_pane(rng: np.random.Generator, w: int, h: int, spec: MarkerSpec) -> np.ndarray:
    noise = rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)
    # Sprinkle solid white tiles: game HUDs are full of white, and white
    # must never read as the marker.
    for ty in range(0, h - 8, 64):
        for tx in range(0, w - 8, 64):
            noise[ty : ty + 8, tx : tx + 8] = 255
    _neutralize(noise, spec)
    return noise


def render_frames(
    trace: GazeTrace,
    spec: SynthSpec,
    out_dir: Path | str,
    image_format: str = "ppm",
) -> None:
    """Render a trace as one lossless raster file per frame.

    Filenames are ``f0000.<ext>`` style (zero-padded, lexicographic order
    equals frame order). The game pane holds the session's structured
    noise, the gaze pane is black except for a filled marker disk at each
    valid sample's position. A disk that would cross the pane border is an
    error; :func:`gen_trace` insets its sampling to prevent that.
    """
    if image_format not in ("ppm", "png"):
        raise ValueError(f"unsupported image format {image_format!r}")
    layout = spec.layout
    pane = layout.gaze_pane
    if (trace.scene_width, trace.scene_height) != (pane.w, pane.h):
        raise ValueError("trace scene does not match the layout gaze pane")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    template = np.zeros((layout.canvas_height, layout.canvas_width, 3), dtype=np.uint8)
    gp = layout.game_pane
    noise_rng = np.random.default_rng((spec.seed, 0x67616D65))
    template[gp.y : gp.bottom, gp.x : gp.right] = _noise_pane(
        noise_rng, gp.w, gp.h, spec.marker_spec
    )

    radius = spec.marker_radius
    dy, dx = _disk_offsets(radius)
    color = np.array(spec.marker_color, dtype=np.uint8)
    pad = max(4, len(str(max(len(trace.samples) - 1, 0))))
    header = b"P6\n%d %d\n255\n" % (layout.canvas_width, layout.canvas_height)

    def encode(canvas: np.ndarray) -> bytes:
        if image_format == "ppm":
            return header + canvas.tobytes()
        from PIL import Image

        buf = io.BytesIO()
        Image.fromarray(canvas).save(buf, format="PNG")
        return buf.getvalue()

    # Frame content is computed sequentially (deterministic); only the
    # independent file writes overlap, with a bounded in-flight window.
    with ThreadPoolExecutor(max_workers=4) as pool:
        pending: deque = deque()
        for s in trace.samples:
            canvas = template.copy()
            if s.valid:
                if not (
                    radius <= s.x <= pane.w - 1 - radius
                    and radius <= s.y <= pane.h - 1 - radius
                ):
                    raise ValueError(
                        f"frame {s.frame_id}: disk at ({s.x}, {s.y}) with radius {radius} "
                        "would exit the gaze pane"
                    )
                canvas[pane.y + s.y + dy, pane.x + s.x + dx] = color
            path = out / f"f{s.frame_id:0{pad}d}.{image_format}"
            pending.append(pool.submit(path.write_bytes, encode(canvas)))
            if len(pending) >= 8:
                pending.popleft().result()
        for future in pending:
            future.result()


GROUND_TRUTH_HEADER = "frame_id,valid,x,y,roi"


def write_ground_truth_csv(truth: GroundTruth, path: Path | str) -> None:
    """Persist a ground-truth record (generator identity in a comment row)."""
    lines = [f"# generator: {truth.generator}; seed: {truth.seed}", GROUND_TRUTH_HEADER]
    for f in truth.frames:
        if f.valid:
            lines.append(f"{f.frame_id},1,{f.x!r},{f.y!r},{f.roi}")
        else:
            lines.append(f"{f.frame_id},0,,,")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")
