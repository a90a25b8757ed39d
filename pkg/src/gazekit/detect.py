"""Gaze-marker detection.

The overlay software renders the player's gaze as a colored tracking dot
in the gaze pane. Detection thresholds each frame with a per-channel
color rule, keeps 4-connected components within a plausible area band and
takes the centroid of the largest one. Frames without a surviving
component produce invalid samples; there is no temporal smoothing or
gap interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from .ingest import FrameSource, RecordingLayout


@dataclass(frozen=True)
class MarkerSpec:
    """Per-channel min/max color rule plus an area band for marker blobs.

    Defaults target the green tracking dot: strong green, little red and
    blue. The white gaze dot is deliberately not used because white
    collides with game UI elements.
    """

    r_min: int = 0
    r_max: int = 100
    g_min: int = 200
    g_max: int = 255
    b_min: int = 0
    b_max: int = 100
    min_blob_area: int = 4
    max_blob_area: Optional[int] = None

    def __post_init__(self):
        for ch in "rgb":
            lo, hi = getattr(self, f"{ch}_min"), getattr(self, f"{ch}_max")
            if not (0 <= lo <= hi <= 255):
                raise ValueError(f"channel {ch}: need 0 <= min <= max <= 255, got [{lo}, {hi}]")
        if self.min_blob_area < 1:
            raise ValueError("min_blob_area must be >= 1")
        if self.max_blob_area is not None and self.max_blob_area < self.min_blob_area:
            raise ValueError("max_blob_area must be >= min_blob_area")

    def matches(self, r: int, g: int, b: int) -> bool:
        return (
            self.r_min <= r <= self.r_max
            and self.g_min <= g <= self.g_max
            and self.b_min <= b <= self.b_max
        )

    def mask(self, rgb: np.ndarray) -> np.ndarray:
        """Boolean mask of marker-colored pixels."""
        r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
        return (
            (r >= self.r_min) & (r <= self.r_max)
            & (g >= self.g_min) & (g <= self.g_max)
            & (b >= self.b_min) & (b <= self.b_max)
        )


@dataclass(frozen=True)
class GazeSample:
    """One frame's gaze reading in game-scene pixels.

    When ``valid`` is false the coordinates are meaningless placeholders
    (normalized to 0) and must never feed any metric.
    """

    frame_id: int
    x: int
    y: int
    valid: bool
    roi: Optional[str] = None

    def __post_init__(self):
        if self.frame_id < 0:
            raise ValueError(f"frame id must be nonnegative, got {self.frame_id}")

    @classmethod
    def invalid(cls, frame_id: int) -> "GazeSample":
        return cls(frame_id=frame_id, x=0, y=0, valid=False, roi=None)


@dataclass
class GazeTrace:
    """Ordered gaze samples for one recorded session."""

    samples: list[GazeSample]
    scene_width: int
    scene_height: int
    participant_id: str = ""
    group: str = "unspecified"
    trial_id: str = ""
    nominal_rate: float = 90.0

    def __post_init__(self):
        last = -1
        for s in self.samples:
            if s.frame_id <= last:
                raise ValueError(
                    f"frame ids must be strictly increasing, got {s.frame_id} after {last}"
                )
            last = s.frame_id
            if s.valid and not (0 <= s.x < self.scene_width and 0 <= s.y < self.scene_height):
                raise ValueError(
                    f"frame {s.frame_id}: valid sample ({s.x}, {s.y}) outside "
                    f"{self.scene_width}x{self.scene_height} scene"
                )

    @property
    def n_valid(self) -> int:
        return sum(1 for s in self.samples if s.valid)

    def valid_samples(self) -> list[GazeSample]:
        return [s for s in self.samples if s.valid]


def detect_marker(gaze_pane: np.ndarray, spec: MarkerSpec) -> Optional[tuple[int, int]]:
    """Locate the tracking dot in one gaze-pane frame.

    Returns the centroid of the largest 4-connected marker-colored
    component within the spec's area band, rounded half-up to integer
    pixels, or ``None`` when nothing qualifies. Ties on area go to the
    component whose top-left-most pixel comes first in (y, x) order, so
    the result is deterministic.
    """
    if gaze_pane.ndim != 3 or gaze_pane.shape[0] < 1 or gaze_pane.shape[1] < 1:
        raise ValueError("gaze pane must be a non-empty (h, w, 3) buffer")
    mask = spec.mask(gaze_pane)
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        return None
    cols = np.flatnonzero(mask.any(axis=0))
    y0, y1 = rows[0], rows[-1] + 1
    x0, x1 = cols[0], cols[-1] + 1
    # Label only the bounding window of candidate pixels; 4-connectivity
    # is scipy's default structure in 2-D.
    window = mask[y0:y1, x0:x1]
    labels, n_labels = ndimage.label(window)
    if n_labels == 0:
        return None
    areas = np.bincount(labels.ravel())[1:]
    max_area = spec.max_blob_area if spec.max_blob_area is not None else np.inf
    keep = np.flatnonzero((areas >= spec.min_blob_area) & (areas <= max_area)) + 1
    if keep.size == 0:
        return None
    best_area = areas[keep - 1].max()
    candidates = keep[areas[keep - 1] == best_area]
    if candidates.size == 1:
        chosen = candidates[0]
    else:
        # First marker pixel in row-major scan order == smallest (y, x).
        flat = labels.ravel()
        chosen = min(candidates, key=lambda lab: int(np.argmax(flat == lab)))
    ys, xs = np.nonzero(labels == chosen)
    cx = float(xs.mean()) + x0
    cy = float(ys.mean()) + y0
    return int(math.floor(cx + 0.5)), int(math.floor(cy + 0.5))


def extract_trace(
    source: FrameSource,
    layout: RecordingLayout,
    spec: MarkerSpec,
    participant_id: str = "",
    group: str = "unspecified",
    trial_id: str = "",
    nominal_rate: float = 90.0,
) -> GazeTrace:
    """Run marker detection over every frame of a source.

    Produces exactly one sample per frame. Detection happens on the gaze
    pane crop, so pane-local coordinates are already relative to the gaze
    pane origin and serve directly as game-scene coordinates (both panes
    share the same width by layout invariant). Undetected frames yield
    invalid samples.
    """
    if (source.width, source.height) != (layout.canvas_width, layout.canvas_height):
        raise ValueError(
            f"source is {source.width}x{source.height} but layout declares a "
            f"{layout.canvas_width}x{layout.canvas_height} canvas"
        )
    pane = layout.gaze_pane
    samples: list[GazeSample] = []
    for index, frame in source:
        h, w = frame.shape[:2]
        if (w, h) != (layout.canvas_width, layout.canvas_height):
            raise ValueError(
                f"frame {index}: {w}x{h} does not match the declared canvas"
            )
        crop = frame[pane.y : pane.bottom, pane.x : pane.right]
        point = detect_marker(crop, spec)
        if point is None:
            samples.append(GazeSample.invalid(index))
        else:
            samples.append(GazeSample(frame_id=index, x=point[0], y=point[1], valid=True))
    return GazeTrace(
        samples=samples,
        scene_width=pane.w,
        scene_height=pane.h,
        participant_id=participant_id,
        group=group,
        trial_id=trial_id,
        nominal_rate=nominal_rate,
    )
