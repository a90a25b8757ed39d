"""Per-session gaze metrics and the KDA performance ratio.

Every metric is computed over valid samples only; the fraction of valid
samples is surfaced separately so data-quality drops stay visible.
Dispersion uses the sample standard deviation (n-1 denominator).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .detect import GazeTrace

#: Canonical dwell labels, matching the stock ROI layout and the metrics
#: CSV columns.
DEFAULT_LABELS = ("center", "mini_map", "info1", "info2", "other")


@dataclass(frozen=True)
class SessionMetrics:
    sd_x: float
    sd_y: float
    mean_x: float
    mean_y: float
    dist_center: float
    roi_pct: dict[str, float]
    valid_fraction: float
    n_valid: int


@dataclass(frozen=True)
class MatchStats:
    """Kill/death/assist counts for one match plus the derived ratio."""

    kills: int
    deaths: int
    assists: int
    kda: float

    @classmethod
    def from_counts(cls, kills: int, deaths: int, assists: int) -> "MatchStats":
        return cls(kills=kills, deaths=deaths, assists=assists, kda=kda(kills, deaths, assists))


def _valid_xy(trace: GazeTrace, minimum: int) -> np.ndarray:
    pts = np.array([(s.x, s.y) for s in trace.samples if s.valid], dtype=float)
    if len(pts) < minimum:
        raise ValueError(f"need at least {minimum} valid samples, got {len(pts)}")
    return pts


def gaze_sd(trace: GazeTrace) -> tuple[float, float]:
    """Sample standard deviation of gaze position per axis (pixels)."""
    pts = _valid_xy(trace, minimum=2)
    return float(np.std(pts[:, 0], ddof=1)), float(np.std(pts[:, 1], ddof=1))


def mean_gaze(trace: GazeTrace) -> tuple[float, float]:
    """Arithmetic mean gaze position over valid samples (real-valued)."""
    pts = _valid_xy(trace, minimum=1)
    return float(pts[:, 0].mean()), float(pts[:, 1].mean())


def dist_from_center(trace: GazeTrace) -> float:
    """Euclidean distance from the scene midpoint to the mean gaze position."""
    mx, my = mean_gaze(trace)
    cx, cy = trace.scene_width / 2.0, trace.scene_height / 2.0
    return float(np.hypot(mx - cx, my - cy))


def roi_percentages(
    trace: GazeTrace, labels: Optional[Sequence[str]] = None
) -> dict[str, float]:
    """Fraction of valid samples dwelling in each region.

    Labels absent from the trace report 0; labels present in the trace but
    missing from ``labels`` are still included so the fractions always sum
    to 1. Raises if any valid sample is unannotated.
    """
    if labels is None:
        labels = DEFAULT_LABELS
    counts: dict[str, int] = {label: 0 for label in labels}
    n_valid = 0
    for s in trace.samples:
        if not s.valid:
            continue
        if s.roi is None:
            raise ValueError(f"frame {s.frame_id}: valid sample is unannotated")
        counts[s.roi] = counts.get(s.roi, 0) + 1
        n_valid += 1
    if n_valid == 0:
        raise ValueError("need at least 1 valid sample, got 0")
    return {label: count / n_valid for label, count in counts.items()}


def kda(kills: int, deaths: int, assists: int) -> float:
    """(kills + assists) / deaths, with deaths floored at 1.

    The floor keeps deathless matches finite; it is the dominant esports
    convention for the ratio.
    """
    if kills < 0 or deaths < 0 or assists < 0:
        raise ValueError("counts must be nonnegative")
    return (kills + assists) / max(deaths, 1)


def session_metrics(
    trace: GazeTrace, labels: Optional[Sequence[str]] = None
) -> SessionMetrics:
    """Bundle all per-session gaze metrics for one annotated trace."""
    sd_x, sd_y = gaze_sd(trace)
    mx, my = mean_gaze(trace)
    n_valid = trace.n_valid
    return SessionMetrics(
        sd_x=sd_x,
        sd_y=sd_y,
        mean_x=mx,
        mean_y=my,
        dist_center=dist_from_center(trace),
        roi_pct=roi_percentages(trace, labels=labels),
        valid_fraction=n_valid / len(trace.samples),
        n_valid=n_valid,
    )
