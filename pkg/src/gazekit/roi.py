"""Region-of-interest layouts and per-sample labeling.

A layout is a prioritized list of named rectangles over the game scene
plus a fallback label for everything else. Classification is total over
in-scene points: edges are half-open (min edge inclusive, max edge
exclusive) so adjacent rectangles never double-claim a boundary pixel,
and overlaps resolve to the highest priority.

The same config file also carries the recording pane layout and marker
thresholds so one document configures a whole analysis run; see
``load_analysis_config``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace
from typing import Optional

from .detect import GazeTrace, MarkerSpec
from .geometry import Rect
from .ingest import DEFAULT_LAYOUT, RecordingLayout

_LABEL_RE = re.compile(r"^[a-z0-9_]+$")


@dataclass(frozen=True)
class RoiRegion:
    name: str
    rect: Rect
    priority: int


@dataclass(frozen=True)
class RoiLayout:
    scene_width: int
    scene_height: int
    regions: tuple[RoiRegion, ...]
    fallback_name: str = "other"

    def __post_init__(self):
        if self.scene_width < 1 or self.scene_height < 1:
            raise ValueError("scene dimensions must be positive")
        names = set()
        priorities = set()
        for region in self.regions:
            if not _LABEL_RE.match(region.name):
                raise ValueError(
                    f"region {region.name!r}: labels are restricted to [a-z0-9_]"
                )
            if region.name in names:
                raise ValueError(f"duplicate region name {region.name!r}")
            names.add(region.name)
            if region.priority in priorities:
                raise ValueError(
                    f"region {region.name!r}: duplicate priority {region.priority}"
                )
            priorities.add(region.priority)
            if not region.rect.inside(self.scene_width, self.scene_height):
                raise ValueError(
                    f"region {region.name!r}: rect {region.rect.as_tuple()} extends "
                    f"outside the {self.scene_width}x{self.scene_height} scene"
                )
        if not _LABEL_RE.match(self.fallback_name):
            raise ValueError(f"fallback {self.fallback_name!r}: labels are restricted to [a-z0-9_]")
        if self.fallback_name in names:
            raise ValueError(f"fallback name {self.fallback_name!r} collides with a region")

    @property
    def labels(self) -> tuple[str, ...]:
        """All labels the layout can produce, fallback last."""
        return tuple(r.name for r in self.regions) + (self.fallback_name,)


def default_roi_layout() -> RoiLayout:
    """Stock layout for a 1920x1080 tactical-shooter HUD.

    The rectangles encode plausible HUD geometry (mini-map in the top-left
    corner, a top-center strip with team/round status, a bottom strip with
    ammunition/health/abilities, and a box around the crosshair area).
    They are a configuration default, not a calibrated ground truth; ship
    your own config for a different HUD or resolution.
    """
    return RoiLayout(
        scene_width=1920,
        scene_height=1080,
        regions=(
            RoiRegion("center", Rect(760, 340, 400, 400), priority=40),
            RoiRegion("mini_map", Rect(20, 20, 350, 350), priority=30),
            RoiRegion("info1", Rect(660, 10, 600, 110), priority=20),
            RoiRegion("info2", Rect(160, 950, 1600, 120), priority=10),
        ),
        fallback_name="other",
    )


def classify(point: tuple[float, float], layout: RoiLayout) -> str:
    """Label one in-scene point with exactly one region name."""
    x, y = point
    if not (0 <= x < layout.scene_width and 0 <= y < layout.scene_height):
        raise ValueError(
            f"point ({x}, {y}) outside the {layout.scene_width}x{layout.scene_height} scene"
        )
    best: Optional[RoiRegion] = None
    for region in layout.regions:
        if region.rect.contains(x, y) and (best is None or region.priority > best.priority):
            best = region
    return best.name if best is not None else layout.fallback_name


def annotate_trace(trace: GazeTrace, layout: RoiLayout) -> GazeTrace:
    """Return a copy of the trace with every valid sample labeled.

    Coordinates, validity and sample count are untouched; invalid samples
    stay unlabeled.
    """
    if (trace.scene_width, trace.scene_height) != (layout.scene_width, layout.scene_height):
        raise ValueError(
            f"trace scene {trace.scene_width}x{trace.scene_height} does not match "
            f"layout scene {layout.scene_width}x{layout.scene_height}"
        )
    samples = [
        replace(s, roi=classify((s.x, s.y), layout)) if s.valid else s
        for s in trace.samples
    ]
    return GazeTrace(
        samples=samples,
        scene_width=trace.scene_width,
        scene_height=trace.scene_height,
        participant_id=trace.participant_id,
        group=trace.group,
        trial_id=trace.trial_id,
        nominal_rate=trace.nominal_rate,
    )


# ---------------------------------------------------------------------------
# Config file handling (JSON). One document configures a run: scene size,
# recording pane layout, region list, marker thresholds. Schema:
#
# {
#   "scene":    {"width": 1920, "height": 1080},
#   "layout":   {"canvas": [1920, 2160],
#                "game_pane": [0, 0, 1920, 1080],
#                "gaze_pane": [0, 1080, 1920, 1080]},
#   "regions":  [{"name": "center", "rect": [760, 340, 400, 400], "priority": 40}, ...],
#   "fallback": "other",
#   "marker":   {"r": [0, 100], "g": [200, 255], "b": [0, 100],
#                "min_blob_area": 4, "max_blob_area": null}
# }
#
# "layout" and "marker" are optional and default to the stock recording
# layout and marker thresholds.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisConfig:
    layout: RecordingLayout
    roi: RoiLayout
    marker: MarkerSpec


def _parse_rect(value, what: str) -> Rect:
    if not (isinstance(value, list) and len(value) == 4 and all(isinstance(v, int) for v in value)):
        raise ValueError(f"{what}: expected [x, y, w, h] integers, got {value!r}")
    return Rect(*value)


def _parse_json(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"malformed config: {e}") from None
    if not isinstance(doc, dict):
        raise ValueError("malformed config: top level must be an object")
    return doc


def load_roi_layout(text: str) -> RoiLayout:
    """Parse a config document into a validated RoiLayout."""
    doc = _parse_json(text)
    scene = doc.get("scene")
    if not isinstance(scene, dict) or "width" not in scene or "height" not in scene:
        raise ValueError('config needs a "scene" object with "width" and "height"')
    entries = doc.get("regions")
    if not isinstance(entries, list):
        raise ValueError('config needs a "regions" list')
    regions = []
    for i, entry in enumerate(entries):
        if not isinstance(entry, dict) or not {"name", "rect", "priority"} <= entry.keys():
            raise ValueError(f"region #{i}: expected name, rect and priority, got {entry!r}")
        name = entry["name"]
        if not isinstance(name, str):
            raise ValueError(f"region #{i}: name must be a string, got {name!r}")
        if not isinstance(entry["priority"], int):
            raise ValueError(f"region {name!r}: priority must be an integer")
        regions.append(
            RoiRegion(name, _parse_rect(entry["rect"], f"region {name!r}"), entry["priority"])
        )
    return RoiLayout(
        scene_width=scene["width"],
        scene_height=scene["height"],
        regions=tuple(regions),
        fallback_name=doc.get("fallback", "other"),
    )


def load_recording_layout(text: str) -> RecordingLayout:
    """Parse the pane layout section of a config document."""
    doc = _parse_json(text)
    section = doc.get("layout")
    if section is None:
        return DEFAULT_LAYOUT
    if not isinstance(section, dict):
        raise ValueError('"layout" must be an object')
    canvas = section.get("canvas")
    if not (isinstance(canvas, list) and len(canvas) == 2):
        raise ValueError('"layout.canvas" must be [width, height]')
    return RecordingLayout(
        canvas_width=canvas[0],
        canvas_height=canvas[1],
        game_pane=_parse_rect(section.get("game_pane"), "layout.game_pane"),
        gaze_pane=_parse_rect(section.get("gaze_pane"), "layout.gaze_pane"),
    )


def load_marker_spec(text: str) -> MarkerSpec:
    """Parse the marker threshold section of a config document."""
    doc = _parse_json(text)
    section = doc.get("marker")
    if section is None:
        return MarkerSpec()
    if not isinstance(section, dict):
        raise ValueError('"marker" must be an object')
    kwargs = {}
    for ch in "rgb":
        band = section.get(ch)
        if band is None:
            continue
        if not (isinstance(band, list) and len(band) == 2):
            raise ValueError(f'"marker.{ch}" must be [min, max]')
        kwargs[f"{ch}_min"], kwargs[f"{ch}_max"] = band
    if "min_blob_area" in section:
        kwargs["min_blob_area"] = section["min_blob_area"]
    if "max_blob_area" in section:
        kwargs["max_blob_area"] = section["max_blob_area"]
    return MarkerSpec(**kwargs)


def load_analysis_config(text: str) -> AnalysisConfig:
    """Parse one config document into all three run-time layouts."""
    roi = load_roi_layout(text)
    layout = load_recording_layout(text)
    if (layout.gaze_pane.w, layout.gaze_pane.h) != (roi.scene_width, roi.scene_height):
        raise ValueError(
            f"scene {roi.scene_width}x{roi.scene_height} does not match the "
            f"gaze pane {layout.gaze_pane.w}x{layout.gaze_pane.h}"
        )
    return AnalysisConfig(layout=layout, roi=roi, marker=load_marker_spec(text))


def dump_analysis_config(config: AnalysisConfig) -> str:
    """Serialize a config back to its canonical JSON document."""
    doc = {
        "scene": {"width": config.roi.scene_width, "height": config.roi.scene_height},
        "layout": {
            "canvas": [config.layout.canvas_width, config.layout.canvas_height],
            "game_pane": list(config.layout.game_pane.as_tuple()),
            "gaze_pane": list(config.layout.gaze_pane.as_tuple()),
        },
        "regions": [
            {"name": r.name, "rect": list(r.rect.as_tuple()), "priority": r.priority}
            for r in config.roi.regions
        ],
        "fallback": config.roi.fallback_name,
        "marker": {
            "r": [config.marker.r_min, config.marker.r_max],
            "g": [config.marker.g_min, config.marker.g_max],
            "b": [config.marker.b_min, config.marker.b_max],
            "min_blob_area": config.marker.min_blob_area,
            "max_blob_area": config.marker.max_blob_area,
        },
    }
    return json.dumps(doc, indent=2) + "\n"


def default_analysis_config() -> AnalysisConfig:
    return AnalysisConfig(layout=DEFAULT_LAYOUT, roi=default_roi_layout(), marker=MarkerSpec())
