"""Deterministic CSV readers and writers.

These formats are the toolkit's public data contract:

``output.csv`` (per-frame gaze data)
    header ``frame_id,x,y,roi``; one row per frame in order. An
    undetected frame leaves x, y and roi all empty (all-or-none rule).

metrics CSV (one row per session)
    header ``participant_id,group,trial_id,n_valid,valid_fraction,sd_x,
    sd_y,mean_x,mean_y,dist_center,pct_center,pct_mini_map,pct_info1,
    pct_info2,pct_other`` with an optional trailing ``kda`` column.

results CSV (one row per statistical test)
    header ``variable,method,statistic,df,p,effect_size,route``.

long-format CSV (statistics input)
    header ``participant_id,group,variable,value``.

match log CSV
    header ``participant_id,trial_id,kills,deaths,assists``.

All files are UTF-8, comma-separated, LF-terminated, unquoted (labels are
restricted to ``[a-z0-9_]``), and real numbers render with 6 significant
digits. Writers are byte-deterministic: the same data always produces the
same file.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Mapping, Optional

from .detect import GazeSample, GazeTrace
from .metrics import DEFAULT_LABELS, MatchStats, SessionMetrics

OUTPUT_HEADER = "frame_id,x,y,roi"
METRICS_HEADER = (
    "participant_id,group,trial_id,n_valid,valid_fraction,sd_x,sd_y,"
    "mean_x,mean_y,dist_center,pct_center,pct_mini_map,pct_info1,pct_info2,pct_other"
)
RESULTS_HEADER = "variable,method,statistic,df,p,effect_size,route"
LONG_HEADER = "participant_id,group,variable,value"
MATCH_LOG_HEADER = "participant_id,trial_id,kills,deaths,assists"


def _fmt(value: float) -> str:
    """Render a real number with 6 significant digits (trailing zeros kept)."""
    return format(float(value), "#.6g")


def _read_lines(path: Path | str, expected_header: str) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != expected_header:
        got = lines[0] if lines else "<empty file>"
        raise ValueError(f"{Path(path).name}: expected header {expected_header!r}, got {got!r}")
    return lines[1:]


# ---------------------------------------------------------------------------
# output.csv
# ---------------------------------------------------------------------------


def write_output_csv(trace: GazeTrace, path: Path | str) -> None:
    """Write one row per sample in frame order.

    Valid samples must be annotated; invalid samples emit empty x, y and
    roi fields.
    """
    rows = [OUTPUT_HEADER]
    for s in trace.samples:
        if s.valid:
            if s.roi is None:
                raise ValueError(f"frame {s.frame_id}: valid sample is unannotated")
            rows.append(f"{s.frame_id},{s.x},{s.y},{s.roi}")
        else:
            rows.append(f"{s.frame_id},,,")
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8", newline="")


def read_output_csv(
    path: Path | str,
    scene_width: int,
    scene_height: int,
    participant_id: str = "",
    group: str = "unspecified",
    trial_id: str = "",
    nominal_rate: float = 90.0,
) -> GazeTrace:
    """Inverse of :func:`write_output_csv`.

    Unknown ROI labels are preserved verbatim. Rows where only some of
    x, y, roi are empty violate the all-or-none rule and are rejected.
    """
    samples = []
    for line in _read_lines(path, OUTPUT_HEADER):
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"row {line!r}: expected 4 fields")
        fid_s, x_s, y_s, roi_s = parts
        try:
            fid = int(fid_s)
        except ValueError:
            raise ValueError(f"row {line!r}: non-integer frame id") from None
        empties = (x_s == "", y_s == "", roi_s == "")
        if all(empties):
            samples.append(GazeSample.invalid(fid))
            continue
        if any(empties):
            raise ValueError(
                f"row {fid}: x, y and roi must be all set or all empty, got {line!r}"
            )
        try:
            x, y = int(x_s), int(y_s)
        except ValueError:
            raise ValueError(f"row {fid}: non-integer coordinate in {line!r}") from None
        samples.append(GazeSample(frame_id=fid, x=x, y=y, valid=True, roi=roi_s))
    return GazeTrace(
        samples=samples,
        scene_width=scene_width,
        scene_height=scene_height,
        participant_id=participant_id,
        group=group,
        trial_id=trial_id,
        nominal_rate=nominal_rate,
    )


# ---------------------------------------------------------------------------
# Metrics CSV
# ---------------------------------------------------------------------------


def write_metrics_csv(
    sessions: Iterable[tuple[str, str, str, SessionMetrics]],
    path: Path | str,
    kda_by_session: Optional[Mapping[tuple[str, str], float]] = None,
) -> None:
    """Write one row per session as (participant_id, group, trial_id, metrics).

    ``kda_by_session`` maps (participant_id, trial_id) to a match ratio;
    when given, a ``kda`` column is appended (empty for sessions without a
    log entry).
    """
    sessions = list(sessions)
    if not sessions:
        raise ValueError("need at least one session")
    header = METRICS_HEADER + (",kda" if kda_by_session is not None else "")
    rows = [header]
    for participant_id, group, trial_id, m in sessions:
        extra = set(m.roi_pct) - set(DEFAULT_LABELS)
        if extra:
            raise ValueError(
                f"session {participant_id}/{trial_id}: labels {sorted(extra)} do not fit "
                f"the metrics columns {DEFAULT_LABELS}"
            )
        fields = [
            participant_id,
            group,
            trial_id,
            str(m.n_valid),
            _fmt(m.valid_fraction),
            _fmt(m.sd_x),
            _fmt(m.sd_y),
            _fmt(m.mean_x),
            _fmt(m.mean_y),
            _fmt(m.dist_center),
        ]
        fields += [_fmt(m.roi_pct.get(label, 0.0)) for label in DEFAULT_LABELS]
        if kda_by_session is not None:
            value = kda_by_session.get((participant_id, trial_id))
            fields.append("" if value is None else _fmt(value))
        rows.append(",".join(fields))
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8", newline="")


def read_metrics_csv(path: Path | str) -> list[dict[str, object]]:
    """Read a metrics CSV into one dict per session (numbers parsed)."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines or not lines[0].startswith(METRICS_HEADER):
        raise ValueError(f"{Path(path).name}: not a metrics CSV")
    columns = lines[0].split(",")
    out = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(columns):
            raise ValueError(f"row {line!r}: expected {len(columns)} fields")
        row: dict[str, object] = {}
        for col, value in zip(columns, parts):
            if col in ("participant_id", "group", "trial_id"):
                row[col] = value
            elif col == "n_valid":
                row[col] = int(value)
            else:
                row[col] = float(value) if value != "" else None
        out.append(row)
    return out


# ---------------------------------------------------------------------------
# Statistics input/output
# ---------------------------------------------------------------------------


def read_long_csv(path: Path | str) -> list[tuple[str, str, str, float]]:
    """Read (participant_id, group, variable, value) observations."""
    out = []
    for line in _read_lines(path, LONG_HEADER):
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"row {line!r}: expected 4 fields")
        pid, group, variable, value_s = parts
        try:
            value = float(value_s)
        except ValueError:
            raise ValueError(f"row {line!r}: non-numeric value") from None
        out.append((pid, group, variable, value))
    return out


def write_results_csv(
    rows: Iterable[tuple[str, str, float, Optional[float], float, Optional[float], str]],
    path: Path | str,
) -> None:
    """Write (variable, method, statistic, df, p, effect_size, route) rows."""
    lines = [RESULTS_HEADER]
    for variable, method, statistic, df, p, effect_size, route in rows:
        lines.append(
            ",".join(
                [
                    variable,
                    method,
                    _fmt(statistic),
                    "" if df is None else _fmt(df),
                    _fmt(p),
                    "" if effect_size is None else _fmt(effect_size),
                    route,
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="")


def read_match_log(path: Path | str) -> dict[tuple[str, str], MatchStats]:
    """Read per-match kill/death/assist counts keyed by (participant, trial)."""
    out: dict[tuple[str, str], MatchStats] = {}
    for line in _read_lines(path, MATCH_LOG_HEADER):
        parts = line.split(",")
        if len(parts) != 5:
            raise ValueError(f"row {line!r}: expected 5 fields")
        pid, trial, kills_s, deaths_s, assists_s = parts
        try:
            kills, deaths, assists = int(kills_s), int(deaths_s), int(assists_s)
        except ValueError:
            raise ValueError(f"row {line!r}: non-integer count") from None
        key = (pid, trial)
        if key in out:
            raise ValueError(f"duplicate match log entry for {pid}/{trial}")
        out[key] = MatchStats.from_counts(kills, deaths, assists)
    return out
