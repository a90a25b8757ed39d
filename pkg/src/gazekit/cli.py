"""Command-line interface.

One executable, batch semantics::

    gazekit extract    frames or raw stream -> output.csv
    gazekit metrics    output.csv files -> per-session metrics CSV (+ KDA)
    gazekit compare    long-format CSV -> screened group comparisons
    gazekit correlate  long-format CSV -> screened correlations
    gazekit power      post-hoc power for the two-sample t test
    gazekit synth      synthetic oracle session (frames + ground truth)
    gazekit report     SVG scatter plots with least-squares lines

Exit status: 0 ok, 1 usage error, 2 data error, 3 I/O error. On failure,
files created by the failed run are removed. Reruns with identical inputs
produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import shutil
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import io_csv, metrics, stats, synth
from .detect import extract_trace
from .ingest import open_image_dir, open_raw_stream
from .roi import (
    AnalysisConfig,
    annotate_trace,
    default_analysis_config,
    dump_analysis_config,
    load_analysis_config,
)


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


class _OutputGuard:
    """Tracks declared output paths so a failed run can remove what it
    created (pre-existing files are left alone)."""

    def __init__(self):
        self._declared: list[tuple[Path, bool]] = []

    def declare(self, path: Path | str) -> Path:
        path = Path(path)
        self._declared.append((path, path.exists()))
        return path

    def cleanup(self) -> None:
        for path, existed in reversed(self._declared):
            if existed or not path.exists():
                continue
            if path.is_dir():
                shutil.rmtree(path, ignore_errors=True)
            else:
                path.unlink(missing_ok=True)


def _load_config(path: Optional[str]) -> AnalysisConfig:
    if path is None:
        return default_analysis_config()
    return load_analysis_config(Path(path).read_text(encoding="utf-8"))


def _fmt(value: float) -> str:
    return format(float(value), ".6g")


# ---------------------------------------------------------------------------
# extract
# ---------------------------------------------------------------------------


_MARKER_FLAGS = (
    "marker_r_min", "marker_r_max", "marker_g_min", "marker_g_max",
    "marker_b_min", "marker_b_max", "min_blob_area", "max_blob_area",
)


def _marker_overrides(args, base):
    """Apply --marker-* flags on top of the config's thresholds."""
    import dataclasses

    changes = {}
    for flag in _MARKER_FLAGS:
        value = getattr(args, flag)
        if value is not None:
            changes[flag.removeprefix("marker_")] = value
    return dataclasses.replace(base, **changes) if changes else base


def _cmd_extract(args, guard: _OutputGuard) -> int:
    config = _load_config(args.config)
    layout = config.layout
    marker = _marker_overrides(args, config.marker)
    if args.raw:
        width = args.width or layout.canvas_width
        height = args.height or layout.canvas_height
        if (width, height) != (layout.canvas_width, layout.canvas_height):
            raise ValueError(
                f"declared {width}x{height} does not match the layout canvas "
                f"{layout.canvas_width}x{layout.canvas_height}; pass a matching --config"
            )
        source = open_raw_stream(sys.stdin.buffer, width, height)
    else:
        source = open_image_dir(args.frames, layout.canvas_width, layout.canvas_height)
    trace = extract_trace(
        source,
        layout,
        marker,
        participant_id=args.participant,
        group=args.group,
        trial_id=args.trial,
    )
    trace = annotate_trace(trace, config.roi)
    out = guard.declare(args.out)
    io_csv.write_output_csv(trace, out)
    return 0


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------


def _read_manifest(path: Path | str) -> dict[str, tuple[str, str, str]]:
    header = "participant_id,group,trial_id,path"
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines or lines[0] != header:
        raise ValueError(f"{Path(path).name}: expected header {header!r}")
    table = {}
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != 4:
            raise ValueError(f"manifest row {line!r}: expected 4 fields")
        pid, group, trial, file_path = parts
        table[file_path] = (pid, group, trial)
    return table


def _cmd_metrics(args, guard: _OutputGuard) -> int:
    config = _load_config(args.config)
    scene_w = args.scene_width or config.roi.scene_width
    scene_h = args.scene_height or config.roi.scene_height
    manifest = _read_manifest(args.manifest) if args.manifest else {}
    kda_by_session = None
    if args.match_log:
        log = io_csv.read_match_log(args.match_log)
        kda_by_session = {key: match.kda for key, match in log.items()}
    sessions = []
    for file_name in args.inputs:
        pid, group, trial = manifest.get(file_name, (Path(file_name).stem, "unspecified", Path(file_name).stem))
        trace = io_csv.read_output_csv(
            file_name, scene_w, scene_h, participant_id=pid, group=group, trial_id=trial
        )
        sessions.append((pid, group, trial, metrics.session_metrics(trace, labels=config.roi.labels)))
    out = guard.declare(args.out)
    io_csv.write_metrics_csv(sessions, out, kda_by_session=kda_by_session)
    return 0


# ---------------------------------------------------------------------------
# compare / correlate
# ---------------------------------------------------------------------------


def _result_row(variable: str, result: stats.TestResult) -> tuple:
    route = "parametric" if result.method in ("t_test", "pearson") else "nonparametric"
    return (
        variable,
        result.method,
        result.statistic,
        result.df,
        result.p_value,
        result.effect_size,
        route,
    )


def _cmd_compare(args, guard: _OutputGuard) -> int:
    observations = io_csv.read_long_csv(args.input)
    by_variable: dict[str, dict[str, list[float]]] = {}
    for _, group, variable, value in observations:
        by_variable.setdefault(variable, {}).setdefault(group, []).append(value)
    rows = []
    for variable in sorted(by_variable):
        groups = by_variable[variable]
        if len(groups) != 2:
            raise ValueError(
                f"variable {variable!r}: need exactly 2 groups, got {sorted(groups)}"
            )
        first, second = sorted(groups)
        result = stats.auto_compare(groups[first], groups[second], alpha=args.alpha)
        rows.append(_result_row(variable, result))
    out = guard.declare(args.out)
    io_csv.write_results_csv(rows, out)
    return 0


def _parse_pairs(raw_pairs: Sequence[str]) -> list[tuple[str, str]]:
    pairs = []
    for raw in raw_pairs:
        parts = raw.split(",")
        if len(parts) != 2 or not all(parts):
            raise ValueError(f"--pair expects 'x_variable,y_variable', got {raw!r}")
        pairs.append((parts[0], parts[1]))
    return pairs


def _cmd_correlate(args, guard: _OutputGuard) -> int:
    observations = io_csv.read_long_csv(args.input)
    pairs = _parse_pairs(args.pair)
    per_participant: dict[str, dict[str, list[float]]] = {}
    for pid, _, variable, value in observations:
        per_participant.setdefault(variable, {}).setdefault(pid, []).append(value)
    rows = []
    for var_x, var_y in pairs:
        for var in (var_x, var_y):
            if var not in per_participant:
                raise ValueError(f"variable {var!r} not present in {args.input}")
        xs, ys = [], []
        shared = sorted(set(per_participant[var_x]) & set(per_participant[var_y]))
        for pid in shared:
            # Multiple trials per participant average into one observation.
            vx = per_participant[var_x][pid]
            vy = per_participant[var_y][pid]
            xs.append(sum(vx) / len(vx))
            ys.append(sum(vy) / len(vy))
        result = stats.auto_correlate(xs, ys, alpha=args.alpha)
        rows.append(_result_row(f"{var_x}~{var_y}", result))
    out = guard.declare(args.out)
    io_csv.write_results_csv(rows, out)
    return 0


# ---------------------------------------------------------------------------
# power
# ---------------------------------------------------------------------------


def _cmd_power(args, guard: _OutputGuard) -> int:
    result = stats.power_two_sample_t(args.d, args.n1, args.n2, args.alpha)
    print(
        f"delta={result.delta:.4f} t_crit={result.t_crit:.4f} "
        f"df={result.df} power={result.power:.4f}"
    )
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def _cmd_synth(args, guard: _OutputGuard) -> int:
    config = _load_config(args.config)
    if args.dist == "gaussian":
        mean_x = args.mean_x if args.mean_x is not None else config.roi.scene_width / 2.0
        mean_y = args.mean_y if args.mean_y is not None else config.roi.scene_height / 2.0
        distribution = synth.GaussianGaze(mean_x, mean_y, args.sigma_x, args.sigma_y)
    else:
        if not args.weights:
            raise ValueError("--dist mixture requires --weights label=w,label=w,...")
        weights = {}
        for item in args.weights.split(","):
            if "=" not in item:
                raise ValueError(f"bad weight entry {item!r}, expected label=value")
            label, value = item.split("=", 1)
            weights[label] = float(value)
        distribution = synth.RoiMixture.from_mapping(weights)
    spec = synth.SynthSpec(
        n_frames=args.n_frames,
        distribution=distribution,
        dropout=args.dropout,
        seed=args.seed,
        layout=config.layout,
        roi_layout=config.roi,
        marker_radius=args.radius,
        marker_spec=config.marker,
    )
    trace, truth = synth.gen_trace(spec)
    out = guard.declare(args.out)
    out.mkdir(parents=True, exist_ok=True)
    frames_dir = guard.declare(out / "frames")
    truth_path = guard.declare(out / "ground_truth.csv")
    config_path = guard.declare(out / "config.json")
    synth.render_frames(trace, spec, frames_dir, image_format=args.image_format)
    synth.write_ground_truth_csv(truth, truth_path)
    config_path.write_text(dump_analysis_config(config), encoding="utf-8", newline="")
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def _read_table(path: Path | str) -> tuple[list[str], list[dict[str, str]]]:
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.split("\n") if ln != ""]
    if not lines:
        raise ValueError(f"{Path(path).name}: empty file")
    columns = lines[0].split(",")
    rows = []
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(columns):
            raise ValueError(f"row {line!r}: expected {len(columns)} fields")
        rows.append(dict(zip(columns, parts)))
    return columns, rows


def svg_scatter(points: list[tuple[float, float]], x_label: str, y_label: str) -> str:
    """Deterministic scatter plot with an ordinary-least-squares line.

    Text output only, so plots diff cleanly and render identically on
    every run. The regression slope/intercept and r live in the <title>
    element.
    """
    if len(points) < 2:
        raise ValueError("need at least 2 points to plot")
    width, height, margin = 640, 480, 60
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(v: float) -> float:
        return margin + (v - x_lo) / x_span * (width - 2 * margin)

    def sy(v: float) -> float:
        return height - margin - (v - y_lo) / y_span * (height - 2 * margin)

    n = len(points)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((v - mean_x) ** 2 for v in xs)
    sxy = sum((a - mean_x) * (b - mean_y) for a, b in points)
    syy = sum((v - mean_y) ** 2 for v in ys)
    slope = intercept = r = None
    if sxx > 0:
        slope = sxy / sxx
        intercept = mean_y - slope * mean_x
        if syy > 0:
            r = sxy / (sxx * syy) ** 0.5

    title = f"{y_label} vs {x_label}: n={n}"
    if slope is not None:
        title += f", ols slope={_fmt(slope)}, intercept={_fmt(intercept)}"
    if r is not None:
        title += f", r={_fmt(r)}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f"  <title>{title}</title>",
        f'  <rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'  <line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'  <line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="black"/>',
        f'  <text x="{width // 2}" y="{height - margin // 4}" text-anchor="middle" '
        f'font-size="14">{x_label}</text>',
        f'  <text x="{margin // 4}" y="{height // 2}" text-anchor="middle" font-size="14" '
        f'transform="rotate(-90 {margin // 4} {height // 2})">{y_label}</text>',
        f'  <text x="{margin}" y="{height - margin + 16}" font-size="10">{_fmt(x_lo)}</text>',
        f'  <text x="{width - margin}" y="{height - margin + 16}" text-anchor="end" '
        f'font-size="10">{_fmt(x_hi)}</text>',
        f'  <text x="{margin - 4}" y="{height - margin}" text-anchor="end" '
        f'font-size="10">{_fmt(y_lo)}</text>',
        f'  <text x="{margin - 4}" y="{margin + 10}" text-anchor="end" '
        f'font-size="10">{_fmt(y_hi)}</text>',
    ]
    if slope is not None:
        y_at = lambda xv: slope * xv + intercept  # noqa: E731
        parts.append(
            f'  <line x1="{_fmt(sx(x_lo))}" y1="{_fmt(sy(y_at(x_lo)))}" '
            f'x2="{_fmt(sx(x_hi))}" y2="{_fmt(sy(y_at(x_hi)))}" '
            f'stroke="steelblue" stroke-dasharray="6 4" stroke-width="1.5"/>'
        )
    for px, py in points:
        parts.append(
            f'  <circle cx="{_fmt(sx(px))}" cy="{_fmt(sy(py))}" r="3" '
            f'fill="crimson" fill-opacity="0.7"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _cmd_report(args, guard: _OutputGuard) -> int:
    columns, rows = _read_table(args.input)
    pairs = _parse_pairs(args.pair)
    out_dir = guard.declare(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for var_x, var_y in pairs:
        for var in (var_x, var_y):
            if var not in columns:
                raise ValueError(f"column {var!r} not present in {args.input}")
        points = []
        for row in rows:
            sx, sy = row[var_x], row[var_y]
            if sx == "" or sy == "":
                continue
            try:
                points.append((float(sx), float(sy)))
            except ValueError:
                raise ValueError(
                    f"non-numeric value in columns {var_x!r}/{var_y!r}: {sx!r}, {sy!r}"
                ) from None
        svg_path = guard.declare(out_dir / f"{var_x}_vs_{var_y}.svg")
        svg_path.write_text(svg_scatter(points, var_x, var_y), encoding="utf-8", newline="")
    return 0


# ---------------------------------------------------------------------------
# Parser wiring
# ---------------------------------------------------------------------------


def _build_parser() -> _Parser:
    parser = _Parser(prog="gazekit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("extract", help="detect the gaze marker and write output.csv")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--frames", help="directory of exported frames")
    src.add_argument("--raw", action="store_true", help="read packed RGB24 frames from stdin")
    p.add_argument("--width", type=int, help="raw stream frame width (must match the layout)")
    p.add_argument("--height", type=int, help="raw stream frame height (must match the layout)")
    p.add_argument("--config", help="analysis config JSON (layout, ROIs, marker)")
    p.add_argument("--participant", default="", help="participant id recorded in the trace")
    p.add_argument("--group", default="unspecified", help="group label recorded in the trace")
    p.add_argument("--trial", default="", help="trial id recorded in the trace")
    for channel in "rgb":
        for bound in ("min", "max"):
            p.add_argument(f"--marker-{channel}-{bound}", type=int,
                           help=f"override the marker {channel.upper()} {bound} threshold")
    p.add_argument("--min-blob-area", type=int, help="override the smallest accepted blob")
    p.add_argument("--max-blob-area", type=int, help="override the largest accepted blob")
    p.add_argument("--out", required=True, help="output.csv path")
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("metrics", help="summarize output.csv files into a metrics CSV")
    p.add_argument("inputs", nargs="+", help="output.csv files")
    p.add_argument("--manifest", help="CSV mapping files to participant/group/trial")
    p.add_argument("--match-log", help="match log CSV; appends a kda column")
    p.add_argument("--config", help="analysis config JSON (scene size, labels)")
    p.add_argument("--scene-width", type=int, help="override scene width")
    p.add_argument("--scene-height", type=int, help="override scene height")
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("compare", help="screened two-group comparison per variable")
    p.add_argument("--in", dest="input", required=True, help="long-format CSV")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.add_argument("--out", required=True, help="results CSV path")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("correlate", help="screened correlation per variable pair")
    p.add_argument("--in", dest="input", required=True, help="long-format CSV")
    p.add_argument("--pair", action="append", required=True, help="x_variable,y_variable")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.add_argument("--out", required=True, help="results CSV path")
    p.set_defaults(func=_cmd_correlate)

    p = sub.add_parser("power", help="post-hoc power of the two-sample t test")
    p.add_argument("--d", type=float, required=True, help="effect size (Cohen's d)")
    p.add_argument("--n1", type=int, required=True, help="first group size")
    p.add_argument("--n2", type=int, required=True, help="second group size")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level")
    p.set_defaults(func=_cmd_power)

    p = sub.add_parser("synth", help="generate a synthetic oracle session")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-frames", type=int, required=True, help="number of frames")
    p.add_argument("--seed", type=int, default=0, help="generator seed")
    p.add_argument("--dist", choices=("gaussian", "mixture"), default="gaussian")
    p.add_argument("--mean-x", type=float, help="gaussian mean x (default: scene center)")
    p.add_argument("--mean-y", type=float, help="gaussian mean y (default: scene center)")
    p.add_argument("--sigma-x", type=float, default=100.0, help="gaussian sd x")
    p.add_argument("--sigma-y", type=float, default=60.0, help="gaussian sd y")
    p.add_argument("--weights", help="mixture weights, e.g. center=0.7,mini_map=0.3")
    p.add_argument("--dropout", type=float, default=0.0, help="fraction of markerless frames")
    p.add_argument("--radius", type=int, default=6, help="marker disk radius")
    p.add_argument("--image-format", choices=("ppm", "png"), default="ppm")
    p.add_argument("--config", help="analysis config JSON")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("report", help="SVG scatter plots with regression lines")
    p.add_argument("--in", dest="input", required=True, help="any CSV with numeric columns")
    p.add_argument("--pair", action="append", required=True, help="x_column,y_column")
    p.add_argument("--out", required=True, help="output directory for SVG files")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if getattr(args, "alpha", None) is not None and not (0.0 < args.alpha < 1.0):
        print(f"gazekit: error: --alpha must be in (0, 1), got {args.alpha}", file=sys.stderr)
        return 1
    guard = _OutputGuard()
    try:
        return args.func(args, guard)
    except ValueError as e:
        print(f"gazekit: error: {e}", file=sys.stderr)
        guard.cleanup()
        return 2
    except OSError as e:
        print(f"gazekit: i/o error: {e}", file=sys.stderr)
        guard.cleanup()
        return 3


if __name__ == "__main__":
    sys.exit(main())
