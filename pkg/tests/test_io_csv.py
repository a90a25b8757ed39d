import pytest

from gazekit import GazeSample, GazeTrace, SessionMetrics
from gazekit.io_csv import (
    read_long_csv,
    read_match_log,
    read_metrics_csv,
    read_output_csv,
    write_metrics_csv,
    write_output_csv,
    write_results_csv,
)


def center_trace(rows):
    samples = []
    for i, row in enumerate(rows):
        if row is None:
            samples.append(GazeSample.invalid(i))
        else:
            x, y, roi = row
            samples.append(GazeSample(i, x, y, True, roi))
    return GazeTrace(samples=samples, scene_width=1920, scene_height=1080)


def test_output_csv_exact_bytes(tmp_path):
    trace = center_trace([(960, 540, "center"), (961, 540, "center")])
    path = tmp_path / "output.csv"
    write_output_csv(trace, path)
    assert path.read_bytes() == b"frame_id,x,y,roi\n0,960,540,center\n1,961,540,center\n"


def test_output_csv_invalid_row_is_all_empty(tmp_path):
    trace = center_trace([(960, 540, "center"), None])
    path = tmp_path / "output.csv"
    write_output_csv(trace, path)
    assert path.read_bytes().endswith(b"\n1,,,\n")


def test_output_csv_empty_trace(tmp_path):
    trace = GazeTrace(samples=[], scene_width=1920, scene_height=1080)
    path = tmp_path / "output.csv"
    write_output_csv(trace, path)
    assert path.read_bytes() == b"frame_id,x,y,roi\n"


def test_output_csv_rejects_unannotated(tmp_path):
    trace = center_trace([(960, 540, None)])
    with pytest.raises(ValueError, match="unannotated"):
        write_output_csv(trace, tmp_path / "output.csv")


def test_output_csv_round_trip(tmp_path):
    trace = center_trace(
        [(960, 540, "center"), None, (10, 10, "mini_map"), (5, 1000, "custom_label"), None]
    )
    path = tmp_path / "output.csv"
    write_output_csv(trace, path)
    back = read_output_csv(path, 1920, 1080)
    assert back.samples == trace.samples
    assert back.samples[3].roi == "custom_label"  # unknown labels verbatim


def test_output_csv_write_read_write_is_byte_identical(tmp_path):
    trace = center_trace([(1, 2, "a"), None, (3, 4, "b")])
    p1, p2 = tmp_path / "one.csv", tmp_path / "two.csv"
    write_output_csv(trace, p1)
    write_output_csv(read_output_csv(p1, 1920, 1080), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_output_csv_header_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("frameid,x,y,roi\n0,1,2,center\n")
    with pytest.raises(ValueError, match="header"):
        read_output_csv(path, 1920, 1080)


def test_output_csv_partial_empty_row(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("frame_id,x,y,roi\n5,100,,center\n")
    with pytest.raises(ValueError, match="row 5"):
        read_output_csv(path, 1920, 1080)


def test_output_csv_non_integer_coordinate(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("frame_id,x,y,roi\n0,1.5,2,center\n")
    with pytest.raises(ValueError, match="non-integer"):
        read_output_csv(path, 1920, 1080)


# ---------------------------------------------------------------------------
# Metrics CSV
# ---------------------------------------------------------------------------


def sample_metrics(**overrides):
    base = dict(
        sd_x=101.25,
        sd_y=59.5,
        mean_x=961.5,
        mean_y=545.25,
        dist_center=5.5331,
        roi_pct={"center": 0.5, "mini_map": 0.25, "info1": 0.125, "info2": 0.0625, "other": 0.0625},
        valid_fraction=0.5,
        n_valid=800,
    )
    base.update(overrides)
    return SessionMetrics(**base)


def test_metrics_csv_single_session(tmp_path):
    path = tmp_path / "metrics.csv"
    write_metrics_csv([("p01", "high_skill", "t1", sample_metrics())], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0].startswith("participant_id,group,trial_id,n_valid,valid_fraction")
    assert ",0.500000," in lines[1]  # 6 significant digits with trailing zeros


def test_metrics_csv_round_trip_precision(tmp_path):
    path = tmp_path / "metrics.csv"
    m = sample_metrics(sd_x=123.456789, dist_center=0.000123456789)
    write_metrics_csv([("p01", "g", "t1", m)], path)
    row = read_metrics_csv(path)[0]
    assert row["sd_x"] == pytest.approx(m.sd_x, rel=1e-5)
    assert row["dist_center"] == pytest.approx(m.dist_center, rel=1e-5)
    assert row["n_valid"] == 800


def test_metrics_csv_kda_column(tmp_path):
    path = tmp_path / "metrics.csv"
    sessions = [("p01", "g", "t1", sample_metrics()), ("p02", "g", "t2", sample_metrics())]
    write_metrics_csv(sessions, path, kda_by_session={("p01", "t1"): 7.0})
    lines = path.read_text().splitlines()
    assert lines[0].endswith(",kda")
    assert lines[1].endswith(",7.00000")
    assert lines[2].endswith(",")  # no log entry -> empty field


def test_metrics_csv_rejects_unknown_labels(tmp_path):
    m = sample_metrics(roi_pct={"center": 1.0, "hud": 0.0})
    with pytest.raises(ValueError, match="hud"):
        write_metrics_csv([("p01", "g", "t1", m)], tmp_path / "m.csv")


def test_metrics_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError, match="at least one"):
        write_metrics_csv([], tmp_path / "m.csv")


# ---------------------------------------------------------------------------
# Long CSV, results CSV, match log
# ---------------------------------------------------------------------------


def test_long_csv_read(tmp_path):
    path = tmp_path / "long.csv"
    path.write_text(
        "participant_id,group,variable,value\np01,high,rt,0.31\np02,mid,rt,0.44\n"
    )
    rows = read_long_csv(path)
    assert rows == [("p01", "high", "rt", 0.31), ("p02", "mid", "rt", 0.44)]
    (tmp_path / "bad.csv").write_text("participant,group,variable,value\n")
    with pytest.raises(ValueError, match="header"):
        read_long_csv(tmp_path / "bad.csv")


def test_results_csv_format(tmp_path):
    path = tmp_path / "results.csv"
    write_results_csv(
        [("rt", "t_test", -1.2247448, 4.0, 0.2878641, -1.0, "parametric"),
         ("sd_x", "wilcoxon", 55.0, None, 0.0312, None, "nonparametric")],
        path,
    )
    lines = path.read_text().splitlines()
    assert lines[0] == "variable,method,statistic,df,p,effect_size,route"
    assert lines[1] == "rt,t_test,-1.22474,4.00000,0.287864,-1.00000,parametric"
    assert lines[2] == "sd_x,wilcoxon,55.0000,,0.0312000,,nonparametric"


def test_match_log_read(tmp_path):
    path = tmp_path / "log.csv"
    path.write_text(
        "participant_id,trial_id,kills,deaths,assists\np01,t1,10,2,4\np01,t2,3,0,2\n"
    )
    log = read_match_log(path)
    assert log[("p01", "t1")].kda == 7.0
    assert log[("p01", "t2")].kda == 5.0
    path.write_text("participant_id,trial_id,kills,deaths,assists\np01,t1,1,1,1\np01,t1,2,2,2\n")
    with pytest.raises(ValueError, match="duplicate"):
        read_match_log(path)
