import numpy as np
import pytest

from gazekit import (
    GaussianGaze,
    GazeSample,
    GazeTrace,
    Rect,
    RecordingLayout,
    RoiLayout,
    RoiRegion,
    RoiMixture,
    SynthSpec,
    allocate_counts,
    annotate_trace,
    extract_trace,
    gen_trace,
    open_image_dir,
    render_frames,
    roi_percentages,
)
from gazekit.ingest import read_ppm

LAYOUT = RecordingLayout(240, 300, Rect(0, 0, 240, 100), Rect(0, 100, 240, 200))
ROI = RoiLayout(
    240, 200,
    (
        RoiRegion("center", Rect(80, 70, 80, 60), 20),
        RoiRegion("mini_map", Rect(12, 12, 50, 50), 10),
    ),
)


def make_spec(**overrides):
    kwargs = dict(
        n_frames=200,
        distribution=GaussianGaze(120.0, 100.0, 30.0, 22.0),
        dropout=0.0,
        seed=5,
        layout=LAYOUT,
        roi_layout=ROI,
        marker_radius=4,
    )
    kwargs.update(overrides)
    return SynthSpec(**kwargs)


def test_gen_trace_is_deterministic():
    t1, g1 = gen_trace(make_spec())
    t2, g2 = gen_trace(make_spec())
    assert t1.samples == t2.samples
    assert g1.frames == g2.frames
    assert "numpy.random.default_rng" in g1.generator


def test_dropout_exact_count():
    trace, truth = gen_trace(make_spec(n_frames=1000, dropout=0.1))
    assert sum(1 for s in trace.samples if not s.valid) == 100
    assert sum(1 for f in truth.frames if not f.valid) == 100


def test_dropout_count_resists_float_noise():
    # 0.29 * 100 = 28.999999999999996 in floats; the count must still be 29.
    trace, _ = gen_trace(make_spec(n_frames=100, dropout=0.29))
    assert sum(1 for s in trace.samples if not s.valid) == 29


def test_mixture_counts_are_exact():
    spec = make_spec(
        n_frames=1000,
        distribution=RoiMixture.from_mapping({"center": 0.7, "mini_map": 0.3}),
    )
    _, truth = gen_trace(spec)
    assert truth.label_counts == {"center": 700, "mini_map": 300}


def test_allocate_counts_largest_remainder():
    assert allocate_counts([0.7, 0.3], 1000) == [700, 300]
    assert allocate_counts([1 / 3, 1 / 3, 1 / 3], 10) == [4, 3, 3]
    # shares [1.5, .75, .75]: floors [1, 0, 0], both leftover units go to
    # the .75 remainders
    assert allocate_counts([0.5, 0.25, 0.25], 3) == [1, 1, 1]
    assert sum(allocate_counts([0.21, 0.33, 0.46], 17)) == 17


def test_ground_truth_stores_real_points_and_labels():
    trace, truth = gen_trace(make_spec(n_frames=50))
    for sample, frame in zip(trace.samples, truth.frames):
        assert sample.valid == frame.valid
        if frame.valid:
            assert abs(sample.x - frame.x) <= 0.5
            assert abs(sample.y - frame.y) <= 0.5
            assert frame.roi in ("center", "mini_map", "other")


def test_gen_trace_validation():
    with pytest.raises(ValueError, match="weights must sum"):
        RoiMixture.from_mapping({"center": 0.5, "mini_map": 0.4})
    with pytest.raises(ValueError, match="dropout"):
        make_spec(dropout=1.0)
    with pytest.raises(ValueError, match="unknown region"):
        gen_trace(make_spec(distribution=RoiMixture.from_mapping({"nowhere": 1.0})))
    with pytest.raises(ValueError, match="marker radius"):
        gen_trace(make_spec(marker_radius=150))
    with pytest.raises(ValueError, match="not marker-colored"):
        make_spec(marker_color=(255, 0, 0))


def test_mixture_region_must_clear_the_marker_inset():
    roi = RoiLayout(240, 200, (RoiRegion("edge", Rect(0, 0, 30, 30), 1),))
    spec = make_spec(
        roi_layout=roi, distribution=RoiMixture.from_mapping({"edge": 1.0}), marker_radius=4
    )
    with pytest.raises(ValueError, match="closer than the marker radius"):
        gen_trace(spec)


def test_render_writes_zero_padded_files(tmp_path):
    spec = make_spec(n_frames=10)
    trace, _ = gen_trace(spec)
    render_frames(trace, spec, tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == [f"f{i:04d}.ppm" for i in range(10)]


def test_render_is_byte_deterministic(tmp_path):
    spec = make_spec(n_frames=3)
    trace, _ = gen_trace(spec)
    render_frames(trace, spec, tmp_path / "a")
    render_frames(trace, spec, tmp_path / "b")
    for i in range(3):
        a = (tmp_path / "a" / f"f{i:04d}.ppm").read_bytes()
        b = (tmp_path / "b" / f"f{i:04d}.ppm").read_bytes()
        assert a == b


def test_render_never_paints_marker_colors_outside_disk(tmp_path):
    spec = make_spec(n_frames=5)
    trace, _ = gen_trace(spec)
    render_frames(trace, spec, tmp_path)
    marker = spec.marker_spec
    for i, sample in enumerate(trace.samples):
        frame = read_ppm((tmp_path / f"f{i:04d}.ppm").read_bytes())
        mask = marker.mask(frame)
        ys, xs = np.nonzero(mask)
        assert len(ys) > 0
        pane = LAYOUT.gaze_pane
        r = spec.marker_radius
        for y, x in zip(ys, xs):
            dx = x - (pane.x + sample.x)
            dy = y - (pane.y + sample.y)
            assert dx * dx + dy * dy <= r * r


def test_render_game_pane_contains_white(tmp_path):
    spec = make_spec(n_frames=1)
    trace, _ = gen_trace(spec)
    render_frames(trace, spec, tmp_path)
    frame = read_ppm((tmp_path / "f0000.ppm").read_bytes())
    game = frame[0:100, 0:240]
    assert (game == 255).all(axis=2).any()


def test_render_rejects_disk_touching_border(tmp_path):
    samples = [GazeSample(0, 2, 100, True)]  # x=2 < radius 4
    trace = GazeTrace(samples=samples, scene_width=240, scene_height=200)
    with pytest.raises(ValueError, match="exit the gaze pane"):
        render_frames(trace, make_spec(), tmp_path)


def test_render_png_format(tmp_path):
    spec = make_spec(n_frames=2)
    trace, _ = gen_trace(spec)
    render_frames(trace, spec, tmp_path, image_format="png")
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["f0000.png", "f0001.png"]


def test_full_oracle_loop_small():
    import tempfile, shutil
    from pathlib import Path

    spec = make_spec(n_frames=120, dropout=0.05, seed=9)
    trace, truth = gen_trace(spec)
    tmp = Path(tempfile.mkdtemp())
    try:
        render_frames(trace, spec, tmp)
        source = open_image_dir(tmp, LAYOUT.canvas_width, LAYOUT.canvas_height)
        recovered = extract_trace(source, LAYOUT, spec.marker_spec)
        assert len(recovered.samples) == 120
        for sample, frame in zip(recovered.samples, truth.frames):
            assert sample.valid == frame.valid
            if sample.valid:
                assert abs(sample.x - frame.x) <= 1.0
                assert abs(sample.y - frame.y) <= 1.0
        annotated = annotate_trace(recovered, ROI)
        pct = roi_percentages(annotated, labels=ROI.labels)
        for label, frac in truth.label_fractions().items():
            assert abs(pct[label] - frac) <= 0.01
    finally:
        shutil.rmtree(tmp)
