"""Gaze-marker analytics for screen-recorded gameplay.

The toolkit extracts gaze positions from recordings that carry a rendered
tracking dot, labels them with screen regions, computes per-session gaze
and match-performance metrics, and runs a screened statistical comparison
pipeline over the results.
"""

from .detect import GazeSample, GazeTrace, MarkerSpec, detect_marker, extract_trace
from .geometry import Rect
from .ingest import (
    DEFAULT_LAYOUT,
    FrameSource,
    RecordingLayout,
    open_image_dir,
    open_raw_stream,
    split_panes,
)
from .metrics import (
    DEFAULT_LABELS,
    MatchStats,
    SessionMetrics,
    dist_from_center,
    gaze_sd,
    kda,
    mean_gaze,
    roi_percentages,
    session_metrics,
)
from .roi import (
    AnalysisConfig,
    RoiLayout,
    RoiRegion,
    annotate_trace,
    classify,
    default_analysis_config,
    default_roi_layout,
    dump_analysis_config,
    load_analysis_config,
    load_roi_layout,
)
from .stats import (
    PowerResult,
    TestResult,
    auto_compare,
    auto_correlate,
    cohens_d,
    exact_rank_sum_counts,
    levene,
    noncentral_t_cdf,
    pearson_r,
    power_two_sample_t,
    shapiro_wilk,
    spearman_rho,
    t_from_r,
    t_test_unpaired,
    wilcoxon_rank_sum,
)
from .synth import (
    GaussianGaze,
    GroundTruth,
    RoiMixture,
    SynthSpec,
    allocate_counts,
    gen_trace,
    render_frames,
)

__version__ = "0.1.0"
