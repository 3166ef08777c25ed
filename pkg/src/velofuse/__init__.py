"""velofuse: stereo velocity estimation with disparity fusion, detection
fusion and an adaptive-gain velocity filter, plus a scenario simulator,
a Kalman baseline and a metrics harness."""

from ._backend import backend_name
from .camera import CameraModel, disparity_to_distance, distance_to_disparity
from .disparity import (
    DensityReport,
    DepthHistogram,
    DisparityMap,
    Exposure,
    compute_depth_histogram,
    fuse_disparity_maps,
    fused_density_report,
    load_dmap,
    save_dmap,
)
from .errors import DomainError, UsageError
from .fusion import (
    FusionConfig,
    FusionInputs,
    FusionState,
    ReliabilityThresholds,
    StereoReliability,
    classify_stereo_reliability,
    fuse_velocity,
    mono_velocity_from_width,
    mono_weight,
    predicted_velocity,
    predicted_weight,
)
from .kalman import (
    KalmanParams,
    KalmanState,
    kalman_init,
    kalman_predict,
    kalman_step,
    kalman_update,
    run_kalman,
)
from .metrics import (
    MetricsReport,
    absolute_velocity,
    compute_report,
    constant_gt_window,
    measure_delay,
    measure_dispersion,
    measure_non_detection_rate,
)
from .pipeline import (
    ESTIMATORS,
    PipelineConfig,
    PipelineResult,
    read_result_csv,
    run_pipeline,
)
from .saito import (
    FilterParams,
    FilterState,
    FilterStepOutput,
    gv_for_distance,
    initialize,
    normal_filter_step,
    raw_velocity,
    run_filter,
    step,
)
from .simulate import (
    MotionProfile,
    NoiseModel,
    PRESETS,
    ScenarioSpec,
    ScenarioTrace,
    SceneModel,
    Segment,
    generate_trace,
    preset,
)
from .tuning import (
    ComparisonReport,
    compare_responsiveness,
    compare_stability,
)

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "ComparisonReport",
    "DensityReport",
    "DepthHistogram",
    "DisparityMap",
    "DomainError",
    "ESTIMATORS",
    "Exposure",
    "FilterParams",
    "FilterState",
    "FilterStepOutput",
    "FusionConfig",
    "FusionInputs",
    "FusionState",
    "KalmanParams",
    "KalmanState",
    "MetricsReport",
    "MotionProfile",
    "NoiseModel",
    "PRESETS",
    "PipelineConfig",
    "PipelineResult",
    "ReliabilityThresholds",
    "ScenarioSpec",
    "ScenarioTrace",
    "SceneModel",
    "Segment",
    "StereoReliability",
    "UsageError",
    "absolute_velocity",
    "backend_name",
    "classify_stereo_reliability",
    "compare_responsiveness",
    "compare_stability",
    "compute_depth_histogram",
    "compute_report",
    "constant_gt_window",
    "disparity_to_distance",
    "distance_to_disparity",
    "fuse_disparity_maps",
    "fuse_velocity",
    "fused_density_report",
    "generate_trace",
    "gv_for_distance",
    "initialize",
    "kalman_init",
    "kalman_predict",
    "kalman_step",
    "kalman_update",
    "load_dmap",
    "measure_delay",
    "measure_dispersion",
    "measure_non_detection_rate",
    "mono_velocity_from_width",
    "mono_weight",
    "normal_filter_step",
    "predicted_velocity",
    "predicted_weight",
    "preset",
    "raw_velocity",
    "read_result_csv",
    "run_filter",
    "run_kalman",
    "run_pipeline",
    "save_dmap",
    "step",
]
