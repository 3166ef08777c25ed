"""Per-frame wiring: maps -> distance -> velocity filter -> detection fusion.

Each stage can be switched off to reproduce the ablation study: without
disparity-map fusion the bright-exposure map alone feeds the depth histogram,
without detection fusion the stereo velocity passes straight through, and
without the velocity filter the raw frame-difference velocity is used.  A
constant-acceleration Kalman baseline can run alongside on exactly the same
distance observations.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .disparity import fuse_disparity_maps, roi_distance_estimate
from .errors import UsageError
from .fusion import (
    FusionConfig,
    FusionInputs,
    FusionState,
    MonoWidthTracker,
    StereoReliability,
    classify_stereo_reliability,
    fuse_velocity,
    select_mono_channel,
)
from .kalman import KalmanParams, run_kalman
from .saito import FilterParams, run_filter
from .simulate import ScenarioTrace

CSV_COLUMNS = (
    "t_s",
    "gap_true_mm",
    "v_rel_true_mms",
    "v_target_true_mms",
    "d_obs_mm",
    "histo_count",
    "width_l_px",
    "width_r_px",
    "r_m_l",
    "r_m_r",
    "v_raw_mms",
    "vn_mms",
    "vs_mms",
    "v_fused_mms",
    "v_kalman_mms",
    "no_estimate_flag",
)


ESTIMATORS = ("saito_pipeline", "kalman", "raw_diff")
_ESTIMATOR_ALIASES = {"saito": "saito_pipeline", "raw": "raw_diff"}


@dataclass(frozen=True)
class PipelineConfig:
    """Stage toggles plus the parameter sets of each stage."""

    enable_disparity_fusion: bool = True
    enable_detection_fusion: bool = True
    enable_velocity_filter: bool = True
    estimators: Tuple[str, ...] = ("saito_pipeline",)
    filter_params: FilterParams = field(default_factory=FilterParams)
    fusion: FusionConfig = field(default_factory=FusionConfig)
    kalman: KalmanParams = field(default_factory=KalmanParams)

    def __post_init__(self) -> None:
        if not self.estimators:
            raise UsageError("need at least one estimator")
        names = []
        for name in self.estimators:
            canon = _ESTIMATOR_ALIASES.get(name, name)
            if canon not in ESTIMATORS:
                raise UsageError(f"unknown estimator {name!r}; choose from {ESTIMATORS}")
            names.append(canon)
        object.__setattr__(self, "estimators", tuple(names))

    @property
    def primary_estimator(self) -> str:
        return self.estimators[0]


@dataclass
class PipelineResult:
    """Frame-aligned outputs of one run; NaN marks absent values."""

    trace: ScenarioTrace
    config: PipelineConfig
    d_obs: np.ndarray  # gated stereo distance actually fed downstream
    histo_count: np.ndarray
    stereo_level: np.ndarray  # int8, StereoReliability.r_s per frame
    v_raw: np.ndarray
    vn: np.ndarray
    vs: np.ndarray
    a_n: np.ndarray
    rejected: np.ndarray  # uint8, gain-monitor interventions
    v_mono: np.ndarray
    v_fused: np.ndarray
    v_kalman: np.ndarray
    no_estimate: np.ndarray  # uint8

    @property
    def n_frames(self) -> int:
        return int(self.trace.n_frames)

    def estimator_column(self, name: str) -> np.ndarray:
        canon = _ESTIMATOR_ALIASES.get(name, name)
        if canon == "saito_pipeline":
            return self.v_fused
        if canon == "kalman":
            return self.v_kalman
        if canon == "raw_diff":
            return self.v_raw
        raise UsageError(f"unknown estimator {name!r}")

    @property
    def estimate(self) -> np.ndarray:
        """Velocity column of the primary estimator."""
        return self.estimator_column(self.config.primary_estimator)

    def to_csv(self, path) -> None:
        cols = {
            "t_s": self.trace.t,
            "gap_true_mm": self.trace.gap_true,
            "v_rel_true_mms": self.trace.v_rel_true,
            "v_target_true_mms": self.trace.v_target_true,
            "d_obs_mm": self.d_obs,
            "histo_count": self.histo_count,
            "width_l_px": self.trace.width_l,
            "width_r_px": self.trace.width_r,
            "r_m_l": self.trace.r_m_l,
            "r_m_r": self.trace.r_m_r,
            "v_raw_mms": self.v_raw,
            "vn_mms": self.vn,
            "vs_mms": self.vs,
            "v_fused_mms": self.v_fused,
            "v_kalman_mms": self.v_kalman,
            "no_estimate_flag": self.no_estimate,
        }
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for i in range(self.n_frames):
                row = []
                for name in CSV_COLUMNS:
                    v = cols[name][i]
                    if name in ("histo_count", "no_estimate_flag"):
                        row.append(str(int(v)))
                    elif isinstance(v, (float, np.floating)) and not math.isfinite(v):
                        row.append("")
                    else:
                        row.append(f"{float(v):.6f}")
                writer.writerow(row)


def read_result_csv(path) -> Dict[str, np.ndarray]:
    """Read a result CSV back into arrays; empty fields become NaN."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if tuple(header) != CSV_COLUMNS:
        raise UsageError(f"unexpected CSV columns: {header}")
    out: Dict[str, np.ndarray] = {}
    for j, name in enumerate(CSV_COLUMNS):
        vals = [row[j] for row in rows]
        if name in ("histo_count", "no_estimate_flag"):
            out[name] = np.array([int(v) if v else 0 for v in vals], dtype=np.int64)
        else:
            out[name] = np.array([float(v) if v else np.nan for v in vals])
    return out


def _stereo_frontend(
    trace: ScenarioTrace, config: PipelineConfig
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gated distance, count and reliability level per frame.

    With maps attached to the trace the distance comes from the depth
    histogram of the (fused or bright-only) map inside the frame's window;
    otherwise the trace's direct stereo channel is used.  Either way the
    distance only counts when the level clears NONE.
    """
    n = trace.n_frames
    d = np.full(n, np.nan)
    counts = np.zeros(n, dtype=np.int64)
    levels = np.zeros(n, dtype=np.int8)
    thresholds = config.fusion.thresholds
    if trace.maps is not None:
        if trace.rois is None or len(trace.rois) != n or len(trace.maps) != n:
            raise UsageError("trace maps and rois must cover every frame")
        for i in range(n):
            t1, t2 = trace.maps[i]
            dmap = fuse_disparity_maps(t1, t2) if config.enable_disparity_fusion else t1
            dist, count = roi_distance_estimate(
                dmap, trace.rois[i], trace.camera, bin_width=config.fusion.bin_width_mm
            )
            counts[i] = count
            if dist is None:
                continue
            level = classify_stereo_reliability(count, dist, thresholds)
            levels[i] = level.r_s
            if level is not StereoReliability.NONE:
                d[i] = dist
    else:
        for i in range(n):
            dist = float(trace.d_obs[i])
            count = int(trace.histo_count[i])
            counts[i] = count
            if not math.isfinite(dist) or dist <= 0:
                continue
            level = classify_stereo_reliability(count, dist, thresholds)
            levels[i] = level.r_s
            if level is not StereoReliability.NONE:
                d[i] = dist
    return d, counts, levels


_LEVEL_BY_RS = {lv.r_s: lv for lv in StereoReliability}


def run_pipeline(trace: ScenarioTrace, config: Optional[PipelineConfig] = None) -> PipelineResult:
    """Run the full per-frame chain over a scenario trace."""
    if config is None:
        config = PipelineConfig()
    n = trace.n_frames
    dt = trace.dt

    d_obs, counts, levels = _stereo_frontend(trace, config)

    filt = run_filter(config.filter_params, d_obs, dt)
    has_stereo_v = filt.has_output.astype(bool)
    if config.enable_velocity_filter:
        v_s_col = filt.vs
        vn_col = filt.vn
        a_n_col = filt.an
    else:
        v_s_col = filt.v_raw
        vn_col = np.full(n, np.nan)
        a_n_col = None

    want_kalman = "kalman" in config.estimators
    if want_kalman:
        kal = run_kalman(config.kalman, d_obs, dt)
        v_kalman = np.where(kal.has_output.astype(bool), kal.v, np.nan)
    else:
        v_kalman = np.full(n, np.nan)

    tracker_l = MonoWidthTracker(
        config.fusion.assumed_width_mm, config.fusion.focal_over_pitch_px, config.fusion.mono_gain
    )
    tracker_r = MonoWidthTracker(
        config.fusion.assumed_width_mm, config.fusion.focal_over_pitch_px, config.fusion.mono_gain
    )

    v_mono = np.full(n, np.nan)
    v_fused = np.full(n, np.nan)
    no_estimate = np.ones(n, dtype=np.uint8)
    state = FusionState(decel_threshold=config.fusion.decel_threshold)

    for i in range(n):
        t_s = float(trace.t[i])
        w_l = float(trace.width_l[i])
        w_r = float(trace.width_r[i])
        have_l = math.isfinite(w_l)
        have_r = math.isfinite(w_r)
        out_l = tracker_l.update(t_s, w_l if have_l else None)
        out_r = tracker_r.update(t_s, w_r if have_r else None)
        # a camera only contributes on frames where it actually detected
        v_m, r_m = select_mono_channel(
            out_l if have_l else None,
            float(trace.r_m_l[i]),
            out_r if have_r else None,
            float(trace.r_m_r[i]),
        )
        if v_m is not None:
            v_mono[i] = v_m

        stereo_ok = bool(has_stereo_v[i]) and math.isfinite(v_s_col[i])
        v_s = float(v_s_col[i]) if stereo_ok else None
        level = _LEVEL_BY_RS[int(levels[i])] if stereo_ok else StereoReliability.NONE

        if config.enable_detection_fusion:
            a_n = float(a_n_col[i]) if (a_n_col is not None and stereo_ok) else None
            inputs = FusionInputs(
                v_s=v_s, r_s_state=level, v_m=v_m, r_m=r_m if v_m is not None else 0.0,
                dt=dt, a_n=a_n,
            )
            v_f, state = fuse_velocity(inputs, state)
            if v_f is not None:
                v_fused[i] = v_f
                no_estimate[i] = 0
        else:
            if v_s is not None:
                v_fused[i] = v_s
                no_estimate[i] = 0

    return PipelineResult(
        trace=trace,
        config=config,
        d_obs=d_obs,
        histo_count=counts,
        stereo_level=levels,
        v_raw=filt.v_raw,
        vn=vn_col,
        vs=filt.vs if config.enable_velocity_filter else np.full(n, np.nan),
        a_n=filt.an if config.enable_velocity_filter else np.full(n, np.nan),
        rejected=filt.rejected,
        v_mono=v_mono,
        v_fused=v_fused,
        v_kalman=v_kalman,
        no_estimate=no_estimate,
    )
