"""Responsiveness, stability and detection metrics.

The three measurements mirror the experiment write-up conventions:

* delay: time between the true velocity and the estimate crossing a
  reference speed while slowing (72 km/h = 20000 mm/s by default), linearly
  interpolated between samples; negative when the estimate crosses early,
* dispersion: 1-sigma error of the estimate over a constant-speed window of
  at least 100 frames,
* non-detection rate: share of frames with no estimate, counted from the
  second frame on (no differencing estimator can emit on the first frame, so
  a dropout-free run reads exactly 0%).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import UsageError

CROSSING_VELOCITY_MMS = 20000.0  # 72 km/h
DISPERSION_MIN_FRAMES = 100
DISPERSION_MAX_MISSING = 0.5
_GT_CONST_TOL = 1e-6  # mm/s; ground truth is closed-form, so exact in practice


def _finite_samples(t: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mask = np.isfinite(y)
    return t[mask], y[mask]


def crossing_time(
    t: np.ndarray, y: np.ndarray, threshold: float, direction: str = "falling"
) -> Optional[float]:
    """Time of the first threshold crossing, or None.

    Missing samples (NaN) are skipped; the crossing interpolates linearly
    between the adjacent present samples that straddle the threshold.
    """
    if direction not in ("falling", "rising"):
        raise UsageError(f"direction must be 'falling' or 'rising', got {direction!r}")
    ts, ys = _finite_samples(np.asarray(t, float), np.asarray(y, float))
    for k in range(len(ys) - 1):
        a, b = ys[k], ys[k + 1]
        hit = (a > threshold >= b) if direction == "falling" else (a < threshold <= b)
        if hit:
            frac = (a - threshold) / (a - b)
            return float(ts[k] + frac * (ts[k + 1] - ts[k]))
    return None


def count_crossings(
    t: np.ndarray, y: np.ndarray, threshold: float, direction: str = "falling"
) -> int:
    ts, ys = _finite_samples(np.asarray(t, float), np.asarray(y, float))
    n = 0
    for k in range(len(ys) - 1):
        a, b = ys[k], ys[k + 1]
        if (a > threshold >= b) if direction == "falling" else (a < threshold <= b):
            n += 1
    return n


def measure_delay(
    t: np.ndarray,
    estimate: np.ndarray,
    reference: np.ndarray,
    threshold: float = CROSSING_VELOCITY_MMS,
    direction: str = "falling",
) -> Optional[float]:
    """Estimate-vs-reference crossing delay in ms; None if the estimate
    never crosses.  The reference must cross exactly once."""
    n_ref = count_crossings(t, reference, threshold, direction)
    if n_ref != 1:
        raise UsageError(
            f"reference must cross the threshold exactly once, found {n_ref} crossings"
        )
    t_ref = crossing_time(t, reference, threshold, direction)
    t_est = crossing_time(t, estimate, threshold, direction)
    if t_est is None:
        return None
    return (t_est - t_ref) * 1000.0


def absolute_velocity(
    estimate_rel: np.ndarray, v_rel_true: np.ndarray, v_target_true: np.ndarray
) -> np.ndarray:
    """Relative estimate -> absolute target velocity, frame by frame.

    The estimators measure target-minus-ego velocity; adding the true ego
    velocity (``v_target_true - v_rel_true``) recovers the target's own
    speed, which is what the crossing threshold refers to.
    """
    return np.asarray(estimate_rel, float) + (
        np.asarray(v_target_true, float) - np.asarray(v_rel_true, float)
    )


def constant_gt_window(v_rel_true: np.ndarray, tol: float = _GT_CONST_TOL) -> Tuple[int, int]:
    """Longest ``[start, stop)`` run of constant true relative velocity."""
    v = np.asarray(v_rel_true, float)
    best = (0, 1)
    start = 0
    for i in range(1, len(v) + 1):
        if i == len(v) or abs(v[i] - v[start]) > tol:
            if i - start > best[1] - best[0]:
                best = (start, i)
            start = i
    return best


def measure_dispersion(
    estimate_rel: np.ndarray,
    v_rel_true: np.ndarray,
    start: int = 0,
    stop: Optional[int] = None,
) -> Optional[float]:
    """1-sigma error over a constant-speed window; None when more than half
    the window's estimates are missing."""
    est = np.asarray(estimate_rel, float)
    gt = np.asarray(v_rel_true, float)
    if stop is None:
        stop = len(est)
    if not 0 <= start < stop <= len(est):
        raise UsageError(f"bad window [{start}, {stop}) for {len(est)} frames")
    if stop - start < DISPERSION_MIN_FRAMES:
        raise UsageError(
            f"window must cover at least {DISPERSION_MIN_FRAMES} frames, got {stop - start}"
        )
    gt_w = gt[start:stop]
    if np.ptp(gt_w) > _GT_CONST_TOL:
        raise UsageError("true velocity is not constant over the window")
    err = est[start:stop] - gt_w
    present = np.isfinite(err)
    if np.mean(~present) > DISPERSION_MAX_MISSING:
        return None
    return float(np.std(err[present], ddof=1))


def measure_non_detection_rate(no_estimate_flag: np.ndarray) -> float:
    """Percent of frames with no estimate, excluding the first frame."""
    flags = np.asarray(no_estimate_flag)
    if flags.shape[0] < 1:
        raise UsageError("need at least one frame")
    if flags.shape[0] == 1:
        return 0.0
    return 100.0 * float(np.mean(flags[1:] != 0))


def config_digest(config) -> str:
    """Short stable digest of a (frozen, nested) configuration object."""
    return hashlib.sha256(repr(config).encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class MetricsReport:
    """Per-run metric summary; absent metrics are None, not guesses."""

    preset: str
    seed: int
    config_hash: str
    delay_ms: Dict[str, Optional[float]]
    dispersion_mms: Dict[str, Optional[float]]
    non_detection_rate_percent: float
    dispersion_window: Optional[Tuple[int, int]] = None
    crossing_velocity_mms: float = CROSSING_VELOCITY_MMS

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "seed": self.seed,
            "config_hash": self.config_hash,
            "delay_ms": dict(self.delay_ms),
            "dispersion_mms": dict(self.dispersion_mms),
            "non_detection_rate_percent": self.non_detection_rate_percent,
            "dispersion_window": list(self.dispersion_window) if self.dispersion_window else None,
            "crossing_velocity_mms": self.crossing_velocity_mms,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def compute_report(result, threshold: float = CROSSING_VELOCITY_MMS) -> MetricsReport:
    """Metrics for every estimator a pipeline run carried."""
    trace = result.trace
    t = trace.t
    gt_abs = trace.v_target_true
    has_crossing = count_crossings(t, gt_abs, threshold) == 1
    start, stop = constant_gt_window(trace.v_rel_true)
    window_ok = stop - start >= DISPERSION_MIN_FRAMES

    delays: Dict[str, Optional[float]] = {}
    dispersions: Dict[str, Optional[float]] = {}
    for name in result.config.estimators:
        col = result.estimator_column(name)
        if has_crossing:
            est_abs = absolute_velocity(col, trace.v_rel_true, trace.v_target_true)
            delays[name] = measure_delay(t, est_abs, gt_abs, threshold)
        else:
            delays[name] = None
        dispersions[name] = (
            measure_dispersion(col, trace.v_rel_true, start, stop) if window_ok else None
        )

    return MetricsReport(
        preset=trace.scenario_id,
        seed=trace.seed,
        config_hash=config_digest(result.config),
        delay_ms=delays,
        dispersion_mms=dispersions,
        non_detection_rate_percent=measure_non_detection_rate(result.no_estimate),
        dispersion_window=(start, stop) if window_ok else None,
        crossing_velocity_mms=threshold,
    )
