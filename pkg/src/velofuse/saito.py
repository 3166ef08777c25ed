"""Saito adaptive-gain velocity filter.

The filter smooths the finite-difference velocity of a distance track with a
gain that rises when the observed acceleration agrees with a bias-amplified
copy of the filtered acceleration and falls when it does not.  Agreement is
asymmetric on purpose: while the target brakes, velocity errors in the
braking direction look *more* like the amplified acceleration, so the filter
catches falling velocity quickly yet stays smooth against noise.

A parallel fixed-gain "normal" filter (distance-dependent gain ``gv``) runs
alongside; a monitor compares the two acceleration views and, when the main
gain has collapsed while the normal filter still tracks, substitutes the
monitor gain so the main estimate can recover instead of freezing.

Everything is scalar per frame: distances in mm, velocities mm/s,
accelerations mm/s^2, time in seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from ._backend import impl
from .errors import DomainError, UsageError


@dataclass(frozen=True)
class FilterParams:
    """Gain-law parameters.

    ``normalizer`` (mm/s^2) divided by the distance between the observed
    acceleration and ``bias_gain`` times the filtered acceleration gives the
    adaptive gain, clamped to ``gain_limit``.  The monitor path uses
    ``monitor_threshold``, ``reject_ratio`` and ``monitor_gain_limit``;
    ``gv_scale`` (mm) sets the distance-dependent gain of the normal filter,
    ``gv = 1 / (distance / gv_scale + 1)``.  ``denom_epsilon`` floors the
    gain-law denominator so a perfect agreement yields the clamp value
    instead of a division by zero.
    """

    normalizer: float = 980.0  # mm/s^2
    bias_gain: float = 16.0
    accel_gain: float = 1.0 / 21.0
    gain_limit: float = 1.0 / 5.0
    monitor_threshold: float = 1.0 / 17.0
    reject_ratio: float = 1.0 / 4.0
    monitor_gain_limit: float = 1.0 / 15.0
    gv_scale: float = 3500.0  # mm
    denom_epsilon: float = 1e-6  # mm/s^2

    def __post_init__(self) -> None:
        if not self.normalizer > 0:
            raise UsageError("normalizer must be positive")
        if not self.bias_gain >= 1:
            raise UsageError("bias_gain must be >= 1")
        if not 0 < self.accel_gain <= 1:
            raise UsageError("accel_gain must be in (0, 1]")
        if not 0 < self.gain_limit <= 1:
            raise UsageError("gain_limit must be in (0, 1]")
        if not 0 < self.monitor_threshold < self.gain_limit:
            raise UsageError("monitor_threshold must be in (0, gain_limit)")
        if not 0 < self.reject_ratio < 1:
            raise UsageError("reject_ratio must be in (0, 1)")
        if not 0 < self.monitor_gain_limit <= 1:
            raise UsageError("monitor_gain_limit must be in (0, 1]")
        if not self.gv_scale > 0:
            raise UsageError("gv_scale must be positive")
        if not self.denom_epsilon > 0:
            raise UsageError("denom_epsilon must be positive")

    @classmethod
    def from_config(cls, cfg: Mapping) -> "FilterParams":
        unknown = set(cfg) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown filter config keys: {sorted(unknown)}")
        return cls(**cfg)

    def as_tuple(self) -> Tuple[float, ...]:
        """Positional form consumed by the trace kernels."""
        return (
            self.normalizer,
            self.bias_gain,
            self.accel_gain,
            self.gain_limit,
            self.monitor_threshold,
            self.reject_ratio,
            self.monitor_gain_limit,
            self.gv_scale,
            self.denom_epsilon,
        )


@dataclass(frozen=True)
class FilterState:
    """Carry-over between frames: the previous filtered values and distance."""

    vs: float  # filtered velocity, mm/s
    vn: float  # normal-filter velocity, mm/s
    an: float  # filtered acceleration, mm/s^2
    d: float  # distance of the frame that produced this state, mm
    initialized: bool = True

    @classmethod
    def uninitialized(cls) -> "FilterState":
        return cls(math.nan, math.nan, math.nan, math.nan, initialized=False)


@dataclass(frozen=True)
class FilterStepOutput:
    """Everything one step computed, mostly for logging and tests."""

    v_raw: float  # finite-difference velocity, mm/s
    vs: float  # filtered velocity, mm/s
    vn: float  # normal-filter velocity, mm/s
    an: float  # filtered acceleration, mm/s^2
    as_raw: float  # acceleration seen against vs, mm/s^2
    am_raw: float  # acceleration seen against vn, mm/s^2
    s_gain: float  # gain actually applied to vs
    sm_gain: float  # monitor gain (pre-adoption, unclamped)
    gv: float  # normal-filter gain
    rejected_by_monitor: bool


def gv_for_distance(params: FilterParams, distance_mm: float) -> float:
    """Distance-dependent gain of the normal filter, in (0, 1]."""
    if not (math.isfinite(distance_mm) and distance_mm >= 0):
        raise UsageError(f"distance must be finite and >= 0, got {distance_mm}")
    return 1.0 / (distance_mm / params.gv_scale + 1.0)


def raw_velocity(d_now_mm: float, d_prev_mm: float, dt_s: float) -> float:
    """Finite-difference velocity between two distances."""
    if not dt_s > 0:
        raise UsageError(f"dt must be positive, got {dt_s}")
    return (d_now_mm - d_prev_mm) / dt_s


def normal_filter_step(prev: float, raw: float, gain: float) -> float:
    """One first-order smoothing step ``prev + gain * (raw - prev)``."""
    if not 0 <= gain <= 1:
        raise UsageError(f"gain must be in [0, 1], got {gain}")
    return prev + gain * (raw - prev)


def initialize(d0_mm: float, v0_mms: float = 0.0) -> FilterState:
    """Seed the filter: both velocity states start at ``v0``, acceleration at 0."""
    if not (math.isfinite(d0_mm) and d0_mm > 0):
        raise DomainError(f"initial distance must be finite and positive, got {d0_mm}")
    if not math.isfinite(v0_mms):
        raise DomainError(f"initial velocity must be finite, got {v0_mms}")
    return FilterState(vs=v0_mms, vn=v0_mms, an=0.0, d=d0_mm)


def step(
    state: FilterState, params: FilterParams, d_mm: float, dt_s: float
) -> Tuple[FilterState, FilterStepOutput]:
    """Advance the filter by one observed distance.

    Order of computation per frame: raw velocity, the two raw accelerations
    (against ``vs`` and against ``vn``), main gain (floor the denominator,
    clamp to ``gain_limit``), monitor gain (floored denominator, no clamp),
    the monitor substitution test, then the ``vs``, ``vn`` and ``an``
    updates.  ``an`` is updated from the realised ``vs`` change, after ``vs``.
    """
    if not state.initialized:
        raise UsageError("filter state is uninitialized; call initialize() first")
    if not dt_s > 0:
        raise UsageError(f"dt must be positive, got {dt_s}")
    if not math.isfinite(d_mm):
        raise DomainError(f"distance must be finite, got {d_mm}")
    if not d_mm > 0:
        raise DomainError(f"distance must be positive, got {d_mm}")

    v = (d_mm - state.d) / dt_s
    a_s = (v - state.vs) / dt_s
    a_m = (v - state.vn) / dt_s

    biased = state.an * params.bias_gain
    den_s = abs(biased - a_s)
    if den_s < params.denom_epsilon:
        den_s = params.denom_epsilon
    s = params.normalizer / den_s
    if s > params.gain_limit:
        s = params.gain_limit

    den_m = abs(biased - a_m)
    if den_m < params.denom_epsilon:
        den_m = params.denom_epsilon
    sm = params.normalizer / den_m

    rejected = False
    if s < params.monitor_threshold and s < sm * params.reject_ratio:
        s = sm if sm < params.monitor_gain_limit else params.monitor_gain_limit
        rejected = True

    vs_t = state.vs + s * (v - state.vs)
    gv = 1.0 / (d_mm / params.gv_scale + 1.0)
    vn_t = state.vn + gv * (v - state.vn)
    an_t = state.an + params.accel_gain * ((vs_t - state.vs) / dt_s - state.an)

    new_state = FilterState(vs=vs_t, vn=vn_t, an=an_t, d=d_mm)
    out = FilterStepOutput(
        v_raw=v,
        vs=vs_t,
        vn=vn_t,
        an=an_t,
        as_raw=a_s,
        am_raw=a_m,
        s_gain=s,
        sm_gain=sm,
        gv=gv,
        rejected_by_monitor=rejected,
    )
    return new_state, out


@dataclass(frozen=True)
class FilterTraceResult:
    """Per-frame arrays from a whole-trace filter run (NaN where no output)."""

    v_raw: np.ndarray
    vs: np.ndarray
    vn: np.ndarray
    an: np.ndarray
    as_raw: np.ndarray
    am_raw: np.ndarray
    s_gain: np.ndarray
    sm_gain: np.ndarray
    gv: np.ndarray
    rejected: np.ndarray
    has_output: np.ndarray


def run_filter(
    params: FilterParams,
    distances_mm: Sequence[float],
    dt_s: float,
    initial_state: Optional[FilterState] = None,
) -> FilterTraceResult:
    """Run the filter over a distance series (NaN marks missing frames).

    Without ``initial_state`` the first valid frame records the distance and
    the second seeds both velocity states with the raw velocity; steps start
    at the third.  Missing frames produce no output and the next step spans
    the elapsed time.  Dispatches to the selected kernel backend.
    """
    if not dt_s > 0:
        raise UsageError(f"dt must be positive, got {dt_s}")
    d = np.ascontiguousarray(distances_mm, dtype=np.float64)
    if d.ndim != 1:
        raise UsageError("distances must be one-dimensional")
    if initial_state is None:
        cols = impl.filter_trace(d, float(dt_s), params.as_tuple())
        return FilterTraceResult(**cols)
    # explicit starting state: run the scalar step over the series
    if not initial_state.initialized:
        raise UsageError("initial_state is uninitialized")
    n = d.shape[0]
    res = {
        name: np.full(n, math.nan)
        for name in (
            "v_raw",
            "vs",
            "vn",
            "an",
            "as_raw",
            "am_raw",
            "s_gain",
            "sm_gain",
            "gv",
        )
    }
    rejected = np.zeros(n, dtype=np.uint8)
    has_output = np.zeros(n, dtype=np.uint8)
    state = initial_state
    last_i = None
    for i in range(n):
        di = float(d[i])
        if math.isnan(di):
            continue
        dt_eff = dt_s if last_i is None else (i - last_i) * dt_s
        state, out = step(state, params, di, dt_eff)
        for name in res:
            res[name][i] = getattr(out, name)
        rejected[i] = out.rejected_by_monitor
        has_output[i] = 1
        last_i = i
    return FilterTraceResult(rejected=rejected, has_output=has_output, **res)
