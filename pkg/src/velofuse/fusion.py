"""Detection fusion: blend stereo, mono and predicted velocity by reliability.

The stereo channel is rated TRUST / STABLE / MAYBE / NONE from its
depth-histogram count (required counts fall off with distance).  A fully
trusted stereo velocity is passed through unchanged; otherwise the output is
a weighted average of stereo, the mono (apparent-width) velocity and a
velocity predicted from the last good stereo frame.  The prediction is
deceleration-aware: if the target was braking harder than a threshold when
stereo last worked, the prediction keeps decelerating and is clamped to never
exceed the previous output, so a braking target is not optimistically
coasted.  When every weight is zero the frame has no estimate; the caller
flags a non-detection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, UsageError

G_MMPS2 = 9800.0  # 1 G in mm/s^2


class StereoReliability(Enum):
    """Stereo confidence levels with their rank ``r_s`` and weight ``w_s``."""

    TRUST = (3, 9.0)
    STABLE = (2, 4.0)
    MAYBE = (1, 1.0)
    NONE = (0, 0.0)

    @property
    def r_s(self) -> int:
        return self.value[0]

    @property
    def w_s(self) -> float:
        return self.value[1]


# (distance_mm, required_count) breakpoints; linear between, clamped outside
_DEFAULT_TRUST = ((10_000.0, 20.0), (50_000.0, 10.0), (100_000.0, 5.0))
_DEFAULT_STABLE = ((10_000.0, 12.0), (50_000.0, 6.0), (100_000.0, 3.0))
_DEFAULT_MAYBE = ((10_000.0, 6.0), (50_000.0, 3.0), (100_000.0, 2.0))


@dataclass(frozen=True)
class ReliabilityThresholds:
    """Distance-dependent histogram-count requirements per confidence level."""

    trust: Tuple[Tuple[float, float], ...] = _DEFAULT_TRUST
    stable: Tuple[Tuple[float, float], ...] = _DEFAULT_STABLE
    maybe: Tuple[Tuple[float, float], ...] = _DEFAULT_MAYBE

    def __post_init__(self) -> None:
        for name in ("trust", "stable", "maybe"):
            pts = tuple(tuple(p) for p in getattr(self, name))
            if len(pts) < 1:
                raise UsageError(f"{name} needs at least one breakpoint")
            dists = [p[0] for p in pts]
            if any(d <= 0 for d in dists) or sorted(dists) != dists or len(set(dists)) != len(dists):
                raise UsageError(f"{name} breakpoints must be positive and strictly increasing")
            object.__setattr__(self, name, pts)
        # the requirement ordering must hold at every distance; piecewise
        # linear curves only need checking at the union of breakpoints
        grid = sorted(
            {d for pts in (self.trust, self.stable, self.maybe) for d, _ in pts}
        )
        for d in grid:
            t = self.required_count(StereoReliability.TRUST, d)
            s = self.required_count(StereoReliability.STABLE, d)
            m = self.required_count(StereoReliability.MAYBE, d)
            if not (t >= s >= m >= 1.0):
                raise UsageError(
                    f"threshold ordering violated at {d} mm: trust={t} stable={s} maybe={m}"
                )

    def required_count(self, level: StereoReliability, distance_mm: float) -> float:
        """Histogram count needed at ``distance_mm`` to reach ``level``."""
        if level is StereoReliability.NONE:
            return 0.0
        pts = {
            StereoReliability.TRUST: self.trust,
            StereoReliability.STABLE: self.stable,
            StereoReliability.MAYBE: self.maybe,
        }[level]
        xs = [p[0] for p in pts]
        ys = [p[1] for p in pts]
        return float(np.interp(distance_mm, xs, ys))

    @classmethod
    def from_config(cls, cfg: Mapping) -> "ReliabilityThresholds":
        def pts(key, default):
            raw = cfg.get(key)
            if raw is None:
                return default
            return tuple((float(d), float(c)) for d, c in raw)

        return cls(
            trust=pts("trust", _DEFAULT_TRUST),
            stable=pts("stable", _DEFAULT_STABLE),
            maybe=pts("maybe", _DEFAULT_MAYBE),
        )


def classify_stereo_reliability(
    count: int, distance_mm: float, thresholds: ReliabilityThresholds
) -> StereoReliability:
    """Highest level whose required count is met at this distance."""
    if count < 0:
        raise UsageError(f"count must be >= 0, got {count}")
    if not distance_mm > 0:
        raise DomainError(f"distance must be positive, got {distance_mm}")
    for level in (
        StereoReliability.TRUST,
        StereoReliability.STABLE,
        StereoReliability.MAYBE,
    ):
        if count >= thresholds.required_count(level, distance_mm):
            return level
    return StereoReliability.NONE


def mono_weight(r_m: float) -> float:
    """Weight of the mono velocity: ``(3 * r_m) ** 2`` for ``r_m`` in [0, 1]."""
    if not 0.0 <= r_m <= 1.0:
        raise UsageError(f"r_m must be in [0, 1], got {r_m}")
    return (3.0 * r_m) ** 2


def predicted_weight(r_s: int, r_m: float) -> float:
    """Weight of the predicted velocity: ``(3 - r_s) * (3 - 3 * r_m)``.

    High stereo rank or high mono reliability leaves little need for the
    prediction, so its weight shrinks with both.
    """
    if r_s not in (0, 1, 2, 3):
        raise UsageError(f"r_s must be one of 0..3, got {r_s}")
    if not 0.0 <= r_m <= 1.0:
        raise UsageError(f"r_m must be in [0, 1], got {r_m}")
    return (3.0 - r_s) * (3.0 - 3.0 * r_m)


@dataclass(frozen=True)
class FusionConfig:
    """Tuning knobs of the fusion stage."""

    thresholds: ReliabilityThresholds = field(default_factory=ReliabilityThresholds)
    decel_threshold: float = -0.1 * G_MMPS2  # mm/s^2; below this, keep decelerating
    mono_gain: float = 0.25  # smoothing gain of the mono velocity
    assumed_width_mm: float = 1800.0  # physical target width for the mono channel
    focal_over_pitch_px: float = 1600.0
    bin_width_mm: float = 500.0  # histogram bin width used by the pipeline

    def __post_init__(self) -> None:
        if not self.decel_threshold < 0:
            raise UsageError("decel_threshold must be negative")
        if not 0 < self.mono_gain <= 1:
            raise UsageError("mono_gain must be in (0, 1]")
        if self.assumed_width_mm <= 0 or self.focal_over_pitch_px <= 0:
            raise UsageError("mono geometry must be positive")
        if self.bin_width_mm <= 0:
            raise UsageError("bin_width_mm must be positive")

    @classmethod
    def from_config(cls, cfg: Mapping) -> "FusionConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(cfg) - known
        if unknown:
            raise UsageError(f"unknown fusion config keys: {sorted(unknown)}")
        kwargs = dict(cfg)
        if "thresholds" in kwargs:
            kwargs["thresholds"] = ReliabilityThresholds.from_config(kwargs["thresholds"])
        return cls(**kwargs)


@dataclass(frozen=True)
class FusionInputs:
    """One frame's channels.

    ``v_s`` / ``v_m`` are the stereo and mono velocities (None when absent),
    ``r_s_state`` the stereo confidence, ``r_m`` the mono reliability in
    [0, 1] (pass 0 when no mono report exists).  ``a_n`` is the current
    filtered acceleration, captured into the state on valid-stereo frames so
    later predictions know how hard the target was braking.
    """

    v_s: Optional[float]
    r_s_state: StereoReliability
    v_m: Optional[float]
    r_m: float
    dt: float
    a_n: Optional[float] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.r_m <= 1.0:
            raise UsageError(f"r_m must be in [0, 1], got {self.r_m}")
        if not self.dt > 0:
            raise UsageError(f"dt must be positive, got {self.dt}")
        if self.v_s is None and self.r_s_state is not StereoReliability.NONE:
            raise UsageError("absent stereo velocity requires the NONE state")
        for name in ("v_s", "v_m", "a_n"):
            val = getattr(self, name)
            if val is not None and not math.isfinite(val):
                raise DomainError(f"{name} must be finite, got {val}")


@dataclass(frozen=True)
class FusionState:
    """Carry-over: previous output and the last good stereo epoch.

    ``frames_since_stereo`` is 0 exactly on frames where stereo was valid.
    ``v_at_stereo`` / ``a_at_stereo`` are the output velocity and filtered
    acceleration captured on that frame; both None until a first epoch.
    """

    v_prev: Optional[float] = None
    frames_since_stereo: int = 0
    v_at_stereo: Optional[float] = None
    a_at_stereo: Optional[float] = None
    decel_threshold: float = -0.1 * G_MMPS2

    @property
    def populated(self) -> bool:
        return self.v_at_stereo is not None and self.v_prev is not None


def predicted_velocity(state: FusionState, dt: float) -> float:
    """Velocity extrapolated from the last good stereo frame.

    If the target was braking harder than the threshold at that frame the
    deceleration is carried forward over the elapsed frames and the result is
    clamped to the previous output (never predicts a braking target back up);
    otherwise the previous output is held.
    """
    if not state.populated:
        raise UsageError("no stereo epoch captured yet; prediction undefined")
    if not dt > 0:
        raise UsageError(f"dt must be positive, got {dt}")
    a = state.a_at_stereo if state.a_at_stereo is not None else 0.0
    if a < state.decel_threshold:
        coasted = state.v_at_stereo + a * state.frames_since_stereo * dt
        return min(state.v_prev, coasted)
    return state.v_prev


def fuse_velocity(
    inputs: FusionInputs, state: FusionState
) -> Tuple[Optional[float], FusionState]:
    """Fuse one frame's channels; returns ``(velocity or None, next state)``.

    A TRUST-rated stereo velocity passes through bit for bit.  Otherwise the
    available channels are averaged with weights ``w_s`` (from the stereo
    state), ``(3 r_m)^2`` and ``(3 - r_s)(3 - 3 r_m)``; channels without a
    value get weight 0 and an all-zero total yields None (no estimate, the
    previous output is held in the state).
    """
    stereo_valid = inputs.v_s is not None
    # frames elapsed since the last stereo epoch, as of this frame
    elapsed = state.frames_since_stereo + 1

    if stereo_valid and inputs.r_s_state.r_s > 2:
        v_f: Optional[float] = inputs.v_s
    else:
        w_s = inputs.r_s_state.w_s if stereo_valid else 0.0
        w_m = mono_weight(inputs.r_m) if inputs.v_m is not None else 0.0
        if state.populated:
            v_p = predicted_velocity(
                replace(state, frames_since_stereo=elapsed), inputs.dt
            )
            w_p = predicted_weight(inputs.r_s_state.r_s, inputs.r_m)
        else:
            v_p = None
            w_p = 0.0
        total = w_s + w_m + w_p
        if total > 0.0:
            acc = 0.0
            if w_s > 0.0:
                acc += w_s * inputs.v_s
            if w_m > 0.0:
                acc += w_m * inputs.v_m
            if w_p > 0.0:
                acc += w_p * v_p
            v_f = acc / total
        else:
            v_f = None

    if stereo_valid:
        capture = v_f if v_f is not None else inputs.v_s
        new_state = FusionState(
            v_prev=v_f if v_f is not None else state.v_prev,
            frames_since_stereo=0,
            v_at_stereo=capture,
            a_at_stereo=inputs.a_n if inputs.a_n is not None else 0.0,
            decel_threshold=state.decel_threshold,
        )
    else:
        new_state = FusionState(
            v_prev=v_f if v_f is not None else state.v_prev,
            frames_since_stereo=state.frames_since_stereo + 1,
            v_at_stereo=state.v_at_stereo,
            a_at_stereo=state.a_at_stereo,
            decel_threshold=state.decel_threshold,
        )
    return v_f, new_state


def mono_velocity_from_width(
    samples: Sequence[Tuple[float, float]],
    assumed_width_mm: float,
    focal_over_pitch_px: float,
    gain: float = 0.25,
) -> float:
    """Velocity from an apparent-width time series of one camera.

    Each ``(t_s, width_px)`` sample converts to a distance
    ``assumed_width_mm * focal_over_pitch_px / width_px``; consecutive pairs
    are differentiated and smoothed with a first-order filter of the given
    gain.  Needs at least two samples with strictly increasing times.
    """
    if len(samples) < 2:
        raise UsageError("need at least two width samples")
    if assumed_width_mm <= 0 or focal_over_pitch_px <= 0:
        raise UsageError("mono geometry must be positive")
    scale = assumed_width_mm * focal_over_pitch_px
    v: Optional[float] = None
    t_prev, w_prev = samples[0]
    if w_prev <= 0:
        raise DomainError("width must be positive")
    d_prev = scale / w_prev
    for t, w in samples[1:]:
        if t <= t_prev:
            raise UsageError("sample times must be strictly increasing")
        if w <= 0:
            raise DomainError("width must be positive")
        d = scale / w
        raw = (d - d_prev) / (t - t_prev)
        v = raw if v is None else v + gain * (raw - v)
        t_prev, d_prev = t, d
    return float(v)


class MonoWidthTracker:
    """Incremental form of :func:`mono_velocity_from_width` for one camera.

    Feed one ``(t, width or None)`` per frame; returns the smoothed velocity
    or None until two valid samples arrived.  Equivalent to running the batch
    function over the valid samples seen so far.
    """

    def __init__(self, assumed_width_mm: float, focal_over_pitch_px: float, gain: float = 0.25):
        if assumed_width_mm <= 0 or focal_over_pitch_px <= 0:
            raise UsageError("mono geometry must be positive")
        if not 0 < gain <= 1:
            raise UsageError("gain must be in (0, 1]")
        self._scale = assumed_width_mm * focal_over_pitch_px
        self._gain = gain
        self._t_prev: Optional[float] = None
        self._d_prev: Optional[float] = None
        self._v: Optional[float] = None

    def update(self, t_s: float, width_px: Optional[float]) -> Optional[float]:
        if width_px is None:
            return self._v
        if width_px <= 0:
            raise DomainError("width must be positive")
        if self._t_prev is not None and t_s <= self._t_prev:
            raise UsageError("sample times must be strictly increasing")
        d = self._scale / width_px
        if self._d_prev is not None:
            raw = (d - self._d_prev) / (t_s - self._t_prev)
            self._v = raw if self._v is None else self._v + self._gain * (raw - self._v)
        self._t_prev, self._d_prev = t_s, d
        return self._v

    @property
    def velocity(self) -> Optional[float]:
        return self._v


def select_mono_channel(
    v_left: Optional[float],
    r_left: float,
    v_right: Optional[float],
    r_right: float,
) -> Tuple[Optional[float], float]:
    """Pick the mono camera with the higher reliability; ties go right."""
    left_ok = v_left is not None
    right_ok = v_right is not None
    if left_ok and right_ok:
        return (v_left, r_left) if r_left > r_right else (v_right, r_right)
    if left_ok:
        return v_left, r_left
    if right_ok:
        return v_right, r_right
    return None, max(r_left, r_right)
