"""Constant-acceleration Kalman filter over scalar distance measurements.

This is the comparison baseline: a textbook three-state (distance, velocity,
acceleration) filter with a piecewise-constant random acceleration-increment
process model.  The measurement noise can be fixed or follow the stereo
propagation law ``sigma = z^2 * sigma_d / stereo_constant``, which is how a
distance derived from a noisy disparity actually behaves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence, Tuple

import numpy as np

from ._backend import impl
from .camera import DEFAULT_STEREO_CONSTANT
from .errors import DomainError, UsageError

_PSD_TOL = 1e-6


@dataclass(frozen=True)
class KalmanParams:
    """Baseline filter tuning.

    ``process_noise_accel`` is the std-dev (mm/s^2) of the per-step random
    acceleration increment.  Measurement noise: if ``disparity_noise_px`` is
    set the std-dev scales with distance squared per the stereo law,
    otherwise ``measurement_noise_mm`` is used as-is.
    """

    process_noise_accel: float = 2000.0  # mm/s^2 per step
    measurement_noise_mm: float = 300.0  # mm
    disparity_noise_px: Optional[float] = None  # px; enables the distance law
    stereo_constant: float = DEFAULT_STEREO_CONSTANT  # mm * px
    initial_covariance: Tuple[float, float, float] = (1.0e6, 1.0e8, 1.0e7)

    def __post_init__(self) -> None:
        if not self.process_noise_accel > 0:
            raise UsageError("process_noise_accel must be positive")
        if not self.measurement_noise_mm > 0:
            raise UsageError("measurement_noise_mm must be positive")
        if self.disparity_noise_px is not None and not self.disparity_noise_px > 0:
            raise UsageError("disparity_noise_px must be positive when set")
        if not self.stereo_constant > 0:
            raise UsageError("stereo_constant must be positive")
        if len(self.initial_covariance) != 3 or any(
            c <= 0 for c in self.initial_covariance
        ):
            raise UsageError("initial_covariance must be three positive variances")

    def measurement_std(self, z_mm: float) -> float:
        """Measurement noise std-dev (mm) for a measured distance."""
        if self.disparity_noise_px is not None:
            return z_mm * z_mm * self.disparity_noise_px / self.stereo_constant
        return self.measurement_noise_mm

    @classmethod
    def from_config(cls, cfg: Mapping) -> "KalmanParams":
        unknown = set(cfg) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown kalman config keys: {sorted(unknown)}")
        kwargs = dict(cfg)
        if "initial_covariance" in kwargs:
            kwargs["initial_covariance"] = tuple(kwargs["initial_covariance"])
        return cls(**kwargs)


@dataclass
class KalmanState:
    """Mean ``x = (distance, velocity, acceleration)`` and covariance ``P``."""

    x: np.ndarray
    P: np.ndarray

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=np.float64).reshape(3)
        self.P = np.asarray(self.P, dtype=np.float64).reshape(3, 3)

    @property
    def distance(self) -> float:
        return float(self.x[0])

    @property
    def velocity(self) -> float:
        return float(self.x[1])

    @property
    def acceleration(self) -> float:
        return float(self.x[2])


def _check_psd(P: np.ndarray) -> None:
    scale = max(1.0, float(np.trace(P)))
    if float(np.linalg.eigvalsh(P)[0]) < -_PSD_TOL * scale:
        raise DomainError("covariance lost positive semi-definiteness")


def _transition(dt: float) -> np.ndarray:
    return np.array([[1.0, dt, 0.5 * dt * dt], [0.0, 1.0, dt], [0.0, 0.0, 1.0]])


def _process_noise(params: KalmanParams, dt: float) -> np.ndarray:
    g = np.array([0.5 * dt * dt, dt, 1.0]).reshape(3, 1)
    return (params.process_noise_accel**2) * (g @ g.T)


def kalman_init(z0_mm: float, z1_mm: float, dt_s: float, params: KalmanParams) -> KalmanState:
    """State from the first two measurements: finite-difference velocity, zero accel."""
    if not dt_s > 0:
        raise UsageError(f"dt must be positive, got {dt_s}")
    if not (math.isfinite(z0_mm) and math.isfinite(z1_mm)):
        raise DomainError("measurements must be finite")
    x = np.array([z1_mm, (z1_mm - z0_mm) / dt_s, 0.0])
    return KalmanState(x=x, P=np.diag(params.initial_covariance))


def kalman_predict(state: KalmanState, params: KalmanParams, dt_s: float) -> KalmanState:
    """Time update over ``dt_s``; use alone on frames without a measurement."""
    if not dt_s > 0:
        raise UsageError(f"dt must be positive, got {dt_s}")
    F = _transition(dt_s)
    x = F @ state.x
    P = F @ state.P @ F.T + _process_noise(params, dt_s)
    P = 0.5 * (P + P.T)
    _check_psd(P)
    return KalmanState(x=x, P=P)


def kalman_update(state: KalmanState, params: KalmanParams, z_mm: float) -> KalmanState:
    """Measurement update with the scalar distance ``z_mm`` (Joseph form)."""
    if not math.isfinite(z_mm):
        raise DomainError(f"measurement must be finite, got {z_mm}")
    sigma = params.measurement_std(z_mm)
    R = sigma * sigma
    H = np.array([[1.0, 0.0, 0.0]])
    S = float(state.P[0, 0] + R)
    K = state.P[:, :1] / S  # (3, 1)
    y = z_mm - state.x[0]
    x = state.x + (K[:, 0] * y)
    A = np.eye(3) - K @ H
    P = A @ state.P @ A.T + R * (K @ K.T)
    P = 0.5 * (P + P.T)
    _check_psd(P)
    return KalmanState(x=x, P=P)


def kalman_step(
    state: KalmanState, params: KalmanParams, z_mm: Optional[float], dt_s: float
) -> KalmanState:
    """Predict over one frame, then update if a measurement is present."""
    out = kalman_predict(state, params, dt_s)
    if z_mm is not None:
        out = kalman_update(out, params, z_mm)
    return out


@dataclass(frozen=True)
class KalmanTraceResult:
    """Per-frame arrays from a whole-trace baseline run (NaN before init)."""

    d: np.ndarray
    v: np.ndarray
    a: np.ndarray
    has_output: np.ndarray
    innovation: np.ndarray
    innovation_var: np.ndarray


def run_kalman(
    params: KalmanParams, distances_mm: Sequence[float], dt_s: float
) -> KalmanTraceResult:
    """Run the baseline over a distance series (NaN marks dropped frames).

    Initialises from the first two valid measurements; after that every frame
    predicts and frames with a measurement also update, so the baseline keeps
    emitting through dropouts.  Dispatches to the selected kernel backend.
    """
    if not dt_s > 0:
        raise UsageError(f"dt must be positive, got {dt_s}")
    z = np.ascontiguousarray(distances_mm, dtype=np.float64)
    if z.ndim != 1:
        raise UsageError("distances must be one-dimensional")
    cols = impl.kalman_trace(
        z,
        float(dt_s),
        float(params.process_noise_accel),
        float(params.measurement_noise_mm),
        float(params.disparity_noise_px) if params.disparity_noise_px is not None else 0.0,
        float(params.stereo_constant),
        tuple(float(c) for c in params.initial_covariance),
    )
    return KalmanTraceResult(**cols)
