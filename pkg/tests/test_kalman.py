"""Kalman baseline against a dense-matrix textbook implementation."""

import math

import numpy as np
import pytest

from velofuse.errors import DomainError, UsageError
from velofuse.kalman import (
    KalmanParams,
    KalmanState,
    kalman_init,
    kalman_predict,
    kalman_step,
    kalman_update,
    run_kalman,
)

DT = 0.05


def _oracle(params, z, dt):
    """Straightforward dense implementation with explicit matrix algebra."""
    n = len(z)
    F = np.array([[1, dt, 0.5 * dt * dt], [0, 1, dt], [0, 0, 1]], dtype=float)
    g = np.array([0.5 * dt * dt, dt, 1.0]).reshape(3, 1)
    Q = params.process_noise_accel**2 * (g @ g.T)
    H = np.array([[1.0, 0.0, 0.0]])

    d = np.full(n, np.nan)
    v = np.full(n, np.nan)
    a = np.full(n, np.nan)
    has = np.zeros(n, dtype=np.uint8)

    x = None
    P = None
    first = None
    for i in range(n):
        zi = z[i]
        if x is None:
            if math.isnan(zi):
                continue
            if first is None:
                first = (i, zi)
                continue
            gap = (i - first[0]) * dt
            x = np.array([zi, (zi - first[1]) / gap, 0.0])
            P = np.diag(params.initial_covariance).astype(float)
        else:
            x = F @ x
            P = F @ P @ F.T + Q
            if not math.isnan(zi):
                sigma = params.measurement_std(zi)
                R = np.array([[sigma * sigma]])
                S = H @ P @ H.T + R
                K = P @ H.T @ np.linalg.inv(S)
                x = x + (K @ (np.array([zi]) - H @ x)).ravel()
                IKH = np.eye(3) - K @ H
                P = IKH @ P @ IKH.T + K @ R @ K.T
        d[i], v[i], a[i] = x
        has[i] = 1
    return d, v, a, has


def test_matches_textbook_oracle():
    rng = np.random.default_rng(17)
    params = KalmanParams(process_noise_accel=800.0, measurement_noise_mm=250.0)
    for trial in range(5):
        n = 150
        truth = 30_000.0 - 2_000.0 * DT * np.arange(n)
        z = truth + rng.normal(0.0, 250.0, n)
        z[rng.random(n) < 0.15] = np.nan
        res = run_kalman(params, z, DT)
        d, v, a, has = _oracle(params, z, DT)
        assert np.array_equal(res.has_output, has)
        m = has.astype(bool)
        assert np.allclose(res.d[m], d[m], rtol=0, atol=1e-6)
        assert np.allclose(res.v[m], v[m], rtol=0, atol=1e-6)
        assert np.allclose(res.a[m], a[m], rtol=0, atol=1e-6)


def test_distance_law_measurement_std():
    params = KalmanParams(disparity_noise_px=0.1, stereo_constant=560_000.0)
    assert params.measurement_std(10_000.0) == pytest.approx(
        10_000.0**2 * 0.1 / 560_000.0
    )
    fixed = KalmanParams(measurement_noise_mm=123.0)
    assert fixed.measurement_std(99_999.0) == 123.0


def test_init_from_two_measurements():
    state = kalman_init(10_000.0, 9_900.0, DT, KalmanParams())
    assert state.distance == 9_900.0
    assert state.velocity == pytest.approx((9_900.0 - 10_000.0) / DT)
    assert state.acceleration == 0.0
    with pytest.raises(DomainError):
        kalman_init(math.nan, 9_900.0, DT, KalmanParams())
    with pytest.raises(UsageError):
        kalman_init(10_000.0, 9_900.0, 0.0, KalmanParams())


def test_emits_through_dropouts():
    z = np.array([10_000.0, 9_950.0, np.nan, np.nan, 9_800.0])
    res = run_kalman(KalmanParams(), z, DT)
    # init completes on the second sample; prediction covers the gap
    assert res.has_output.tolist() == [0, 1, 1, 1, 1]
    assert np.isfinite(res.d[2:]).all()


def test_covariance_stays_psd():
    rng = np.random.default_rng(23)
    params = KalmanParams(process_noise_accel=500.0, measurement_noise_mm=100.0)
    state = kalman_init(20_000.0, 19_950.0, DT, params)
    for _ in range(400):
        state = kalman_step(
            state,
            params,
            float(20_000.0 + rng.normal(0, 100.0)) if rng.random() > 0.3 else None,
            DT,
        )
        assert np.linalg.eigvalsh(state.P)[0] > -1e-6 * max(1.0, np.trace(state.P))
    # measurements keep shrinking the distance variance from its prior
    assert state.P[0, 0] < params.initial_covariance[0]


def test_update_reduces_distance_variance():
    params = KalmanParams()
    state = kalman_init(10_000.0, 9_950.0, DT, params)
    predicted = kalman_predict(state, params, DT)
    updated = kalman_update(predicted, params, 9_900.0)
    assert updated.P[0, 0] < predicted.P[0, 0]
    with pytest.raises(DomainError):
        kalman_update(predicted, params, math.inf)


def test_innovation_whiteness():
    """On a matched constant-velocity run the normalized innovations have
    unit variance, give or take sampling error."""
    rng = np.random.default_rng(31)
    n = 4_000
    sigma = 150.0
    truth = 50_000.0 - 1_000.0 * DT * np.arange(n)
    z = truth + rng.normal(0.0, sigma, n)
    params = KalmanParams(process_noise_accel=20.0, measurement_noise_mm=sigma)
    res = run_kalman(params, z, DT)
    m = np.isfinite(res.innovation) & (res.innovation_var > 0)
    m[:200] = False  # discard the convergence transient
    ratio = np.mean(res.innovation[m] ** 2 / res.innovation_var[m])
    assert 0.7 < ratio < 1.3


def test_params_validation():
    with pytest.raises(UsageError):
        KalmanParams(process_noise_accel=0.0)
    with pytest.raises(UsageError):
        KalmanParams(measurement_noise_mm=-1.0)
    with pytest.raises(UsageError):
        KalmanParams(disparity_noise_px=0.0)
    with pytest.raises(UsageError):
        KalmanParams(initial_covariance=(1.0, 2.0))
    with pytest.raises(UsageError):
        KalmanParams.from_config({"q": 1.0})
    p = KalmanParams.from_config(
        {"process_noise_accel": 5.0, "initial_covariance": [1.0, 2.0, 3.0]}
    )
    assert p.initial_covariance == (1.0, 2.0, 3.0)


def test_run_kalman_validation():
    with pytest.raises(UsageError):
        run_kalman(KalmanParams(), np.zeros((2, 2)), DT)
    with pytest.raises(UsageError):
        run_kalman(KalmanParams(), np.zeros(4), 0.0)
