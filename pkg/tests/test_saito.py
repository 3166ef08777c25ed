"""Adaptive velocity filter: hand examples, trace protocol, invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from velofuse.errors import DomainError, UsageError
from velofuse.saito import (
    FilterParams,
    FilterState,
    gv_for_distance,
    initialize,
    normal_filter_step,
    raw_velocity,
    run_filter,
    step,
)

P = FilterParams()
DT = 0.05


def test_default_params():
    assert P.normalizer == 980.0
    assert P.bias_gain == 16.0
    assert P.accel_gain == pytest.approx(1 / 21)
    assert P.gain_limit == pytest.approx(1 / 5)
    assert P.monitor_threshold == pytest.approx(1 / 17)
    assert P.reject_ratio == pytest.approx(1 / 4)
    assert P.monitor_gain_limit == pytest.approx(1 / 15)
    assert P.gv_scale == 3500.0


def test_param_validation():
    with pytest.raises(UsageError):
        FilterParams(normalizer=0.0)
    with pytest.raises(UsageError):
        FilterParams(gain_limit=0.0)
    with pytest.raises(UsageError):
        FilterParams(monitor_threshold=0.3)  # above gain_limit
    with pytest.raises(UsageError):
        FilterParams.from_config({"normalzer": 1.0})


def test_gv_law():
    assert gv_for_distance(P, 0.0) == 1.0
    assert gv_for_distance(P, 3500.0) == pytest.approx(0.5)
    assert gv_for_distance(P, 31_500.0) == pytest.approx(0.1)
    with pytest.raises(UsageError):
        gv_for_distance(P, -1.0)


def test_one_step_by_hand():
    """One full step from a known state, every intermediate written out."""
    state = FilterState(vs=-1000.0, vn=-1100.0, an=-50.0, d=30_000.0)
    d = 29_900.0
    v = (29_900.0 - 30_000.0) / DT  # -2000 mm/s
    a_s = (v - (-1000.0)) / DT  # -20000 mm/s^2
    a_m = (v - (-1100.0)) / DT  # -18000
    biased = -50.0 * 16.0  # -800
    s = 980.0 / abs(biased - a_s)  # 980 / 19200
    assert s < 1 / 5  # under the clamp
    sm = 980.0 / abs(biased - a_m)  # 980 / 17200
    # monitor: s ~ 0.051 is below 1/17 ~ 0.0588 and below sm/4? sm ~ 0.05698,
    # sm/4 ~ 0.0142, s > sm/4 so no substitution
    assert s < P.monitor_threshold and s >= sm * P.reject_ratio
    vs_t = -1000.0 + s * (v - (-1000.0))
    gv = 1.0 / (29_900.0 / 3500.0 + 1.0)
    vn_t = -1100.0 + gv * (v - (-1100.0))
    an_t = -50.0 + (1 / 21) * ((vs_t - (-1000.0)) / DT - (-50.0))

    new_state, out = step(state, P, d, DT)
    assert out.v_raw == pytest.approx(v)
    assert out.as_raw == pytest.approx(a_s)
    assert out.am_raw == pytest.approx(a_m)
    assert out.s_gain == pytest.approx(s)
    assert out.sm_gain == pytest.approx(sm)
    assert not out.rejected_by_monitor
    assert out.vs == pytest.approx(vs_t)
    assert out.vn == pytest.approx(vn_t)
    assert out.an == pytest.approx(an_t)
    assert new_state.d == d


def test_monitor_substitution():
    """A stale acceleration keeps s tiny while the normal path tracks; the
    monitor must swap in its own gain and flag the frame."""
    # an large and positive, raw accelerations near zero against vn
    state = FilterState(vs=5000.0, vn=-10.0, an=500.0, d=20_000.0)
    d = 20_000.0 - 0.5  # v = -10 mm/s, matches vn, far from vs
    new_state, out = step(state, P, d, DT)
    # s against vs: |16*500 - (-10 - 5000)/0.05| = |8000 + 100200| -> tiny
    assert out.s_gain < P.gain_limit
    assert out.rejected_by_monitor
    assert out.s_gain == min(out.sm_gain, P.monitor_gain_limit)
    # after substitution the estimate moves toward the raw velocity
    assert new_state.vs < 5000.0


def test_perfect_agreement_hits_clamp():
    # raw acceleration exactly equal to the biased acceleration: the floored
    # denominator produces a huge gain which must clamp at gain_limit
    an = -100.0
    vs = -2000.0
    biased = an * 16.0
    v = vs + biased * DT  # makes a_s == biased exactly
    d_prev = 25_000.0
    state = FilterState(vs=vs, vn=vs, an=an, d=d_prev)
    _, out = step(state, P, d_prev + v * DT, DT)
    assert out.s_gain == P.gain_limit


def test_step_validation():
    state = initialize(10_000.0)
    with pytest.raises(UsageError):
        step(FilterState.uninitialized(), P, 10_000.0, DT)
    with pytest.raises(UsageError):
        step(state, P, 10_000.0, 0.0)
    with pytest.raises(DomainError):
        step(state, P, -5.0, DT)
    with pytest.raises(DomainError):
        step(state, P, math.nan, DT)
    with pytest.raises(DomainError):
        initialize(0.0)


def test_helpers():
    assert raw_velocity(9_000.0, 10_000.0, 0.05) == pytest.approx(-20_000.0)
    with pytest.raises(UsageError):
        raw_velocity(1.0, 1.0, 0.0)
    assert normal_filter_step(0.0, 10.0, 0.5) == 5.0
    with pytest.raises(UsageError):
        normal_filter_step(0.0, 1.0, 1.5)
    st0 = initialize(10_000.0, -500.0)
    assert st0.vs == st0.vn == -500.0 and st0.an == 0.0 and st0.d == 10_000.0


def test_trace_seed_protocol():
    """First valid frame records distance only; the second emits the raw
    velocity as both filtered states with zero acceleration."""
    d = np.array([np.nan, 10_000.0, 9_950.0, 9_900.0])
    res = run_filter(P, d, DT)
    assert res.has_output.tolist() == [0, 0, 1, 1]
    assert np.isnan(res.vs[1])
    v_seed = (9_950.0 - 10_000.0) / DT
    assert res.v_raw[2] == pytest.approx(v_seed)
    assert res.vs[2] == res.vn[2] == pytest.approx(v_seed)
    assert res.an[2] == 0.0


def test_trace_matches_scalar_steps():
    """run_filter must agree with explicit initialize+step calls, including
    the widened dt across dropout gaps."""
    rng = np.random.default_rng(7)
    n = 200
    d = 20_000.0 + np.cumsum(rng.normal(-30.0, 15.0, n))
    drop = rng.random(n) < 0.2
    d[drop] = np.nan
    res = run_filter(P, d, DT)

    valid = [i for i in range(n) if not math.isnan(d[i])]
    first, second = valid[0], valid[1]
    v0 = (d[second] - d[first]) / ((second - first) * DT)
    state = initialize(d[second], v0)
    last_i = second
    for i in valid[2:]:
        state, out = step(state, P, float(d[i]), (i - last_i) * DT)
        assert res.vs[i] == pytest.approx(out.vs, abs=1e-9)
        assert res.vn[i] == pytest.approx(out.vn, abs=1e-9)
        assert res.an[i] == pytest.approx(out.an, abs=1e-9)
        assert res.s_gain[i] == pytest.approx(out.s_gain, abs=1e-12)
        assert bool(res.rejected[i]) == out.rejected_by_monitor
        last_i = i
    # frames without distance carry no output
    assert not res.has_output[drop].any()
    assert np.isnan(res.vs[drop]).all()


def test_run_filter_initial_state():
    d = np.array([10_000.0, 9_950.0, 9_900.0])
    state = initialize(10_050.0, -1000.0)
    res = run_filter(P, d, DT, initial_state=state)
    # with an explicit state every frame steps, including the first
    assert res.has_output.tolist() == [1, 1, 1]
    st1, out0 = step(state, P, 10_000.0, DT)
    assert res.vs[0] == pytest.approx(out0.vs)
    with pytest.raises(UsageError):
        run_filter(P, d, DT, initial_state=FilterState.uninitialized())
    with pytest.raises(UsageError):
        run_filter(P, d, 0.0)
    with pytest.raises(UsageError):
        run_filter(P, d.reshape(1, 3), DT)


def test_constant_distance_settles():
    d = np.full(300, 15_000.0)
    res = run_filter(P, d, DT)
    assert res.v_raw[2:].max() == 0.0
    assert abs(res.vs[-1]) < 1e-9
    assert abs(res.an[-1]) < 1e-9


@given(
    vs=st.floats(-30_000, 30_000),
    vn=st.floats(-30_000, 30_000),
    an=st.floats(-10_000, 10_000),
    d_prev=st.floats(1_000, 100_000),
    dd=st.floats(-1_500, 1_500),
)
@settings(max_examples=300, deadline=None)
def test_step_invariants(vs, vn, an, d_prev, dd):
    d = d_prev + dd
    if d <= 0:
        d = 1.0
    state = FilterState(vs=vs, vn=vn, an=an, d=d_prev)
    _, out = step(state, P, d, DT)
    # the applied gain stays within the widest clamp either path allows
    assert 0.0 < out.s_gain <= max(P.gain_limit, P.monitor_gain_limit)
    assert 0.0 < out.gv <= 1.0
    # both velocity updates are convex between previous state and raw velocity
    lo, hi = min(vs, out.v_raw), max(vs, out.v_raw)
    assert lo - 1e-6 <= out.vs <= hi + 1e-6
    lo, hi = min(vn, out.v_raw), max(vn, out.v_raw)
    assert lo - 1e-6 <= out.vn <= hi + 1e-6
    assert math.isfinite(out.an)
