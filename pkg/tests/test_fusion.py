"""Detection fusion: classification, weights, blending, mono channel."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from velofuse.errors import DomainError, UsageError
from velofuse.fusion import (
    G_MMPS2,
    FusionInputs,
    FusionState,
    MonoWidthTracker,
    ReliabilityThresholds,
    StereoReliability,
    classify_stereo_reliability,
    fuse_velocity,
    mono_velocity_from_width,
    mono_weight,
    predicted_velocity,
    predicted_weight,
    select_mono_channel,
)

TH = ReliabilityThresholds()
DT = 0.05


def test_levels_carry_rank_and_weight():
    assert StereoReliability.TRUST.r_s == 3 and StereoReliability.TRUST.w_s == 9.0
    assert StereoReliability.STABLE.r_s == 2 and StereoReliability.STABLE.w_s == 4.0
    assert StereoReliability.MAYBE.r_s == 1 and StereoReliability.MAYBE.w_s == 1.0
    assert StereoReliability.NONE.r_s == 0 and StereoReliability.NONE.w_s == 0.0


@pytest.mark.parametrize(
    "distance,counts",
    [
        (10_000.0, (20, 12, 6)),
        (50_000.0, (10, 6, 3)),
        (100_000.0, (5, 3, 2)),
        (30_000.0, (15, 9, 4.5)),  # halfway between the first two breakpoints
    ],
)
def test_required_counts(distance, counts):
    trust, stable, maybe = counts
    assert TH.required_count(StereoReliability.TRUST, distance) == pytest.approx(trust)
    assert TH.required_count(StereoReliability.STABLE, distance) == pytest.approx(stable)
    assert TH.required_count(StereoReliability.MAYBE, distance) == pytest.approx(maybe)


def test_thresholds_clamp_outside_breakpoints():
    assert TH.required_count(StereoReliability.TRUST, 1_000.0) == 20.0
    assert TH.required_count(StereoReliability.TRUST, 500_000.0) == 5.0


def test_classification_boundaries():
    # exactly meeting a requirement reaches the level
    assert classify_stereo_reliability(20, 10_000.0, TH) is StereoReliability.TRUST
    assert classify_stereo_reliability(19, 10_000.0, TH) is StereoReliability.STABLE
    assert classify_stereo_reliability(12, 10_000.0, TH) is StereoReliability.STABLE
    assert classify_stereo_reliability(11, 10_000.0, TH) is StereoReliability.MAYBE
    assert classify_stereo_reliability(6, 10_000.0, TH) is StereoReliability.MAYBE
    assert classify_stereo_reliability(5, 10_000.0, TH) is StereoReliability.NONE
    assert classify_stereo_reliability(0, 10_000.0, TH) is StereoReliability.NONE
    with pytest.raises(UsageError):
        classify_stereo_reliability(-1, 10_000.0, TH)
    with pytest.raises(DomainError):
        classify_stereo_reliability(5, 0.0, TH)


def test_threshold_ordering_enforced():
    with pytest.raises(UsageError):
        ReliabilityThresholds(trust=((10_000.0, 2.0),))  # below stable at 10 m
    with pytest.raises(UsageError):
        ReliabilityThresholds(maybe=((10_000.0, 6.0), (5_000.0, 3.0)))  # unsorted


def test_weights():
    assert mono_weight(0.0) == 0.0
    assert mono_weight(1.0) == 9.0
    assert mono_weight(0.5) == pytest.approx(2.25)
    for r_s in (0, 1, 2, 3):
        for r_m in (0.0, 0.3, 1.0):
            assert predicted_weight(r_s, r_m) == pytest.approx(
                (3.0 - r_s) * (3.0 - 3.0 * r_m)
            )
    assert predicted_weight(3, 0.0) == 0.0
    with pytest.raises(UsageError):
        mono_weight(1.5)
    with pytest.raises(UsageError):
        predicted_weight(4, 0.5)


def test_trust_passthrough_is_bit_exact():
    v = -12_345.678901
    inputs = FusionInputs(
        v_s=v, r_s_state=StereoReliability.TRUST, v_m=-9_000.0, r_m=0.9, dt=DT
    )
    out, state = fuse_velocity(inputs, FusionState())
    assert out == v  # not approx: pass-through must not touch the value
    assert state.frames_since_stereo == 0
    assert state.v_at_stereo == v


def test_weighted_mean_by_hand():
    state = FusionState(
        v_prev=-1_000.0, frames_since_stereo=0, v_at_stereo=-1_000.0, a_at_stereo=0.0
    )
    inputs = FusionInputs(
        v_s=-1_200.0, r_s_state=StereoReliability.STABLE, v_m=-800.0, r_m=0.5, dt=DT
    )
    out, _ = fuse_velocity(inputs, state)
    w_s = 4.0
    w_m = (3 * 0.5) ** 2
    w_p = (3 - 2) * (3 - 1.5)
    v_p = -1_000.0  # not braking, prediction holds the previous output
    want = (w_s * -1_200.0 + w_m * -800.0 + w_p * v_p) / (w_s + w_m + w_p)
    assert out == pytest.approx(want)


def test_braking_prediction_keeps_decelerating():
    """With stereo gone and a hard-braking epoch, the prediction coasts the
    captured deceleration and never rises above the previous output."""
    a = -0.3 * G_MMPS2
    state = FusionState(
        v_prev=-5_000.0, frames_since_stereo=0, v_at_stereo=-5_000.0, a_at_stereo=a
    )
    missing = FusionInputs(
        v_s=None, r_s_state=StereoReliability.NONE, v_m=None, r_m=0.0, dt=DT
    )
    outs = []
    for _ in range(5):
        out, state = fuse_velocity(missing, state)
        outs.append(out)
    for k, out in enumerate(outs, start=1):
        assert out == pytest.approx(-5_000.0 + a * k * DT)
    # non-increasing frame over frame
    assert all(b < a_ for a_, b in zip(outs, outs[1:]))


def test_prediction_min_clamp():
    # mild acceleration at the epoch: prediction holds rather than rises
    state = FusionState(
        v_prev=-5_000.0, frames_since_stereo=3, v_at_stereo=-4_000.0, a_at_stereo=200.0
    )
    assert predicted_velocity(state, DT) == -5_000.0
    # braking epoch, coast is above the previous output: clamp wins
    state = FusionState(
        v_prev=-9_000.0,
        frames_since_stereo=1,
        v_at_stereo=-5_000.0,
        a_at_stereo=-0.3 * G_MMPS2,
    )
    assert predicted_velocity(state, DT) == -9_000.0
    with pytest.raises(UsageError):
        predicted_velocity(FusionState(), DT)


def test_no_channels_yields_none_and_holds_state():
    state = FusionState(
        v_prev=-3_000.0, frames_since_stereo=2, v_at_stereo=-3_000.0, a_at_stereo=0.0
    )
    # prediction weight vanishes only when r_m == 1 and no value channels exist
    inputs = FusionInputs(
        v_s=None, r_s_state=StereoReliability.NONE, v_m=None, r_m=1.0, dt=DT
    )
    out, new_state = fuse_velocity(inputs, state)
    assert out is None
    assert new_state.v_prev == -3_000.0
    assert new_state.frames_since_stereo == 3
    # before any epoch nothing can be fused at all
    out, first = fuse_velocity(
        FusionInputs(v_s=None, r_s_state=StereoReliability.NONE, v_m=None, r_m=0.0, dt=DT),
        FusionState(),
    )
    assert out is None and first.v_at_stereo is None


def test_inputs_validation():
    with pytest.raises(UsageError):
        FusionInputs(v_s=None, r_s_state=StereoReliability.MAYBE, v_m=None, r_m=0.0, dt=DT)
    with pytest.raises(UsageError):
        FusionInputs(v_s=0.0, r_s_state=StereoReliability.TRUST, v_m=None, r_m=1.5, dt=DT)
    with pytest.raises(UsageError):
        FusionInputs(v_s=0.0, r_s_state=StereoReliability.TRUST, v_m=None, r_m=0.0, dt=0.0)
    with pytest.raises(DomainError):
        FusionInputs(
            v_s=math.inf, r_s_state=StereoReliability.TRUST, v_m=None, r_m=0.0, dt=DT
        )


_LEVELS = [
    StereoReliability.NONE,
    StereoReliability.MAYBE,
    StereoReliability.STABLE,
    StereoReliability.TRUST,
]


@given(
    level=st.sampled_from(_LEVELS),
    v_s=st.floats(-30_000, 30_000),
    v_m=st.one_of(st.none(), st.floats(-30_000, 30_000)),
    r_m=st.floats(0, 1),
    v_prev=st.floats(-30_000, 30_000),
    a_epoch=st.floats(-5_000, 5_000),
    elapsed=st.integers(0, 30),
)
@settings(max_examples=400, deadline=None)
def test_fused_output_in_channel_hull(level, v_s, v_m, r_m, v_prev, a_epoch, elapsed):
    """Whatever the reliabilities, the output is a convex combination of the
    available channels (stereo, mono, prediction)."""
    stereo = None if level is StereoReliability.NONE else v_s
    state = FusionState(
        v_prev=v_prev,
        frames_since_stereo=elapsed,
        v_at_stereo=v_prev,
        a_at_stereo=a_epoch,
    )
    inputs = FusionInputs(
        v_s=stereo, r_s_state=level, v_m=v_m, r_m=r_m if v_m is not None else 0.0, dt=DT
    )
    v_p = predicted_velocity(
        FusionState(
            v_prev=v_prev,
            frames_since_stereo=elapsed + 1,
            v_at_stereo=v_prev,
            a_at_stereo=a_epoch,
        ),
        DT,
    )
    out, _ = fuse_velocity(inputs, state)
    channels = [c for c in (stereo, v_m if v_m is not None else None, v_p) if c is not None]
    if out is not None:
        assert min(channels) - 1e-6 <= out <= max(channels) + 1e-6


def test_mono_velocity_batch():
    # constant closing speed: width grows as the target nears
    scale = 1_800.0 * 1_600.0
    times = [0.0, 0.05, 0.10, 0.15]
    dists = [20_000.0, 19_900.0, 19_800.0, 19_700.0]
    samples = [(t, scale / d) for t, d in zip(times, dists)]
    v = mono_velocity_from_width(samples, 1_800.0, 1_600.0, gain=1.0)
    assert v == pytest.approx(-2_000.0)
    with pytest.raises(UsageError):
        mono_velocity_from_width(samples[:1], 1_800.0, 1_600.0)
    with pytest.raises(DomainError):
        mono_velocity_from_width([(0.0, 10.0), (0.05, -3.0)], 1_800.0, 1_600.0)
    with pytest.raises(UsageError):
        mono_velocity_from_width([(0.0, 10.0), (0.0, 11.0)], 1_800.0, 1_600.0)


def test_tracker_matches_batch():
    rng = np.random.default_rng(13)
    t = 0.0
    samples = []
    tracker = MonoWidthTracker(1_800.0, 1_600.0, gain=0.25)
    for _ in range(60):
        t += 0.05
        if rng.random() < 0.3:
            out = tracker.update(t, None)  # dropout: batch list unchanged
        else:
            w = float(rng.uniform(40.0, 160.0))
            samples.append((t, w))
            out = tracker.update(t, w)
        if len(samples) >= 2:
            want = mono_velocity_from_width(samples, 1_800.0, 1_600.0, gain=0.25)
            assert out == pytest.approx(want, rel=1e-12)
        else:
            assert out is None


def test_tracker_validation():
    tracker = MonoWidthTracker(1_800.0, 1_600.0)
    tracker.update(0.0, 50.0)
    with pytest.raises(UsageError):
        tracker.update(0.0, 51.0)
    with pytest.raises(DomainError):
        tracker.update(1.0, 0.0)
    with pytest.raises(UsageError):
        MonoWidthTracker(0.0, 1_600.0)
    with pytest.raises(UsageError):
        MonoWidthTracker(1_800.0, 1_600.0, gain=0.0)


def test_select_mono_channel():
    assert select_mono_channel(-1.0, 0.8, -2.0, 0.5) == (-1.0, 0.8)
    assert select_mono_channel(-1.0, 0.5, -2.0, 0.8) == (-2.0, 0.8)
    # ties go to the right camera
    assert select_mono_channel(-1.0, 0.7, -2.0, 0.7) == (-2.0, 0.7)
    assert select_mono_channel(None, 0.9, -2.0, 0.1) == (-2.0, 0.1)
    assert select_mono_channel(-1.0, 0.4, None, 0.9) == (-1.0, 0.4)
    assert select_mono_channel(None, 0.2, None, 0.6) == (None, 0.6)
