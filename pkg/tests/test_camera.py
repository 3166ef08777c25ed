import math

import pytest
from hypothesis import given, strategies as st

from velofuse.camera import (
    CameraModel,
    disparity_to_distance,
    distance_to_disparity,
)
from velofuse.errors import DomainError, UsageError

MODEL = CameraModel()


def test_default_constant():
    assert MODEL.stereo_constant == 560_000.0
    assert MODEL.frame_interval == 0.05


def test_known_conversions():
    # 56 px <-> 10 m with the default constant
    assert disparity_to_distance(MODEL, 56.0) == pytest.approx(10_000.0)
    assert distance_to_disparity(MODEL, 10_000.0) == pytest.approx(56.0)


@given(st.floats(min_value=0.05, max_value=500.0))
def test_roundtrip(disparity):
    d = disparity_to_distance(MODEL, disparity)
    assert math.isclose(distance_to_disparity(MODEL, d), disparity, rel_tol=1e-12)


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_nonpositive_rejected(bad):
    with pytest.raises(DomainError):
        disparity_to_distance(MODEL, bad)
    with pytest.raises(DomainError):
        distance_to_disparity(MODEL, bad)


def test_intrinsics_recompute_constant():
    m = CameraModel(baseline_mm=350.0, focal_mm=8.0, pitch_mm_per_px=0.005)
    assert m.stereo_constant == pytest.approx(350.0 * 8.0 / 0.005)


def test_partial_intrinsics_rejected():
    with pytest.raises(UsageError):
        CameraModel(baseline_mm=350.0, focal_mm=8.0)


def test_bad_values_rejected():
    with pytest.raises(UsageError):
        CameraModel(stereo_constant=-1.0)
    with pytest.raises(UsageError):
        CameraModel(frame_interval=0.0)


def test_from_config():
    m = CameraModel.from_config({"stereo_constant": 600_000.0, "frame_interval": 0.1})
    assert m.stereo_constant == 600_000.0
    assert m.frame_interval == 0.1
    with pytest.raises(UsageError):
        CameraModel.from_config({"stereo_konstant": 1.0})
