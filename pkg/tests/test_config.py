"""JSON config parsing: strictness, precedence, partial overrides."""

import json

import pytest

from velofuse.config import (
    load_config,
    pipeline_config,
    scenario_spec,
    validate_config,
)
from velofuse.errors import UsageError
from velofuse.simulate import PRESETS, preset


FULL_DOC = {
    "camera": {"baseline_mm": 350.0, "focal_mm": 8.0, "pitch_mm_per_px": 0.005},
    "saito_filter": {"gain_limit": 0.25},
    "fusion": {"mono_gain": 0.4},
    "kalman": {"process_noise_accel": 1500.0},
    "pipeline": {
        "enable_detection_fusion": False,
        "estimators": ["saito", "kalman"],
    },
    "scenario": {"preset": "fig12", "seed": 9},
}


def test_full_document_assembly():
    doc = validate_config(FULL_DOC)
    cfg = pipeline_config(doc)
    assert cfg.enable_detection_fusion is False
    assert cfg.estimators == ("saito_pipeline", "kalman")
    assert cfg.filter_params.gain_limit == 0.25
    assert cfg.fusion.mono_gain == 0.4
    assert cfg.kalman.process_noise_accel == 1500.0
    spec = scenario_spec(doc)
    assert spec.scenario_id == "fig12"
    assert spec.noise.rng_seed == 9


def test_unknown_section_rejected():
    with pytest.raises(UsageError, match="sections"):
        validate_config({"filters": {}})
    with pytest.raises(UsageError, match="JSON object"):
        validate_config([1, 2])


@pytest.mark.parametrize(
    "section,payload",
    [
        ("saito_filter", {"gian_limit": 0.2}),
        ("fusion", {"mono_gains": 0.4}),
        ("kalman", {"q": 1.0}),
        ("pipeline", {"enable_filter": True}),
    ],
)
def test_unknown_keys_rejected(section, payload):
    with pytest.raises(UsageError, match="unknown"):
        pipeline_config({section: payload})


def test_unknown_camera_keys_rejected():
    doc = {"camera": {"baseline": 350.0}, "scenario": {"preset": "fig12"}}
    with pytest.raises(UsageError, match="unknown camera"):
        scenario_spec(doc)


def test_scenario_unknown_keys_rejected():
    with pytest.raises(UsageError, match="unknown scenario"):
        scenario_spec({"scenario": {"presett": "fig12"}})
    with pytest.raises(UsageError, match="unknown noise"):
        scenario_spec({"scenario": {"preset": "fig12", "noise": {"sigma": 1.0}}})


def test_cli_arguments_beat_config():
    doc = {"scenario": {"preset": "fig12", "seed": 9}}
    spec = scenario_spec(doc, preset_name="fig13-rain", seed=3)
    assert spec.scenario_id == "fig13-rain"
    assert spec.noise.rng_seed == 3
    # config values apply when the CLI does not override
    spec = scenario_spec(doc)
    assert spec.scenario_id == "fig12"
    assert spec.noise.rng_seed == 9


def test_partial_noise_override_keeps_preset_values():
    base = preset("fig13-rain")
    doc = {"scenario": {"preset": "fig13-rain", "noise": {"outlier_prob": 0.0}}}
    spec = scenario_spec(doc)
    assert spec.noise.outlier_prob == 0.0
    assert spec.noise.disparity_noise_px == base.noise.disparity_noise_px
    assert spec.noise.dropout_prob_stereo == base.noise.dropout_prob_stereo


def test_scene_none_clears_maps():
    doc = {"scenario": {"preset": "fig14-rain-decel", "scene": None, "frames": 20}}
    spec = scenario_spec(doc)
    assert spec.scene is None
    trace = spec.generate()
    assert trace.maps is None


def test_custom_scenario_needs_profile_and_frames():
    profile = {
        "ego_velocity_mms": 11111.0,
        "target_velocity_mms": 11111.0,
        "initial_gap_mm": 20000.0,
        "segments": [
            {"duration_s": 1.0, "mode": "cv"},
            {"duration_s": 2.0, "mode": "ca", "value": -2000.0},
        ],
    }
    with pytest.raises(UsageError, match="profile and frames"):
        scenario_spec({"scenario": {"profile": profile}})
    spec = scenario_spec({"scenario": {"profile": profile, "frames": 50}})
    assert spec.scenario_id == "custom"
    assert spec.frames == 50
    trace = spec.generate()
    assert trace.n_frames == 50


def test_profile_validation():
    with pytest.raises(UsageError, match="missing"):
        scenario_spec(
            {"scenario": {"frames": 10, "profile": {"segments": []}}}
        )
    with pytest.raises(UsageError, match="unknown profile"):
        scenario_spec(
            {
                "scenario": {
                    "frames": 10,
                    "profile": {
                        "ego_mms": 1.0,
                        "ego_velocity_mms": 1.0,
                        "target_velocity_mms": 1.0,
                        "initial_gap_mm": 1.0,
                        "segments": [],
                    },
                }
            }
        )


def test_camera_section_reaches_scenario():
    doc = {
        "camera": {"stereo_constant": 480_000.0},
        "scenario": {"preset": "fig12"},
    }
    spec = scenario_spec(doc)
    assert spec.camera.stereo_constant == 480_000.0


def test_load_config_errors(tmp_path):
    with pytest.raises(UsageError, match="cannot read"):
        load_config(tmp_path / "absent.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(UsageError, match="not valid JSON"):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(FULL_DOC))
    doc = load_config(good)
    assert set(doc) == set(FULL_DOC)


def test_preset_names_resolve():
    for name in PRESETS:
        spec = scenario_spec({}, preset_name=name)
        assert spec.scenario_id == name
