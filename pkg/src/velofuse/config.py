"""JSON configuration loading.

A config document is a JSON object with any of the sections ``camera``,
``saito_filter``, ``fusion``, ``kalman``, ``pipeline`` and ``scenario``.
Sections are independent; whatever is absent keeps its defaults.  Unknown
keys are rejected everywhere so a typo fails loudly instead of silently
running defaults.

The ``scenario`` section either names a ``preset`` to start from or builds
a scenario from scratch, and may override ``frames``, ``seed``, ``noise``,
``scene``, ``profile`` and ``description``.  A profile is::

    {"ego_velocity_mms": ..., "target_velocity_mms": ..., "initial_gap_mm": ...,
     "segments": [{"duration_s": 2.0, "mode": "cv"},
                  {"duration_s": 5.4, "mode": "ca", "value": -2940.0}]}
"""

from __future__ import annotations

import dataclasses
import json
from pathlib import Path
from typing import Mapping, Optional, Union

from .camera import CameraModel
from .errors import UsageError
from .fusion import FusionConfig
from .kalman import KalmanParams
from .pipeline import PipelineConfig
from .saito import FilterParams
from .simulate import (
    MotionProfile,
    NoiseModel,
    ScenarioSpec,
    SceneModel,
    Segment,
    preset,
)

CONFIG_SECTIONS = ("camera", "saito_filter", "fusion", "kalman", "pipeline", "scenario")

_PIPELINE_KEYS = {
    "enable_disparity_fusion",
    "enable_detection_fusion",
    "enable_velocity_filter",
    "estimators",
}
_SCENARIO_KEYS = {
    "preset",
    "frames",
    "seed",
    "noise",
    "scene",
    "profile",
    "description",
}


def _check_keys(cls, cfg: Mapping, what: str) -> None:
    if not isinstance(cfg, Mapping):
        raise UsageError(f"{what} section must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(cfg) - known
    if unknown:
        raise UsageError(f"unknown {what} config keys: {sorted(unknown)}")


def _strict_dataclass(cls, cfg: Mapping, what: str):
    """Build a dataclass from a mapping, rejecting unknown keys."""
    _check_keys(cls, cfg, what)
    return cls(**cfg)


def _merge_dataclass(base, cfg: Mapping, what: str):
    """Override some fields of an existing dataclass instance."""
    _check_keys(type(base), cfg, what)
    return dataclasses.replace(base, **cfg)


def load_config(path: Union[str, Path]) -> dict:
    """Read and structurally check a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {path} is not valid JSON: {exc}") from exc
    return validate_config(doc)


def validate_config(doc: Mapping) -> dict:
    if not isinstance(doc, Mapping):
        raise UsageError("config root must be a JSON object")
    unknown = set(doc) - set(CONFIG_SECTIONS)
    if unknown:
        raise UsageError(
            f"unknown config sections: {sorted(unknown)}; "
            f"expected some of {list(CONFIG_SECTIONS)}"
        )
    return dict(doc)


def pipeline_config(doc: Mapping) -> PipelineConfig:
    """Assemble a PipelineConfig from the non-scenario sections."""
    kwargs = {}
    if "saito_filter" in doc:
        kwargs["filter_params"] = FilterParams.from_config(doc["saito_filter"])
    if "fusion" in doc:
        kwargs["fusion"] = FusionConfig.from_config(doc["fusion"])
    if "kalman" in doc:
        kwargs["kalman"] = KalmanParams.from_config(doc["kalman"])
    section = doc.get("pipeline", {})
    if not isinstance(section, Mapping):
        raise UsageError("pipeline section must be an object")
    unknown = set(section) - _PIPELINE_KEYS
    if unknown:
        raise UsageError(f"unknown pipeline config keys: {sorted(unknown)}")
    kwargs.update(section)
    if "estimators" in kwargs:
        kwargs["estimators"] = tuple(kwargs["estimators"])
    return PipelineConfig(**kwargs)


def _profile_from(cfg: Mapping) -> MotionProfile:
    if not isinstance(cfg, Mapping):
        raise UsageError("profile must be an object")
    unknown = set(cfg) - {
        "ego_velocity_mms",
        "target_velocity_mms",
        "initial_gap_mm",
        "segments",
    }
    if unknown:
        raise UsageError(f"unknown profile keys: {sorted(unknown)}")
    try:
        segments = tuple(
            _strict_dataclass(Segment, seg, "segment") for seg in cfg["segments"]
        )
        return MotionProfile(
            segments=segments,
            ego_velocity=float(cfg["ego_velocity_mms"]),
            target_velocity=float(cfg["target_velocity_mms"]),
            initial_gap_mm=float(cfg["initial_gap_mm"]),
        )
    except KeyError as exc:
        raise UsageError(f"profile section is missing {exc}") from None


def scenario_spec(
    doc: Mapping,
    preset_name: Optional[str] = None,
    seed: Optional[int] = None,
) -> ScenarioSpec:
    """Scenario from the config's ``scenario`` section plus CLI overrides.

    Precedence: CLI ``preset_name``/``seed`` arguments beat the config file,
    which beats preset defaults.  Building without any preset requires a
    ``profile`` and ``frames``.
    """
    section = doc.get("scenario", {})
    if not isinstance(section, Mapping):
        raise UsageError("scenario section must be an object")
    unknown = set(section) - _SCENARIO_KEYS
    if unknown:
        raise UsageError(f"unknown scenario config keys: {sorted(unknown)}")

    name = preset_name or section.get("preset")
    if name is not None:
        spec = preset(name)
    else:
        if "profile" not in section or "frames" not in section:
            raise UsageError(
                "scenario needs either a preset or both profile and frames"
            )
        spec = ScenarioSpec(
            scenario_id="custom",
            profile=_profile_from(section["profile"]),
            noise=NoiseModel(),
            camera=CameraModel(),
            frames=int(section["frames"]),
        )

    replacements = {}
    if name is not None and "profile" in section:
        replacements["profile"] = _profile_from(section["profile"])
    if "frames" in section:
        replacements["frames"] = int(section["frames"])
    if "noise" in section:
        # Partial override: unnamed channels keep the base scenario's values.
        replacements["noise"] = _merge_dataclass(
            spec.noise, section["noise"], "noise"
        )
    if "scene" in section:
        scene = section["scene"]
        if scene is None:
            replacements["scene"] = None
        elif spec.scene is not None:
            replacements["scene"] = _merge_dataclass(spec.scene, scene, "scene")
        else:
            replacements["scene"] = _strict_dataclass(SceneModel, scene, "scene")
    if "description" in section:
        replacements["description"] = str(section["description"])
    if "camera" in doc:
        replacements["camera"] = CameraModel.from_config(doc["camera"])
    if replacements:
        spec = dataclasses.replace(spec, **replacements)

    chosen_seed = seed if seed is not None else section.get("seed")
    if chosen_seed is not None:
        spec = dataclasses.replace(
            spec, noise=dataclasses.replace(spec.noise, rng_seed=int(chosen_seed))
        )
    return spec
