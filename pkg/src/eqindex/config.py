"""Scene configuration: parsing, defaults and validation."""

from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass

from .errors import ConfigError

SCENES = ("s2-spin", "cp1-twisted", "t2-reflection", "b-circle-pv", "flat-heat", "mehler-check")
FORMATS = ("json", "csv")
DEFAULT_T_GRID = (1.0, 0.5, 0.25, 0.125, 0.0625)

_REQUIRED = {"cp1-twisted": ("twist_k",)}
_DEFAULT_ANGLE = {"t2-reflection": "reflection"}
_DEFAULT_MESH = {"b-circle-pv": 256}


@dataclass(frozen=True)
class SceneConfig:
    """Validated run configuration for one scene.

    ``lattice_cutoff`` and ``mesh_resolution`` of ``None`` mean "pick from the
    tail bound" and "scene default" respectively.
    """

    scene: str
    group_angle: object = math.pi / 2
    twist_k: int = 0
    t_grid: tuple = DEFAULT_T_GRID
    lattice_cutoff: int | None = None
    mesh_resolution: int | None = None
    pv_epsilon_levels: int = 3
    lift_sign: int = 1
    output: str | None = None
    format: str = "json"

    def canonical(self) -> dict:
        d = asdict(self)
        d["t_grid"] = list(self.t_grid)
        d.pop("output")
        return d


FIELDS = tuple(SceneConfig.__dataclass_fields__)


def _as_int(name, v, minimum=None):
    if isinstance(v, bool) or not isinstance(v, (int, float)) or int(v) != v:
        raise ConfigError(f"field {name!r} must be an integer, got {v!r}")
    v = int(v)
    if minimum is not None and v < minimum:
        raise ConfigError(f"field {name!r} must be >= {minimum}, got {v}")
    return v


def validate(raw: dict) -> SceneConfig:
    """Build a :class:`SceneConfig` from a plain mapping."""
    if not isinstance(raw, dict):
        raise ConfigError("configuration must be a single object")
    unknown = sorted(set(raw) - set(FIELDS))
    if unknown:
        raise ConfigError(f"unknown field(s) {unknown}; known fields: {list(FIELDS)}")
    if "scene" not in raw:
        raise ConfigError("missing required field 'scene'")
    scene = raw["scene"]
    if scene not in SCENES:
        raise ConfigError(f"unknown scene {scene!r}; known scenes: {', '.join(SCENES)}")
    for name in _REQUIRED.get(scene, ()):
        if name not in raw:
            raise ConfigError(f"scene {scene!r} needs field {name!r}")
    kw = {"scene": scene}
    angle = raw.get("group_angle", _DEFAULT_ANGLE.get(scene, math.pi / 2))
    if scene == "t2-reflection":
        if angle != "reflection":
            raise ConfigError("t2-reflection only supports group_angle 'reflection'")
    elif isinstance(angle, bool) or not isinstance(angle, (int, float)) or not math.isfinite(angle):
        raise ConfigError(f"field 'group_angle' must be a real angle, got {angle!r}")
    else:
        angle = float(angle)
    kw["group_angle"] = angle
    if "twist_k" in raw:
        kw["twist_k"] = _as_int("twist_k", raw["twist_k"], 0)
    if "t_grid" in raw:
        grid = raw["t_grid"]
        if not isinstance(grid, (list, tuple)) or not grid:
            raise ConfigError("field 't_grid' must be a nonempty list")
        try:
            grid = tuple(float(t) for t in grid)
        except (TypeError, ValueError):
            raise ConfigError("field 't_grid' must hold numbers") from None
        if any(not (t > 0 and math.isfinite(t)) for t in grid):
            raise ConfigError("t_grid entries must be positive")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("t_grid must be strictly decreasing toward 0")
        kw["t_grid"] = grid
    if raw.get("lattice_cutoff") is not None:
        kw["lattice_cutoff"] = _as_int("lattice_cutoff", raw["lattice_cutoff"], 1)
    mesh = raw.get("mesh_resolution", _DEFAULT_MESH.get(scene))
    if mesh is not None:
        kw["mesh_resolution"] = _as_int("mesh_resolution", mesh, 2)
    if "pv_epsilon_levels" in raw:
        kw["pv_epsilon_levels"] = _as_int("pv_epsilon_levels", raw["pv_epsilon_levels"], 1)
    if "lift_sign" in raw:
        if raw["lift_sign"] not in (1, -1) or isinstance(raw["lift_sign"], bool):
            raise ConfigError("field 'lift_sign' must be +1 or -1")
        kw["lift_sign"] = int(raw["lift_sign"])
    if raw.get("output") is not None:
        kw["output"] = str(raw["output"])
    if "format" in raw:
        if raw["format"] not in FORMATS:
            raise ConfigError(f"field 'format' must be one of {FORMATS}")
        kw["format"] = raw["format"]
    return SceneConfig(**kw)


def load_config(source) -> SceneConfig:
    """Load a configuration from a path, inline JSON text, or a mapping."""
    if isinstance(source, dict):
        return validate(source)
    text = str(source)
    if not text.lstrip().startswith("{"):
        if not os.path.exists(text):
            raise ConfigError(f"config file {text!r} not found")
        with open(text, encoding="utf-8") as fh:
            text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    return validate(raw)


def with_overrides(cfg: SceneConfig, **overrides) -> SceneConfig:
    """Re-validate ``cfg`` with the non-``None`` overrides applied."""
    raw = asdict(cfg)
    raw["t_grid"] = list(cfg.t_grid)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    return validate(raw)
