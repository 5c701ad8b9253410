# core/io/config_loader.py
from __future__ import annotations

import dataclasses
import logging
import math
from pathlib import Path
from typing import Any, Dict, Optional, Union, get_type_hints

from core.errors import ConfigurationError
from core.mcmc.settings import SamplerSettings
from core.model.types import Hyperparameters, ModelConfig
from core.simulate.simulate_service import BIN_WIDTH, Scenario
from core.spatial.car import SpatialConfig
from core.utils.json_utils import normalize_key
from .scenario_registry import resolve_config_path

logger = logging.getLogger(__name__)

Config = Dict[str, Any]

FIT_MODELS = ("mam", "car-mam", "negbinmix")

_TRUE = {"true", "yes", "on"}
_FALSE = {"false", "no", "off"}

# Config keys whose names differ from the dataclass attribute.
_RENAMED = {"simulate.field": "field_kind"}


# ---------------- dotted keys ----------------

def lookup(cfg: Config, key: str) -> Any:
    """Value at "section.name", or None when a section or the name is absent."""
    node: Any = cfg
    for part in key.split("."):
        if not isinstance(node, dict):
            return None
        node = node.get(part)
    return node


def assign(cfg: Config, key: str, value: Any) -> None:
    *sections, name = key.split(".")
    node = cfg
    for part in sections:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise KeyError(f"'{part}' is a value, cannot hold '{key}'")
    node[name] = value


def flatten(cfg: Config, prefix: str = "") -> Dict[str, Any]:
    """Nested sections back to dotted keys; `assign` over the result rebuilds `cfg`."""
    out: Dict[str, Any] = {}
    for name, value in cfg.items():
        key = f"{prefix}.{name}" if prefix else name
        if isinstance(value, dict):
            out.update(flatten(value, key))
        else:
            out[key] = value
    return out


# ---------------- parsing ----------------

def coerce_value(raw: str) -> Any:
    text = raw.strip()
    low = text.lower()
    if low in _TRUE:
        return True
    if low in _FALSE:
        return False
    if "," in text:
        return tuple(coerce_value(part) for part in text.split(",") if part.strip())
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_config(text: str, source: str = "<string>") -> Config:
    """`key = value` lines into a nested dict; dotted keys become sections."""
    cfg: Config = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{line_no}: expected 'key = value', got '{raw.strip()}'")
        key, value = line.split("=", 1)
        key = normalize_key(key)
        if not key or key.startswith(".") or key.endswith("."):
            raise ConfigurationError(f"{source}:{line_no}: invalid key '{key}'")
        try:
            assign(cfg, key, coerce_value(value))
        except KeyError as exc:
            raise ConfigurationError(f"{source}:{line_no}: {exc.args[0]}", key=key)
    return cfg


def load_config(name_or_path: Union[str, Path, None]) -> Config:
    if name_or_path is None:
        return {}
    path = resolve_config_path(name_or_path)
    logger.info("Loading config %s", path)
    return parse_config(path.read_text(encoding="utf-8"), source=str(path))


def apply_overrides(cfg: Config, overrides: Dict[str, Any]) -> Config:
    """Returns a copy with the given dotted keys replaced; None values are skipped."""
    out: Config = {}
    for key, value in flatten(cfg).items():
        assign(out, key, value)
    for key, value in overrides.items():
        if value is not None:
            assign(out, key, value)
    return out


# ---------------- typed sections ----------------

def _as_float(key: str, value: Any) -> float:
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        return math.inf
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{key} must be a number, got {value!r}", key=key)
    return float(value)


def _convert(key: str, value: Any, hint: Any) -> Any:
    """Coerces a parsed config value to the annotated type of the target field."""
    text = str(hint)
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key} must be true or false", key=key)
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise ConfigurationError(f"{key} must be an integer, got {value!r}", key=key)
        return int(value)
    if "Tuple" in text or "Sequence" in text:
        values = value if isinstance(value, tuple) else (value,)
        return tuple(_as_float(key, v) for v in values)
    if isinstance(value, tuple):
        raise ConfigurationError(f"{key} takes a single value, got a list", key=key)
    if "float" in text:
        return _as_float(key, value)
    return str(value)


def _build(cls, cfg: Config, section: str, defaults: Optional[Dict[str, Any]] = None):
    """Instantiates a dataclass from one config section; unknown keys are an error."""
    values = lookup(cfg, section) or {}
    if not isinstance(values, dict):
        raise ConfigurationError(f"'{section}' must be a section", key=section)
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs: Dict[str, Any] = dict(defaults or {})
    for key, value in values.items():
        dotted = f"{section}.{key}"
        if isinstance(value, dict):
            raise ConfigurationError(f"unknown config section '{dotted}'", key=dotted)
        attr = _RENAMED.get(dotted, key)
        if attr not in names:
            raise ConfigurationError(f"unknown config key '{dotted}'", key=dotted)
        kwargs[attr] = _convert(dotted, value, hints[attr])
    return cls(**kwargs)


def require_keys(cfg: Config, *keys: str) -> None:
    for key in keys:
        if lookup(cfg, key) is None:
            raise ConfigurationError(f"missing required config key '{key}'", key=key)


def build_hyperparameters(cfg: Config) -> Hyperparameters:
    return _build(Hyperparameters, cfg, "hyper")


def build_spatial(cfg: Config, default_scale: float = 1.0) -> SpatialConfig:
    return _build(SpatialConfig, cfg, "spatial", defaults={"scale": default_scale})


def build_model_config(cfg: Config) -> ModelConfig:
    model = lookup(cfg, "model") or {}
    kwargs: Dict[str, Any] = {"hyper": build_hyperparameters(cfg), "spatial": build_spatial(cfg)}
    hints = get_type_hints(ModelConfig)
    for key, value in model.items():
        if key not in ("k", "scheme", "outward_mean"):
            raise ConfigurationError(f"unknown config key 'model.{key}'", key=f"model.{key}")
        kwargs[key] = _convert(f"model.{key}", value, hints[key])
    return ModelConfig(**kwargs)


def build_sampler_settings(cfg: Config) -> SamplerSettings:
    return _build(SamplerSettings, cfg, "sampler")


def build_scenario(cfg: Config) -> Scenario:
    """
    `simulate.*` plus `spatial.*` into a Scenario. kind, p, D and k are required;
    pi also for kind = mam. Spatial distances default to one bin per unit.
    """
    require_keys(cfg, "simulate.kind", "simulate.p", "simulate.d", "simulate.k")
    if lookup(cfg, "simulate.kind") == "mam":
        require_keys(cfg, "simulate.pi")
    section = dict(lookup(cfg, "simulate"))
    section["D"] = section.pop("d")
    return _build(Scenario, {"simulate": section}, "simulate", defaults={"spatial": build_spatial(cfg, BIN_WIDTH)})


@dataclasses.dataclass(frozen=True)
class FitOptions:
    model: str = "mam"
    fix_first_mean: Optional[float] = None
    n_components: Optional[int] = None

    def __post_init__(self):
        if self.model not in FIT_MODELS:
            raise ConfigurationError(f"fit.model must be one of {', '.join(FIT_MODELS)}, got '{self.model}'", key="fit.model")
        if self.n_components is not None and self.n_components < 2:
            raise ConfigurationError("fit.n_components must be at least 2", key="fit.n_components")


def build_fit_options(cfg: Config) -> FitOptions:
    section = lookup(cfg, "fit") or {}
    hints = {"model": str, "fix_first_mean": float, "n_components": int}
    kwargs: Dict[str, Any] = {}
    for key, value in section.items():
        if key not in hints:
            raise ConfigurationError(f"unknown config key 'fit.{key}'", key=f"fit.{key}")
        kwargs[key] = _convert(f"fit.{key}", value, hints[key])
    return FitOptions(**kwargs)
