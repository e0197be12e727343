# app/services/scenario_loader.py
import inspect
import logging
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from dotenv import dotenv_values
from pydantic import BaseModel, ValidationError

from ..exceptions import ConfigurationError, UnknownAxisError
from ..models.scenario import Scenario

logger = logging.getLogger(__name__)

# Sweepable scalars and the scenario key each one overrides
SWEEP_AXES: Dict[str, str] = {
    "w_s": "HANDOFF_W_S",
    "w_q": "HANDOFF_W_Q",
    "delta": "HANDOFF_DELTA",
    "fps": "FPS",
    "speed": "MOBILITY_SPEED",
    "service_time": "MEC_SERVICE_TIME",
}


def _is_model(tp: Any) -> bool:
    return inspect.isclass(tp) and issubclass(tp, BaseModel)


def _flatten_fields(model: type, prefix: Tuple[str, ...] = ()) -> Dict[str, Tuple[str, ...]]:
    keys: Dict[str, Tuple[str, ...]] = {}
    for name, field in model.__fields__.items():
        path = prefix + (name,)
        if _is_model(field.type_):
            keys.update(_flatten_fields(field.type_, path))
        else:
            keys["_".join(path).upper()] = path
    return keys


SCENARIO_KEYS: Dict[str, Tuple[str, ...]] = _flatten_fields(Scenario)
KEY_OF_PATH: Dict[Tuple[str, ...], str] = {path: key for key, path in SCENARIO_KEYS.items()}


def _key_lines(text: str) -> Dict[str, int]:
    """Line number of each key's last assignment"""
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key = line.split("=", 1)[0].strip()
        if key.startswith("export "):
            key = key[len("export "):].strip()
        lines[key] = number
    return lines


def _set_path(data: Dict[str, Any], path: Tuple[str, ...], value: Any) -> None:
    node = data
    for part in path[:-1]:
        node = node.setdefault(part, {})
    node[path[-1]] = value


def _error_key(loc: Tuple[Any, ...]) -> str:
    parts = tuple(str(p) for p in loc if p != "__root__" and not isinstance(p, int))
    prefix = parts
    while prefix:
        if prefix in KEY_OF_PATH:
            return KEY_OF_PATH[prefix]
        prefix = prefix[:-1]
    return "_".join(parts).upper() or "SCENARIO"


def load_scenario(path: Optional[str] = None, overrides: Optional[Mapping[str, str]] = None) -> Scenario:
    """
    Build a Scenario from a flat KEY=VALUE file plus command-line overrides

    Keys are SECTION_FIELD in upper case (HANDOFF_W_Q, MOBILITY_SPEED) and bare for
    top-level fields (N_UES, SEEDS). Every problem is collected and raised at once
    as a ConfigurationError whose diagnostics read "path:line: KEY: message".
    """
    data: Dict[str, Any] = {}
    diagnostics: List[str] = []
    lines: Dict[str, int] = {}
    source = path or "<defaults>"

    if path is not None:
        file = Path(path)
        if not file.is_file():
            raise ConfigurationError(f"Scenario file not found: {path}")
        text = file.read_text()
        lines = _key_lines(text)
        for key, value in dotenv_values(file).items():
            if key not in SCENARIO_KEYS:
                diagnostics.append(f"{path}:{lines.get(key, '?')}: {key}: unknown key")
                continue
            _set_path(data, SCENARIO_KEYS[key], "" if value is None else value)

    for key, value in (overrides or {}).items():
        if key not in SCENARIO_KEYS:
            diagnostics.append(f"override: {key}: unknown key")
            continue
        _set_path(data, SCENARIO_KEYS[key], value)

    if diagnostics:
        raise ConfigurationError(f"Invalid scenario {source}", diagnostics)

    try:
        scenario = Scenario.parse_obj(data)
    except ValidationError as e:
        for error in e.errors():
            key = _error_key(error["loc"])
            if overrides and key in overrides:
                where = "override"
            elif key in lines:
                where = f"{path}:{lines[key]}"
            else:
                where = source
            diagnostics.append(f"{where}: {key}: {error['msg']}")
        raise ConfigurationError(f"Invalid scenario {source}", diagnostics) from e

    logger.debug(f"Loaded scenario from {source} with {len(overrides or {})} override(s)")
    return scenario


def _format_value(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        items = []
        for item in value:
            if isinstance(item, (list, tuple)):
                items.append(":".join(_format_value(v) for v in item))
            else:
                items.append(_format_value(item))
        return ",".join(items)
    return str(value)


def echo_scenario(scenario: Scenario) -> str:
    """The fully resolved scenario in the same KEY=VALUE form load_scenario reads"""
    lines = ["# Resolved scenario; load with --config to reproduce these runs"]
    for key, path in SCENARIO_KEYS.items():
        value: Any = scenario
        for part in path:
            value = getattr(value, part)
        lines.append(f"{key}={_format_value(value)}")
    return "\n".join(lines) + "\n"


def parse_sweep(spec: str) -> Tuple[str, List[str]]:
    """Split AXIS=V1,V2,... and check the axis can be swept"""
    axis, sep, raw = spec.partition("=")
    axis = axis.strip()
    if axis not in SWEEP_AXES:
        raise UnknownAxisError(
            f"Unknown sweep axis '{axis}'; valid axes: {', '.join(SWEEP_AXES)}"
        )
    values = [v.strip() for v in raw.split(",") if v.strip()] if sep else []
    if not values:
        raise ConfigurationError(f"Sweep over '{axis}' needs at least one value")
    return axis, values
