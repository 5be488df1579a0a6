"""
Plain-text ``key = value`` configuration files.

One assignment per line, ``#`` starts a comment, blank lines are ignored.
Dotted keys address sub-models (``optim.lr = 1e-3``). The same machinery
loads run configs, scene specs and ``--ablate-flag`` overrides.
"""

import typing
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, NamedTuple, TypeVar

from pydantic import BaseModel, ValidationError

from chuk_grounding.config.base import RunConfig
from chuk_grounding.config.registry import get_preset
from chuk_grounding.errors import ConfigError

ModelT = TypeVar("ModelT", bound=BaseModel)


class Assignment(NamedTuple):
    line: int
    key: str
    value: str


class ConfigKey(NamedTuple):
    key: str
    type: str
    default: Any
    description: str


def parse_assignments(text: str) -> list[Assignment]:
    assignments: list[Assignment] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {number}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {number}: missing key")
        assignments.append(Assignment(number, key, value))
    return assignments


def _nested_model(annotation: Any) -> type[BaseModel] | None:
    if isinstance(annotation, type) and issubclass(annotation, BaseModel):
        return annotation
    return None


def _set_path(model_cls: type[BaseModel], data: dict[str, Any], item: Assignment) -> None:
    parts = item.key.split(".")
    cls: type[BaseModel] = model_cls
    target = data
    for depth, part in enumerate(parts):
        field = cls.model_fields.get(part)
        if field is None:
            raise ConfigError(f"line {item.line}: unknown key '{item.key}'")
        nested = _nested_model(field.annotation)
        last = depth == len(parts) - 1
        if last:
            if nested is not None:
                raise ConfigError(f"line {item.line}: '{item.key}' is a section, not a value")
            target[part] = None if item.value.lower() in ("none", "") else item.value
            return
        if nested is None:
            raise ConfigError(f"line {item.line}: unknown key '{item.key}'")
        cls = nested
        target = target.setdefault(part, {})


def apply_assignments(base: ModelT, assignments: Iterable[Assignment]) -> ModelT:
    """Return a validated copy of ``base`` with every assignment applied in order."""
    model_cls = type(base)
    data = base.model_dump()
    for item in assignments:
        _set_path(model_cls, data, item)
        try:
            model_cls.model_validate(data)
        except ValidationError as exc:
            detail = exc.errors()[0]["msg"] if exc.errors() else str(exc)
            raise ConfigError(
                f"line {item.line}: invalid value {item.value!r} for '{item.key}': {detail}"
            ) from exc
    return model_cls.model_validate(data)


def parse_config_text(text: str) -> RunConfig:
    """
    Parse a run config; an optional ``preset = <name>`` line picks the base.

    Raises:
        ConfigError: On malformed lines, unknown keys or invalid values
    """
    assignments = parse_assignments(text)
    base = get_preset("desk")
    for item in assignments:
        if item.key == "preset":
            try:
                base = get_preset(item.value)
            except ValueError as exc:
                raise ConfigError(f"line {item.line}: {exc}") from exc
    rest = [item for item in assignments if item.key != "preset"]
    return apply_assignments(base, rest)


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config_text(text)


def load_model_file(path: str | Path, base: ModelT) -> ModelT:
    """Apply a ``key = value`` file on top of any pydantic model (scene specs)."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return apply_assignments(base, parse_assignments(text))


def apply_flag_overrides(config: RunConfig, overrides: Sequence[str]) -> RunConfig:
    """Apply ``key=value`` ablation overrides (``asa=off``); keys default to ``ablation.``."""
    assignments: list[Assignment] = []
    for position, raw in enumerate(overrides, start=1):
        parsed = parse_assignments(raw)
        if len(parsed) != 1:
            raise ConfigError(f"override {position}: expected key=value, got {raw!r}")
        key = parsed[0].key if "." in parsed[0].key else f"ablation.{parsed[0].key}"
        assignments.append(Assignment(position, key, parsed[0].value))
    return apply_assignments(config, assignments)


def _type_name(annotation: Any) -> str:
    origin = typing.get_origin(annotation)
    if origin is typing.Literal:
        return "|".join(str(arg) for arg in typing.get_args(annotation))
    args = [arg for arg in typing.get_args(annotation) if arg is not type(None)]
    if args and origin is not None:
        return " | ".join(_type_name(arg) for arg in args) + (
            " | None" if type(None) in typing.get_args(annotation) else ""
        )
    return getattr(annotation, "__name__", str(annotation))


def config_reference(model: BaseModel | None = None, prefix: str = "") -> list[ConfigKey]:
    """Every settable key with its type, default and description."""
    instance = model if model is not None else get_preset("desk")
    keys: list[ConfigKey] = []
    for name, field in type(instance).model_fields.items():
        value = getattr(instance, name)
        dotted = f"{prefix}{name}"
        if isinstance(value, BaseModel):
            keys.extend(config_reference(value, prefix=f"{dotted}."))
            continue
        keys.append(
            ConfigKey(dotted, _type_name(field.annotation), value, field.description or "")
        )
    return keys
