"""Plain-text ``key=value`` experiment configs.

A config either stands alone (all physical fields given) or names a base
preset with ``preset = GYS`` and overrides some of its fields.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import Dict, Optional, Union

from .channel import PRESETS, ExperimentPreset, get_preset
from .errors import ConfigurationError

__all__ = ["load_config", "parse_config", "dump_config"]

_FLOAT_KEYS = {"wavelength", "alpha", "t_bob_db", "e_detector", "d_b", "eta_d", "q", "nu_a", "nu_b", "eta_bob"}
_INT_KEYS = {"detectors"}
_OPTIONAL_KEYS = {"wavelength", "eta_bob"}
_REQUIRED = ("alpha", "t_bob_db", "e_detector", "d_b", "eta_d")


def parse_config(text: str, source: str = "<config>") -> Dict[str, object]:
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in ("preset", "name"):
            values[key] = value
        elif key in _FLOAT_KEYS or key in _INT_KEYS:
            if key in _OPTIONAL_KEYS and value.lower() in ("", "none"):
                values[key] = None
                continue
            try:
                values[key] = int(value) if key in _INT_KEYS else float(value)
            except ValueError:
                raise ConfigurationError(f"{source}:{lineno}: cannot parse {key}={value!r}") from None
        else:
            raise ConfigurationError(f"{source}:{lineno}: unknown key {key!r}")
    return values


def load_config(source: Union[str, Path], base: Optional[Union[str, ExperimentPreset]] = None) -> ExperimentPreset:
    """Resolve a preset name or a config file into a validated preset.

    ``base`` (a preset or preset name) supplies defaults that the file's keys
    override; a ``preset`` key inside the file does the same.
    """
    if isinstance(source, str) and source.upper() in PRESETS and not Path(source).is_file():
        return get_preset(source)
    path = Path(source)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    values = parse_config(text, str(path))
    name = values.pop("preset", None)
    if name is not None:
        base = get_preset(str(name))
    elif isinstance(base, str):
        base = get_preset(base)
    if base is not None:
        return _build(base.with_overrides, values, str(path))
    missing = [k for k in _REQUIRED if k not in values]
    if missing:
        raise ConfigurationError(f"{path}: missing required field(s) {', '.join(missing)}")
    values.setdefault("name", path.stem)
    return _build(lambda **kw: ExperimentPreset(**kw), values, str(path))


def _build(factory, values, source: str) -> ExperimentPreset:
    try:
        return factory(**values)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{source}: {exc}") from None


def dump_config(preset: ExperimentPreset) -> str:
    lines = []
    for f in fields(preset):
        value = getattr(preset, f.name)
        lines.append(f"{f.name} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"
