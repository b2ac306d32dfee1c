"""Tool-wide configuration: defaults, config-file parsing, fingerprinting.

Config files are flat key-value text with section prefixes:

    # comment
    enhance.method = wiener
    features.num_ceps = 13
    endpoint.min_utterance_ms = 250
    report.lexicon = lexicon.csv
    seed = 7

Precedence everywhere is: built-in defaults, then config file, then
command-line flags.
"""

import hashlib
from dataclasses import dataclass, field, fields

from .enhance import EnhanceConfig
from .errors import ConfigError
from .features import FeatureConfig
from .recognizer import EndpointConfig


@dataclass
class ToolConfig:
    enhance: EnhanceConfig = field(default_factory=EnhanceConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    endpoint: EndpointConfig = field(default_factory=EndpointConfig)
    lexicon_path: str | None = None
    seed: int = 0


_SECTIONS = {
    "enhance": (EnhanceConfig, "enhance"),
    "features": (FeatureConfig, "features"),
    "endpoint": (EndpointConfig, "endpoint"),
}


def _parse_value(raw: str, kind, key: str):
    raw = raw.strip()
    if kind == "optional_int":
        if raw == "auto":
            return None
        kind = int
    if kind == "optional_float":
        if raw == "auto":
            return None
        kind = float
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    return raw


def _field_kind(dataclass_type, name: str, key: str):
    for f in fields(dataclass_type):
        if f.name == name:
            if f.type in (int, "int"):
                return int
            if f.type in (float, "float"):
                return float
            if f.type == int | None or f.type == "int | None":
                return "optional_int"
            if f.type == float | None or f.type == "float | None":
                return "optional_float"
            return str
    raise ConfigError(f"unknown configuration key {key!r}")


def parse_config(text: str, base: ToolConfig | None = None) -> ToolConfig:
    """Apply key-value overrides from a config document onto a base config."""
    base = base or ToolConfig()
    sections = {
        "enhance": vars(base.enhance).copy(),
        "features": vars(base.features).copy(),
        "endpoint": vars(base.endpoint).copy(),
    }
    lexicon_path = base.lexicon_path
    seed = base.seed

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "seed":
            seed = _parse_value(value, int, key)
        elif key == "report.lexicon":
            lexicon_path = None if value == "none" else value
        elif "." in key:
            section, name = key.split(".", 1)
            if section not in sections:
                raise ConfigError(f"line {lineno}: unknown section {section!r}")
            kind = _field_kind(_SECTIONS[section][0], name, key)
            sections[section][name] = _parse_value(value, kind, key)
        else:
            raise ConfigError(f"line {lineno}: unknown configuration key {key!r}")

    return ToolConfig(
        enhance=EnhanceConfig(**sections["enhance"]),
        features=FeatureConfig(**sections["features"]),
        endpoint=EndpointConfig(**sections["endpoint"]),
        lexicon_path=lexicon_path,
        seed=seed,
    )


def load_config(path, base: ToolConfig | None = None) -> ToolConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), base)


def _format_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: ToolConfig) -> str:
    """Render the effective configuration; parse_config inverts it exactly."""
    lines = []
    for section_name, obj in (
        ("enhance", cfg.enhance),
        ("features", cfg.features),
        ("endpoint", cfg.endpoint),
    ):
        for f in fields(obj):
            lines.append(f"{section_name}.{f.name} = {_format_value(getattr(obj, f.name))}")
    lines.append(
        f"report.lexicon = {cfg.lexicon_path if cfg.lexicon_path is not None else 'none'}"
    )
    lines.append(f"seed = {cfg.seed}")
    return "\n".join(lines) + "\n"


def config_fingerprint(cfg: ToolConfig) -> str:
    """Short hash of the effective configuration, for report headers."""
    return hashlib.sha256(dump_config(cfg).encode()).hexdigest()[:16]
