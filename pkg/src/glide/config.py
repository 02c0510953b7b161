"""Flat key-value configuration over the four parameter groups.

Files hold one ``key = value`` (or ``key value``) pair per line with ``#``
comments.  Keys are either dotted (``chain.tau_s``, ``drive.v_max``,
``wip.snap_distance``, ``pilot.lookahead_m``) or bare field names, which are
unique across groups.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable

from .chain import ChainConfig
from .kinematics import DriveParams
from .pilots import PilotConfig
from .techniques import WipConfig


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "chain": ChainConfig,
    "drive": DriveParams,
    "wip": WipConfig,
    "pilot": PilotConfig,
}

_FIELD_INDEX: dict[str, tuple[str, str]] = {}
for _section, _cls in _SECTIONS.items():
    for _f in dataclasses.fields(_cls):
        if _f.name in _FIELD_INDEX:
            raise AssertionError(f"ambiguous bare config key {_f.name}")
        _FIELD_INDEX[_f.name] = (_section, _f.name)


@dataclass(frozen=True)
class Configs:
    """Bundle of all tunable parameter groups."""

    chain: ChainConfig
    drive: DriveParams
    wip: WipConfig
    pilot: PilotConfig

    @classmethod
    def default(cls) -> "Configs":
        return cls(ChainConfig(), DriveParams(), WipConfig(), PilotConfig())


def resolve_key(key: str) -> tuple[str, str]:
    if "." in key:
        section, _, field = key.partition(".")
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        names = {f.name for f in dataclasses.fields(_SECTIONS[section])}
        if field not in names:
            raise ConfigError(f"unknown key {field!r} in section {section!r}")
        return section, field
    if key not in _FIELD_INDEX:
        raise ConfigError(f"unknown config key {key!r}")
    return _FIELD_INDEX[key]


def apply_setting(configs: Configs, key: str, value: str) -> Configs:
    """Return a new bundle with one key changed; validation errors surface as
    ConfigError."""
    section, field = resolve_key(key)
    try:
        parsed = float(value)
    except ValueError:
        raise ConfigError(f"value {value!r} for {key} is not a number") from None
    group = getattr(configs, section)
    try:
        new_group = dataclasses.replace(group, **{field: parsed})
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return dataclasses.replace(configs, **{section: new_group})


def parse_config_lines(lines: Iterable[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    for line_no, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"line {line_no}: expected 'key = value'")
            key, value = parts
        out[key.strip()] = value.strip()
    return out


def load_configs(source: str | Path | IO[str], base: Configs | None = None) -> Configs:
    """Load a config file on top of defaults (or the given base bundle)."""
    configs = base if base is not None else Configs.default()
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            pairs = parse_config_lines(fh)
    else:
        pairs = parse_config_lines(source)
    for key, value in pairs.items():
        configs = apply_setting(configs, key, value)
    return configs
