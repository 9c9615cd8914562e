"""Sweep configuration: INI files with one section per family and bundled profiles.

A ``[DEFAULT]`` section carries the keys every family shares; a family section
adds its ``width_*``/``depth_*`` ranges and may override any shared key::

    [DEFAULT]
    trials = 10
    time_cap = 1200

    [LI]
    width_min = 2
    width_step = 100
    width_max = 1502
    depth_min = 1
    depth_step = 100
    depth_max = 1501
"""

from __future__ import annotations

import configparser
import logging
from importlib import resources
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from devstone.errors import ConfigError
from devstone.models import Family, FamilySweep, Range, SweepConfig

log = logging.getLogger(__name__)

PROFILES = ("paper", "desk")
DEFAULT_PROFILE = "desk"

_SHARED_KEYS = ("trials", "time_cap", "mem_cap", "delta_int", "delta_ext", "isolate")


def profile_text(name: str) -> str:
    if name not in PROFILES:
        raise ConfigError(f"unknown profile {name!r} (choose from {', '.join(PROFILES)})")
    return resources.files("devstone").joinpath("profiles", f"{name}.cfg").read_text()


def _family(section: str) -> Family:
    try:
        return Family(section)
    except ValueError:
        raise ConfigError(f"unknown family section [{section}]") from None


def _range(section: configparser.SectionProxy, prefix: str) -> Range:
    return Range(
        min=section.getint(f"{prefix}_min"),
        step=section.getint(f"{prefix}_step", fallback=1),
        max=section.getint(f"{prefix}_max"),
    )


def parse_sweep_config(
    text: str,
    *,
    source: str = "<string>",
    overrides: dict[str, Any] | None = None,
) -> SweepConfig:
    """Parse INI ``text``; non-None ``overrides`` win over values from the file."""
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    parser = configparser.ConfigParser()
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    families: list[FamilySweep] = []
    try:
        for name in parser.sections():
            section = parser[name]
            fields: dict[str, Any] = {
                "family": _family(name),
                "width": _range(section, "width"),
                "depth": _range(section, "depth"),
            }
            for key in _SHARED_KEYS:
                if key in section:
                    fields[key] = section.getboolean(key) if key == "isolate" else section[key]
            if "events" in section:
                fields["n_events"] = section["events"]
            for key, value in overrides.items():
                if key == "events":
                    fields["n_events"] = value
                elif key in _SHARED_KEYS:
                    fields[key] = value
            families.append(FamilySweep.model_validate(fields))

        parallel = overrides.get("parallel", parser.defaults().get("parallel", 1))
        cfg = SweepConfig(families=families, parallel=parallel)
    except (ValidationError, ValueError, configparser.Error) as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    if not cfg.families:
        raise ConfigError(f"{source}: no family sections")
    log.debug("Loaded %s: %d family grid(s), %d cell(s)", source, len(families), cfg.cell_count)
    return cfg


def load_sweep_config(
    path: Path | None = None,
    *,
    profile: str | None = None,
    overrides: dict[str, Any] | None = None,
) -> SweepConfig:
    """Read ``path`` if given, else the bundled ``profile`` (``desk`` by default)."""
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc}") from exc
        return parse_sweep_config(text, source=str(path), overrides=overrides)
    name = profile or DEFAULT_PROFILE
    return parse_sweep_config(profile_text(name), source=f"profile:{name}", overrides=overrides)
