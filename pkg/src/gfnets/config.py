"""Run configuration: TOML or JSON files plus command-line overrides."""
from __future__ import annotations

import copy
import json
import sys
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .nets import EpsSchedule, Thresholds

SUBCOMMANDS = ("classify", "seeley", "embed", "decompose", "compose", "solve", "verify", "primitive")

REQUIRED = {
    "classify": ("net",),
    "seeley": ("L",),
    "embed": ("f",),
    "decompose": ("principal", "corrective"),
    "compose": ("F", "principal", "corrective"),
    "solve": ("A", "forcing"),
    "verify": ("system", "u"),
    "primitive": ("u",),
}

DEFAULTS = {
    "schedule": {"eps0": 0.5, "ratio": 0.7, "n": 12},
    "kmax": 2,
    "seed": 0,
    "thresholds": {},
}


class ConfigError(ValueError):
    """Unreadable, malformed or incomplete configuration (exit status 2)."""


def load_file(path) -> dict:
    """Read a TOML (``.toml``) or JSON (anything else) configuration file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        if p.suffix.lower() == ".toml":
            with open(p, "rb") as fh:
                return tomllib.load(fh)
        with open(p) as fh:
            return json.load(fh)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None


def parse_schedule(text: str) -> dict:
    """``"eps0,ratio,n"`` -> schedule table."""
    try:
        a, r, n = text.split(",")
        return {"eps0": float(a), "ratio": float(r), "n": int(n)}
    except ValueError:
        raise ConfigError(f"--schedule expects eps0,ratio,N, got {text!r}") from None


def resolve(subcommand: str, file_cfg: dict | None = None, overrides: dict | None = None) -> dict:
    """Merge defaults, file contents and overrides, then validate.

    A file may hold the subcommand's keys at top level or under a table named
    after the subcommand.
    """
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    cfg = copy.deepcopy(DEFAULTS)
    src = dict(file_cfg or {})
    if isinstance(src.get(subcommand), dict):
        inner = src.pop(subcommand)
        src.update(inner)
    for key, val in src.items():
        if isinstance(val, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(val)
        else:
            cfg[key] = val
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        if isinstance(val, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(val)
        else:
            cfg[key] = val
    cfg["subcommand"] = subcommand
    missing = [k for k in REQUIRED[subcommand] if k not in cfg]
    if missing:
        raise ConfigError(f"{subcommand}: missing required key(s) {', '.join(missing)}")
    try:
        schedule(cfg)
        thresholds(cfg)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    if not isinstance(cfg["kmax"], int) or cfg["kmax"] < 0:
        raise ConfigError("kmax must be a non-negative integer")
    return cfg


def schedule(cfg) -> EpsSchedule:
    s = cfg["schedule"]
    return EpsSchedule(float(s["eps0"]), float(s["ratio"]), int(s["n"]))


def thresholds(cfg) -> Thresholds:
    return Thresholds(**cfg.get("thresholds", {}))
