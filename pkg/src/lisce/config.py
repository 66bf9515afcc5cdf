"""
Flat ``key = value`` experiment configuration.

One assignment per line, ``#`` starts a comment, lists are comma separated and
numbers may be written as fractions (``sigma_h2 = 1/64``). Unknown keys,
duplicates and malformed values are rejected with the offending line number.
"""

from __future__ import annotations

import logging
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from .channel import ChannelParams
from .errors import ConfigError, LisceError
from .estimators import DualAscentConfig
from .harness import DEFAULT_TRIALS, ExperimentConfig

log = logging.getLogger(__name__)


def _number(text: str) -> float:
    text = text.strip()
    try:
        return float(text)
    except ValueError:
        return float(Fraction(text.replace(" ", "")))


def _integer(text: str) -> int:
    v = _number(text)
    if v != int(v):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(v)


def _number_list(text: str) -> tuple:
    items = [t for t in (s.strip() for s in text.split(",")) if t]
    if not items:
        raise ValueError("empty list")
    return tuple(_number(t) for t in items)


def _name_list(text: str) -> tuple:
    items = [t.strip().upper() for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(items)


# key -> (section, field, parser)
_SCHEMA = {
    "sigma_h2": ("channel", "sigma_h2", _number),
    "sigma_f2": ("channel", "sigma_f2", _number),
    "sigma_g2": ("channel", "sigma_g2", _number),
    "n_elements": ("channel", "n_elements", _integer),
    "k1": ("experiment", "k1", _integer),
    "k2": ("experiment", "k2", _integer),
    "snr_db": ("experiment", "snr_db_list", _number_list),
    "trials": ("experiment", "trials", _integer),
    "seed": ("experiment", "master_seed", _integer),
    "estimators": ("experiment", "estimator_set", _name_list),
    "workers": ("experiment", "workers", _integer),
    "eps": ("dual_ascent", "eps0", _number),
    "tau": ("dual_ascent", "tau0", _number),
    "t_max": ("dual_ascent", "t_max", _integer),
    "tol": ("dual_ascent", "tol", _number),
    "lambda0": ("dual_ascent", "lambda0", _number),
    "delta0": ("dual_ascent", "delta0", _number),
    "feas_tol": ("dual_ascent", "feas_tol", _number),
    "schedule": ("dual_ascent", "schedule", str.strip),
    "pd_margin": ("dual_ascent", "pd_margin", _number),
    "max_backoffs": ("dual_ascent", "max_backoffs", _integer),
}
_ALIASES = {"master_seed": "seed", "snr_db_list": "snr_db", "epsilon": "eps", "estimator_set": "estimators"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; keys left out take the reference defaults."""
    sections = {"channel": {}, "experiment": {}, "dual_ascent": {}}
    seen = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        key = _ALIASES.get(key.lower(), key.lower())
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first set on line {seen[key]})", lineno)
        if not value:
            raise ConfigError(f"missing value for {key!r}", lineno)
        section, name, conv = _SCHEMA[key]
        try:
            sections[section][name] = (conv(value), lineno)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        seen[key] = lineno

    if "trials" not in seen:
        log.info("config does not set 'trials'; using the default of %d", DEFAULT_TRIALS)

    def build(cls, section, **extra):
        kwargs = {k: v for k, (v, _) in sections[section].items()}
        try:
            return cls(**kwargs, **extra)
        except LisceError as exc:
            lines = [ln for _, ln in sections[section].values()]
            # point at the section's last assignment when the culprit is not obvious
            line = next((ln for name, (_, ln) in sections[section].items() if name in str(exc)), max(lines, default=None))
            raise ConfigError(str(exc), line) from None

    channel = build(ChannelParams, "channel")
    dual = build(DualAscentConfig, "dual_ascent")
    return build(ExperimentConfig, "experiment", channel=channel, dual_ascent=dual)


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return parse_config(text)


def _fmt(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(_fmt(x) for x in v)
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def format_config(config: ExperimentConfig) -> list[tuple[str, str]]:
    """Resolved configuration as ``(key, value)`` pairs that :func:`parse_config` reads back."""
    objs = {"channel": config.channel, "experiment": config, "dual_ascent": config.dual_ascent}
    return [(key, _fmt(getattr(objs[section], name))) for key, (section, name, _) in _SCHEMA.items()]


def with_overrides(config: ExperimentConfig, seed=None, workers=None) -> ExperimentConfig:
    changes = {}
    if seed is not None:
        changes["master_seed"] = int(seed)
    if workers is not None:
        changes["workers"] = int(workers)
    return replace(config, **changes) if changes else config

