"""Run configuration: a flat JSON object of named parameters.

Every key has a documented default (see ``KEYS``); unknown keys, wrong
types and out-of-range values are rejected with a message naming the key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable

from .geometry import ParameterError

SUBCOMMANDS = ("phantom", "project", "reconstruct", "phase-diagram", "dose-study",
               "wedge-study", "eps-sweep")


class ConfigError(ParameterError):
    """Invalid configuration document."""


@dataclass(frozen=True)
class Key:
    kind: str  # int, float, bool, str, floats, ints
    default: Any
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    optional: bool = False  # None allowed


def _pos(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 < v < 1


KEYS: dict[str, Key] = {
    "subcommand": Key("str", None, lambda v: v in SUBCOMMANDS,
                      "one of " + ", ".join(SUBCOMMANDS), optional=True),
    "base_seed": Key("int", 0, _nonneg, ">= 0"),
    "out_dir": Key("str", "out"),
    "threads": Key("int", 1, lambda v: v >= 1, ">= 1"),
    # phantom
    "phantom_kind": Key("str", "ptc-like", lambda v: v in ("ptc-like", "pixel-sparse"),
                        "'ptc-like' or 'pixel-sparse'"),
    "size": Key("int", 64, lambda v: v >= 1, ">= 1"),
    "k_target": Key("float", 0.1, lambda v: 0 < v <= 1, "in (0, 1]"),
    "carbon_level": Key("float", 0.03, _pos, "> 0"),
    "particle_level": Key("float", 0.75, _pos, "> 0"),
    "grad_target": Key("float", 0.06, lambda v: 0 < v < 1, "in (0, 1)"),
    "grad_tol": Key("float", 0.02, _pos, "> 0"),
    # geometry
    "theta_max": Key("float", 90.0, lambda v: 0 < v <= 90, "in (0, 90]"),
    "n_proj": Key("int", 30, lambda v: v >= 1, ">= 1"),
    "n_det": Key("int", None, lambda v: v >= 1, ">= 1", optional=True),
    # noise; null means ideal data
    "total_counts": Key("float", None, _pos, "> 0", optional=True),
    # solvers
    "solver": Key("str", "tv", lambda v: v in ("tv", "l1"), "'tv' or 'l1'"),
    "epsilon": Key("float", 1e-5, _nonneg, ">= 0"),
    "max_iters": Key("int", None, lambda v: v >= 1, ">= 1", optional=True),
    "nonneg": Key("bool", True),
    "tol_primal": Key("float", 1e-6, _pos, "> 0"),
    "tol_dual": Key("float", 1e-6, _pos, "> 0"),
    "beta0": Key("float", 1.0, _pos, "> 0"),
    "beta_red": Key("float", 0.995, _unit, "in (0, 1)"),
    "n_tv_steps": Key("int", 20, _nonneg, ">= 0"),
    "alpha0": Key("float", 0.2, _nonneg, ">= 0"),
    "alpha_red": Key("float", 0.95, lambda v: 0 < v <= 1, "in (0, 1]"),
    "r_max": Key("float", 0.95, _pos, "> 0"),
    "delta": Key("float", 1e-8, _pos, "> 0"),
    "c_alpha_stop": Key("float", -0.95, lambda v: -1 <= v <= 1, "in [-1, 1]"),
    "resid_rel_stop": Key("float", 1e-4, _pos, "> 0"),
    # phase diagram
    "k_values": Key("floats", [0.05, 0.1, 0.2, 0.35, 0.6, 0.9],
                    lambda v: all(0 < k <= 1 for k in v), "values in (0, 1]"),
    "mu_values": Key("floats", [0.1, 0.2, 0.3, 0.45, 0.6, 0.8],
                     lambda v: all(m > 0 for m in v), "values > 0"),
    "trials_per_cell": Key("int", 10, lambda v: v >= 1, ">= 1"),
    "rmse_threshold": Key("float", 0.05, _pos, "> 0"),
    "boundary_level": Key("float", 0.5, lambda v: 0 < v <= 1, "in (0, 1]"),
    # sweeps and studies
    "eps_factors": Key("floats", None, lambda v: all(e > 0 for e in v), "values > 0",
                       optional=True),
    "eps_values": Key("floats", None, lambda v: all(e > 0 for e in v), "values > 0",
                      optional=True),
    "total_counts_values": Key("floats", [4e4, 1.6e5], lambda v: all(e > 0 for e in v),
                               "values > 0"),
    "n_proj_values": Key("ints", [15, 30, 45, 60], lambda v: all(n >= 1 for n in v),
                         "values >= 1"),
    "theta_values": Key("floats", [45.0, 60.0, 75.0, 90.0],
                        lambda v: all(0 < t <= 90 for t in v), "values in (0, 90]"),
    # images
    "window_lo": Key("float", 0.01),
    "window_hi": Key("float", 0.05),
    "pgm_ascii": Key("bool", False),
}

_LIST_KINDS = {"floats": "float", "ints": "int"}


def _coerce(name: str, key: Key, value):
    def bad(what):
        return ConfigError(f"config key '{name}': {what}")

    if value is None:
        if key.optional:
            return None
        raise bad("must not be null")
    kind = key.kind
    if kind in _LIST_KINDS:
        if not isinstance(value, list) or not value:
            raise bad("expected a non-empty list")
        return [_coerce(name, Key(_LIST_KINDS[kind], None), v) for v in value]
    if kind == "bool":
        if not isinstance(value, bool):
            raise bad(f"expected true/false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise bad(f"expected a string, got {value!r}")
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise bad(f"expected a number, got {value!r}")
    if kind == "int":
        if isinstance(value, float) and not value.is_integer():
            raise bad(f"expected an integer, got {value!r}")
        return int(value)
    value = float(value)
    if not math.isfinite(value):
        raise bad("must be finite")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters of one CLI run; missing keys hold their defaults."""

    params: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return self.params[name]

    @property
    def subcommand(self):
        return self.params["subcommand"]

    def with_overrides(self, **values) -> "RunConfig":
        merged = dict(self.params)
        merged.update({k: v for k, v in values.items() if v is not None})
        return build_config(merged)


def build_config(values: dict) -> RunConfig:
    unknown = sorted(set(values) - set(KEYS))
    if unknown:
        raise ConfigError(f"unknown config key '{unknown[0]}'")
    params = {}
    for name, key in KEYS.items():
        value = _coerce(name, key, values[name]) if name in values else key.default
        if value is not None and key.check is not None and not key.check(value):
            raise ConfigError(f"config key '{name}': value {value!r} out of range ({key.rule})")
        params[name] = list(value) if isinstance(value, list) else value
    if not params["window_lo"] < params["window_hi"]:
        raise ConfigError("config key 'window_hi': must exceed window_lo")
    for name in ("eps_values", "eps_factors"):
        v = params[name]
        if v is not None and any(b <= a for a, b in zip(v, v[1:])):
            raise ConfigError(f"config key '{name}': values must be strictly increasing")
    return RunConfig(params)


def parse_config(text: str) -> RunConfig:
    """Parse and validate a JSON object; defaults fill missing keys."""
    try:
        doc = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config document: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("malformed config document: top level must be an object")
    return build_config(doc)


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.params, indent=2, sort_keys=True) + "\n"
