"""Experiment configuration: a flat, sectioned key = value text format.

Grammar (one construct per line, '#' starts a comment anywhere):

    [section]             sections: grid, initial_data, scheme, experiment,
                          tolerances; keys before any section header are
                          top-level (seed, output_dir)
    key = value           value typed per key; floats use C locale; lists
                          are comma-separated

Unknown sections or keys, type mismatches, and invariant violations raise
ConfigError carrying the 1-based line number.  An empty document yields the
defaults: n=32, L=8, explicit_rk2 with cfl_safety=0.25, maxwellian data,
simulate to T=0.25, k0=5, seed=0.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .solver import INITIAL_KINDS, SCHEME_KINDS

__all__ = ["ConfigError", "SimConfig", "parse_config", "EXPERIMENT_KINDS"]

EXPERIMENT_KINDS = ("simulate", "identities", "energy_audit", "stability",
                    "apriori", "mollifier")


class ConfigError(ValueError):
    """Configuration parse or validation failure with a line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{message}")


@dataclass
class SimConfig:
    """Validated experiment configuration with defaults applied."""

    n: int = 32
    L: float = 8.0
    initial_kind: str = "maxwellian"
    initial_params: dict = field(default_factory=dict)
    scheme_kind: str = "explicit_rk2"
    cfl_safety: float = 0.25
    experiment_kind: str = "simulate"
    T: float = 0.25
    eps_list: list = field(default_factory=lambda: [1e-3, 5e-4])
    delta_list: list = field(default_factory=lambda: [0.5, 0.25, 0.125])
    k0: float = 5.0
    sample_every: int = 1
    seed: int = 0
    output_dir: str = "out"
    tolerances: dict = field(default_factory=dict)


def _to_int(text: str) -> int:
    return int(text, 10)


def _to_float(text: str) -> float:
    return float(text)


def _to_float_list(text: str) -> list:
    items = [t.strip() for t in text.split(",") if t.strip()]
    return [float(t) for t in items]


def _to_str(text: str) -> str:
    return text


# (section, key) -> (attribute or param name, converter)
_TOP_KEYS = {"seed": ("seed", _to_int), "output_dir": ("output_dir", _to_str)}
_GRID_KEYS = {"n": ("n", _to_int), "L": ("L", _to_float)}
_SCHEME_KEYS = {"kind": ("scheme_kind", _to_str),
                "cfl_safety": ("cfl_safety", _to_float)}
_EXPERIMENT_KEYS = {
    "kind": ("experiment_kind", _to_str),
    "T": ("T", _to_float),
    "eps_list": ("eps_list", _to_float_list),
    "delta_list": ("delta_list", _to_float_list),
    "k0": ("k0", _to_float),
    "sample_every": ("sample_every", _to_int),
}
_INITIAL_PARAM_KEYS = {
    "temperature": _to_float,
    "temperatures": _to_float_list,
    "offset": _to_float,
    "amplitude": _to_float,
    "max_freq": _to_float,
    "eps": _to_float,
}
_SECTIONS = ("grid", "initial_data", "scheme", "experiment", "tolerances")


def _split_kv(body: str, lineno: int) -> tuple[str, str]:
    if "=" not in body:
        raise ConfigError(f"expected 'key = value', got {body!r}", lineno)
    key, _, val = body.partition("=")
    key = key.strip()
    val = val.strip()
    if not key:
        raise ConfigError("empty key", lineno)
    return key, val


def _convert(conv, key: str, val: str, lineno: int):
    try:
        return conv(val)
    except ValueError:
        raise ConfigError(
            f"bad value {val!r} for key {key!r}", lineno) from None


def parse_config(text: str) -> SimConfig:
    """Parse and validate a configuration document."""
    cfg = SimConfig()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"unterminated section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(
                    f"unknown section {section!r}; expected one of {_SECTIONS}",
                    lineno)
            continue
        key, val = _split_kv(line, lineno)
        if section is None:
            if key not in _TOP_KEYS:
                raise ConfigError(
                    f"unknown top-level key {key!r}; expected one of "
                    f"{tuple(_TOP_KEYS)}", lineno)
            attr, conv = _TOP_KEYS[key]
            setattr(cfg, attr, _convert(conv, key, val, lineno))
        elif section == "grid":
            if key not in _GRID_KEYS:
                raise ConfigError(
                    f"unknown grid key {key!r}; expected one of "
                    f"{tuple(_GRID_KEYS)}", lineno)
            attr, conv = _GRID_KEYS[key]
            setattr(cfg, attr, _convert(conv, key, val, lineno))
        elif section == "initial_data":
            if key == "kind":
                cfg.initial_kind = val
            elif key in _INITIAL_PARAM_KEYS:
                cfg.initial_params[key] = _convert(
                    _INITIAL_PARAM_KEYS[key], key, val, lineno)
            else:
                raise ConfigError(
                    f"unknown initial_data key {key!r}; expected 'kind' or "
                    f"one of {tuple(_INITIAL_PARAM_KEYS)}", lineno)
        elif section == "scheme":
            if key not in _SCHEME_KEYS:
                raise ConfigError(
                    f"unknown scheme key {key!r}; expected one of "
                    f"{tuple(_SCHEME_KEYS)}", lineno)
            attr, conv = _SCHEME_KEYS[key]
            setattr(cfg, attr, _convert(conv, key, val, lineno))
        elif section == "experiment":
            if key not in _EXPERIMENT_KEYS:
                raise ConfigError(
                    f"unknown experiment key {key!r}; expected one of "
                    f"{tuple(_EXPERIMENT_KEYS)}", lineno)
            attr, conv = _EXPERIMENT_KEYS[key]
            setattr(cfg, attr, _convert(conv, key, val, lineno))
        elif section == "tolerances":
            cfg.tolerances[key] = _convert(_to_float, key, val, lineno)
    _validate(cfg)
    return cfg


def _validate(cfg: SimConfig) -> None:
    if cfg.n % 2 != 0 or cfg.n < 4:
        raise ConfigError(f"n must be even and >= 4, got {cfg.n}")
    if not cfg.L > 0:
        raise ConfigError(f"L must be positive, got {cfg.L}")
    if cfg.initial_kind not in INITIAL_KINDS:
        raise ConfigError(
            f"unknown initial data kind {cfg.initial_kind!r}; expected one "
            f"of {INITIAL_KINDS}")
    if cfg.scheme_kind not in SCHEME_KINDS:
        raise ConfigError(
            f"unknown scheme kind {cfg.scheme_kind!r}; expected one of "
            f"{SCHEME_KINDS}")
    if not 0.0 < cfg.cfl_safety <= 1.0:
        raise ConfigError(f"cfl_safety must lie in (0, 1], got {cfg.cfl_safety}")
    if cfg.experiment_kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"unknown experiment kind {cfg.experiment_kind!r}; expected one "
            f"of {EXPERIMENT_KINDS}")
    if not cfg.T > 0:
        raise ConfigError(f"T must be positive, got {cfg.T}")
    if cfg.sample_every < 1:
        raise ConfigError(f"sample_every must be >= 1, got {cfg.sample_every}")
    if cfg.seed < 0:
        raise ConfigError(f"seed must be a nonnegative integer, got {cfg.seed}")
    if cfg.experiment_kind == "stability" and len(cfg.eps_list) < 2:
        raise ConfigError(
            f"stability needs at least two eps values, got {cfg.eps_list}")
    if cfg.experiment_kind == "mollifier" and not cfg.delta_list:
        raise ConfigError("mollifier needs a nonempty delta_list")
    if cfg.k0 < 5.0:
        warnings.warn(
            f"k0 = {cfg.k0} is below 5; the weighted estimates are only "
            f"guaranteed for k0 >= 5", stacklevel=3)
