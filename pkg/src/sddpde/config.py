"""Experiment configuration: INI files with dotted keys, env overrides, presets.

A config has three sections.  Keys inside a section may be dotted and are
flattened to ``section.key``, e.g. ``[model] delay.c1 = 0.5`` becomes
``model.delay.c1``.  Environment variables ``SDDPDE_MODEL__DELAY__C1=0.7``
override file values (double underscore stands for a dot).
"""
from __future__ import annotations

import configparser
import difflib
import os
from dataclasses import dataclass, field
from pathlib import Path

from .delay import DelayConfigurationError
from .initial import GENERATORS
from .model import ModelSpec, make_model

ENV_PREFIX = "SDDPDE_"
RUN_KINDS = ("solve", "manifold", "variational", "certify")


class ConfigError(ValueError):
    pass


MODEL_KEYS = {
    "model.n_modes": ("n_modes", int),
    "model.delta": ("delta", float),
    "model.alpha": ("alpha", float),
    "model.h": ("h", float),
    "model.grid_points": ("grid_points", int),
    "model.delay.kind": ("delay", str),
    "model.delay.c1": ("c1", float),
    "model.delay.c2": ("c2", float),
    "model.delay.c3": ("c3", float),
    "model.delay.r_const": ("r0", float),
    "model.delay.quad_points": ("quad_points", int),
    "model.nonlinearity.kernel": ("kernel", str),
    "model.nonlinearity.amplitude": ("amplitude", float),
    "model.nonlinearity.width": ("width", float),
    "model.nonlinearity.b": ("b", str),
    "model.nonlinearity.gain": ("gain", float),
    "model.nonlinearity.offset": ("offset", float),
    "model.nonlinearity.clip": ("clip", float),
}

INITIAL_PARAMS = {
    "k": int, "amplitude": float, "center": float, "width": float, "omega": float,
    "eta": float, "theta_c": float, "m": int, "levels": int, "decay": float,
}

RUN_DEFAULTS = {
    "kind": "solve",
    "t_final": 1.0,
    "tol": 1e-10,
    "m_t": 33,
    "oracle": "false",
    "oracle_dt": 1e-3,
    "oracle_scheme": "etd2",
    "oracle_tol": 1e-5,
    "probe": "false",
    "probe_tol": 1e-4,
    "identity_tol": 1e-6,
    "identity_check": "false",
    "project": "false",
    "t_eval": 0.5,
    "h_steps": "1e-2,1e-3,1e-4",
    "fd_max_error": 1e-3,
    "compare_sign": "false",
    "criteria": "1,2,3,4,5,6,7,8",
    "seed": 42,
}


@dataclass
class ExperimentConfig:
    model_keys: dict = field(default_factory=dict)
    initial_name: str = "zero"
    initial_params: dict = field(default_factory=dict)
    run: dict = field(default_factory=lambda: dict(RUN_DEFAULTS))
    out: str = "out"

    @property
    def seed(self) -> int:
        return int(self.run["seed"])

    @property
    def kind(self) -> str:
        return self.run["kind"]

    def build_model(self) -> ModelSpec:
        kwargs = {}
        for key, raw in self.model_keys.items():
            name, conv = MODEL_KEYS[key]
            kwargs[name] = _convert(key, raw, conv)
        try:
            return make_model(**kwargs)
        except DelayConfigurationError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"model: {exc}") from exc

    def get(self, key: str, conv=str):
        return _convert(f"run.{key}", self.run[key], conv)

    def flag(self, key: str) -> bool:
        v = str(self.run[key]).strip().lower()
        if v in ("1", "true", "yes", "on"):
            return True
        if v in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"run.{key}: expected a boolean, got {v!r}")

    def floats(self, key: str) -> list[float]:
        try:
            return [float(x) for x in str(self.run[key]).split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"run.{key}: {exc}") from exc


def _convert(key, raw, conv):
    try:
        return conv(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {conv.__name__}") from exc


def _hint(word: str, options) -> str:
    close = difflib.get_close_matches(word, list(options), n=1)
    return f" (did you mean {close[0]!r}?)" if close else ""


def from_flat(flat: dict, seed: int | None = None) -> ExperimentConfig:
    """Build a config from ``section.key -> value`` strings and validate names."""
    cfg = ExperimentConfig()
    for key, value in flat.items():
        value = str(value).strip()
        if key.startswith("model."):
            if key not in MODEL_KEYS:
                raise ConfigError(f"unknown model key {key!r}{_hint(key, MODEL_KEYS)}")
            cfg.model_keys[key] = value
        elif key == "initial.name":
            cfg.initial_name = value
        elif key.startswith("initial."):
            p = key.split(".", 1)[1]
            if p not in INITIAL_PARAMS:
                raise ConfigError(f"unknown initial parameter {key!r}{_hint(p, INITIAL_PARAMS)}")
            cfg.initial_params[p] = _convert(key, value, INITIAL_PARAMS[p])
        elif key.startswith("run."):
            p = key.split(".", 1)[1]
            if p == "out":
                cfg.out = value
            elif p not in RUN_DEFAULTS:
                raise ConfigError(f"unknown run key {key!r}{_hint(p, RUN_DEFAULTS)}")
            else:
                cfg.run[p] = value
        else:
            raise ConfigError(f"key {key!r} must live in [model], [initial] or [run]")
    if cfg.initial_name not in GENERATORS:
        raise ConfigError(f"unknown initial history {cfg.initial_name!r}{_hint(cfg.initial_name, GENERATORS)}")
    if cfg.kind not in RUN_KINDS:
        raise ConfigError(f"unknown run kind {cfg.kind!r}{_hint(cfg.kind, RUN_KINDS)}")
    if seed is not None:
        cfg.run["seed"] = seed
    for key in ("t_final", "tol", "oracle_dt", "t_eval"):
        if cfg.get(key, float) <= 0:
            raise ConfigError(f"run.{key} must be positive")
    return cfg


def read_ini(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {str(p)!r} not found")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    parser.optionxform = str
    try:
        parser.read(p)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {p}: {exc}") from exc
    flat = {}
    for section in parser.sections():
        if section not in ("model", "initial", "run"):
            raise ConfigError(f"unknown section [{section}]{_hint(section, ('model', 'initial', 'run'))}")
        for key, value in parser.items(section):
            flat[f"{section}.{key}"] = value
    return flat


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for name, value in environ.items():
        if name.startswith(ENV_PREFIX) and "__" in name:
            out[name[len(ENV_PREFIX):].lower().replace("__", ".")] = value
    return out


def load(path, seed: int | None = None, environ=None) -> ExperimentConfig:
    flat = read_ini(path)
    flat.update(env_overrides(environ))
    return from_flat(flat, seed)


def to_ini(flat: dict) -> str:
    sections: dict[str, list[str]] = {"model": [], "initial": [], "run": []}
    for key, value in flat.items():
        sec, rest = key.split(".", 1)
        sections[sec].append(f"{rest} = {value}")
    return "\n".join(f"[{s}]\n" + "\n".join(lines) + "\n" for s, lines in sections.items())


PRESETS: dict[str, tuple[str, dict]] = {
    "zero": ("B = 0 with zero history; trajectory stays identically zero", {
        "model.nonlinearity.kernel": "zero", "initial.name": "zero",
        "run.kind": "solve", "run.t_final": "1.0", "run.oracle": "true"}),
    "linear-dde-oracle": ("one mode, constant lag: Picard vs method of steps on [0, 2]", {
        "model.n_modes": "1", "model.nonlinearity.kernel": "cosine",
        "model.nonlinearity.amplitude": "0.5", "model.nonlinearity.b": "identity",
        "model.delay.kind": "constant", "model.delay.r_const": "0.5",
        "initial.name": "single-mode-decay", "initial.k": "1", "initial.amplitude": "0.5",
        "run.kind": "solve", "run.t_final": "2.0", "run.oracle": "true",
        "run.oracle_dt": "1e-4", "run.oracle_scheme": "rk4", "run.oracle_tol": "1e-5"}),
    "threshold-solve": ("threshold delay, N = 16: four-way uniqueness probe and integral identity", {
        "initial.name": "bump", "run.kind": "solve", "run.t_final": "2.0",
        "run.probe": "true", "run.identity_check": "true"}),
    "manifold-projection": ("project a random history onto the solution manifold and stay there", {
        "initial.name": "random", "initial.amplitude": "0.3", "run.kind": "manifold",
        "run.t_final": "1.0"}),
    "variational-check": ("linearized flow vs central differences of the semiflow", {
        "initial.name": "random", "initial.amplitude": "0.3", "run.kind": "variational",
        "run.t_eval": "0.5", "run.compare_sign": "true"}),
    "holder-cusp": ("square-root cusp history; solve past the cusp crossing", {
        "initial.name": "cusp", "initial.eta": "0.02", "initial.levels": "6",
        "run.kind": "solve", "run.t_final": "0.5"}),
    "certify": ("full acceptance suite (criteria 1-8)", {"run.kind": "certify"}),
}


def preset_names() -> list[str]:
    return list(PRESETS)


def preset(name: str, seed: int | None = None, environ=None) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}{_hint(name, PRESETS)}")
    flat = dict(PRESETS[name][1])
    flat.update(env_overrides(environ))
    return from_flat(flat, seed)
