"""Experiment configuration files.

A configuration is a UTF-8 INI file with two sections::

    [experiment]
    model = two-point          ; or complete-graph
    seed = 0xF1E71             ; decimal or 0x-prefixed, below 2**64
    replicas = 2000
    horizon = 5.0
    n_grid = 2 3 4 10:20       ; integers, a:b is the inclusive range
    t_grid = 0 0.5 1 2
    eta0 = 10 0                ; optional initial configuration
    eta0_prime = 0 10          ; optional second configuration (coupling)
    out = results.csv          ; optional

    [model]
    a = 1.0                    ; two-point: a, b, p01, p02, N
    b = 2.0                    ; complete-graph: K, p, N
    p01 = 0.0
    p02 = 1.0
    N = 10

Grids must be non-empty and sorted. Comments start with ``;`` or ``#``.
Errors are raised as :class:`ConfigError` with the offending line number
when it can be found.
"""
from __future__ import annotations

import configparser
import io
import re
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional

from .complete_graph import CompleteGraphParams
from .montecarlo import DEFAULT_SEED
from .two_point import TwoPointParams

MODELS = ("complete-graph", "two-point")
_MODEL_KEYS = {
    "complete-graph": ("K", "p", "N"),
    "two-point": ("a", "b", "p01", "p02", "N"),
}


class ConfigError(ValueError):
    """Unreadable or invalid configuration."""

    def __init__(self, message, line=None, source=None):
        where = ""
        if source:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
        self.line = line


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    params: tuple
    """``(name, value)`` pairs in the model's canonical key order."""
    seed: int = DEFAULT_SEED
    replicas: int = 1000
    horizon: float = 1.0
    n_grid: tuple = ()
    t_grid: tuple = ()
    eta0: Optional[tuple] = None
    eta0_prime: Optional[tuple] = None
    out: Optional[str] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; expected one of {', '.join(MODELS)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.replicas < 1:
            raise ConfigError("replicas must be positive")
        if not self.horizon >= 0:
            raise ConfigError("horizon must be non-negative")
        for label, grid in (("n_grid", self.n_grid), ("t_grid", self.t_grid)):
            if any(y < x for x, y in zip(grid, grid[1:])):
                raise ConfigError(f"{label} must be sorted")
        if any(n < 2 for n in self.n_grid):
            raise ConfigError("n_grid entries must be at least 2")
        if any(t < 0 for t in self.t_grid):
            raise ConfigError("t_grid entries must be non-negative")
        try:
            model_params = self.model_params()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid [model] parameters: {exc}") from None
        sites = 2 if self.model == "two-point" else model_params.K
        for label, eta in (("eta0", self.eta0), ("eta0_prime", self.eta0_prime)):
            if eta is not None and (len(eta) != sites or sum(eta) != model_params.N or min(eta) < 0):
                raise ConfigError(f"{label} must be {sites} non-negative counts summing to N = {model_params.N}")

    def model_params(self):
        values = dict(self.params)
        if self.model == "two-point":
            return TwoPointParams(values["a"], values["b"], values["p01"], values["p02"], values["N"])
        return CompleteGraphParams(values["K"], values["p"], values["N"])

    def require_grid(self, label):
        grid = getattr(self, label)
        if not grid:
            raise ConfigError(f"this command needs a non-empty {label}")
        return grid

    def initial(self):
        """``eta0``, defaulting to every particle on site 1."""
        if self.eta0 is not None:
            return self.eta0
        params = self.model_params()
        sites = 2 if self.model == "two-point" else params.K
        return (params.N,) + (0,) * (sites - 1)


# parsing ---------------------------------------------------------------------

def _line_of(text, section, key):
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        header = re.fullmatch(r"\[(.+)\]", line)
        if header:
            current = header.group(1).strip()
        elif current == section and re.match(rf"{re.escape(key)}\s*[=:]", line, flags=re.I):
            return lineno
    return None


def _number(raw):
    raw = raw.strip()
    try:
        return int(raw, 0)
    except ValueError:
        pass
    if "/" in raw:
        return Fraction(raw)
    return float(raw)


def _int_grid(raw):
    out = []
    for tok in raw.replace(",", " ").split():
        if ":" in tok:
            lo, hi = (int(x, 0) for x in tok.split(":"))
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(tok, 0))
    return tuple(out)


def _float_grid(raw):
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


def _counts(raw):
    return tuple(int(tok) for tok in raw.replace(",", " ").split())


_EXPERIMENT_FIELDS = {
    "model": str.strip,
    "seed": lambda s: int(s.strip(), 0),
    "replicas": lambda s: int(s.strip(), 0),
    "horizon": lambda s: float(s),
    "n_grid": _int_grid,
    "t_grid": _float_grid,
    "eta0": _counts,
    "eta0_prime": _counts,
    "out": str.strip,
}


def parse_config(text: str, source: str = "", name: str = "") -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from INI text."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"), interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source or "<config>")
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " "), getattr(exc, "lineno", None), source) from None
    for section in ("experiment", "model"):
        if not parser.has_section(section):
            raise ConfigError(f"missing [{section}] section", None, source)
    exp = parser["experiment"]
    kwargs = {}
    for key, raw in exp.items():
        if key not in _EXPERIMENT_FIELDS:
            raise ConfigError(f"unknown key {key!r} in [experiment]", _line_of(text, "experiment", key), source)
        try:
            kwargs[key] = _EXPERIMENT_FIELDS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key}: {exc}", _line_of(text, "experiment", key), source) from None
    if "model" not in kwargs:
        raise ConfigError("[experiment] needs a model", None, source)
    model = kwargs["model"]
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}", _line_of(text, "experiment", "model"), source)
    keys = _MODEL_KEYS[model]
    section = parser["model"]
    params = []
    for key in section:
        if key not in keys:
            raise ConfigError(f"unknown parameter {key!r} for {model}", _line_of(text, "model", key), source)
    for key in keys:
        if key not in section:
            raise ConfigError(f"missing parameter {key!r} for {model}", None, source)
        try:
            value = _number(section[key])
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"bad value for {key}: {exc}", _line_of(text, "model", key), source) from None
        if key in ("N", "K"):
            if not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer", _line_of(text, "model", key), source)
        elif isinstance(value, int):
            value = float(value)
        params.append((key, value))
    try:
        return ExperimentConfig(params=tuple(params), name=name, **kwargs)
    except ConfigError as exc:
        raise ConfigError(str(exc), None, source) from None


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration: {exc.strerror}", None, str(path)) from None
    return parse_config(text, source=str(path), name=path.stem)


def preset_names():
    root = resources.files(__package__) / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load_preset(name: str) -> ExperimentConfig:
    resource = resources.files(__package__) / "presets" / f"{name}.ini"
    if not resource.is_file():
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
    return parse_config(resource.read_text(encoding="utf-8"), source=f"preset:{name}", name=name)


# emission --------------------------------------------------------------------

def _fmt_value(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_config(config: ExperimentConfig) -> str:
    """Canonical INI text; ``parse_config(emit_config(c)) == c``."""
    buf = io.StringIO()
    buf.write("[experiment]\n")
    buf.write(f"model = {config.model}\n")
    buf.write(f"seed = {config.seed:#x}\n")
    buf.write(f"replicas = {config.replicas}\n")
    buf.write(f"horizon = {config.horizon!r}\n")
    if config.n_grid:
        buf.write("n_grid = " + " ".join(str(n) for n in config.n_grid) + "\n")
    if config.t_grid:
        buf.write("t_grid = " + " ".join(repr(t) for t in config.t_grid) + "\n")
    for label in ("eta0", "eta0_prime"):
        eta = getattr(config, label)
        if eta is not None:
            buf.write(f"{label} = " + " ".join(str(x) for x in eta) + "\n")
    if config.out is not None:
        buf.write(f"out = {config.out}\n")
    buf.write("\n[model]\n")
    for key, value in config.params:
        buf.write(f"{key} = {_fmt_value(value)}\n")
    return buf.getvalue()
