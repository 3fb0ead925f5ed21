"""Run configuration: a TOML file plus command-line overrides."""
from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Optional, Tuple

from .continuation import ContinuationConfig
from .discretize import DEFAULT_N_INTERIOR, DEFAULT_N_MODES
from .errors import ConfigurationError
from .nonlinear import NONLINEAR_N_INTERIOR
from .weights import WeightFunction, from_dict, parse

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

OUT_ENV = "NODALBIF_OUT"
DEFAULT_OUT = "nodalbif-out"


def default_out_root() -> str:
    return os.environ.get(OUT_ENV, DEFAULT_OUT)


@dataclass(frozen=True)
class HomotopySpec:
    """Reach mu from ``from_mu`` for a mode that has no bifurcation points at mu."""

    mode: int
    from_mu: float
    steps: int = 10

    def __post_init__(self):
        if self.mode < 1 or self.steps < 1:
            raise ConfigurationError("homotopy needs mode >= 1 and steps >= 1")


@dataclass(frozen=True)
class RunConfig:
    m: WeightFunction = field(default_factory=lambda: parse("sine:2"))
    a: WeightFunction = field(default_factory=lambda: parse("paper-a"))
    scheme: str = "spectral"
    n_interior: int = DEFAULT_N_INTERIOR
    n_modes: int = DEFAULT_N_MODES
    nonlinear_n_interior: int = NONLINEAR_N_INTERIOR
    lam_range: Tuple[float, float] = (-200.0, 200.0)
    step: float = 0.5
    mu: Tuple[float, ...] = (45.0,)
    modes: Tuple[int, ...] = (1, 2, 3, 4, 5)
    k: int = 1
    continuation: ContinuationConfig = field(default_factory=ContinuationConfig)
    homotopy: Tuple[HomotopySpec, ...] = ()
    out: str = ""
    jobs: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in ("spectral", "fd"):
            raise ConfigurationError(f"scheme must be 'spectral' or 'fd', got {self.scheme!r}")
        if self.n_interior < 8:
            raise ConfigurationError("n_interior must be at least 8")
        if self.n_modes < 4:
            raise ConfigurationError("n_modes must be at least 4")
        if self.nonlinear_n_interior < 8:
            raise ConfigurationError("nonlinear_n_interior must be at least 8")
        if not self.lam_range[0] < self.lam_range[1]:
            raise ConfigurationError(f"empty lambda range {self.lam_range}")
        if not self.step > 0:
            raise ConfigurationError("step must be positive")
        if not self.modes or any(int(n) != n or n < 1 for n in self.modes):
            raise ConfigurationError(f"modes must be positive integers, got {self.modes}")
        if self.k < 1:
            raise ConfigurationError("k must be a positive integer")
        if self.jobs < 1:
            raise ConfigurationError("jobs must be at least 1")

    @property
    def out_dir(self) -> str:
        return self.out or default_out_root()

    def to_dict(self) -> Dict[str, Any]:
        d = {
            "m": self.m.to_dict(),
            "a": self.a.to_dict(),
            "scheme": self.scheme,
            "n_interior": self.n_interior,
            "n_modes": self.n_modes,
            "nonlinear_n_interior": self.nonlinear_n_interior,
            "lam_range": list(self.lam_range),
            "step": self.step,
            "mu": list(self.mu),
            "modes": list(self.modes),
            "k": self.k,
            "continuation": {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self.continuation).items()},
            "homotopy": [asdict(h) for h in self.homotopy],
            "out": self.out,
            "jobs": self.jobs,
            "seed": self.seed,
        }
        return d


_TOP_KEYS = {f.name for f in fields(RunConfig)}
_CONT_KEYS = {f.name for f in fields(ContinuationConfig)}


def _weight(v) -> WeightFunction:
    if isinstance(v, WeightFunction):
        return v
    if isinstance(v, str):
        return parse(v)
    if isinstance(v, dict):
        return from_dict(v)
    raise ConfigurationError(f"cannot interpret weight {v!r}")


def _floats(v, name) -> Tuple[float, ...]:
    if isinstance(v, (int, float)):
        return (float(v),)
    try:
        return tuple(float(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a number or a list of numbers") from None


def _ints(v, name) -> Tuple[int, ...]:
    if isinstance(v, int):
        return (v,)
    if isinstance(v, str):
        return parse_modes(v)
    try:
        out = tuple(int(x) for x in v)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be an integer list") from None
    return out


def from_mapping(d: Dict[str, Any], base: Optional[RunConfig] = None) -> RunConfig:
    """Build a RunConfig from a mapping (e.g. a parsed TOML file); unknown keys are errors."""
    extra = set(d) - _TOP_KEYS
    if extra:
        raise ConfigurationError(f"unknown configuration keys: {sorted(extra)}")
    cfg = base or RunConfig()
    kw: Dict[str, Any] = {}
    for key, v in d.items():
        if key in ("m", "a"):
            kw[key] = _weight(v)
        elif key == "mu":
            kw[key] = _floats(v, key)
        elif key == "modes":
            kw[key] = _ints(v, key)
        elif key == "lam_range":
            r = _floats(v, key)
            if len(r) != 2:
                raise ConfigurationError("lam_range needs two numbers")
            kw[key] = r
        elif key == "continuation":
            if not isinstance(v, dict):
                raise ConfigurationError("continuation must be a table")
            bad = set(v) - _CONT_KEYS
            if bad:
                raise ConfigurationError(f"unknown continuation keys: {sorted(bad)}")
            vv = dict(v)
            if "lam_window" in vv:
                vv["lam_window"] = _floats(vv["lam_window"], "lam_window")
            kw[key] = replace(cfg.continuation, **vv)
        elif key == "homotopy":
            try:
                kw[key] = tuple(HomotopySpec(**h) for h in v)
            except TypeError as exc:
                raise ConfigurationError(f"bad homotopy entry: {exc}") from None
        elif key in ("n_interior", "n_modes", "nonlinear_n_interior", "k", "jobs", "seed"):
            if isinstance(v, bool) or not isinstance(v, int):
                raise ConfigurationError(f"{key} must be an integer")
            kw[key] = v
        elif key == "step":
            kw[key] = float(v)
        else:
            kw[key] = v
    return replace(cfg, **kw)


def load(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return from_mapping(data)


def parse_modes(text: str) -> Tuple[int, ...]:
    """'1..5' -> (1, 2, 3, 4, 5); '2,3' -> (2, 3); '2' -> (2,)."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            out = tuple(range(int(lo), int(hi) + 1))
        else:
            out = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigurationError(f"cannot parse modes {text!r}") from None
    if not out:
        raise ConfigurationError(f"empty mode list {text!r}")
    return out


def parse_range(text: str) -> Tuple[float, float]:
    """'-200:200' -> (-200.0, 200.0)."""
    try:
        lo, hi = text.split(":")
        return float(lo), float(hi)
    except ValueError:
        raise ConfigurationError(f"cannot parse range {text!r}; expected lo:hi") from None


def parse_floats(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ConfigurationError(f"cannot parse number list {text!r}") from None
