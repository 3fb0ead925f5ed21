"""Coefficient functions m(x) and a(x) on [0, 1]."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError

# fixed probe grid for symmetry and sign tests
PROBE = np.linspace(0.0, 1.0, 2001)

KINDS = ("sine", "paper-a", "constant", "tabulated")


def _paper_a(x):
    x = np.asarray(x, dtype=float)
    left = -0.2 * np.sin(np.pi / 0.2 * (0.2 - x))
    mid = np.sin(np.pi / 0.6 * (x - 0.2))
    right = -0.2 * np.sin(np.pi / 0.2 * (x - 0.8))
    return np.where(x <= 0.2, left, np.where(x <= 0.8, mid, right))


@dataclass(frozen=True)
class WeightFunction:
    """A continuous coefficient on [0, 1].

    ``kind`` is one of ``"sine"`` (sin(n pi x)), ``"paper-a"`` (the three-piece
    sign-changing weight, negative near the endpoints and positive on (0.2, 0.8)),
    ``"constant"`` or ``"tabulated"`` (linear interpolation of equispaced values
    including both endpoints).
    """

    kind: str
    n: int = 0
    value: float = 0.0
    values: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown weight kind {self.kind!r}")
        if self.kind == "sine" and (int(self.n) != self.n or self.n < 1):
            raise ConfigurationError("sine weight needs a positive integer frequency")
        if self.kind == "tabulated" and len(self.values) < 2:
            raise ConfigurationError("tabulated weight needs at least two values")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "sine":
            return np.sin(self.n * np.pi * x)
        if self.kind == "paper-a":
            return _paper_a(x)
        if self.kind == "constant":
            return np.full_like(x, self.value, dtype=float)
        grid = np.linspace(0.0, 1.0, len(self.values))
        return np.interp(x, grid, np.asarray(self.values, dtype=float))

    @property
    def label(self) -> str:
        if self.kind == "sine":
            return f"sine:{self.n}"
        if self.kind == "constant":
            return f"constant:{self.value!r}"
        if self.kind == "tabulated":
            return f"tabulated[{len(self.values)}]"
        return self.kind

    @property
    def odd_about_half(self) -> bool:
        """Structural symmetry w(1-x) = -w(x); checked numerically by is_odd_about_half."""
        if self.kind == "sine":
            return self.n % 2 == 0
        if self.kind == "constant":
            return self.value == 0.0
        if self.kind == "tabulated":
            v = np.asarray(self.values, dtype=float)
            return bool(np.all(v == -v[::-1]))
        return False

    @property
    def even_about_half(self) -> bool:
        if self.kind == "sine":
            return self.n % 2 == 1
        if self.kind in ("paper-a", "constant"):
            return True
        v = np.asarray(self.values, dtype=float)
        return bool(np.all(v == v[::-1]))

    def to_dict(self) -> dict:
        if self.kind == "sine":
            return {"type": "sine", "n": int(self.n)}
        if self.kind == "constant":
            return {"type": "constant", "value": float(self.value)}
        if self.kind == "tabulated":
            return {"type": "tabulated", "values": [float(v) for v in self.values]}
        return {"type": "paper-a"}


def sine(n: int) -> WeightFunction:
    return WeightFunction("sine", n=n)


def paper_a() -> WeightFunction:
    return WeightFunction("paper-a")


def constant(value: float) -> WeightFunction:
    return WeightFunction("constant", value=float(value))


def tabulated(values) -> WeightFunction:
    return WeightFunction("tabulated", values=tuple(float(v) for v in values))


def from_dict(d: dict) -> WeightFunction:
    """Build a weight from a config table such as ``{type="sine", n=2}``."""
    d = dict(d)
    kind = d.pop("type", None)
    allowed = {"sine": {"n"}, "paper-a": set(), "constant": {"value"}, "tabulated": {"values"}}
    if kind not in allowed:
        raise ConfigurationError(f"unknown weight type {kind!r}")
    extra = set(d) - allowed[kind]
    if extra:
        raise ConfigurationError(f"unexpected keys for {kind} weight: {sorted(extra)}")
    try:
        if kind == "sine":
            return sine(int(d["n"]))
        if kind == "constant":
            return constant(float(d["value"]))
        if kind == "tabulated":
            return tabulated(d["values"])
    except KeyError as exc:
        raise ConfigurationError(f"{kind} weight is missing {exc}") from None
    return paper_a()


def parse(text: str) -> WeightFunction:
    """Parse the short CLI form: ``sine:2``, ``paper-a``, ``constant:1.5``."""
    name, _, arg = text.strip().partition(":")
    try:
        if name == "sine":
            return sine(int(arg))
        if name == "constant":
            return constant(float(arg))
    except ValueError:
        raise ConfigurationError(f"bad weight argument in {text!r}") from None
    if name == "paper-a" and not arg:
        return paper_a()
    raise ConfigurationError(f"cannot parse weight {text!r}")


def evaluate(w: WeightFunction, x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x={x} outside [0, 1]")
    return float(w(x))


def is_odd_about_half(w: WeightFunction, tol: float) -> bool:
    return bool(np.max(np.abs(w(1.0 - PROBE) + w(PROBE))) <= tol)


def sign_change_witnesses(w: WeightFunction):
    """Interior probe points (x_minus, x_plus) with w < 0 and w > 0, or None.

    The most negative and most positive probe values are used.
    """
    x = PROBE[1:-1]
    v = w(x)
    if v.min() >= 0.0 or v.max() <= 0.0:
        return None
    return float(x[np.argmin(v)]), float(x[np.argmax(v)])
