"""Parametric latency functions.

Every kind works on plain Python numbers. Integer and ``Fraction`` inputs stay
exact (except for the logarithm in the M/M/1 integral), which lets gadget
fixtures be checked with zero tolerance while solvers run on floats.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from numbers import Real
from typing import Any

from .errors import DomainError, ValidationError

Number = Real

# Evaluations closer than this to an M/M/1 pole are refused.
POLE_MARGIN = 1e-12


def exact(x: Any) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


def to_number(x: Any) -> Number:
    """Coerce JSON-ish input to a number, keeping ints and rationals exact."""
    if isinstance(x, bool):
        raise ValidationError(f"expected a number, got {x!r}")
    if isinstance(x, (int, Fraction, float)):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse number {x!r}") from exc
    if isinstance(x, Real):
        return float(x)
    raise ValidationError(f"expected a number, got {type(x).__name__}")


def rational(x: Any) -> Fraction:
    """Exact rational for ``x``; floats go through their shortest decimal repr."""
    x = to_number(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValidationError(f"non-finite value {x!r}")
        return Fraction(repr(x))
    return Fraction(x)


def _div(num: Number, den: int) -> Number:
    if exact(num):
        return Fraction(num, den)
    return num / den


def _check_x(x: Number) -> None:
    if x < 0:
        raise DomainError(f"load {x!r} is negative")


class LatencyFn(ABC):
    """A standard latency function: nonnegative, nondecreasing, differentiable."""

    kind: str = ""

    @abstractmethod
    def value(self, x: Number) -> Number: ...

    @abstractmethod
    def derivative(self, x: Number) -> Number: ...

    @abstractmethod
    def integral(self, x: Number) -> Number:
        """Return the integral of the latency from 0 to ``x``."""

    @abstractmethod
    def params(self) -> dict[str, Any]: ...

    @abstractmethod
    def to_float(self) -> "LatencyFn": ...

    @property
    def degree(self) -> int | None:
        """Polynomial degree, or ``None`` for non-polynomial kinds."""
        return None

    def marginal(self, x: Number) -> Number:
        return self.value(x) + x * self.derivative(x)

    def __call__(self, x: Number) -> Number:
        return self.value(x)

    @property
    def is_exact(self) -> bool:
        return all(_all_exact(v) for v in self.params().values())


def _all_exact(v: Any) -> bool:
    if isinstance(v, (list, tuple)):
        return all(exact(c) for c in v)
    return exact(v)


def _nonneg(name: str, v: Any) -> Number:
    v = to_number(v)
    if isinstance(v, float) and not math.isfinite(v):
        raise ValidationError(f"{name} must be finite")
    if v < 0:
        raise ValidationError(f"{name} must be nonnegative, got {v!r}")
    return v


@dataclass(frozen=True)
class Polynomial(LatencyFn):
    """``a_0 + a_1 x + ... + a_p x^p`` with all coefficients nonnegative."""

    coefficients: tuple[Number, ...]
    kind = "polynomial"

    def __post_init__(self) -> None:
        coeffs = tuple(_nonneg(f"a_{i}", c) for i, c in enumerate(self.coefficients))
        if not coeffs:
            raise ValidationError("polynomial needs at least one coefficient")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def degree(self) -> int:
        d = len(self.coefficients) - 1
        while d > 0 and self.coefficients[d] == 0:
            d -= 1
        return d

    def value(self, x: Number) -> Number:
        _check_x(x)
        acc: Number = 0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def derivative(self, x: Number) -> Number:
        _check_x(x)
        acc: Number = 0
        for i in range(len(self.coefficients) - 1, 0, -1):
            acc = acc * x + i * self.coefficients[i]
        return acc

    def integral(self, x: Number) -> Number:
        _check_x(x)
        return sum(_div(c * x ** (i + 1), i + 1) for i, c in enumerate(self.coefficients))

    def params(self) -> dict[str, Any]:
        return {"coefficients": list(self.coefficients)}

    def to_float(self) -> "Polynomial":
        return Polynomial(tuple(float(c) for c in self.coefficients))


@dataclass(frozen=True)
class Affine(LatencyFn):
    """``a x + b``."""

    a: Number
    b: Number
    kind = "affine"

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", _nonneg("a", self.a))
        object.__setattr__(self, "b", _nonneg("b", self.b))

    @property
    def degree(self) -> int:
        return 1 if self.a != 0 else 0

    def value(self, x: Number) -> Number:
        _check_x(x)
        return self.a * x + self.b

    def derivative(self, x: Number) -> Number:
        _check_x(x)
        return self.a

    def integral(self, x: Number) -> Number:
        _check_x(x)
        return _div(self.a * x * x, 2) + self.b * x

    def params(self) -> dict[str, Any]:
        return {"a": self.a, "b": self.b}

    def to_float(self) -> "Affine":
        return Affine(float(self.a), float(self.b))


@dataclass(frozen=True)
class Constant(LatencyFn):
    """Load-independent latency ``c``."""

    c: Number
    kind = "constant"

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", _nonneg("c", self.c))

    @property
    def degree(self) -> int:
        return 0

    def value(self, x: Number) -> Number:
        _check_x(x)
        return self.c

    def derivative(self, x: Number) -> Number:
        _check_x(x)
        return 0

    def integral(self, x: Number) -> Number:
        _check_x(x)
        return self.c * x

    def params(self) -> dict[str, Any]:
        return {"c": self.c}

    def to_float(self) -> "Constant":
        return Constant(float(self.c))


@dataclass(frozen=True)
class MM1(LatencyFn):
    """M/M/1 queueing delay ``1 / (u - x)`` on ``0 <= x < u``."""

    u: Number
    kind = "mm1"

    def __post_init__(self) -> None:
        u = _nonneg("u", self.u)
        if u == 0:
            raise ValidationError("M/M/1 capacity must be positive")
        object.__setattr__(self, "u", u)

    def _slack(self, x: Number) -> Number:
        _check_x(x)
        slack = self.u - x
        if slack <= POLE_MARGIN:
            raise DomainError(f"load {x!r} at or beyond the M/M/1 pole u={self.u!r}")
        return slack

    def value(self, x: Number) -> Number:
        slack = self._slack(x)
        return 1 / slack if not exact(slack) else Fraction(1) / slack

    def derivative(self, x: Number) -> Number:
        slack = self._slack(x)
        return (Fraction(1) if exact(slack) else 1.0) / (slack * slack)

    def marginal(self, x: Number) -> Number:
        slack = self._slack(x)
        return (Fraction(self.u) if exact(slack) and exact(self.u) else self.u) / (slack * slack)

    def integral(self, x: Number) -> Number:
        slack = self._slack(x)
        return math.log(float(self.u) / float(slack))

    def params(self) -> dict[str, Any]:
        return {"u": self.u}

    def to_float(self) -> "MM1":
        return MM1(float(self.u))


KINDS: dict[str, type[LatencyFn]] = {
    "polynomial": Polynomial,
    "affine": Affine,
    "constant": Constant,
    "mm1": MM1,
}


def latency_from_params(kind: str, params: dict[str, Any]) -> LatencyFn:
    """Build a latency function from its kind tag and parameter mapping."""
    if kind not in KINDS:
        raise ValidationError(f"unknown latency kind {kind!r}; expected one of {sorted(KINDS)}")
    try:
        if kind == "polynomial":
            return Polynomial(tuple(to_number(c) for c in params["coefficients"]))
        if kind == "affine":
            return Affine(to_number(params["a"]), to_number(params["b"]))
        if kind == "constant":
            return Constant(to_number(params["c"]))
        return MM1(to_number(params["u"]))
    except KeyError as exc:
        raise ValidationError(f"latency kind {kind!r} is missing parameter {exc.args[0]!r}") from exc
    except TypeError as exc:
        raise ValidationError(f"bad parameters for latency kind {kind!r}: {exc}") from exc


def eval_latency(fn: LatencyFn, x: Number) -> Number:
    return fn.value(x)


def eval_marginal(fn: LatencyFn, x: Number) -> Number:
    return fn.marginal(x)
