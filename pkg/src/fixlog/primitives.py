"""Builtin primitive operations over interpreted constants.

Arithmetic wraps to 64-bit two's complement.  Division and remainder truncate
toward zero; dividing by zero yields ``None``, which fails a query match and
aborts an action.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

_MASK = 1 << 64
_HALF = 1 << 63


def wrap(x: int) -> int:
    return (x + _HALF) % _MASK - _HALF


def _div(a, b):
    if b == 0:
        return None
    q = abs(a) // abs(b)
    return wrap(q if (a < 0) == (b < 0) else -q)


def _rem(a, b):
    if b == 0:
        return None
    q = _div(a, b)
    return wrap(a - b * q)


def _sub(*args):
    if len(args) == 1:
        return wrap(-args[0])
    return wrap(args[0] - args[1])


@dataclass(frozen=True)
class Primitive:
    name: str
    arities: tuple[int, ...]
    # "i64": every argument is an i64; "same": all arguments share one sort
    inputs: str
    # "i64" for arithmetic, "bool" for predicates usable only as query guards
    output: str
    fn: Callable


PRIMITIVES: dict[str, Primitive] = {
    p.name: p
    for p in [
        Primitive("+", (2,), "i64", "i64", lambda a, b: wrap(a + b)),
        Primitive("-", (1, 2), "i64", "i64", _sub),
        Primitive("*", (2,), "i64", "i64", lambda a, b: wrap(a * b)),
        Primitive("/", (2,), "i64", "i64", _div),
        Primitive("%", (2,), "i64", "i64", _rem),
        Primitive("min", (2,), "i64", "i64", min),
        Primitive("max", (2,), "i64", "i64", max),
        Primitive("<", (2,), "i64", "bool", lambda a, b: a < b),
        Primitive(">", (2,), "i64", "bool", lambda a, b: a > b),
        Primitive("<=", (2,), "i64", "bool", lambda a, b: a <= b),
        Primitive(">=", (2,), "i64", "bool", lambda a, b: a >= b),
        Primitive("!=", (2,), "same", "bool", lambda a, b: a != b),
        Primitive("=", (2,), "same", "bool", lambda a, b: a == b),
    ]
}
