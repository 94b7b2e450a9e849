"""Exact-number plumbing shared by the whole package.

Two arithmetic modes exist:

* ``"rational"`` (default): every quantity is a :class:`fractions.Fraction`.
  All comparisons against thresholds are exact; boundary cases such as
  ``action * exposure == tau`` are decided with no epsilon.
* ``"float"``: plain binary floats, intended for large Monte Carlo runs.
  Comparisons stay strict with no epsilon, so boundary-sensitive parameter
  choices belong in rational mode.

Rational values are parsed from strings only ("3/10", "0.3", "2"), never from
binary floats, so a config file can never smuggle in a rounding error.
"""

from __future__ import annotations

import math
from decimal import Decimal, ROUND_HALF_UP
from fractions import Fraction
from typing import Union

Number = Union[Fraction, float]

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)


class ValidationError(ValueError):
    """Bad configuration or malformed input."""


def parse_exact(value) -> Fraction:
    """Parse a value into an exact Fraction.

    Accepts ints, Fractions, and strings ("p/q", decimal, integer).  Binary
    floats are rejected: 0.3 as a float literal is not 3/10, and silently
    accepting it would poison every exact comparison downstream.
    """
    if isinstance(value, bool):
        raise ValidationError(f"expected a number, got {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse {value!r} as an exact number") from exc
    if isinstance(value, float):
        raise ValidationError(
            f"refusing to parse float {value!r} in rational mode; pass it as a string"
        )
    raise ValidationError(f"cannot parse {value!r} as a number")


def parse_number(value, mode: str) -> Number:
    if isinstance(value, bool):
        raise ValidationError(f"expected a number, got {value!r}")
    if mode == RATIONAL:
        return parse_exact(value)
    if mode == FLOAT:
        if isinstance(value, (Fraction, int)):
            return float(value)
        if isinstance(value, float):
            return value
        if isinstance(value, str):
            return float(Fraction(value.strip()))
        raise ValidationError(f"cannot parse {value!r} as a number")
    raise ValidationError(f"unknown arithmetic mode {mode!r}")


def format_exact(x: Number) -> str:
    """Canonical string for a number: lowest-terms "p/q", or "p" for integers."""
    if isinstance(x, float):
        return repr(x)
    f = Fraction(x)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


def decimal_str(x: Number, places: int = 3) -> str:
    """Fixed-point decimal rendering with half-up rounding.

    Half-up matters for report regression: 0.0005 renders as "0.001".
    """
    if isinstance(x, float):
        d = Decimal(repr(x))
    else:
        f = Fraction(x)
        d = Decimal(f.numerator) / Decimal(f.denominator)
    q = Decimal(1).scaleb(-places)
    return str(d.quantize(q, rounding=ROUND_HALF_UP))


def exact_ceil(x: Fraction) -> int:
    return math.ceil(x)


def exact_floor(x: Fraction) -> int:
    return math.floor(x)


def _iroot(value: int, k: int) -> int | None:
    """Exact integer k-th root of a non-negative int, or None if not a power."""
    if value < 0 or k <= 0:
        return None
    if value in (0, 1) or k == 1:
        return value
    if k == 2:
        r = math.isqrt(value)
        return r if r * r == value else None
    r = round(value ** (1.0 / k))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == value:
            return cand
    return None


def exact_pow(x: Fraction, exponent: Fraction) -> Fraction:
    """x ** exponent for x in [0, 1], exactly, when the result is rational.

    Raises ValidationError when the result is irrational (e.g. sqrt(1/2));
    such utility curves need float mode.
    """
    if exponent.denominator == 1:
        return x ** int(exponent)
    p, q = exponent.numerator, exponent.denominator
    num, den = x.numerator**p, x.denominator**p
    rn, rd = _iroot(num, q), _iroot(den, q)
    if rn is None or rd is None:
        raise ValidationError(
            f"({x})**({exponent}) is irrational; evaluate this curve in float mode"
        )
    return Fraction(rn, rd)
