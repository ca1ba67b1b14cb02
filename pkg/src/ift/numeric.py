"""Numeric-mode helpers: exact rationals vs. 64-bit floats.

All inference kernels in this package are written once against plain
arithmetic (+, *, /, comparisons) and run in either of two modes:

* rational mode — values are :class:`fractions.Fraction`; results are exact
  and tests compare with ``==``,
* float mode — values are ``float``; results carry the usual rounding and
  tests compare within ``FLOAT_TOL``.

The mode of a value collection is determined by its element types and must
be uniform (mixing Fractions and floats in one tree/table is rejected).
Python ints and numeric strings ("p/q") canonicalize to Fraction; floats
stay floats.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

from .errors import FormatError

Number = Union[Fraction, float]

#: Per-entry comparison tolerance used everywhere in float mode.
FLOAT_TOL = 1e-12

RATIONAL = "rational"
FLOAT = "float"


def canonical_number(value) -> Number:
    """Canonicalize a user-supplied numeric value.

    int / Fraction / "p/q" string -> Fraction (exact); float -> float.
    """
    if isinstance(value, bool):
        raise FormatError(f"boolean is not a numeric value: {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return value
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"cannot parse rational {value!r}: {exc}") from None
    raise FormatError(f"unsupported numeric type: {type(value).__name__}")


def mode_of(values) -> str:
    """Return RATIONAL or FLOAT for a uniform collection (raises on a mix).

    An empty collection defaults to rational mode.
    """
    has_exact = any(isinstance(v, Fraction) for v in values)
    has_float = any(isinstance(v, float) for v in values)
    if has_exact and has_float:
        raise FormatError("mixed numeric modes: values contain both rationals and floats")
    return FLOAT if has_float else RATIONAL


def zero_of(mode: str) -> Number:
    return 0.0 if mode == FLOAT else Fraction(0)


def one_of(mode: str) -> Number:
    return 1.0 if mode == FLOAT else Fraction(1)


def numbers_equal(a: Number, b: Number, mode: str) -> bool:
    """Mode-aware equality: exact for rationals, within FLOAT_TOL for floats."""
    if mode == RATIONAL:
        return a == b
    return abs(float(a) - float(b)) <= FLOAT_TOL


def to_json_value(x: Number):
    """Serialize a number for JSON: Fractions as "p/q" strings, floats as-is."""
    if isinstance(x, Fraction):
        return str(x)
    return x


def parse_json_number(raw) -> Number:
    """Parse a JSON-decoded numeric field.

    Strings are exact rationals; JSON numbers (int or real) are floats, per
    the file-format contract that rational files spell every value "p/q".
    """
    if isinstance(raw, bool):
        raise FormatError(f"boolean is not a numeric value: {raw!r}")
    if isinstance(raw, str):
        try:
            return Fraction(raw)
        except (ValueError, ZeroDivisionError) as exc:
            raise FormatError(f"cannot parse rational {raw!r}: {exc}") from None
    if isinstance(raw, (int, float)):
        return float(raw)
    raise FormatError(f"unsupported JSON numeric value: {raw!r}")
