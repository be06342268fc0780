"""Arithmetic modes.

Arrays in rational mode are numpy ``object`` arrays holding
:class:`fractions.Fraction`; float mode uses ``float64``.  A computation
never mixes the two.
"""
from fractions import Fraction

import numpy as np

RATIONAL = "rational"
FLOAT = "float"
MODES = (RATIONAL, FLOAT)


def mode_of(arr):
    return RATIONAL if np.asarray(arr).dtype == object else FLOAT


def is_exact(arr):
    return np.asarray(arr).dtype == object


def parse_scalar(value):
    """Parse a JSON entry: a number or a ``"p/q"`` string."""
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, bool):
        raise TypeError(f"not a number: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    return float(value)


def as_array(values, mode):
    """Coerce nested numbers to an array in ``mode``."""
    arr = np.asarray(values, dtype=object)
    if mode == RATIONAL:
        out = np.empty(arr.shape, dtype=object)
        for idx, v in np.ndenumerate(arr):
            if isinstance(v, float):
                raise TypeError(
                    f"float entry {v!r} in rational mode; give it as a 'p/q' string"
                )
            out[idx] = Fraction(v)
        return out
    if mode == FLOAT:
        return arr.astype(float)
    raise ValueError(f"unknown arithmetic mode {mode!r}")


def parse_array(values):
    """Parse nested JSON numbers; the mode is rational iff no float appears."""
    arr = np.asarray(values, dtype=object)
    parsed = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        parsed[idx] = parse_scalar(v)
    if any(isinstance(v, float) for v in parsed.flat):
        return parsed.astype(float)
    return parsed


def to_mode(arr, mode):
    arr = np.asarray(arr)
    if mode == FLOAT:
        return arr.astype(float)
    if arr.dtype == object:
        return arr
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = Fraction(v)
    return out


def rationalize(arr, max_denominator=1000):
    """Round a float array to nearby fractions (for building exact test inputs)."""
    arr = np.asarray(arr, dtype=float)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = Fraction(v).limit_denominator(max_denominator)
    return out


def repr_float(v):
    return f"{float(v):.17g}"


def serialize_array(arr):
    """Nested lists with rationals as ``"p/q"`` strings and floats at 17 digits."""
    arr = np.asarray(arr)
    if arr.dtype == object:
        return np.vectorize(_frac_str, otypes=[object])(arr).tolist() if arr.size else arr.tolist()
    return np.vectorize(lambda x: float(repr_float(x)), otypes=[object])(arr).tolist() if arr.size else arr.tolist()


def serialize_scalar(v):
    """JSON form of one number: ``"p/q"`` for rationals, a float otherwise."""
    if isinstance(v, Fraction):
        return _frac_str(v)
    return float(repr_float(v))


def _frac_str(v):
    v = Fraction(v)
    return f"{v.numerator}/{v.denominator}"


def text_scalar(v):
    if isinstance(v, Fraction):
        return _frac_str(v) if v.denominator != 1 else str(v.numerator)
    return repr_float(v)
