"""
Shared field types for exact arithmetic in models
"""
from fractions import Fraction
from typing import Annotated, Any, Tuple

from pydantic import PlainSerializer, PlainValidator, WithJsonSchema


def to_fraction(value: Any) -> Fraction:
    """Coerce ints, decimal/ratio strings and Fractions; reject floats that are not exact"""
    if isinstance(value, bool):
        raise ValueError("booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"not a rational number: {value!r}") from e
    if isinstance(value, float):
        if value != value or value in (float("inf"), float("-inf")):
            raise ValueError("non-finite float")
        return Fraction(value)
    if hasattr(value, "p") and hasattr(value, "q"):
        # sympy Rational / Integer
        return Fraction(int(value.p), int(value.q))
    raise ValueError(f"cannot interpret {value!r} as a rational number")


ExactRational = Annotated[
    Fraction,
    PlainValidator(to_fraction),
    PlainSerializer(lambda f: str(f), return_type=str, when_used="json"),
    WithJsonSchema({"type": "string", "pattern": r"^-?\d+(/\d+)?$"}),
]

IntVector = Tuple[int, ...]
RationalVector = Tuple[ExactRational, ...]
