from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import sympy
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.models.common import ExactRational, IntVector


class TorusPoint(BaseModel):
    """Point of T(Q) stored as signs plus valuation vectors at the primes of its support"""
    model_config = ConfigDict(frozen=True)

    signs: IntVector
    exponents: Dict[int, IntVector] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _consistent(self):
        d = len(self.signs)
        if any(s not in (1, -1) for s in self.signs):
            raise ValueError("signs must be +1 or -1")
        for p, v in self.exponents.items():
            if len(v) != d:
                raise ValueError(f"valuation vector at {p} must have {d} entries")
            if not sympy.isprime(p):
                raise ValueError(f"{p} is not prime")
        return self

    @classmethod
    def from_rationals(cls, coordinates: Sequence) -> "TorusPoint":
        values = [Fraction(c) for c in coordinates]
        if any(v == 0 for v in values):
            raise ValueError("torus points have nonzero coordinates")
        d = len(values)
        exponents: Dict[int, List[int]] = {}
        for i, v in enumerate(values):
            for p, e in sympy.factorint(abs(v.numerator)).items():
                exponents.setdefault(int(p), [0] * d)[i] += int(e)
            for p, e in sympy.factorint(v.denominator).items():
                exponents.setdefault(int(p), [0] * d)[i] -= int(e)
        return cls(
            signs=tuple(1 if v > 0 else -1 for v in values),
            exponents={p: tuple(vec) for p, vec in sorted(exponents.items()) if any(vec)},
        )

    @classmethod
    def identity(cls, d: int) -> "TorusPoint":
        return cls(signs=(1,) * d)

    @property
    def dim(self) -> int:
        return len(self.signs)

    def valuation(self, p: int) -> IntVector:
        return self.exponents.get(p, (0,) * self.dim)

    def to_rationals(self) -> Tuple[Fraction, ...]:
        coords = [Fraction(s) for s in self.signs]
        for p, v in self.exponents.items():
            for i, e in enumerate(v):
                coords[i] *= Fraction(p) ** e
        return tuple(coords)


class CensusSample(BaseModel):
    model_config = ConfigDict(frozen=True)

    bound: ExactRational
    count: int = Field(ge=0)


class FitResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    b: int = Field(ge=1)
    coefficient: float
    stderr: float = Field(ge=0)
    coefficients: Tuple[float, ...] = Field(description="Fitted coefficients of (log B)^(b-1), ..., 1")
    residual_norm: float = Field(ge=0)
    best_b: int = Field(ge=1)
    criteria: Dict[int, float] = Field(default_factory=dict, description="Information criterion per candidate exponent")
    window_start: float = Field(default=1.0, description="Smallest bound used by the fit")
    samples_used: int = Field(default=0, ge=0)
    extra_power_criterion: Optional[float] = Field(
        default=None, description="Criterion of b+1 on the same window; diagnostic only, never selected")


class CensusResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair_name: str
    metric: str
    samples: Tuple[CensusSample, ...]
    fit: Optional[FitResult] = None
    nodes_visited: int = 0

    @model_validator(mode="after")
    def _monotone(self):
        ordered = sorted(self.samples, key=lambda s: s.bound)
        for a, b in zip(ordered, ordered[1:]):
            if b.count < a.count:
                raise ValueError("census counts must be nondecreasing in B")
        return self

    def count_at(self, bound) -> int:
        target = Fraction(bound)
        for sample in self.samples:
            if sample.bound == target:
                return sample.count
        raise KeyError(bound)

    def csv_rows(self) -> List[str]:
        rows = []
        for sample in sorted(self.samples, key=lambda s: s.bound):
            b = sample.bound
            shown = str(b.numerator) if b.denominator == 1 else format(float(b), "g")
            rows.append(f"{shown},{sample.count}")
        return rows


class EquidistributionCell(BaseModel):
    model_config = ConfigDict(frozen=True)

    orthant: IntVector
    unit_at_p: bool
    observed: int = Field(ge=0)
    empirical_mass: float
    predicted_mass: float


class EquidistributionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    bound: ExactRational
    p: int
    total: int = Field(ge=1)
    cells: Tuple[EquidistributionCell, ...]
    chi_square: float = Field(ge=0)
    degrees_of_freedom: int = Field(ge=0)
