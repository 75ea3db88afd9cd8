from fractions import Fraction
from math import gcd
from typing import Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.common import ExactRational, IntVector, to_fraction


def primitive_vector(values: Sequence) -> IntVector:
    """Scale a rational vector to the primitive integer vector on the same ray (zero stays zero)"""
    fractions = [to_fraction(v) for v in values]
    denominator = 1
    for f in fractions:
        denominator = denominator * f.denominator // gcd(denominator, f.denominator)
    integers = [int(f * denominator) for f in fractions]
    content = 0
    for x in integers:
        content = gcd(content, x)
    if content == 0:
        return tuple(integers)
    return tuple(x // content for x in integers)


class IntegerMatrix(BaseModel):
    """Exact integer matrix stored row-major; a map Z^cols -> Z^rows"""
    model_config = ConfigDict(frozen=True)

    entries: Tuple[IntVector, ...]

    @field_validator("entries")
    @classmethod
    def _rectangular(cls, rows):
        if not rows or not rows[0]:
            raise ValueError("matrix dimensions must be positive")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise ValueError("matrix rows must have equal length")
        return rows

    @classmethod
    def create(cls, rows: Sequence[Sequence[int]]) -> "IntegerMatrix":
        return cls(entries=tuple(tuple(int(x) for x in row) for row in rows))

    @classmethod
    def identity(cls, n: int) -> "IntegerMatrix":
        return cls.create([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    def transpose(self) -> "IntegerMatrix":
        return IntegerMatrix.create(list(zip(*self.entries)))

    def column(self, j: int) -> IntVector:
        return tuple(row[j] for row in self.entries)


class SmithDecomposition(BaseModel):
    """left * A * right = diag(invariants) with unimodular left and right"""
    model_config = ConfigDict(frozen=True)

    left: IntegerMatrix
    invariants: IntVector
    right: IntegerMatrix

    @property
    def rank(self) -> int:
        return sum(1 for d in self.invariants if d != 0)


class CokernelStructure(BaseModel):
    model_config = ConfigDict(frozen=True)

    rank: int = Field(ge=0, description="Free rank of the cokernel")
    torsion: IntVector = Field(default=(), description="Invariant factors greater than one")
    kernel_rank: int = Field(default=0, ge=0, description="Rank of the kernel of the map")


class RationalCone(BaseModel):
    """Closed convex cone spanned by primitive integer generators"""
    model_config = ConfigDict(frozen=True)

    ambient_dim: int = Field(ge=0)
    generators: Tuple[IntVector, ...] = ()

    @model_validator(mode="before")
    @classmethod
    def _normalize(cls, data):
        if not isinstance(data, dict):
            return data
        dim = data.get("ambient_dim")
        seen = []
        for g in data.get("generators", ()):
            if dim is not None and len(g) != dim:
                raise ValueError(f"generator {list(g)} does not live in dimension {dim}")
            p = primitive_vector(g)
            if any(p) and p not in seen:
                seen.append(p)
        data = dict(data)
        data["generators"] = tuple(seen)
        return data

    @classmethod
    def create(cls, ambient_dim: int, generators: Sequence[Sequence]) -> "RationalCone":
        return cls(ambient_dim=ambient_dim, generators=tuple(tuple(g) for g in generators))

    @classmethod
    def orthant(cls, n: int) -> "RationalCone":
        return cls.create(n, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def whole_space(cls, n: int) -> "RationalCone":
        gens = []
        for i in range(n):
            e = [0] * n
            e[i] = 1
            gens.append(list(e))
            e[i] = -1
            gens.append(list(e))
        return cls.create(n, gens)


class StrictInequality(BaseModel):
    """<coefficients, x> > bound"""
    model_config = ConfigDict(frozen=True)

    coefficients: Tuple[ExactRational, ...]
    bound: ExactRational = Fraction(0)

    def holds(self, point: Sequence[Fraction]) -> bool:
        return sum(a * x for a, x in zip(self.coefficients, point)) > self.bound


class MonteCarloEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimate: float
    stderr: float = Field(ge=0.0)
    samples: int = Field(ge=1)
    seed: int
    blocks: int = 1
    exact: Optional[ExactRational] = None

    def within(self, value: float, sigmas: float = 3.0) -> bool:
        return abs(self.estimate - value) <= sigmas * self.stderr + 1e-12 * max(1.0, abs(value))
