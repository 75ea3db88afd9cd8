from enum import Enum
from fractions import Fraction
from typing import Dict, Optional, Tuple

from pydantic import AliasChoices, BaseModel, ConfigDict, Field, model_validator

from app.models.common import ExactRational, IntVector, RationalVector
from app.models.fan import RaySet


class MetricMode(str, Enum):
    CANONICAL = "CANONICAL"
    SMOOTHED = "SMOOTHED"


class MetricSpec(BaseModel):
    """Archimedean metric on the boundary line bundles; finite places always use the model metric"""
    model_config = ConfigDict(frozen=True)

    mode: MetricMode = MetricMode.CANONICAL
    k: Optional[float] = Field(default=None, gt=0, description="Sharpness of the log-sum-exp smoothing")

    @model_validator(mode="after")
    def _k_for_smoothed(self):
        if self.mode == MetricMode.SMOOTHED and self.k is None:
            raise ValueError("SMOOTHED metric requires k")
        return self

    @classmethod
    def canonical(cls) -> "MetricSpec":
        return cls(mode=MetricMode.CANONICAL)

    @classmethod
    def smoothed(cls, k: float) -> "MetricSpec":
        return cls(mode=MetricMode.SMOOTHED, k=k)

    @property
    def is_canonical(self) -> bool:
        return self.mode == MetricMode.CANONICAL

    def describe(self) -> str:
        return "CANONICAL" if self.is_canonical else f"SMOOTHED({self.k:g})"


class QuadratureSpec(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    rel_tol: float = Field(default=1e-8, gt=0)
    # Passed to scipy as `limit`: the subinterval budget of each nested QUADPACK call, not an evaluation count
    subinterval_limit: int = Field(
        default=200, gt=0, validation_alias=AliasChoices("subinterval_limit", "max_evals"),
        description="Adaptive subintervals per quadrature level; `max_evals` is accepted as an alias",
    )


class MonteCarloSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    samples: int = Field(default=100_000, gt=0)
    seed: Optional[int] = Field(default=None, ge=0)
    blocks: int = Field(default=8, gt=0)


class LocalDensity(BaseModel):
    """Local height integral at p; `value` against the normalized Haar measure, `tamagawa_value` against |dx|"""
    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=2)
    s: RationalVector
    value: Optional[ExactRational] = None
    value_float: float = Field(gt=0)
    tamagawa_value: Optional[ExactRational] = None
    tamagawa_float: float = Field(gt=0)


class ShellDensity(BaseModel):
    model_config = ConfigDict(frozen=True)

    p: int = Field(ge=2)
    radius: int = Field(ge=0)
    value: float
    exact: Optional[ExactRational] = None
    terms: int = Field(ge=0)


class EulerProductResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: float = Field(gt=0)
    prime_bound: int = Field(ge=2)
    tail_bound: float = Field(ge=0)
    constant: float = Field(ge=0, description="C with |log factor_p| <= C/p^2 beyond the prime bound")
    second_order: ExactRational = Fraction(0)
    polynomial: Tuple[int, ...] = Field(default=(1,), description="Coefficients of g(x), ascending, with factor g(x)(1-x)^e at x = 1/p")
    exponent: int = 0
    factors: Optional[Dict[int, float]] = None

    @property
    def interval(self) -> Tuple[float, float]:
        from math import exp
        return self.value * exp(-self.tail_bound), self.value * exp(self.tail_bound)


class ResidueMeasureResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    face: RaySet
    value: float = Field(gt=0)
    est_error: float = Field(ge=0)
    metric: MetricSpec
    charts: int = Field(ge=1)
    closed_form: Optional[float] = None


class TubeOracleResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    face: RaySet
    epsilons: Tuple[float, ...]
    estimates: Tuple[float, ...]
    stderrs: Tuple[float, ...]
    extrapolated: float
    stderr: float = Field(ge=0)
    samples: int
    seed: int


class ChiQuery(BaseModel):
    """Cone Lambda_A = orthant in V_A, the image of M in V_A (columns), and the evaluation point"""
    model_config = ConfigDict(frozen=True)

    coordinates: RaySet = Field(description="Ray index behind each coordinate of V_A")
    sublattice: Tuple[IntVector, ...] = Field(description="Rows indexed by coordinates, columns by a basis of M")
    point: RationalVector

    @model_validator(mode="after")
    def _shapes(self):
        if len(self.sublattice) != len(self.coordinates) or len(self.point) != len(self.coordinates):
            raise ValueError("sublattice rows and point must match the coordinates of V_A")
        if any(x <= 0 for x in self.point):
            raise ValueError("evaluation point must be strictly positive")
        return self

    @property
    def rank(self) -> int:
        return len(self.coordinates)
