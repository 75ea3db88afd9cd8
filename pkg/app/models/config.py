from fractions import Fraction
from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models.common import ExactRational
from app.models.measures import MetricSpec, MonteCarloSpec, QuadratureSpec


class CensusSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    grid: Tuple[ExactRational, ...] = ()
    threads: Optional[int] = Field(default=None, gt=0, description="Census processes; None uses every core for large grids")

    @field_validator("grid")
    @classmethod
    def _positive_sorted(cls, grid):
        if any(b <= 0 for b in grid):
            raise ValueError("census bounds must be positive")
        return tuple(sorted(set(grid)))


class Tolerances(BaseModel):
    model_config = ConfigDict(frozen=True)

    theta_rel: float = Field(default=0.05, ge=0)
    exponent_required: bool = True


class RunConfig(BaseModel):
    """Run configuration; every field has a default except what a given subcommand needs"""
    model_config = ConfigDict(frozen=True)

    fan: Optional[str] = None
    metric: MetricSpec = MetricSpec()
    prime_bound: int = Field(default=100_000, ge=2)
    quadrature: QuadratureSpec = QuadratureSpec()
    mc: MonteCarloSpec = MonteCarloSpec()
    census: CensusSpec = CensusSpec()
    tolerances: Tolerances = Tolerances()

    def with_grid(self, grid) -> "RunConfig":
        census = self.census.model_copy(update={"grid": CensusSpec(grid=tuple(Fraction(b) for b in grid)).grid})
        return self.model_copy(update={"census": census})
