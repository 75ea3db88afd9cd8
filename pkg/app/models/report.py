from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.models.census import FitResult, TorusPoint
from app.models.clemens import ClemensComplex, ExponentReport
from app.models.common import ExactRational
from app.models.fan import FanDiagnostics, RaySet
from app.models.divisor import PicData


class ObstructionReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    witness: TorusPoint
    extra_witnesses: Tuple[TorusPoint, ...] = ()
    obstructed: bool = False


class FaceTerm(BaseModel):
    model_config = ConfigDict(frozen=True)

    face: RaySet
    labels: Tuple[str, ...] = ()
    chi_value: ExactRational
    finite_volume: float
    arch_volume: float
    arch_error: float = 0.0
    theta: float


class ErrorBudget(BaseModel):
    model_config = ConfigDict(frozen=True)

    euler_tail: float = 0.0
    quadrature: float = 0.0
    monte_carlo: float = 0.0

    @property
    def total(self) -> float:
        return self.euler_tail + self.quadrature + self.monte_carlo


class ThetaReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair_name: str
    mode: str = Field(description="RATIONAL when D is empty, INTEGRAL otherwise")
    metric: str
    exponent: ExponentReport
    faces: Tuple[FaceTerm, ...]
    theta_total: float = Field(gt=0)
    error: ErrorBudget
    leading_constant: float = Field(description="theta / (b - 1)!")
    prime_bound: int
    peyre_alpha: Optional[ExactRational] = None
    assumptions: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = ()


class CheckResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    passed: bool
    detail: str = ""


class Verdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair_name: str
    passed: bool
    checks: Tuple[CheckResult, ...]
    empirical_b: int
    relative_error: float
    fit: FitResult
    predicted_coefficient: float


class AnalysisReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair_name: str
    dim: int
    rays: Tuple[Tuple[int, ...], ...]
    removed: Tuple[str, ...]
    maximal_cones: Tuple[RaySet, ...]
    diagnostics: FanDiagnostics
    pic: PicData
    clemens: ClemensComplex
    exponent: ExponentReport
    assumptions: Tuple[str, ...] = ()
    warnings: Tuple[str, ...] = ()


class OracleComparison(BaseModel):
    model_config = ConfigDict(frozen=True)

    name: str
    exact: float
    oracle: float
    stderr: float = 0.0
    agrees: bool
    detail: str = ""


class OracleReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair_name: str
    seed: int
    comparisons: Tuple[OracleComparison, ...]

    @property
    def passed(self) -> bool:
        return all(c.agrees for c in self.comparisons)
