from .common import ExactRational
from .lattice import IntegerMatrix, SmithDecomposition, CokernelStructure, RationalCone, StrictInequality, MonteCarloEstimate
from .fan import Fan, FanDiagnostics, ToricPair
from .divisor import PicData, BigCheck
from .clemens import ClemensComplex, ExponentReport
from .measures import (
    MetricMode,
    MetricSpec,
    QuadratureSpec,
    MonteCarloSpec,
    LocalDensity,
    ShellDensity,
    EulerProductResult,
    ResidueMeasureResult,
    TubeOracleResult,
    ChiQuery,
)
from .census import TorusPoint, CensusSample, CensusResult, FitResult, EquidistributionReport
from .report import ThetaReport, FaceTerm, Verdict, AnalysisReport, ObstructionReport, OracleReport
from .config import RunConfig, CensusSpec, Tolerances
