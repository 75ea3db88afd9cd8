from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.models.fan import RaySet


class ClemensComplex(BaseModel):
    """Analytic Clemens complex at the real place: nonempty subsets of A_D spanning a cone"""
    model_config = ConfigDict(frozen=True)

    faces: Tuple[RaySet, ...] = ()
    max_faces: Tuple[RaySet, ...] = ((),)
    dim: int = Field(default=-1, ge=-1)

    @property
    def archimedean_contribution(self) -> int:
        """The summand 1 + dim, zero for the empty complex"""
        return 1 + self.dim


class ExponentReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    b_pole: int
    b_theorem: int
    consistent: bool
    units_rank_r0: int = Field(ge=0)
    clemens_dim: int = Field(ge=-1)
    warnings: Tuple[str, ...] = ()

    @property
    def b(self) -> int:
        """Exponent used for the asymptotic shape"""
        return self.b_pole
