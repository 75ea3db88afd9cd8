from typing import Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field

from app.models.common import IntVector, RationalVector


class PicData(BaseModel):
    """Ranks and classes read off the exact sequences 0 -> M -> Z^rays -> Pic(X) -> 0 and its U-analogue"""
    rank_pic_X: int = Field(ge=0)
    rank_pic_U: int = Field(ge=0)
    units_rank_r0: int = Field(ge=0)
    pic_U_torsion: IntVector = ()
    effective_generators: Tuple[IntVector, ...] = Field(description="Class of each boundary divisor in Pic(X) coordinates")
    rho: IntVector
    rho_class: IntVector = Field(description="Class of -(K_X + D) in Pic(X) coordinates")
    big: bool
    lambda_: Optional[RationalVector] = Field(default=None, alias="lambda", description="Strictly positive representative of the class of rho")
    character: Optional[RationalVector] = Field(default=None, description="m with lambda = rho + div(chi^m)")

    model_config = ConfigDict(frozen=True, populate_by_name=True)


class BigCheck(BaseModel):
    model_config = ConfigDict(frozen=True, populate_by_name=True)

    big: bool
    lambda_: Optional[RationalVector] = Field(default=None, alias="lambda")
    character: Optional[RationalVector] = None
