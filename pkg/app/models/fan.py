from itertools import combinations
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models.common import IntVector

RaySet = Tuple[int, ...]


def face_closure(maximal_cones: Sequence[Sequence[int]]) -> Tuple[RaySet, ...]:
    """All faces of the given cones (including the zero cone), sorted by size then lexicographically"""
    faces = {()}
    for cone in maximal_cones:
        rays = tuple(sorted(set(int(i) for i in cone)))
        for k in range(1, len(rays) + 1):
            faces.update(combinations(rays, k))
    return tuple(sorted(faces, key=lambda c: (len(c), c)))


class Fan(BaseModel):
    """Simplicial fan in N = Z^dim; `cones` is closed under taking faces"""
    model_config = ConfigDict(frozen=True)

    dim: int = Field(ge=0)
    rays: Tuple[IntVector, ...]
    cones: Tuple[RaySet, ...]
    labels: Optional[Tuple[str, ...]] = None

    @model_validator(mode="after")
    def _shape(self):
        if any(len(r) != self.dim for r in self.rays):
            raise ValueError(f"every ray must have {self.dim} coordinates")
        if self.labels is not None and len(self.labels) != len(self.rays):
            raise ValueError("labels must match rays")
        return self

    @classmethod
    def create(
        cls,
        dim: int,
        rays: Sequence[Sequence[int]],
        maximal_cones: Sequence[Sequence[int]],
        labels: Optional[Sequence[str]] = None,
    ) -> "Fan":
        """Build a fan from its maximal cones; every ray is added as a one-dimensional cone"""
        singletons = [[i] for i in range(len(rays))]
        return cls(
            dim=dim,
            rays=tuple(tuple(int(x) for x in r) for r in rays),
            cones=face_closure(list(maximal_cones) + singletons),
            labels=tuple(labels) if labels is not None else None,
        )

    @property
    def ray_count(self) -> int:
        return len(self.rays)

    @property
    def maximal_cones(self) -> Tuple[RaySet, ...]:
        cone_set = set(self.cones)
        maximal = []
        for cone in self.cones:
            if not any(set(cone) < set(other) for other in cone_set if len(other) > len(cone)):
                maximal.append(cone)
        return tuple(maximal)

    def label(self, index: int) -> str:
        if self.labels is not None:
            return self.labels[index]
        return f"D{index}"

    def cones_of_dim(self, k: int) -> Tuple[RaySet, ...]:
        return tuple(c for c in self.cones if len(c) == k)

    def subfan(self, allowed: Sequence[int]) -> Tuple[RaySet, ...]:
        """Cones whose rays all lie in `allowed`"""
        allowed_set = set(allowed)
        return tuple(c for c in self.cones if set(c) <= allowed_set)


class FanDiagnostics(BaseModel):
    model_config = ConfigDict(frozen=True)

    smooth: bool
    complete: bool
    messages: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.smooth and self.complete and not self.messages


class ToricPair(BaseModel):
    """A fan together with the partition of its rays into removed (A_D) and kept (A_U)"""
    model_config = ConfigDict(frozen=True)

    name: str = "pair"
    fan: Fan
    removed: RaySet = ()

    @field_validator("removed")
    @classmethod
    def _sorted_distinct(cls, removed):
        if len(set(removed)) != len(removed):
            raise ValueError("removed rays must be distinct")
        return tuple(sorted(removed))

    @model_validator(mode="after")
    def _partition(self):
        if any(i < 0 or i >= self.fan.ray_count for i in self.removed):
            raise ValueError("removed ray index out of range")
        return self

    @property
    def kept(self) -> RaySet:
        removed = set(self.removed)
        return tuple(i for i in range(self.fan.ray_count) if i not in removed)

    @property
    def dim(self) -> int:
        return self.fan.dim

    @property
    def is_rational_mode(self) -> bool:
        return not self.removed

    @property
    def rho(self) -> IntVector:
        removed = set(self.removed)
        return tuple(0 if i in removed else 1 for i in range(self.fan.ray_count))

    def kept_subfan(self) -> Tuple[RaySet, ...]:
        return self.fan.subfan(self.kept)

    def summary(self) -> Dict[str, List]:
        return {
            "removed": [self.fan.label(i) for i in self.removed],
            "kept": [self.fan.label(i) for i in self.kept],
        }
