"""
Models for probe optimisation
"""

from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

from app.config import settings


class OptConfig(BaseModel):
    """Configuration of the global + local probe search"""
    model_config = ConfigDict(frozen=True)

    nbar: float = Field(..., ge=0.0, description="Mean photon number constraint")
    gamma_cap: float = Field(..., gt=0.0, lt=1.0, description="TPA parameter the QFI is maximised at")
    nmax: int = Field(settings.OPT_NMAX, ge=1, description="Largest Fock index in the probe")
    population: int = Field(settings.OPT_POPULATION, ge=4, description="Evolution-strategy population size")
    generations: int = Field(settings.OPT_GENERATIONS, ge=0, description="Evolution-strategy generations")
    mutation_sigma: float = Field(settings.OPT_MUTATION_SIGMA, gt=0.0, description="Initial mutation scale")
    mutation_decay: float = Field(settings.OPT_MUTATION_DECAY, gt=0.0, le=1.0, description="Geometric decay per generation")
    local_iters: int = Field(settings.OPT_LOCAL_ITERS, ge=0, description="Projected-gradient iterations")
    local_step: float = Field(settings.OPT_LOCAL_STEP, gt=0.0, description="Initial projected-gradient step")
    seed: int = Field(settings.OPT_SEED, ge=0, lt=2**64, description="Root seed of the restart streams")
    restarts: int = Field(settings.OPT_RESTARTS, ge=1, description="Independent restarts")

    @model_validator(mode="after")
    def check_feasible(self) -> "OptConfig":
        if self.nbar > self.nmax:
            raise ValueError(f"nbar {self.nbar} exceeds nmax {self.nmax}")
        return self


class LocalOptimum(BaseModel):
    """Runner-up population vector found by a restart"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    populations: np.ndarray = Field(..., description="Population vector p_j")
    qfi: float = Field(..., description="QFI attained")

    @field_validator("populations", mode="before")
    @classmethod
    def coerce(cls, v) -> np.ndarray:
        array = np.array(v, dtype=float)
        array.setflags(write=False)
        return array

    @field_serializer("populations")
    def serialize_populations(self, v: np.ndarray) -> list:
        return v.tolist()


class OptResult(BaseModel):
    """Optimised DV probe at one (nbar, gamma_cap)"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    gamma: float = Field(..., description="TPA parameter")
    nbar: float = Field(..., description="Mean photon number constraint")
    nmax: int = Field(..., description="Largest Fock index in the probe")
    seed: int = Field(..., description="Root seed")
    populations: np.ndarray = Field(..., description="Optimal population vector p_j = |c_j|^2")
    qfi: float = Field(..., description="QFI attained by the optimal probe")
    converged: bool = Field(..., description="Local stage stopped on the improvement tolerance")
    local_optima: List[LocalOptimum] = Field(default_factory=list, description="Distinct runner-up optima")

    @field_validator("populations", mode="before")
    @classmethod
    def coerce(cls, v) -> np.ndarray:
        array = np.array(v, dtype=float)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def check_feasible(self) -> "OptResult":
        p = self.populations
        if p.shape != (self.nmax + 1,):
            raise ValueError(f"expected {self.nmax + 1} populations, got {p.shape}")
        if np.any(p < 0):
            raise ValueError("populations must be nonnegative")
        if abs(p.sum() - 1.0) > settings.OPT_NORM_TOL:
            raise ValueError(f"populations sum to {p.sum()!r}, expected 1")
        mean = float(np.dot(np.arange(p.size), p))
        if abs(mean - self.nbar) > settings.OPT_MEAN_TOL:
            raise ValueError(f"populations have mean {mean!r}, expected {self.nbar!r}")
        return self

    @field_serializer("populations")
    def serialize_populations(self, v: np.ndarray) -> list:
        return v.tolist()

    @property
    def support(self) -> List[int]:
        return [int(j) for j in np.flatnonzero(self.populations > 1e-6)]
