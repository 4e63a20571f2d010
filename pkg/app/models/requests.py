"""
Request models for the command-line endpoints
"""

from typing import List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.config import settings


class GammaGrid(BaseModel):
    """Grid of TPA parameters inside (0, 1)"""
    model_config = ConfigDict(frozen=True)

    gamma_min: float = Field(settings.GAMMA_MIN, gt=0.0, lt=1.0, description="Smallest grid value")
    gamma_max: float = Field(settings.GAMMA_MAX, gt=0.0, lt=1.0, description="Largest grid value")
    count: int = Field(settings.GAMMA_COUNT, ge=1, description="Number of grid points")
    spacing: Literal["log", "linear"] = Field(settings.GAMMA_SPACING, description="Point spacing")

    @model_validator(mode="after")
    def check_order(self) -> "GammaGrid":
        if self.gamma_max < self.gamma_min:
            raise ValueError("gamma_max must not be below gamma_min")
        return self

    def values(self) -> np.ndarray:
        if self.count == 1:
            return np.array([self.gamma_min])
        if self.spacing == "log":
            return np.geomspace(self.gamma_min, self.gamma_max, self.count)
        return np.linspace(self.gamma_min, self.gamma_max, self.count)


class ProbeSpec(BaseModel):
    """Probe named on the command line, e.g. fock:2, coherent, sv, on:4, dv:coeffs.json, opt"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["fock", "coherent", "sv", "on", "dv", "opt"] = Field(..., description="Probe family")
    index: Optional[int] = Field(None, ge=0, description="Fock index for fock/on probes")
    path: Optional[str] = Field(None, description="Coefficient file for dv probes")

    @model_validator(mode="after")
    def check_arguments(self) -> "ProbeSpec":
        if self.kind == "on" and self.index is None:
            raise ValueError("on probes need an occupation, e.g. on:4")
        if self.kind == "dv" and not self.path:
            raise ValueError("dv probes need a coefficient file, e.g. dv:coeffs.json")
        if self.kind in ("coherent", "sv", "opt") and (self.index is not None or self.path):
            raise ValueError(f"{self.kind} probes take no argument")
        return self

    @classmethod
    def parse(cls, text: str) -> "ProbeSpec":
        kind, _, argument = text.strip().partition(":")
        kind = kind.lower()
        if kind == "dv":
            return cls(kind=kind, path=argument or None)
        if argument:
            try:
                index = int(argument)
            except ValueError:
                raise ValueError(f"probe argument must be an integer in '{text}'")
            return cls(kind=kind, index=index)
        return cls(kind=kind)

    @property
    def probe_id(self) -> str:
        if self.kind == "dv":
            return f"dv:{self.path}"
        if self.index is not None:
            return f"{self.kind}:{self.index}"
        return self.kind


class RunConfig(BaseModel):
    """Contents of a --config file; keys mirror the command-line flags"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    nbar: Optional[float] = Field(None, ge=0.0, description="Mean photon number")
    nbar_min: Optional[float] = Field(None, ge=0.0, description="Smallest mean photon number of a scaling sweep")
    nbar_max: Optional[float] = Field(None, ge=0.0, description="Largest mean photon number of a scaling sweep")
    nbar_count: Optional[int] = Field(None, ge=1, description="Points in a scaling sweep")
    gamma: Optional[float] = Field(None, gt=0.0, lt=1.0, description="Single TPA parameter")
    gamma_min: Optional[float] = Field(None, gt=0.0, lt=1.0, description="Grid minimum")
    gamma_max: Optional[float] = Field(None, gt=0.0, lt=1.0, description="Grid maximum")
    gamma_count: Optional[int] = Field(None, ge=1, description="Grid size")
    gamma_spacing: Optional[Literal["log", "linear"]] = Field(None, description="Grid spacing")
    probe: Optional[List[str]] = Field(None, description="Probe specs")
    nmax: Optional[int] = Field(None, ge=1, description="Largest Fock index of optimised probes")
    dim: Optional[int] = Field(None, ge=1, description="Truncation dimension override")
    seed: Optional[int] = Field(None, ge=0, description="Optimiser seed")
    restarts: Optional[int] = Field(None, ge=1, description="Optimiser restarts")
    generations: Optional[int] = Field(None, ge=0, description="Optimiser generations")
    population: Optional[int] = Field(None, ge=4, description="Optimiser population")
    local_iters: Optional[int] = Field(None, ge=0, description="Optimiser local iterations")
    out: Optional[str] = Field(None, description="Output path, '-' for stdout")
    archive: Optional[str] = Field(None, description="JSON archive path")
    format: Optional[Literal["csv", "json"]] = Field(None, description="Output format")
    level: Optional[Literal["quick", "full"]] = Field(None, description="Validation level")

    @field_validator("probe", mode="before")
    @classmethod
    def split_probes(cls, v):
        if isinstance(v, str):
            return [part for part in v.split(",") if part]
        return v

    def flag_defaults(self) -> dict:
        """Non-empty entries keyed by click parameter name"""
        renamed = {"format": "fmt", "probe": "probes"}
        return {renamed.get(key, key): value for key, value in self.model_dump().items() if value is not None}
