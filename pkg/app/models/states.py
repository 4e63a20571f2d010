"""
Models for single-mode bosonic states in a truncated Fock basis
"""

from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_serializer, model_validator

from app.config import settings


def _frozen_array(value: Any, dtype=complex) -> np.ndarray:
    array = np.array(value, dtype=dtype)
    array.setflags(write=False)
    return array


class FockState(BaseModel):
    """Pure state given by its amplitudes over {|0>, ..., |D-1>}"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int = Field(..., gt=0, description="Truncation dimension D")
    amplitudes: np.ndarray = Field(..., description="Complex amplitudes c_0 ... c_{D-1}")
    tail_mass: float = Field(0.0, ge=0.0, description="Probability discarded by truncation")
    label: str = Field("dv", description="Probe identifier used in reports")

    @model_validator(mode="before")
    @classmethod
    def merge_split_amplitudes(cls, data: Any) -> Any:
        if isinstance(data, dict) and "amplitudes_re" in data:
            data = dict(data)
            real = np.asarray(data.pop("amplitudes_re"), dtype=float)
            imag = np.asarray(data.pop("amplitudes_im", np.zeros_like(real)), dtype=float)
            data["amplitudes"] = real + 1j * imag
        return data

    @field_validator("amplitudes", mode="before")
    @classmethod
    def coerce_amplitudes(cls, v: Any) -> np.ndarray:
        array = _frozen_array(v)
        if array.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        return array

    @model_validator(mode="after")
    def check_normalization(self) -> "FockState":
        if self.amplitudes.shape[0] != self.dim:
            raise ValueError(f"expected {self.dim} amplitudes, got {self.amplitudes.shape[0]}")
        norm = float(np.sum(np.abs(self.amplitudes) ** 2))
        if abs(norm - 1.0) > settings.NORM_TOL:
            raise ValueError(f"amplitudes are not normalized (norm {norm!r})")
        return self

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @model_serializer
    def serialize(self) -> dict:
        return {
            "dim": self.dim,
            "label": self.label,
            "amplitudes_re": self.amplitudes.real.tolist(),
            "amplitudes_im": self.amplitudes.imag.tolist(),
            "tail_mass": self.tail_mass,
        }


class DensityMatrix(BaseModel):
    """Hermitian, trace-one, positive matrix over the truncated Fock basis"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    dim: int = Field(..., gt=0, description="Truncation dimension D")
    elements: np.ndarray = Field(..., description="Matrix elements <n|rho|n'>")

    @model_validator(mode="before")
    @classmethod
    def merge_split_elements(cls, data: Any) -> Any:
        if isinstance(data, dict) and "elements_re" in data:
            data = dict(data)
            real = np.asarray(data.pop("elements_re"), dtype=float)
            imag = np.asarray(data.pop("elements_im", np.zeros_like(real)), dtype=float)
            data["elements"] = real + 1j * imag
        return data

    @field_validator("elements", mode="before")
    @classmethod
    def coerce_elements(cls, v: Any) -> np.ndarray:
        array = _frozen_array(v)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise ValueError("elements must be a square matrix")
        return array

    @model_validator(mode="after")
    def check_invariants(self) -> "DensityMatrix":
        rho = self.elements
        if rho.shape[0] != self.dim:
            raise ValueError(f"expected a {self.dim}x{self.dim} matrix, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > settings.HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        trace = np.trace(rho).real
        if abs(trace - 1.0) > settings.TRACE_TOL:
            raise ValueError(f"density matrix trace is {trace!r}, expected 1")
        min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
        if min_eig < -settings.POSITIVITY_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {min_eig!r}")
        return self

    @classmethod
    def trusted(cls, elements: np.ndarray) -> "DensityMatrix":
        """Wrap an array produced by the channel without re-running the checks"""
        array = _frozen_array(elements)
        return cls.model_construct(dim=array.shape[0], elements=array)

    @model_serializer
    def serialize(self) -> dict:
        return {
            "dim": self.dim,
            "elements_re": self.elements.real.tolist(),
            "elements_im": self.elements.imag.tolist(),
        }


class MeanConstraint(BaseModel):
    """Fixed mean photon number shared by all compared probes"""
    model_config = ConfigDict(frozen=True)

    nbar: float = Field(..., ge=0.0, description="Mean photon number")

    def fits(self, dim: int) -> bool:
        return self.nbar < dim - 1
