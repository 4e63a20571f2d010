"""
Models for Fisher-information results
"""

from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import settings


class SldDecomposition(BaseModel):
    """Eigendecomposition of rho together with its symmetric logarithmic derivative"""
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eigvals: np.ndarray = Field(..., description="Eigenvalues of rho, ascending")
    eigvecs: np.ndarray = Field(..., description="Unitary matrix whose columns are the eigenvectors")
    sld: np.ndarray = Field(..., description="Hermitian SLD operator in the Fock basis")
    cutoff: float = Field(..., ge=0.0, description="Threshold applied to eigenvalue pair sums")

    def fisher_information(self) -> float:
        """Tr[rho L^2]"""
        rho = (self.eigvecs * self.eigvals) @ self.eigvecs.conj().T
        return float(np.trace(rho @ self.sld @ self.sld).real)


class FisherReport(BaseModel):
    """QFI, photon-counting FI and derived ratios at one channel point"""
    model_config = ConfigDict(frozen=True)

    gamma_cap: float = Field(..., gt=0.0, lt=1.0, description="TPA parameter")
    probe_id: str = Field(..., description="Probe identifier")
    nbar: float = Field(..., ge=0.0, description="Mean photon number of the probe")
    qfi: float = Field(..., ge=0.0, description="Per-shot QFI with respect to gamma_cap")
    fi_pn: float = Field(..., ge=0.0, description="Photon-counting FI with respect to gamma_cap")
    qa: Optional[float] = Field(None, description="Quantum advantage over the coherent benchmark")
    eta_pn: Optional[float] = Field(None, ge=0.0, description="Photon-counting efficiency fi_pn/qfi")

    @model_validator(mode="after")
    def check_measurement_bound(self) -> "FisherReport":
        if self.fi_pn > self.qfi * (1 + settings.FI_BOUND_RTOL) + 1e-12:
            raise ValueError(f"fi_pn {self.fi_pn!r} exceeds qfi {self.qfi!r}")
        return self

    def csv_row(self) -> dict:
        return {
            "gamma": self.gamma_cap,
            "probe_id": self.probe_id,
            "nbar": self.nbar,
            "qfi": self.qfi,
            "fi_pn": self.fi_pn,
            "qa": self.qa,
            "eta_pn": self.eta_pn,
        }
