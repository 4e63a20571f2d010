"""
Models for the two-photon absorption channel
"""

import math

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ChannelPoint(BaseModel):
    """Estimand pair with gamma_cap = 1 - exp(-eps)"""
    model_config = ConfigDict(frozen=True)

    gamma_cap: float = Field(..., ge=0.0, lt=1.0, description="Dimensionless TPA parameter")
    eps: float = Field(..., ge=0.0, description="Nondimensional interaction time gamma*t")

    @model_validator(mode="after")
    def check_consistency(self) -> "ChannelPoint":
        if not (math.isfinite(self.gamma_cap) and math.isfinite(self.eps)):
            raise ValueError("channel point must be finite")
        if abs(self.gamma_cap - (-math.expm1(-self.eps))) > 1e-14:
            raise ValueError(f"gamma_cap {self.gamma_cap!r} does not match eps {self.eps!r}")
        return self

    @classmethod
    def from_gamma(cls, gamma_cap: float) -> "ChannelPoint":
        return cls(gamma_cap=gamma_cap, eps=-math.log1p(-gamma_cap))

    @classmethod
    def from_eps(cls, eps: float) -> "ChannelPoint":
        return cls(gamma_cap=-math.expm1(-eps), eps=eps)


class KlimovTerm(BaseModel):
    """Weight of |n-2k><n'-2k| in the image of |n><n'|"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(..., ge=0, description="Row Fock index of the input outer product")
    nprime: int = Field(..., ge=0, description="Column Fock index of the input outer product")
    k: int = Field(..., ge=0, description="TPA transition order")
    eps: float = Field(..., ge=0.0, description="Interaction time the coefficient is evaluated at")
    coefficient: float = Field(..., description="A_k(n, n'; eps)")

    @model_validator(mode="after")
    def check_order(self) -> "KlimovTerm":
        if 2 * self.k > min(self.n, self.nprime):
            raise ValueError("transition order exceeds min(n, n')/2")
        return self
