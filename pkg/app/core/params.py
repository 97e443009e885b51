"""
Parameter models for the competition system and its shadow limit.
"""

from typing import Literal, Tuple

import numpy as np
from numpy.polynomial import Polynomial
from pydantic import BaseModel, ConfigDict, Field


class SensitivitySpec(BaseModel):
    """Cubic sensitivity phi(v) = p0 + p1 v + p2 v^2 + p3 v^3 with Phi' = phi, Phi(0) = 0."""

    model_config = ConfigDict(frozen=True)

    kind: Literal["polynomial-phi"] = Field(default="polynomial-phi")
    p0: float = Field(default=1.0, description="Constant coefficient of phi")
    p1: float = Field(default=0.0, description="Linear coefficient of phi")
    p2: float = Field(default=0.0, description="Quadratic coefficient of phi")
    p3: float = Field(default=0.0, description="Cubic coefficient of phi")

    @property
    def polynomial(self) -> Polynomial:
        return Polynomial([self.p0, self.p1, self.p2, self.p3])

    @property
    def antiderivative(self) -> Polynomial:
        return self.polynomial.integ(lbnd=0.0)

    @property
    def coefficients(self) -> Tuple[float, float, float, float]:
        return (self.p0, self.p1, self.p2, self.p3)

    @property
    def is_unit(self) -> bool:
        """True for phi == 1, i.e. Phi(v) = v."""
        return self.coefficients == (1.0, 0.0, 0.0, 0.0)

    def phi(self, v):
        return self.polynomial(v)

    def dphi(self, v):
        return self.polynomial.deriv(1)(v)

    def d2phi(self, v):
        return self.polynomial.deriv(2)(v)

    def Phi(self, v):
        return self.antiderivative(v)


class ModelParams(BaseModel):
    """Kinetic and transport constants of the two-species system."""

    model_config = ConfigDict(frozen=True)

    a1: float = Field(default=3.0, ge=0, description="Growth rate of u")
    a2: float = Field(default=2.0, ge=0, description="Growth rate of v")
    b1: float = Field(default=2.0, ge=0, description="Crowding of u by u")
    b2: float = Field(default=1.0, ge=0, description="Competition of v by u")
    c1: float = Field(default=1.0, ge=0, description="Competition of u by v")
    c2: float = Field(default=2.0, ge=0, description="Crowding of v by v")
    D1: float = Field(default=1.0, gt=0, description="Diffusion rate of u")
    D2: float = Field(default=1.0, gt=0, description="Diffusion rate of v")
    chi: float = Field(default=0.0, description="Advection rate")
    tau: float = Field(default=1.0, ge=0, description="Time weight on the v-equation")
    L: float = Field(default=float(np.pi), gt=0, description="Domain length")
    sensitivity: SensitivitySpec = Field(default_factory=SensitivitySpec)

    def replace(self, **changes) -> "ModelParams":
        """Return a validated copy with some fields changed."""
        data = self.model_dump()
        data.update(changes)
        if isinstance(data.get("sensitivity"), SensitivitySpec):
            data["sensitivity"] = data["sensitivity"].model_dump()
        return ModelParams(**data)


class ShadowParams(BaseModel):
    """Constants of the shadow system: chi/D1 -> r, D2 = eps."""

    model_config = ConfigDict(frozen=True)

    a1: float = Field(default=2.0, ge=0)
    a2: float = Field(default=1.0, ge=0)
    b1: float = Field(default=0.0, ge=0)
    b2: float = Field(default=1.0, ge=0)
    c1: float = Field(default=3.0, ge=0)
    c2: float = Field(default=1.0, ge=0)
    r: float = Field(default=6.0, gt=0, description="Limit ratio chi/D1")
    eps: float = Field(default=0.5, gt=0, description="Diffusion rate of v")
    L: float = Field(default=float(np.pi), gt=0)
    sensitivity: SensitivitySpec = Field(default_factory=SensitivitySpec)

    def replace(self, **changes) -> "ShadowParams":
        data = self.model_dump()
        data.update(changes)
        if isinstance(data.get("sensitivity"), SensitivitySpec):
            data["sensitivity"] = data["sensitivity"].model_dump()
        return ShadowParams(**data)

    def lift(self, D1: float, D2: float = None, tau: float = 1.0) -> ModelParams:
        """Full-system parameters with chi = r * D1."""
        return ModelParams(
            a1=self.a1,
            a2=self.a2,
            b1=self.b1,
            b2=self.b2,
            c1=self.c1,
            c2=self.c2,
            D1=D1,
            D2=self.eps if D2 is None else D2,
            chi=self.r * D1,
            tau=tau,
            L=self.L,
            sensitivity=self.sensitivity.model_dump(),
        )
