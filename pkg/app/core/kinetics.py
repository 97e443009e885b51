"""
Lotka-Volterra kinetics, equilibria and competition regime classification.
"""

import logging
from enum import Enum
from typing import NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import DivisionByZeroRatio, NoCoexistenceState, SingularDenominator
from app.core.params import ModelParams, SensitivitySpec

logger = logging.getLogger("model_core")


class CompetitionRegime(str, Enum):
    WEAK = "Weak"
    STRONG = "Strong"
    DEGENERATE = "Degenerate"


class EquilibriumSet(BaseModel):
    """Constant steady states of the kinetics."""

    model_config = ConfigDict(frozen=True)

    trivial: Tuple[float, float] = Field(default=(0.0, 0.0))
    semitrivial_u: Optional[Tuple[float, float]] = Field(
        default=None, description="(a1/b1, 0), present when b1 > 0"
    )
    semitrivial_v: Optional[Tuple[float, float]] = Field(
        default=None, description="(0, a2/c2), present when c2 > 0"
    )
    coexistence: Optional[Tuple[float, float]] = Field(
        default=None, description="(u_bar, v_bar) from the closed form"
    )

    @property
    def coexistence_positive(self) -> bool:
        return self.coexistence is not None and min(self.coexistence) > 0

    def rows(self):
        """(kind, u, v) rows for every state that exists."""
        out = [("trivial", *self.trivial)]
        if self.semitrivial_u is not None:
            out.append(("semitrivial_u", *self.semitrivial_u))
        if self.semitrivial_v is not None:
            out.append(("semitrivial_v", *self.semitrivial_v))
        if self.coexistence is not None:
            out.append(("coexistence", *self.coexistence))
        return out


class KineticsValue(NamedTuple):
    f: float
    g: float
    f_u: float
    f_v: float
    g_u: float
    g_v: float


class SensitivityValue(NamedTuple):
    phi: float
    dphi: float
    d2phi: float
    Phi: float


def classify_competition(p: ModelParams) -> CompetitionRegime:
    """
    Classify the kinetics as weak or strong competition.

    Raises:
        DivisionByZeroRatio: If a2, b2 or c2 is zero
    """
    for name in ("a2", "b2", "c2"):
        if getattr(p, name) == 0:
            raise DivisionByZeroRatio(f"{name} is zero; competition ratios undefined", field=name)

    ra = p.a1 / p.a2
    rb = p.b1 / p.b2
    rc = p.c1 / p.c2
    if rc < ra < rb:
        return CompetitionRegime.WEAK
    if rb < ra < rc:
        return CompetitionRegime.STRONG
    return CompetitionRegime.DEGENERATE


def equilibria(p: ModelParams) -> EquilibriumSet:
    """
    Compute every constant steady state.

    Raises:
        SingularDenominator: If b1*c2 == b2*c1
    """
    det = p.b1 * p.c2 - p.b2 * p.c1
    if det == 0:
        raise SingularDenominator("b1*c2 - b2*c1 vanishes; coexistence state undefined")

    u_bar = (p.a1 * p.c2 - p.a2 * p.c1) / det
    v_bar = (p.a2 * p.b1 - p.a1 * p.b2) / det
    return EquilibriumSet(
        semitrivial_u=(p.a1 / p.b1, 0.0) if p.b1 > 0 else None,
        semitrivial_v=(0.0, p.a2 / p.c2) if p.c2 > 0 else None,
        coexistence=(u_bar, v_bar),
    )


def coexistence_state(p: ModelParams) -> Tuple[float, float]:
    """
    Return the positive coexistence state (u_bar, v_bar).

    Raises:
        NoCoexistenceState: If it is undefined or not strictly positive
    """
    try:
        eq = equilibria(p)
    except SingularDenominator as e:
        raise NoCoexistenceState(e.message) from e
    if not eq.coexistence_positive:
        raise NoCoexistenceState(
            f"Coexistence state {eq.coexistence} is not positive",
            u_bar=eq.coexistence[0],
            v_bar=eq.coexistence[1],
        )
    return eq.coexistence


def kinetics(p: ModelParams, u, v) -> KineticsValue:
    """Reaction terms f, g and their exact partial derivatives (vectorised)."""
    f = (p.a1 - p.b1 * u - p.c1 * v) * u
    g = (p.a2 - p.b2 * u - p.c2 * v) * v
    f_u = p.a1 - 2.0 * p.b1 * u - p.c1 * v
    f_v = -p.c1 * u
    g_u = -p.b2 * v
    g_v = p.a2 - p.b2 * u - 2.0 * p.c2 * v
    return KineticsValue(f, g, f_u, f_v, g_u, g_v)


def sensitivity_eval(s: SensitivitySpec, v) -> SensitivityValue:
    """Evaluate (phi, phi', phi'', Phi) at v."""
    return SensitivityValue(s.phi(v), s.dphi(v), s.d2phi(v), s.Phi(v))


def check_coexistence(p: ModelParams) -> float:
    """|f| + |g| at the closed-form coexistence state."""
    u_bar, v_bar = equilibria(p).coexistence
    k = kinetics(p, u_bar, v_bar)
    residual = float(np.abs(k.f) + np.abs(k.g))
    logger.debug(f"Coexistence residual {residual:.3e} at ({u_bar:.6g}, {v_bar:.6g})")
    return residual
