"""
Curvature K2 of the shadow-system pitchfork at eps_n.

The general path eliminates the second-order fields through their two
projections (onto 1 and cos(2 n pi x / L)), exactly as for the full
system. For Phi(v) = v and b1 = 0 the same quantity has a closed form
in theta = (a2 - c2 v_bar) r, whose numerator is a quadratic
F(theta) = alpha theta^2 + beta theta + gamma. The sign table of that
quadratic depends on where r sits relative to 1/(2 v_bar) and 8/v_bar.
"""

import logging
import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import NoBifurcation, NZero
from app.core.params import ShadowParams
from app.shadow.system import shadow_equilibrium

logger = logging.getLogger("shadow_system")

CASE_RTOL = 1e-12


class ShadowK2Report(BaseModel):
    """K2 at eps_n together with the closed-form breakdown when it applies."""

    model_config = ConfigDict(frozen=True)

    n: int
    eps_n: float
    v_bar: float
    lambda_bar: float
    K2: float = Field(description="General-path curvature")
    lambda2: float = Field(description="Second-order correction of lambda")
    closed_form: bool = False
    K2_closed: Optional[float] = None
    theta: Optional[float] = None
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    theta1: Optional[float] = Field(default=None, description="Sign change of F above c2 (smaller root when two)")
    theta2: Optional[float] = None
    case: Optional[str] = Field(default=None, description="'i', 'ii', 'iii' or 'iv' by the position of r")
    table_sign: Optional[int] = Field(default=None, description="Sign of K2 read off the quadratic's sign table")

    @property
    def stable(self) -> bool:
        return self.n == 1 and self.K2 < 0


def _derivatives(sp_: ShadowParams, v: float, lam: float) -> dict:
    s = sp_.sensitivity
    r = sp_.r
    phi, dphi, d2phi = float(s.phi(v)), float(s.dphi(v)), float(s.d2phi(v))
    E = math.exp(-r * float(s.Phi(v)))
    E1 = -r * phi * E
    E2 = (r * r * phi * phi - r * dphi) * E
    E3 = (-(r**3) * phi**3 + 3.0 * r * r * phi * dphi - r * d2phi) * E
    a1, a2, b1, b2, c1, c2 = sp_.a1, sp_.a2, sp_.b1, sp_.b2, sp_.c1, sp_.c2
    return dict(
        f_v=a2 - 2.0 * c2 * v - b2 * lam * (E1 * v + E),
        f_vv=-2.0 * c2 - b2 * lam * (E2 * v + 2.0 * E1),
        f_vvv=-b2 * lam * (E3 * v + 3.0 * E2),
        f_l=-b2 * E * v,
        f_vl=-b2 * (E1 * v + E),
        g_v=a1 * E1 - 2.0 * b1 * lam * E * E1 - c1 * (E + v * E1),
        g_vv=a1 * E2 - 2.0 * b1 * lam * (E1 * E1 + E * E2) - c1 * (2.0 * E1 + v * E2),
        g_l=-b1 * E * E,
    )


def closed_form_coefficients(sp_: ShadowParams, v_bar: float) -> tuple:
    """(alpha, beta, gamma) of F(theta); valid for Phi(v) = v and b1 = 0."""
    a1, c1, c2, r = sp_.a1, sp_.c1, sp_.c2, sp_.r
    alpha = -2.0 * a1 * v_bar * r * r + 17.0 * a1 * r - 8.0 * c1
    beta = -9.0 * a1 * c2 * v_bar * r * r - 41.0 * a1 * c2 * r + 16.0 * c1 * c2
    gamma = 12.0 * a1 * c2**2 * v_bar * r * r + 24.0 * a1 * c2**2 * r - 8.0 * c1 * c2**2
    return alpha, beta, gamma


def classify_r(sp_: ShadowParams, v_bar: float) -> str:
    """Position of r relative to 1/(2 v_bar) and 8/v_bar."""
    low, high = 1.0 / (2.0 * v_bar), 8.0 / v_bar
    if math.isclose(sp_.r, low, rel_tol=CASE_RTOL):
        return "iii"
    if math.isclose(sp_.r, high, rel_tol=CASE_RTOL):
        return "iv"
    return "ii" if low < sp_.r < high else "i"


def _table(case: str, alpha: float, beta: float, gamma: float, c2: float, theta: float):
    """Roots of F above c2 and the sign of K2 at theta from the sign table."""
    if case in ("iii", "iv"):
        root = -gamma / beta
        return root, None, (1 if theta < root else -1)
    disc = beta * beta - 4.0 * alpha * gamma
    if disc < 0:
        return None, None, (1 if alpha > 0 else -1)
    sq = math.sqrt(disc)
    roots = sorted(((-beta - sq) / (2.0 * alpha), (-beta + sq) / (2.0 * alpha)))
    above = [t for t in roots if t > c2]
    if case == "i":
        theta1 = above[0] if above else None
        if theta1 is None:
            return None, None, -1
        return theta1, None, (1 if theta < theta1 else -1)
    if len(above) < 2:
        theta1 = above[0] if above else None
        sign = 1 if theta1 is None or theta > theta1 else -1
        return theta1, None, sign
    theta1, theta2 = above
    return theta1, theta2, (-1 if theta1 < theta < theta2 else 1)


def shadow_K2(sp_: ShadowParams, n: int = 1) -> ShadowK2Report:
    """
    K2 of the shadow branch from eps_n.

    Raises:
        NZero: If n == 0
        NoBifurcation: If theta <= c2 (no bifurcation from the constant state)
    """
    if n == 0:
        raise NZero("n = 0 is not a bifurcation mode")
    v_bar, lam_bar = shadow_equilibrium(sp_)
    d = _derivatives(sp_, v_bar, lam_bar)
    if d["f_v"] <= 0:
        raise NoBifurcation(f"f_v = {d['f_v']:.6g} at the constant state; no eps_{n} exists", n=n)

    L = sp_.L
    kap = (n * math.pi / L) ** 2
    eps_n = d["f_v"] / kap
    delta = d["f_v"] * d["g_l"] - d["f_l"] * d["g_v"]
    if delta == 0:
        raise NoBifurcation("Degenerate constant-mode system in the shadow expansion", n=n)

    int_phi2 = -(d["f_vv"] * d["g_l"] - d["g_vv"] * d["f_l"]) * L / (4.0 * delta)
    lam2 = -(d["f_v"] * d["g_vv"] - d["g_v"] * d["f_vv"]) / (4.0 * delta)
    int_phi2_cos = d["f_vv"] * L / (24.0 * d["f_v"])
    lhs = (
        0.5 * d["f_vv"] * (int_phi2 + int_phi2_cos)
        + d["f_vl"] * lam2 * L / 2.0
        + d["f_vvv"] * L / 16.0
    )
    K2 = lhs / (kap * L / 2.0)

    report = dict(n=n, eps_n=eps_n, v_bar=v_bar, lambda_bar=lam_bar, K2=K2, lambda2=lam2)
    if sp_.sensitivity.is_unit and sp_.b1 == 0:
        report.update(_closed_form(sp_, v_bar, kap))
    logger.debug(f"Shadow K2 at n={n}: {K2:.10g}")
    return ShadowK2Report(**report)


def _closed_form(sp_: ShadowParams, v_bar: float, kap: float) -> dict:
    c2 = sp_.c2
    theta = (sp_.a2 - c2 * v_bar) * sp_.r
    if theta <= c2:
        raise NoBifurcation(f"theta = {theta:.6g} does not exceed c2 = {c2:.6g}")
    alpha, beta, gamma = closed_form_coefficients(sp_, v_bar)
    F = alpha * theta**2 + beta * theta + gamma
    K2_closed = F / (24.0 * sp_.a1 * kap * (theta - c2))
    case = classify_r(sp_, v_bar)
    theta1, theta2, sign = _table(case, alpha, beta, gamma, c2, theta)
    return dict(
        closed_form=True,
        K2_closed=K2_closed,
        theta=theta,
        alpha=alpha,
        beta=beta,
        gamma=gamma,
        theta1=theta1,
        theta2=theta2,
        case=case,
        table_sign=sign,
    )


def shadow_branch_stability(sp_: ShadowParams, n: int = 1) -> bool:
    """Branches with n >= 2 are unstable; n = 1 is stable iff K2 < 0."""
    if n >= 2:
        return False
    return shadow_K2(sp_, n).K2 < 0
