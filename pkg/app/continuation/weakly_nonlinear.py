"""
Weakly-nonlinear coefficients of the pitchfork at chi_k.

The second-order correction fields are never solved for. Only their four
projections (onto 1 and cos(2 k pi x / L), for both components) enter K2,
and those follow from two 2x2 linear systems.
"""

import logging
import math
from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import NoBifurcation, ResonanceError
from app.core.kinetics import coexistence_state
from app.core.params import ModelParams
from app.stability.linear import chi_k, chi_threshold

logger = logging.getLogger("steady_continuation")

ASYMPTOTIC_REGIME = 100.0
RATIO_RTOL = 1e-9
RESONANCE_RTOL = 1e-12


class AsymptoticSign(str, Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"
    INDETERMINATE = "Indeterminate"


class WeaklyNonlinearReport(BaseModel):
    """Closed-form K1, K2 and the intermediate quantities they are built from."""

    model_config = ConfigDict(frozen=True)

    k: int
    chi_k: float
    Q_k: float
    K1: float = Field(default=0.0, description="Vanishes identically for this pitchfork")
    K2: float
    B0: float
    B1: float
    B2: float
    B3: float
    B4: float
    I_phi1: float
    I_psi1: float
    I_phi1_cos2k: float
    I_psi1_cos2k: float
    detA: float
    detA1: float
    detA2: float
    asymptotic_sign: AsymptoticSign = AsymptoticSign.INDETERMINATE
    asymptotic_case: Optional[str] = Field(default=None, description="'i' or 'ii' when the large-D1 regime applies")
    threshold_u: Optional[AsymptoticSign] = Field(default=None, description="Case (i) outcome with threshold 2c2^2/(b2^2 u)")
    threshold_u2: Optional[AsymptoticSign] = Field(default=None, description="Case (i) outcome with threshold 2c2^2/(b2^2 u^2)")
    threshold_disagreement: bool = False
    K2_asymptotic: Optional[float] = None
    asymptotic_agrees: Optional[bool] = Field(
        default=None, description="Whether asymptotic_sign matches sign(K2); None when Indeterminate"
    )


def _sign(value: float) -> AsymptoticSign:
    return AsymptoticSign.POSITIVE if value > 0 else AsymptoticSign.NEGATIVE


def weakly_nonlinear(p: ModelParams, k: int) -> WeaklyNonlinearReport:
    """
    Evaluate K2 at chi_k in closed form.

    The large-D1, small-D2 sign prediction is reported when
    min(D1, 1/D2) >= 100; otherwise it is Indeterminate. In case (i) two
    thresholds are compared (with u_bar and with u_bar^2 in the
    denominator); a disagreement is flagged instead of picking one. The
    prediction is also compared with the sign of the closed-form K2 and
    asymptotic_agrees records the outcome; K2 is what mode selection uses.

    Raises:
        NoBifurcation: If chi_k is infeasible
        ResonanceError: If chi_k == chi_2k (det H_2k(chi_k) = 0)
    """
    bp = chi_k(p, k)
    if not bp.feasible:
        raise NoBifurcation(f"chi_{k} is infeasible; no branch to expand", k=k)
    u, v = coexistence_state(p)
    s = p.sensitivity
    phi, dphi, d2phi = float(s.phi(v)), float(s.dphi(v)), float(s.d2phi(v))
    L = p.L
    kap = (k * math.pi / L) ** 2
    kap2 = 4.0 * kap
    chi, Q = bp.chi_k, bp.Q_k

    d = (p.b1 * p.c2 - p.b2 * p.c1) * u * v
    gap = 4.0 * p.D1 * p.D2 * kap**2 - d
    if abs(gap) <= RESONANCE_RTOL * max(4.0 * p.D1 * p.D2 * kap**2, abs(d)):
        raise ResonanceError(f"chi_{k} coincides with chi_{2 * k}", k=k, gap=gap)

    # projection onto the constant mode
    M0 = np.array([[-p.b1 * u, -p.c1 * u], [-p.b2 * v, -p.c2 * v]])
    rhs0 = np.array([(p.b1 * Q * Q + p.c1 * Q) / 2.0, (p.b2 * Q + p.c2) / 2.0])
    alpha0, beta0 = np.linalg.solve(M0, rhs0)

    # projection onto cos(2 k pi x / L)
    a11 = -(p.D1 * kap2 + p.b1 * u)
    a12 = -(chi * u * phi * kap2 + p.c1 * u)
    a21 = -p.b2 * v
    a22 = -(p.D2 * kap2 + p.c2 * v)
    r1 = (p.b1 * Q * Q + p.c1 * Q) / 2.0 + chi * kap * (Q * phi + u * dphi)
    r2 = (p.b2 * Q + p.c2) / 2.0
    detA = a11 * a22 - a12 * a21
    detA1 = r1 * a22 - a12 * r2
    detA2 = a11 * r2 - a21 * r1
    alpha2, beta2 = detA1 / detA, detA2 / detA

    I_phi1 = alpha0 * L
    I_psi1 = beta0 * L
    I_phi1_c = alpha2 * L / 2.0
    I_psi1_c = beta2 * L / 2.0

    E = (p.D1 * kap + p.b1 * u) / (p.b2 * v)
    B_curv = u * d2phi / 2.0 + Q * dphi
    B0 = -chi * kap * B_curv * L / 8.0
    B1 = E * p.b2 / 2.0 - chi * kap * phi / 2.0 - (2.0 * p.b1 * Q + p.c1) / 2.0
    B2 = E * (p.b2 * Q + 2.0 * p.c2) / 2.0 - chi * kap * u * dphi / 2.0 - p.c1 * Q / 2.0
    B3 = E * p.b2 / 2.0 + chi * kap * phi / 2.0 - (2.0 * p.b1 * Q + p.c1) / 2.0
    B4 = E * (p.b2 * Q + 2.0 * p.c2) / 2.0 - chi * kap * (Q * phi + u * dphi / 2.0) - p.c1 * Q / 2.0

    lhs = B0 + B1 * I_phi1 + B2 * I_psi1 + B3 * I_phi1_c + B4 * I_psi1_c
    K2 = lhs / (u * phi * kap * L / 2.0)

    report = dict(
        k=k, chi_k=chi, Q_k=Q, K1=0.0, K2=K2,
        B0=B0, B1=B1, B2=B2, B3=B3, B4=B4,
        I_phi1=I_phi1, I_psi1=I_psi1, I_phi1_cos2k=I_phi1_c, I_psi1_cos2k=I_psi1_c,
        detA=detA, detA1=detA1, detA2=detA2,
    )

    if min(p.D1, 1.0 / p.D2) >= ASYMPTOTIC_REGIME:
        report.update(_asymptotic(p, u, v, phi, dphi, d2phi, kap, gap, d))
        predicted = report["asymptotic_sign"]
        if predicted != AsymptoticSign.INDETERMINATE and K2 != 0:
            report["asymptotic_agrees"] = predicted == _sign(K2)
            if not report["asymptotic_agrees"]:
                logger.warning(
                    f"Large-D1 case ({report['asymptotic_case']}) predicts {predicted.value} "
                    f"but the closed-form K2 at k={k} is {K2:.6g}"
                )
    logger.debug(f"K2 at k={k}: {K2:.10g} (asymptotic {report.get('asymptotic_sign', 'n/a')})")
    return WeaklyNonlinearReport(**report)


def _asymptotic(p, u, v, phi, dphi, d2phi, kap, gap, d) -> dict:
    ratio = p.c2 / (p.b2 * u)
    if math.isclose(dphi / phi, ratio, rel_tol=RATIO_RTOL):
        curvature = d2phi / phi
        with_u = _sign(curvature - 2.0 * p.c2**2 / (p.b2**2 * u))
        with_u2 = _sign(curvature - 2.0 * p.c2**2 / (p.b2**2 * u**2))
        agree = with_u == with_u2
        if not agree:
            logger.warning("Large-D1 K2 sign depends on the u_bar vs u_bar^2 threshold; reporting Indeterminate")
        return dict(
            asymptotic_case="i",
            asymptotic_sign=with_u if agree else AsymptoticSign.INDETERMINATE,
            threshold_u=with_u,
            threshold_u2=with_u2,
            threshold_disagreement=not agree,
        )

    bracket = -p.D1 * p.c2**2 * v * p.L * kap * (ratio - dphi / phi) ** 2 / (12.0 * p.b2 * gap)
    K2_asym = 2.0 * p.D1 / (u * phi * p.L) * bracket
    positive = p.D1 * p.D2 * kap**2 < d / 4.0
    return dict(
        asymptotic_case="ii",
        asymptotic_sign=AsymptoticSign.POSITIVE if positive else AsymptoticSign.NEGATIVE,
        K2_asymptotic=K2_asym,
    )


def predicted_stable(k: int, k0: int, K2: float) -> bool:
    """Only the k0 branch can be stable, and only when it turns toward chi > chi_k0."""
    return k == k0 and K2 > 0


def predicted_branch_stability(p: ModelParams, k: int, k_max: int = 64) -> bool:
    """Near-onset stability of the branch from chi_k predicted by mode selection."""
    _, k0 = chi_threshold(p, k_max)
    if k != k0:
        return False
    return predicted_stable(k, k0, weakly_nonlinear(p, k).K2)
