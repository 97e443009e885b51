"""
Linear stability of the coexistence state.

Mode matrices H_k, bifurcation values chi_k, the instability threshold chi_0
and per-mode growth rates. Every function accepts an optional grid; when
given, the discrete Neumann eigenvalue replaces (k pi / L)^2 so results can
be compared against discretised runs.
"""

import cmath
import logging
import math
from typing import List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

from app.core.errors import KZero, NoBifurcation, NoFeasibleMode, ZeroSensitivity
from app.core.kinetics import coexistence_state
from app.core.params import ModelParams
from app.simulation.grid import Grid1D

logger = logging.getLogger("linear_stability")

TIE_TOLERANCE = 1e-12


class ModeMatrix(BaseModel):
    """Linearisation of the system restricted to the mode cos(k pi x / L)."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=0)
    Lambda: float = Field(..., description="Neumann eigenvalue of the mode")
    m11: float
    m12: float
    m21: float
    m22: float

    @property
    def trace(self) -> float:
        return self.m11 + self.m22

    @property
    def det(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m21

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])


class BifurcationPoint(BaseModel):
    """Value of chi at which H_k becomes singular, with its null vector (Q_k, 1)."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=1)
    Lambda: float
    chi_k: float
    Q_k: float
    feasible: bool = Field(..., description="Numerator of chi_k is positive")


def neumann_eigenvalue(k: int, L: float, grid: Optional[Grid1D] = None) -> float:
    """(k pi / L)^2, or its discrete counterpart on the grid."""
    if grid is not None:
        return grid.neumann_eigenvalue(k)
    return (k * math.pi / L) ** 2


def _entries(p: ModelParams, Lambda: float, chi: float) -> Tuple[float, float, float, float]:
    u_bar, v_bar = coexistence_state(p)
    phi_bar = float(p.sensitivity.phi(v_bar))
    m11 = -p.D1 * Lambda - p.b1 * u_bar
    m12 = -chi * u_bar * phi_bar * Lambda - p.c1 * u_bar
    m21 = -p.b2 * v_bar
    m22 = -p.D2 * Lambda - p.c2 * v_bar
    return m11, m12, m21, m22


def mode_matrix(
    p: ModelParams, k: int, chi: Optional[float] = None, grid: Optional[Grid1D] = None
) -> ModeMatrix:
    """
    Build H_k at the coexistence state.

    Args:
        p: Model parameters
        k: Wavenumber index (k >= 1)
        chi: Advection rate; defaults to p.chi
        grid: Use the discrete Neumann eigenvalue of this grid

    Raises:
        KZero: If k == 0
        NoCoexistenceState: If (u_bar, v_bar) is not positive
    """
    if k == 0:
        raise KZero("Mode k = 0 carries no advection; use kinetic_jacobian")
    Lambda = neumann_eigenvalue(k, p.L, grid)
    m11, m12, m21, m22 = _entries(p, Lambda, p.chi if chi is None else chi)
    return ModeMatrix(k=k, Lambda=Lambda, m11=m11, m12=m12, m21=m21, m22=m22)


def kinetic_jacobian(p: ModelParams) -> ModeMatrix:
    """H_0: the kinetic Jacobian at the coexistence state."""
    m11, m12, m21, m22 = _entries(p, 0.0, 0.0)
    return ModeMatrix(k=0, Lambda=0.0, m11=m11, m12=m12, m21=m21, m22=m22)


def chi_k(p: ModelParams, k: int, grid: Optional[Grid1D] = None) -> BifurcationPoint:
    """
    Bifurcation value of chi for mode k.

    Raises:
        KZero: If k == 0
        NoCoexistenceState: If (u_bar, v_bar) is not positive
        ZeroSensitivity: If phi(v_bar) == 0
        NoBifurcation: If b2 == 0 (det H_k does not depend on chi)
    """
    if k == 0:
        raise KZero("k = 0 is not a bifurcation mode")
    u_bar, v_bar = coexistence_state(p)
    phi_bar = float(p.sensitivity.phi(v_bar))
    if phi_bar == 0:
        raise ZeroSensitivity(f"phi(v_bar) vanishes at v_bar={v_bar:.17g}")
    if p.b2 == 0:
        raise NoBifurcation("b2 = 0: det H_k is independent of chi")

    Lambda = neumann_eigenvalue(k, p.L, grid)
    numerator = (p.D1 * Lambda + p.b1 * u_bar) * (p.D2 * Lambda + p.c2 * v_bar) - (
        p.b2 * p.c1 * u_bar * v_bar
    )
    denominator = p.b2 * Lambda * phi_bar * u_bar * v_bar
    Q_k = -(p.D2 * Lambda + p.c2 * v_bar) / (p.b2 * v_bar)
    return BifurcationPoint(
        k=k, Lambda=Lambda, chi_k=numerator / denominator, Q_k=Q_k, feasible=numerator > 0
    )


def chi_threshold(
    p: ModelParams, k_max: int = 64, grid: Optional[Grid1D] = None
) -> Tuple[float, int]:
    """
    Instability threshold chi_0 = min over feasible k of chi_k.

    Ties go to the smallest k and are logged. A warning is also logged when
    chi_k is still decreasing at k_max, since the true minimum may lie outside
    the window.

    Returns:
        (chi_0, k_0)

    Raises:
        NoFeasibleMode: If no k in [1, k_max] is feasible
    """
    if k_max < 1:
        raise ValueError(f"k_max must be >= 1, got {k_max}")
    points = [chi_k(p, k, grid) for k in range(1, k_max + 1)]
    feasible = [bp for bp in points if bp.feasible]
    if not feasible:
        raise NoFeasibleMode(f"No feasible mode for k in [1, {k_max}]", k_max=k_max)

    best = min(feasible, key=lambda bp: (bp.chi_k, bp.k))
    for bp in feasible:
        if bp.k != best.k and abs(bp.chi_k - best.chi_k) <= TIE_TOLERANCE * max(1.0, abs(best.chi_k)):
            logger.warning(f"chi_k tie between k={best.k} and k={bp.k} at {best.chi_k:.17g}")

    if k_max >= 2 and points[-1].feasible and points[-2].feasible:
        if points[-1].chi_k < points[-2].chi_k:
            logger.warning(f"chi_k still decreasing at k_max={k_max}; widen the window")
    logger.debug(f"chi_0={best.chi_k:.6g} at k_0={best.k}")
    return best.chi_k, best.k


def eigenvalues_2x2(m: ModeMatrix) -> Tuple[complex, complex]:
    """Roots of lambda^2 - tr lambda + det, leading (largest real part) first."""
    tr, det = m.trace, m.det
    disc = tr * tr - 4.0 * det
    if disc >= 0:
        s = math.sqrt(disc)
        q = 0.5 * (tr + math.copysign(s, tr))
        if q == 0.0:
            roots = (0.0, 0.0)
        else:
            roots = (q, det / q)
        hi, lo = max(roots), min(roots)
        return complex(hi), complex(lo)
    s = cmath.sqrt(disc)
    return complex(0.5 * tr, 0.5 * s.imag), complex(0.5 * tr, -0.5 * s.imag)


def growth_rate(
    p: ModelParams, k: int, chi: Optional[float] = None, grid: Optional[Grid1D] = None
) -> Tuple[complex, complex]:
    """Eigenvalues of H_k, leading first."""
    return eigenvalues_2x2(mode_matrix(p, k, chi=chi, grid=grid))


def is_linearly_stable(p: ModelParams, k_max: int = 64, chi: Optional[float] = None) -> bool:
    """True if every mode k in [0, k_max] decays at the given chi."""
    if eigenvalues_2x2(kinetic_jacobian(p))[0].real >= 0:
        return False
    return all(growth_rate(p, k, chi=chi)[0].real < 0 for k in range(1, k_max + 1))


def dispersion_table(
    p: ModelParams, k_max: int = 64, grid: Optional[Grid1D] = None
) -> pd.DataFrame:
    """One row per mode: Lambda, chi_k, feasibility and Re of both growth rates at p.chi."""
    rows: List[dict] = []
    for k in range(1, k_max + 1):
        bp = chi_k(p, k, grid)
        mu_plus, mu_minus = growth_rate(p, k, grid=grid)
        rows.append(
            {
                "k": k,
                "lambda_k": bp.Lambda,
                "chi_k": bp.chi_k,
                "feasible": bp.feasible,
                "re_mu_plus": mu_plus.real,
                "re_mu_minus": mu_minus.real,
            }
        )
    return pd.DataFrame(rows, columns=["k", "lambda_k", "chi_k", "feasible", "re_mu_plus", "re_mu_minus"])
