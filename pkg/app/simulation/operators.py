"""
Conservative finite-volume operators on the node-centred Neumann grid.

Face fluxes live on the n-1 interior faces; boundary faces carry zero flux.
The node update is (J_{j+1/2} - J_{j-1/2}) / w_j with trapezoid weights w_j,
which is ghost-node reflection written in flux form and conserves the
trapezoid integral exactly.
"""

from functools import cached_property, lru_cache
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.linalg import solve_banded

from app.core.kinetics import kinetics
from app.core.params import ModelParams, SensitivitySpec
from app.simulation.grid import Grid1D, State


class DiscreteOperators:
    """Sparse gradient, divergence and Laplacian for one grid."""

    def __init__(self, grid: Grid1D):
        self.grid = grid

    @cached_property
    def gradient(self) -> sp.csr_matrix:
        """(n-1) x n forward difference to the faces."""
        n, h = self.grid.n, self.grid.h
        return sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n), format="csr") / h

    @cached_property
    def face_average(self) -> sp.csr_matrix:
        n = self.grid.n
        return sp.diags([np.full(n - 1, 0.5), np.full(n - 1, 0.5)], [0, 1], shape=(n - 1, n), format="csr")

    @cached_property
    def divergence(self) -> sp.csr_matrix:
        """n x (n-1) face-to-node difference divided by the cell weight."""
        n = self.grid.n
        inv_w = 1.0 / self.grid.weights
        upper = inv_w[:-1]
        lower = -inv_w[1:]
        return sp.diags([upper, lower], [0, -1], shape=(n, n - 1), format="csr")

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        return (self.divergence @ self.gradient).tocsr()

    @cached_property
    def laplacian_bands(self) -> np.ndarray:
        """Laplacian in solve_banded (1, 1) layout."""
        n, h = self.grid.n, self.grid.h
        w = self.grid.weights
        ab = np.zeros((3, n))
        ab[0, 1:] = 1.0 / (h * w[:-1])
        ab[2, :-1] = 1.0 / (h * w[1:])
        ab[1, :-1] -= ab[0, 1:]
        ab[1, 1:] -= ab[2, :-1]
        return ab

    def implicit_solve(self, rhs: np.ndarray, coeff: float) -> np.ndarray:
        """Solve (I - coeff * Laplacian) x = rhs."""
        ab = -coeff * self.laplacian_bands
        ab[1] += 1.0
        return solve_banded((1, 1), ab, rhs)

    # ------------------------------------------------------------ advection

    def advection_flux(self, u: np.ndarray, v: np.ndarray, chi: float, sens: SensitivitySpec) -> np.ndarray:
        """Face flux chi * u_f * phi(v_f) * v'."""
        u_f = self.face_average @ u
        v_f = self.face_average @ v
        return chi * u_f * sens.phi(v_f) * (self.gradient @ v)

    def advection(self, u: np.ndarray, v: np.ndarray, chi: float, sens: SensitivitySpec) -> np.ndarray:
        """Nodal value of (chi u phi(v) v')'."""
        return self.divergence @ self.advection_flux(u, v, chi, sens)

    def advection_jacobian(
        self, u: np.ndarray, v: np.ndarray, chi: float, sens: SensitivitySpec
    ) -> Tuple[sp.csr_matrix, sp.csr_matrix]:
        """Derivatives of advection() with respect to u and v."""
        u_f = self.face_average @ u
        v_f = self.face_average @ v
        dv = self.gradient @ v
        phi_f = sens.phi(v_f)
        dflux_du = sp.diags(chi * phi_f * dv) @ self.face_average
        dflux_dv = sp.diags(chi * u_f * sens.dphi(v_f) * dv) @ self.face_average + sp.diags(
            chi * u_f * phi_f
        ) @ self.gradient
        return (self.divergence @ dflux_du).tocsr(), (self.divergence @ dflux_dv).tocsr()

    def advection_speed(self, v: np.ndarray, chi: float, sens: SensitivitySpec) -> float:
        """max |chi phi(v_f) v'| over the faces."""
        v_f = self.face_average @ v
        return float(np.max(np.abs(chi * sens.phi(v_f) * (self.gradient @ v))))

    # ---------------------------------------------------------- steady state

    def steady_residual(self, u: np.ndarray, v: np.ndarray, p: ModelParams, chi: float = None) -> np.ndarray:
        """Stacked residual [R_u; R_v] of the stationary system."""
        chi = p.chi if chi is None else chi
        kin = kinetics(p, u, v)
        r_u = p.D1 * (self.laplacian @ u) + self.advection(u, v, chi, p.sensitivity) + kin.f
        r_v = p.D2 * (self.laplacian @ v) + kin.g
        return np.concatenate([r_u, r_v])

    def steady_jacobian(self, u: np.ndarray, v: np.ndarray, p: ModelParams, chi: float = None) -> sp.csc_matrix:
        """Analytic 2n x 2n Jacobian of steady_residual."""
        chi = p.chi if chi is None else chi
        kin = kinetics(p, u, v)
        adv_u, adv_v = self.advection_jacobian(u, v, chi, p.sensitivity)
        lap = self.laplacian
        j_uu = p.D1 * lap + adv_u + sp.diags(kin.f_u)
        j_uv = adv_v + sp.diags(kin.f_v)
        j_vu = sp.diags(kin.g_u)
        j_vv = p.D2 * lap + sp.diags(kin.g_v)
        return sp.bmat([[j_uu, j_uv], [j_vu, j_vv]], format="csc")

    def chi_derivative(self, u: np.ndarray, v: np.ndarray, p: ModelParams) -> np.ndarray:
        """d(steady_residual)/d(chi); the residual is linear in chi."""
        n = self.grid.n
        out = np.zeros(2 * n)
        out[:n] = self.advection(u, v, 1.0, p.sensitivity)
        return out

    def residual_scale(self, u: np.ndarray, v: np.ndarray, p: ModelParams, chi: Optional[float] = None) -> float:
        """Operator scale used to turn an absolute tolerance into a relative one."""
        chi = p.chi if chi is None else chi
        v_abs = np.abs(v)
        phi_max = float(np.max(np.abs(p.sensitivity.phi(v_abs)))) if v.size else 0.0
        size = max(float(np.max(np.abs(u))), float(np.max(v_abs)), 1.0)
        coeff = p.D1 + p.D2 + abs(chi) * phi_max * float(np.max(v_abs))
        return max(1.0, coeff * size / self.grid.h**2)


OPERATOR_CACHE_SIZE = 32


@lru_cache(maxsize=OPERATOR_CACHE_SIZE)
def operators_for(grid: Grid1D) -> DiscreteOperators:
    """Shared operator instance per grid; the least recently used grids are evicted."""
    return DiscreteOperators(grid)


def steady_residual_norm(s: State, p: ModelParams) -> float:
    """Max-norm of the discretised stationary residual at the state."""
    ops = operators_for(s.grid)
    return float(np.max(np.abs(ops.steady_residual(s.u, s.v, p))))
