"""
The constrained shadow system.

Unknowns are the v-profile and the scalar lambda:

    eps v'' + (a2 - b2 lambda E(v) - c2 v) v = 0,   E(v) = exp(-r Phi(v))
    integral of (a1 - b1 lambda E(v) - c1 v) E(v) dx = 0

The discretisation is the bordered system of n PDE rows plus one
constraint row, solved jointly by Newton.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.sparse as sp

from app.core.errors import NewtonDiverged, NoBifurcation, NZero, SingularDenominator
from app.core.params import ShadowParams
from app.continuation.branch import Branch, continue_problem, stability_eigenvalues
from app.continuation.newton import damped_newton
from app.continuation.problem import SteadyProblem
from app.simulation.grid import Grid1D

logger = logging.getLogger("shadow_system")


@dataclass(frozen=True, eq=False)
class ShadowState:
    """v-profile plus the multiplier lambda at diffusion eps."""

    v: np.ndarray
    lam: float
    eps: float
    grid: Grid1D

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.v, [self.lam]])

    def lifted_u(self, sp_: ShadowParams) -> np.ndarray:
        """u = lambda exp(-r Phi(v)) of the full system this state approximates."""
        return self.lam * np.exp(-sp_.r * sp_.sensitivity.Phi(self.v))


class ShadowKinetics:
    """f(v, lambda), g(v, lambda) of the shadow system and their derivatives."""

    def __init__(self, sp_: ShadowParams):
        self.sp = sp_

    def E(self, v):
        return np.exp(-self.sp.r * self.sp.sensitivity.Phi(v))

    def f(self, v, lam):
        s = self.sp
        return (s.a2 - s.b2 * lam * self.E(v) - s.c2 * v) * v

    def g(self, v, lam):
        s = self.sp
        E = self.E(v)
        return (s.a1 - s.b1 * lam * E - s.c1 * v) * E

    def partials(self, v, lam):
        """(f_v, f_lam, g_v, g_lam)."""
        s = self.sp
        E = self.E(v)
        dE = -s.r * s.sensitivity.phi(v) * E
        f_v = s.a2 - s.b2 * lam * E - 2.0 * s.c2 * v - s.b2 * lam * dE * v
        f_lam = -s.b2 * E * v
        g_v = s.a1 * dE - 2.0 * s.b1 * lam * E * dE - s.c1 * (E + v * dE)
        g_lam = -s.b1 * E * E
        return f_v, f_lam, g_v, g_lam


def shadow_equilibrium(sp_: ShadowParams) -> Tuple[float, float]:
    """
    Constant solution (v_bar, lambda_bar) of the shadow system.

    Raises:
        SingularDenominator: If b1*c2 == b2*c1
    """
    det = sp_.b1 * sp_.c2 - sp_.b2 * sp_.c1
    if det == 0:
        raise SingularDenominator("b1*c2 - b2*c1 vanishes; shadow equilibrium undefined")
    v_bar = (sp_.a2 * sp_.b1 - sp_.a1 * sp_.b2) / det
    u_bar = (sp_.a1 * sp_.c2 - sp_.a2 * sp_.c1) / det
    lam_bar = u_bar * math.exp(sp_.r * float(sp_.sensitivity.Phi(v_bar)))
    return v_bar, lam_bar


def epsilon_n(sp_: ShadowParams, n: int, grid: Optional[Grid1D] = None) -> float:
    """
    Bifurcation value eps_n of the constant solution for mode n.

    With a grid the discrete Neumann eigenvalue replaces (n pi / L)^2.

    Raises:
        NZero: If n == 0
        NoBifurcation: If (a2 - c2 v_bar) r phi(v_bar) <= c2
    """
    if n == 0:
        raise NZero("n = 0 is not a bifurcation mode")
    v_bar, _ = shadow_equilibrium(sp_)
    drive = (sp_.a2 - sp_.c2 * v_bar) * sp_.r * float(sp_.sensitivity.phi(v_bar))
    if drive <= sp_.c2:
        raise NoBifurcation(
            f"(a2 - c2 v_bar) r phi(v_bar) = {drive:.6g} does not exceed c2 = {sp_.c2:.6g}",
            drive=drive,
        )
    Lambda = grid.neumann_eigenvalue(n) if grid is not None else (n * math.pi / sp_.L) ** 2
    return (drive - sp_.c2) * v_bar / Lambda


class ShadowProblem(SteadyProblem):
    """Bordered shadow system continued in eps."""

    param_name = "eps"

    def __init__(self, sp_: ShadowParams, grid: Grid1D, n_mode: int = 1):
        super().__init__(grid, n_mode)
        self.sp = sp_
        self.kin = ShadowKinetics(sp_)
        self.v_bar, self.lam_bar = shadow_equilibrium(sp_)

    @property
    def size(self) -> int:
        return self.grid.n + 1

    def _v_slice(self) -> slice:
        return slice(0, self.grid.n)

    def residual(self, x, param):
        v, lam = x[:-1], x[-1]
        pde = param * (self.ops.laplacian @ v) + self.kin.f(v, lam)
        constraint = self.grid.weights @ self.kin.g(v, lam)
        return np.concatenate([pde, [constraint]])

    def jacobian(self, x, param):
        v, lam = x[:-1], x[-1]
        f_v, f_lam, g_v, g_lam = self.kin.partials(v, lam)
        w = self.grid.weights
        return sp.bmat(
            [
                [param * self.ops.laplacian + sp.diags(f_v), sp.csc_matrix(f_lam[:, None])],
                [sp.csr_matrix((w * g_v)[None, :]), sp.csr_matrix([[float(w @ g_lam)]])],
            ],
            format="csc",
        )

    def param_derivative(self, x, param):
        return np.concatenate([self.ops.laplacian @ x[:-1], [0.0]])

    def mass_matrix(self):
        diag = np.ones(self.size)
        diag[-1] = 0.0
        return sp.diags(diag, format="csc")

    def trivial(self):
        return np.concatenate([np.full(self.grid.n, self.v_bar), [self.lam_bar]])

    def critical_mode(self):
        mode = np.concatenate([self.grid.cosine(self.k), [0.0]])
        return mode, epsilon_n(self.sp, self.k, grid=self.grid)

    def arclength_weights(self):
        return np.concatenate([self.grid.weights / self.grid.L, [1.0]])

    def norms(self, x):
        v, lam = x[:-1], x[-1]
        return float(np.max(np.abs(lam * self.kin.E(v)))), float(np.max(np.abs(v)))

    def scale(self, x, param):
        v = x[:-1]
        s = self.sp
        size = max(1.0, float(np.max(np.abs(v))))
        coeff = abs(param) / self.grid.h**2 + s.a1 + s.a2 + s.c1 + s.c2 * size
        return max(1.0, coeff * size)

    def state(self, x, param) -> ShadowState:
        return ShadowState(v=np.array(x[:-1]), lam=float(x[-1]), eps=float(param), grid=self.grid)


def shadow_newton(sp_: ShadowParams, guess: ShadowState, tol: float = 1e-12) -> ShadowState:
    """
    Newton on the bordered shadow system at eps = sp_.eps.

    Raises:
        NonFiniteState: If the guess is not finite
        NewtonDiverged: If Newton fails
        SingularJacobian: If the bordered Jacobian is singular
    """
    problem = ShadowProblem(sp_, guess.grid)
    result = damped_newton(
        residual=lambda x: problem.residual(x, sp_.eps),
        jacobian=lambda x: problem.jacobian(x, sp_.eps),
        x0=guess.as_vector(),
        tol=tol,
        scale=lambda x: problem.scale(x, sp_.eps),
    )
    logger.info(f"Shadow solve at eps={sp_.eps:.6g}: {result.iterations} iterations, residual {result.residual:.3e}")
    return problem.state(result.x, sp_.eps)


def shadow_residuals(st: ShadowState, sp_: ShadowParams) -> Tuple[float, float]:
    """(max PDE residual, |integral constraint|) at the state."""
    problem = ShadowProblem(sp_, st.grid)
    r = problem.residual(st.as_vector(), st.eps)
    return float(np.max(np.abs(r[:-1]))), float(abs(r[-1]))


def shadow_linearization_spectrum(st: ShadowState, sp_: ShadowParams, m: int = 6) -> np.ndarray:
    """m leading finite eigenvalues of the bordered linearisation at the state."""
    problem = ShadowProblem(sp_, st.grid)
    return stability_eigenvalues(problem, st.as_vector(), st.eps, count=m)


def solve_v_at_lambda(sp_: ShadowParams, lam: float, v_guess: np.ndarray, grid: Grid1D, tol: float = 1e-12) -> np.ndarray:
    """Solve only the PDE rows with lambda held fixed."""
    problem = ShadowProblem(sp_, grid)
    n = grid.n

    def F(v):
        return problem.residual(np.concatenate([v, [lam]]), sp_.eps)[:n]

    def J(v):
        return problem.jacobian(np.concatenate([v, [lam]]), sp_.eps)[:n, :n]

    result = damped_newton(F, J, v_guess, tol=tol,
                           scale=lambda v: problem.scale(np.concatenate([v, [lam]]), sp_.eps))
    return result.x


def continue_shadow_branch(
    sp_: ShadowParams,
    n_mode: int = 1,
    eps_span: Optional[Tuple[float, float]] = None,
    ds: float = 0.02,
    s0: float = 0.01,
    max_points: int = 300,
    n: int = 128,
    with_stability: bool = True,
) -> Branch:
    """
    Continue the branch bifurcating from eps_n in eps.

    eps_span defaults to (eps_n / 4, 2 eps_n).

    Raises:
        BracketMiss: If eps_n is outside eps_span
        NewtonDiverged: With the partial branch attached
    """
    grid = Grid1D(n=n, L=sp_.L)
    problem = ShadowProblem(sp_, grid, n_mode)
    if eps_span is None:
        eps_ref = epsilon_n(sp_, n_mode, grid=grid)
        eps_span = (0.25 * eps_ref, 2.0 * eps_ref)
    return continue_problem(
        problem, eps_span, ds=ds, s0=s0, max_points=max_points, with_stability=with_stability
    )


def shadow_solution_at(sp_: ShadowParams, n_mode: int = 1, n: int = 128, ds: float = 0.02) -> ShadowState:
    """
    Nonconstant shadow solution at eps = sp_.eps on the mode-n branch.

    Follows the branch from eps_n until it passes sp_.eps, then
    interpolates between the bracketing points and corrects with Newton.

    Raises:
        NoBifurcation: If the branch never reaches sp_.eps
    """
    grid = Grid1D(n=n, L=sp_.L)
    eps_ref = epsilon_n(sp_, n_mode, grid=grid)
    if sp_.eps < eps_ref:
        span = (0.98 * sp_.eps, 2.0 * eps_ref)
    else:
        span = (0.5 * eps_ref, 1.02 * sp_.eps)
    try:
        branch = continue_shadow_branch(sp_, n_mode, eps_span=span, ds=ds, n=n, with_stability=False)
    except NewtonDiverged as e:
        if e.branch is None:
            raise
        branch = e.branch
    points = branch.points
    for a, b in zip(points, points[1:]):
        if (a.param - sp_.eps) * (b.param - sp_.eps) <= 0:
            t = 0.0 if b.param == a.param else (sp_.eps - a.param) / (b.param - a.param)
            x = (1.0 - t) * a.x + t * b.x
            guess = ShadowState(v=x[:-1], lam=float(x[-1]), eps=sp_.eps, grid=grid)
            return shadow_newton(sp_, guess)
    raise NoBifurcation(f"Branch from eps_{n_mode} does not reach eps={sp_.eps:.6g}")


def shadow_stability_flags(branch: Branch) -> List[bool]:
    return [pt.stable for pt in branch.points]
