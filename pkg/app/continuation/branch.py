"""
Branch switching and pseudo-arclength continuation of steady states.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import eigs

from app.core.errors import BracketMiss, NewtonDiverged, NumericalError
from app.core.kinetics import coexistence_state
from app.core.params import ModelParams
from app.continuation.newton import damped_newton
from app.continuation.problem import FullSystemProblem, SteadyProblem
from app.simulation.grid import Grid1D, State
from app.stability.linear import chi_k

logger = logging.getLogger("steady_continuation")

STABILITY_TOL = 1e-8
DENSE_EIG_LIMIT = 800
CORRECTOR_MAX_ITER = 15
MAX_DS_HALVINGS = 8
MAX_FOLDS = 4


@dataclass
class BranchPoint:
    """One converged steady state on a branch."""

    param: float
    x: np.ndarray
    amplitude: float
    stable: bool
    residual: float
    norm_u: float
    norm_v: float
    leading_eigenvalue: complex = 0j

    @property
    def chi(self) -> float:
        return self.param


@dataclass
class Branch:
    """Ordered branch points plus the bookkeeping of how continuation ended."""

    param_name: str
    param_ref: float
    k: int
    points: List[BranchPoint] = field(default_factory=list)
    folds: List[int] = field(default_factory=list)
    stop_reason: str = ""

    def __len__(self) -> int:
        return len(self.points)

    @property
    def params(self) -> np.ndarray:
        return np.array([pt.param for pt in self.points])

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([pt.amplitude for pt in self.points])

    def rows(self) -> List[dict]:
        return [
            {
                self.param_name: pt.param,
                "amplitude": pt.amplitude,
                "stable": pt.stable,
                "residual": pt.residual,
                "norm_u": pt.norm_u,
                "norm_v": pt.norm_v,
            }
            for pt in self.points
        ]


def stability_eigenvalues(problem: SteadyProblem, x: np.ndarray, param: float, count: int = 6) -> np.ndarray:
    """
    Leading eigenvalues of J v = mu M v, largest real part first.

    Infinite eigenvalues from a singular mass matrix are dropped.
    """
    J = problem.jacobian(x, param)
    M = problem.mass_matrix()
    if problem.size <= DENSE_EIG_LIMIT:
        alpha_beta = scipy.linalg.eig(J.toarray(), M.toarray(), right=False, homogeneous_eigvals=True)
        alpha, beta = alpha_beta
        finite = np.abs(beta) > 1e-12 * np.maximum(1.0, np.abs(alpha))
        mu = alpha[finite] / beta[finite]
    else:
        mu = eigs(sp.csc_matrix(J), k=count, M=sp.csc_matrix(M), sigma=0.0, which="LM", return_eigenvectors=False)
        mu = mu[np.isfinite(mu)]
    order = np.argsort(-mu.real, kind="stable")
    return mu[order][:count]


def is_stable(eigenvalues: Sequence[complex]) -> bool:
    return bool(len(eigenvalues) == 0 or np.max(np.real(eigenvalues)) < STABILITY_TOL)


def solve_at_amplitude(
    problem: SteadyProblem, s: float, x_guess: np.ndarray, param_guess: float, tol: float = 1e-12
) -> Tuple[np.ndarray, float, float]:
    """
    Solve R(x, param) = 0 together with amplitude(x) = s.

    Returns:
        (x, param, residual of R)
    """
    N = problem.size
    grad = problem.amplitude_gradient()
    x_trivial = problem.trivial()

    def F(z):
        x, q = z[:N], z[N]
        return np.concatenate([problem.residual(x, q), [grad @ (x - x_trivial) - s]])

    def JF(z):
        x, q = z[:N], z[N]
        return sp.bmat(
            [
                [problem.jacobian(x, q), sp.csc_matrix(problem.param_derivative(x, q)[:, None])],
                [sp.csr_matrix(grad[None, :]), None],
            ],
            format="csc",
        )

    result = damped_newton(F, JF, np.concatenate([x_guess, [param_guess]]), tol=tol,
                           scale=lambda z: problem.scale(z[:N], z[N]))
    x, q = result.x[:N], result.x[N]
    return x, q, float(np.max(np.abs(problem.residual(x, q))))


def _make_point(problem: SteadyProblem, x: np.ndarray, param: float, with_stability: bool) -> BranchPoint:
    residual = float(np.max(np.abs(problem.residual(x, param))))
    if with_stability:
        mu = stability_eigenvalues(problem, x, param)
        stable, lead = is_stable(mu), (complex(mu[0]) if len(mu) else 0j)
    else:
        stable, lead = False, 0j
    norm_u, norm_v = problem.norms(x)
    return BranchPoint(
        param=float(param),
        x=x,
        amplitude=problem.amplitude(x),
        stable=stable,
        residual=residual,
        norm_u=norm_u,
        norm_v=norm_v,
        leading_eigenvalue=lead,
    )


def continue_problem(
    problem: SteadyProblem,
    span: Tuple[float, float],
    ds: float = 0.02,
    s0: float = 0.01,
    max_points: int = 500,
    with_stability: bool = True,
    tol: float = 1e-12,
) -> Branch:
    """
    Switch onto the bifurcating branch and follow it by pseudo-arclength.

    The branch is entered by amplitude-constrained solves at s0 and 2*s0
    seeded with the null vector of the grid-consistent bifurcation; from
    there a secant predictor and an arclength-constrained Newton corrector
    take over. The arclength metric is (1/L) * integral of dx^2 plus
    (d param / param_ref)^2.

    Raises:
        BracketMiss: If the bifurcation value is outside span
        NewtonDiverged: With the partial branch attached, when ds falls
            below its minimum
    """
    lo, hi = span
    mode, param_ref = problem.critical_mode()
    if not lo < param_ref < hi:
        raise BracketMiss(
            f"{problem.param_name}_k={param_ref:.6g} is not inside ({lo:.6g}, {hi:.6g})",
            param_ref=param_ref,
        )
    if ds <= 0:
        raise ValueError(f"ds must be positive, got {ds}")

    branch = Branch(param_name=problem.param_name, param_ref=param_ref, k=problem.k)
    pscale = abs(param_ref) if param_ref != 0 else 1.0
    W = problem.arclength_weights()

    def norm(dx, dq):
        return float(np.sqrt(W @ (dx * dx) + (dq / pscale) ** 2))

    x_trivial = problem.trivial()
    seeds = []
    for s in (s0, 2.0 * s0):
        guess = x_trivial + s * mode
        x, q, _ = solve_at_amplitude(problem, s, guess, param_ref, tol=tol)
        seeds.append((x, q))
        branch.points.append(_make_point(problem, x, q, with_stability))
    logger.info(
        f"Entered branch k={problem.k} at {problem.param_name}={seeds[0][1]:.10g} "
        f"({problem.param_name}_k={param_ref:.10g})"
    )

    (x_prev, q_prev), (x_cur, q_cur) = seeds
    ds_cur = ds
    ds_min = ds / 2**MAX_DS_HALVINGS
    last_tq = None
    N = problem.size

    while True:
        if len(branch.points) >= max_points:
            branch.stop_reason = "max_points"
            break
        if not lo <= q_cur <= hi:
            branch.stop_reason = "span_edge"
            break

        dx, dq = x_cur - x_prev, q_cur - q_prev
        length = norm(dx, dq)
        tx, tq = dx / length, dq / length
        if last_tq is not None and np.sign(tq) != np.sign(last_tq) and tq != 0:
            branch.folds.append(len(branch.points) - 1)
            logger.info(f"Fold near {problem.param_name}={q_cur:.10g}")
            if len(branch.folds) >= MAX_FOLDS:
                branch.stop_reason = "fold_accumulation"
                break
        last_tq = tq

        while True:
            x_pred = x_cur + ds_cur * tx
            q_pred = q_cur + ds_cur * tq

            def F(z, x_pred=x_pred, q_pred=q_pred):
                x, q = z[:N], z[N]
                arc = W @ (tx * (x - x_pred)) + tq * (q - q_pred) / pscale**2
                return np.concatenate([problem.residual(x, q), [arc]])

            def JF(z):
                x, q = z[:N], z[N]
                return sp.bmat(
                    [
                        [problem.jacobian(x, q), sp.csc_matrix(problem.param_derivative(x, q)[:, None])],
                        [sp.csr_matrix((W * tx)[None, :]), sp.csr_matrix([[tq / pscale**2]])],
                    ],
                    format="csc",
                )

            try:
                result = damped_newton(
                    F, JF, np.concatenate([x_pred, [q_pred]]), tol=tol,
                    scale=lambda z: problem.scale(z[:N], z[N]), max_iter=CORRECTOR_MAX_ITER,
                )
                break
            except NumericalError as e:
                ds_cur *= 0.5
                logger.debug(f"Corrector failed ({e.message}); ds -> {ds_cur:.3e}")
                if ds_cur < ds_min:
                    branch.stop_reason = "newton_diverged"
                    raise NewtonDiverged(
                        f"Continuation stalled at {problem.param_name}={q_cur:.10g}",
                        branch=branch,
                        param=q_cur,
                    ) from e

        x_prev, q_prev = x_cur, q_cur
        x_cur, q_cur = result.x[:N], result.x[N]
        branch.points.append(_make_point(problem, x_cur, q_cur, with_stability))
        ds_cur = min(ds, 1.5 * ds_cur)

    logger.info(f"Branch k={problem.k}: {len(branch)} points, stopped on {branch.stop_reason}")
    return branch


def branch_switch(p: ModelParams, k: int, s: float = 1e-2, grid: Optional[Grid1D] = None, n: int = 128) -> State:
    """
    First-order ansatz (u_bar, v_bar) + s (Q_k, 1) cos(k pi x / L) on the grid.

    Raises:
        NoCoexistenceState: If (u_bar, v_bar) is not positive
    """
    grid = grid or Grid1D(n=n, L=p.L)
    u_bar, v_bar = coexistence_state(p)
    Q = chi_k(p, k, grid=grid).Q_k
    c = grid.cosine(k)
    return State(u_bar + s * Q * c, v_bar + s * c, grid, 0.0)


def continue_branch(
    p: ModelParams,
    k: int,
    chi_span: Tuple[float, float],
    ds: float = 0.02,
    n: int = 128,
    s0: float = 0.01,
    max_points: int = 500,
    tau_stability: float = 1.0,
) -> Branch:
    """
    Continue the branch bifurcating from chi_k in chi.

    Raises:
        BracketMiss: If chi_k is not inside chi_span
        NewtonDiverged: With the partial branch attached
    """
    problem = FullSystemProblem(p, Grid1D(n=n, L=p.L), k, tau_stability=tau_stability)
    return continue_problem(problem, chi_span, ds=ds, s0=s0, max_points=max_points)


def fit_pitchfork(branch: Branch, param_ref: Optional[float] = None, s_max: float = 0.05) -> np.ndarray:
    """
    Least-squares fit of param(s) - param_ref = K1 s + K2 s^2 + K3 s^3 + K4 s^4.

    Returns:
        Coefficients [K1, K2, K3, K4] (fewer when there are fewer points)
    """
    ref = branch.param_ref if param_ref is None else param_ref
    s = branch.amplitudes
    q = branch.params
    mask = (np.abs(s) > 0) & (np.abs(s) <= s_max)
    s, q = s[mask], q[mask]
    degree = min(4, len(s))
    if degree < 2:
        raise ValueError(f"Need at least two branch points with 0 < |s| <= {s_max}")
    A = np.vstack([s**j for j in range(1, degree + 1)]).T
    coeffs, *_ = np.linalg.lstsq(A, q - ref, rcond=None)
    return coeffs


def branch_state(branch: Branch, index: int, grid: Grid1D) -> State:
    return State.from_vector(branch.points[index].x, grid)
