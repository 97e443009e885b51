"""
Damped Newton iteration for sparse nonlinear systems.

Convergence is tested relative to an operator scale: an absolute 1e-12
residual sits below roundoff once the Laplacian carries a 1/h^2 factor.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import MatrixRankWarning, spsolve

from app.core.errors import NewtonDiverged, NonFiniteState, SingularJacobian
from app.core.params import ModelParams
from app.simulation.grid import State
from app.simulation.operators import operators_for

logger = logging.getLogger("steady_continuation")

MAX_ITERATIONS = 50
MAX_HALVINGS = 8
POLISH_STEPS = 2


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual: float


def linear_solve(J, rhs: np.ndarray) -> np.ndarray:
    """
    Solve J x = rhs with a sparse direct factorisation.

    Raises:
        SingularJacobian: If the factorisation is rank deficient
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", MatrixRankWarning)
        if sp.issparse(J):
            x = spsolve(sp.csc_matrix(J), rhs)
        else:
            try:
                x = np.linalg.solve(J, rhs)
            except np.linalg.LinAlgError as e:
                raise SingularJacobian(f"Dense Jacobian is singular: {e}") from e
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(x)):
        raise SingularJacobian("Jacobian is singular to working precision")
    return x


def damped_newton(
    residual: Callable[[np.ndarray], np.ndarray],
    jacobian: Callable[[np.ndarray], object],
    x0: np.ndarray,
    tol: float = 1e-12,
    scale: Optional[Callable[[np.ndarray], float]] = None,
    max_iter: int = MAX_ITERATIONS,
    max_halvings: int = MAX_HALVINGS,
) -> NewtonResult:
    """
    Newton with step halving.

    Args:
        residual: F(x)
        jacobian: dF/dx at x (sparse or dense)
        x0: Initial guess
        tol: Tolerance on max|F| relative to scale(x)
        scale: Operator scale; 1 when omitted
        max_iter: Newton iterations before giving up
        max_halvings: Step halvings per iteration

    Returns:
        NewtonResult with the converged iterate

    Raises:
        NonFiniteState: If the guess is not finite
        SingularJacobian: If a linear solve fails
        NewtonDiverged: After max_iter iterations or a failed line search
    """
    x = np.array(x0, dtype=float)
    if not np.all(np.isfinite(x)):
        raise NonFiniteState("Newton guess contains NaN or Inf")
    scale = scale or (lambda _x: 1.0)

    r = residual(x)
    res = float(np.max(np.abs(r)))
    for it in range(max_iter + 1):
        target = tol * scale(x)
        if res <= target:
            x, res = _polish(residual, jacobian, x, r, res)
            logger.debug(f"Newton converged in {it} iterations, residual {res:.3e}")
            return NewtonResult(x=x, iterations=it, residual=res)
        if it == max_iter:
            break

        delta = linear_solve(jacobian(x), -r)
        t = 1.0
        for _ in range(max_halvings + 1):
            x_try = x + t * delta
            r_try = residual(x_try)
            res_try = float(np.max(np.abs(r_try)))
            if np.isfinite(res_try) and res_try < res:
                break
            t *= 0.5
        else:
            raise NewtonDiverged(
                f"Line search failed after {max_halvings} halvings (residual {res:.3e})",
                iterations=it,
                residual=res,
            )
        x, r, res = x_try, r_try, res_try

    raise NewtonDiverged(f"No convergence after {max_iter} iterations (residual {res:.3e})", residual=res)


def _polish(residual, jacobian, x, r, res):
    """A few extra full steps while they still reduce the residual."""
    for _ in range(POLISH_STEPS):
        if res == 0.0:
            break
        try:
            x_try = x + linear_solve(jacobian(x), -r)
        except SingularJacobian:
            break
        r_try = residual(x_try)
        res_try = float(np.max(np.abs(r_try)))
        if not res_try < 0.5 * res:
            break
        x, r, res = x_try, r_try, res_try
    return x, res


def newton_solve(guess: State, p: ModelParams, tol: float = 1e-12) -> State:
    """
    Solve the discretised stationary system at chi = p.chi.

    Raises:
        NonFiniteState: If the guess contains NaN or Inf
        NewtonDiverged: After 50 iterations
        SingularJacobian: Near a bifurcation point
    """
    grid = guess.grid
    ops = operators_for(grid)
    n = grid.n

    result = damped_newton(
        residual=lambda y: ops.steady_residual(y[:n], y[n:], p),
        jacobian=lambda y: ops.steady_jacobian(y[:n], y[n:], p),
        x0=guess.as_vector(),
        tol=tol,
        scale=lambda y: ops.residual_scale(y[:n], y[n:], p),
    )
    logger.info(f"Steady state at chi={p.chi:.6g}: {result.iterations} iterations, residual {result.residual:.3e}")
    return State.from_vector(result.x, grid, guess.t)
