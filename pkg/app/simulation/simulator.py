"""
IMEX time integration of the full system on (0, L) with Neumann boundaries.

Diffusion is backward Euler through tridiagonal solves; advection and
reactions are forward Euler. For tau = 0 the v-equation is solved as an
elliptic problem after each u update.
"""

import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_banded

from app.core.errors import NewtonDiverged, StepRejected
from app.core.kinetics import kinetics
from app.core.params import ModelParams
from app.simulation.diagnostics import InvariantMonitor, SimDiagnostics, snapshot_diagnostics
from app.simulation.grid import State
from app.simulation.operators import DiscreteOperators, operators_for

logger = logging.getLogger("pde_simulator")

NEGATIVITY_LIMIT = -1e-6
MAX_REJECTIONS = 20
CFL_NUMBER = 0.5
ELLIPTIC_MAX_ITER = 50


def _check_step(u: np.ndarray, v: np.ndarray, t: float) -> None:
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise StepRejected("Non-finite value after step", t=t)
    worst = min(float(np.min(u)), float(np.min(v)))
    if worst < NEGATIVITY_LIMIT:
        raise StepRejected(f"Negative value {worst:.3e} after step", t=t, worst=worst)


def _elliptic_v(ops: DiscreteOperators, p: ModelParams, u: np.ndarray, v0: np.ndarray) -> np.ndarray:
    """Newton on D2 v'' + g(u, v) = 0 with u frozen."""
    v = v0.copy()
    bands = ops.laplacian_bands
    for _ in range(ELLIPTIC_MAX_ITER):
        kin = kinetics(p, u, v)
        res = p.D2 * (ops.laplacian @ v) + kin.g
        ab = p.D2 * bands
        ab[1] += kin.g_v
        delta = solve_banded((1, 1), ab, -res)
        v = v + delta
        if np.max(np.abs(delta)) <= 1e-13 * max(1.0, float(np.max(np.abs(v)))):
            return v
    raise NewtonDiverged("Elliptic v-solve did not converge", iterations=ELLIPTIC_MAX_ITER)


def step(s: State, p: ModelParams, dt: float, enforce_cfl: bool = True) -> State:
    """
    Advance the state by one IMEX step.

    Args:
        s: Current state
        p: Model parameters
        dt: Time step (> 0)
        enforce_cfl: Reject steps whose explicit advection exceeds the CFL limit

    Returns:
        The new state at s.t + dt

    Raises:
        StepRejected: On non-finite values, negatives below -1e-6, a CFL breach
            or an elliptic solve failure
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    ops = operators_for(s.grid)
    u, v = s.u, s.v

    if enforce_cfl and p.chi != 0:
        speed = ops.advection_speed(v, p.chi, p.sensitivity)
        if speed * dt > CFL_NUMBER * s.grid.h:
            raise StepRejected(f"CFL limit exceeded (speed {speed:.3e})", t=s.t, speed=speed)

    kin = kinetics(p, u, v)
    u_rhs = u + dt * (ops.advection(u, v, p.chi, p.sensitivity) + kin.f)
    u_new = ops.implicit_solve(u_rhs, dt * p.D1)

    if p.tau > 0:
        v_rhs = v + (dt / p.tau) * kin.g
        v_new = ops.implicit_solve(v_rhs, dt * p.D2 / p.tau)
    else:
        try:
            v_new = _elliptic_v(ops, p, u_new, v)
        except NewtonDiverged as e:
            raise StepRejected(e.message, t=s.t) from e

    _check_step(u_new, v_new, s.t + dt)
    return State(u_new, v_new, s.grid, s.t + dt)


def _snapshot_times(t0: float, t_end: float, every: float) -> List[float]:
    count = int(math.floor((t_end - t0) / every + 1e-9))
    times = [t0 + i * every for i in range(1, count + 1)]
    if not times or t_end - times[-1] > 1e-12 * max(1.0, t_end):
        times.append(t_end)
    return times


def simulate(
    p: ModelParams,
    init: State,
    t_end: float,
    dt: float,
    snapshot_every: float,
    modes: Sequence[int] = (1, 2, 3),
    keep_states: bool = False,
    monitor: Optional[InvariantMonitor] = None,
    enforce_cfl: bool = True,
) -> Tuple[State, List[SimDiagnostics]]:
    """
    Integrate from init to t_end, recording diagnostics at every snapshot.

    Steps land exactly on snapshot times. A rejected step halves dt; after a
    success dt doubles back toward the requested value.

    Args:
        p: Model parameters
        init: Initial state (its t is the start time)
        t_end: Final time (> init.t)
        dt: Requested time step
        snapshot_every: Snapshot spacing
        modes: Mode indices recorded in each snapshot
        keep_states: Store the state in every SimDiagnostics record
        monitor: Invariant monitor; a fresh one is built from init when omitted
        enforce_cfl: Forwarded to step()

    Returns:
        (final state, snapshot diagnostics including t = init.t)

    Raises:
        StepRejected: After 20 consecutive rejections
        InvariantViolation: When a monitored bound is exceeded at a snapshot
    """
    if t_end <= init.t:
        raise ValueError(f"t_end must exceed the start time {init.t}, got {t_end}")
    if dt <= 0 or snapshot_every <= 0:
        raise ValueError("dt and snapshot_every must be positive")

    monitor = monitor or InvariantMonitor(p, init)
    monitor.check(init)
    diagnostics = [snapshot_diagnostics(init, p, modes, keep_states)]

    state = init
    dt_cur = dt
    rejections = 0
    total_rejections = 0
    accepted = 0
    for target in _snapshot_times(init.t, t_end, snapshot_every):
        while target - state.t > 1e-12 * max(1.0, abs(target)):
            h = min(dt_cur, target - state.t)
            try:
                new_state = step(state, p, h, enforce_cfl=enforce_cfl)
            except StepRejected as e:
                rejections += 1
                total_rejections += 1
                if rejections > MAX_REJECTIONS:
                    logger.error(f"Giving up at t={state.t:.6g} after {MAX_REJECTIONS} rejections")
                    raise StepRejected(
                        f"{MAX_REJECTIONS} consecutive rejections at t={state.t:.6g}: {e.message}",
                        t=state.t,
                        dt=h,
                    ) from e
                dt_cur = 0.5 * h
                logger.debug(f"Step rejected at t={state.t:.6g}, dt -> {dt_cur:.3e}: {e.message}")
                continue
            if target - new_state.t <= 1e-12 * max(1.0, abs(target)):
                new_state = new_state.with_time(target)
            state = new_state
            accepted += 1
            rejections = 0
            dt_cur = min(dt, 2.0 * dt_cur)
        monitor.check(state)
        diagnostics.append(snapshot_diagnostics(state, p, modes, keep_states))

    if total_rejections:
        logger.warning(f"{total_rejections} rejected steps during run to t={t_end}")
    logger.info(f"Simulated to t={state.t:.6g} in {accepted} steps")
    return state, diagnostics


def perturbed_state(grid, base: Tuple[float, float], k: int, amplitude: float, Q: float) -> State:
    """base + amplitude * (Q, 1) cos(k pi x / L)."""
    c = grid.cosine(k)
    return State(base[0] + amplitude * Q * c, base[1] + amplitude * c, grid, 0.0)


def random_state(grid, base: Tuple[float, float], amplitude: float, seed: int) -> State:
    """base times (1 + amplitude * U(-1, 1)) noise, from a seeded generator."""
    rng = np.random.default_rng(seed)
    u = base[0] * (1.0 + amplitude * rng.uniform(-1.0, 1.0, grid.n))
    v = base[1] * (1.0 + amplitude * rng.uniform(-1.0, 1.0, grid.n))
    return State(u, v, grid, 0.0)
