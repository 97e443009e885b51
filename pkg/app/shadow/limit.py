"""
Numerical check that full-system steady states approach the shadow system
as D1 grows with chi/D1 = r held fixed.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from app.core.kinetics import coexistence_state
from app.core.params import ModelParams, ShadowParams
from app.continuation.newton import newton_solve
from app.shadow.system import ShadowState, shadow_solution_at, solve_v_at_lambda
from app.simulation.grid import Grid1D, State
from app.simulation.simulator import simulate

logger = logging.getLogger("shadow_system")

LIMIT_COLUMNS = ["D1", "osc_w", "v_distance", "lambda_gap"]


def _shadow_params(p: ModelParams, r: float) -> ShadowParams:
    return ShadowParams(
        a1=p.a1, a2=p.a2, b1=p.b1, b2=p.b2, c1=p.c1, c2=p.c2,
        r=r, eps=p.D2, L=p.L, sensitivity=p.sensitivity.model_dump(),
    )


def _limit_row(
    D1: float,
    p: ModelParams,
    r: float,
    sp_: Optional[ShadowParams],
    shadow: Optional[ShadowState],
    grid: Grid1D,
    relax_time: float,
) -> Dict[str, float]:
    full = p.replace(D1=D1, chi=r * D1)
    if shadow is None:
        u_bar, v_bar = coexistence_state(full)
        c = grid.cosine(1)
        guess = State(u_bar * (1.0 + 1e-3 * c), v_bar * (1.0 + 1e-3 * c), grid)
    else:
        guess = State(shadow.lifted_u(sp_), shadow.v.copy(), grid)
    if relax_time > 0:
        guess, _ = simulate(full, guess, t_end=relax_time, dt=1e-3, snapshot_every=relax_time, enforce_cfl=False)
    st = newton_solve(guess, full)

    E = np.exp(-r * p.sensitivity.Phi(st.v))
    w = st.u / E
    mean_w = grid.integrate(w) / grid.L
    osc = float((np.max(w) - np.min(w)) / mean_w)
    if shadow is None:
        v_distance = float(np.max(st.v) - np.min(st.v))
        lam_gap = 0.0
    else:
        v_matched = solve_v_at_lambda(sp_, mean_w, shadow.v, grid)
        v_distance = float(np.max(np.abs(st.v - v_matched)))
        lam_gap = float(abs(shadow.lam - mean_w))
    logger.info(f"D1={D1:.3g}: osc(w)={osc:.3e}, |v - v_shadow|={v_distance:.3e}")
    return {"D1": float(D1), "osc_w": osc, "v_distance": v_distance, "lambda_gap": lam_gap}


def shadow_limit_check(
    p: ModelParams,
    r: float,
    D1_list: Sequence[float],
    n: int = 96,
    workers: int = 1,
    relax_time: float = 0.0,
    n_mode: int = 1,
) -> pd.DataFrame:
    """
    For each D1, solve the full system at chi = r D1 and compare it with
    the shadow solution at eps = p.D2.

    The full system is seeded with the lifted shadow solution
    u = lambda exp(-r Phi(v)) and corrected by Newton. With r = 0 the
    shadow solution is constant and v_distance is the oscillation of v.

    Returns:
        DataFrame with columns D1, osc_w, v_distance, lambda_gap in the
        order of D1_list
    """
    grid = Grid1D(n=n, L=p.L)
    sp_, shadow = None, None
    if r > 0:
        sp_ = _shadow_params(p, r)
        shadow = shadow_solution_at(sp_, n_mode=n_mode, n=n)
    logger.info(f"Shadow-limit check: r={r:.6g}, eps={p.D2:.6g}, D1 in {list(D1_list)}")

    def job(D1):
        return _limit_row(D1, p, r, sp_, shadow, grid, relax_time)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(job, D1_list))
    else:
        rows = [job(D1) for D1 in D1_list]
    return pd.DataFrame(rows, columns=LIMIT_COLUMNS)
