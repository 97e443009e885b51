"""
Spectral diagnostics and a-priori bound monitors for simulation runs.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.core.errors import InvariantViolation
from app.core.params import ModelParams
from app.simulation.grid import Grid1D, State
from app.simulation.operators import steady_residual_norm

logger = logging.getLogger("pde_simulator")

POSITIVITY_TOL = 1e-10
V_BOUND_TOL = 1e-8
MASS_BOUND_TOL = 1e-6


def mode_amplitude(f: np.ndarray, grid: Grid1D, k: int) -> float:
    """
    Cosine coefficient of f for mode k.

    (2/L) * integral of f cos(k pi x / L), or (1/L) * integral of f for k = 0,
    both by the trapezoid rule.
    """
    if k < 0:
        raise ValueError(f"Mode index must be >= 0, got {k}")
    scale = 1.0 / grid.L if k == 0 else 2.0 / grid.L
    return scale * float(grid.weights @ (f * grid.cosine(k)))


@dataclass
class SimDiagnostics:
    """One snapshot record."""

    t: float
    mass_u: float
    sup_v: float
    residual: float
    amplitudes: Dict[int, float] = field(default_factory=dict)
    state: Optional[State] = None

    def as_row(self, modes: Sequence[int]) -> Dict[str, float]:
        row = {"t": self.t, "mass_u": self.mass_u, "sup_v": self.sup_v, "residual": self.residual}
        for k in modes:
            row[f"amp_k{k}"] = self.amplitudes[k]
        return row


def snapshot_diagnostics(state: State, p: ModelParams, modes: Sequence[int], keep_state: bool = False) -> SimDiagnostics:
    return SimDiagnostics(
        t=state.t,
        mass_u=state.grid.integrate(state.u),
        sup_v=float(np.max(state.v)),
        residual=steady_residual_norm(state, p),
        amplitudes={k: mode_amplitude(state.v, state.grid, k) for k in modes},
        state=state if keep_state else None,
    )


@dataclass
class MonitorRecord:
    bound: float
    worst: float = -np.inf
    passed: bool = True


class InvariantMonitor:
    """
    Runtime checks of the a-priori bounds of a run.

    Monitors positivity of u and v, the comparison bound
    max v <= max(|v0|_inf, a2/c2) and, when b1 > 0, the logistic mass bound
    on the integral of u.
    """

    def __init__(self, p: ModelParams, init: State):
        self.p = p
        v_cap = max(float(np.max(init.v)), p.a2 / p.c2 if p.c2 > 0 else np.inf)
        self.records: Dict[str, MonitorRecord] = {
            "positivity_u": MonitorRecord(bound=POSITIVITY_TOL),
            "positivity_v": MonitorRecord(bound=POSITIVITY_TOL),
            "v_bound": MonitorRecord(bound=v_cap + V_BOUND_TOL),
        }
        if p.b1 > 0:
            mass_cap = max(init.grid.integrate(init.u), p.a1 * init.grid.L / p.b1)
            self.records["mass_bound"] = MonitorRecord(bound=mass_cap + MASS_BOUND_TOL)

    def _record(self, name: str, measured: float, exceeded: bool, t: float) -> None:
        rec = self.records[name]
        rec.worst = max(rec.worst, measured)
        if exceeded:
            rec.passed = False
            logger.error(f"Invariant {name} violated at t={t:.6g}: {measured:.17g} vs {rec.bound:.17g}")
            raise InvariantViolation(name, measured, rec.bound, t=t)

    def check(self, state: State) -> None:
        """
        Evaluate every monitor at the state.

        Raises:
            InvariantViolation: On the first bound that is exceeded
        """
        min_u = float(np.min(state.u))
        min_v = float(np.min(state.v))
        # positivity records store -min so that "worst" is the largest excursion
        self._record("positivity_u", -min_u, min_u < -POSITIVITY_TOL, state.t)
        self._record("positivity_v", -min_v, min_v < -POSITIVITY_TOL, state.t)
        max_v = float(np.max(state.v))
        self._record("v_bound", max_v, max_v > self.records["v_bound"].bound, state.t)
        if "mass_bound" in self.records:
            mass = state.grid.integrate(state.u)
            self._record("mass_bound", mass, mass > self.records["mass_bound"].bound, state.t)

    def summary(self) -> Dict[str, Dict[str, object]]:
        """Pass/fail per monitor for the run manifest."""
        return {
            name: {"passed": rec.passed, "worst": float(rec.worst), "bound": float(rec.bound)}
            for name, rec in self.records.items()
        }


def fit_growth_rate(times: Sequence[float], amplitudes: Sequence[float]) -> float:
    """Least-squares slope of log|amplitude| against time."""
    t = np.asarray(times, dtype=float)
    a = np.abs(np.asarray(amplitudes, dtype=float))
    if t.size < 2 or np.any(a <= 0):
        raise ValueError("Need at least two nonzero amplitudes to fit a growth rate")
    slope, _ = np.polyfit(t, np.log(a), 1)
    return float(slope)


def growth_series(diagnostics: List[SimDiagnostics], k: int, t_min: float = 0.0):
    """(times, amplitudes) of mode k for snapshots with t >= t_min."""
    picked = [d for d in diagnostics if d.t >= t_min]
    return [d.t for d in picked], [d.amplitudes[k] for d in picked]
