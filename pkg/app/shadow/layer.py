"""
Single transition-layer solutions of the shadow system for small eps.

With Phi(v) = v and b1 = 0 the v-equation at fixed lambda is the
bistable problem eps v'' + f(lambda, v) = 0. A layer joins the plateau
v_bar2(lambda) on the left to 0 on the right. It exists at the
equal-area multiplier lambda*, where the heteroclinic connection of
V'' + f(lambda*, V) = 0 exists, and the integral constraint fixes where
the interface sits.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from app.core.errors import DomainError, NoEqualArea, OutsideI0, OutsideWindow, RTooSmall
from app.core.params import ShadowParams
from app.shadow.system import ShadowState, shadow_newton, shadow_residuals
from app.simulation.grid import Grid1D

logger = logging.getLogger("transition_layer")

WINDOW_RTOL = 1e-12
HETEROCLINIC_DELTA = 1e-8
TAIL_FIT_RANGE = (1e-4, 1e-3)
PLATEAU_WARN_TOL = 1e-6


class BistableStructure(BaseModel):
    """Zeros of f(lambda, .) on [0, a2/c2]."""

    model_config = ConfigDict(frozen=True)

    lam: float
    v_bar1: float = Field(description="Unstable middle zero")
    v_bar2: float = Field(description="Stable upper zero (plateau)")
    v_star: float = Field(description="a2/c2 - 1/r, the tangency location")
    lambda_window: Tuple[float, float]


class LayerPrediction(BaseModel):
    """Interface position and multiplier predicted for a plateau height."""

    model_config = ConfigDict(frozen=True)

    v_bar2: float
    x0: float
    lambda0: float
    r_star: float
    r_split: float
    v_bar2_double_star: float
    I0: Tuple[float, float]


class LayerReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    eps: float
    v_bar2_requested: Optional[float] = None
    v_bar2_target: float
    lambda_star: float
    lambda0: float
    lambda_eps: float
    x0_predicted: float
    x0_measured: float
    interface_error: float
    r_star: float
    v_bar2_double_star: float
    I0: Tuple[float, float]
    kappa: float
    residual: float
    constraint: float


def _require_layer_params(sp_: ShadowParams) -> None:
    if sp_.b1 != 0 or not sp_.sensitivity.is_unit:
        raise DomainError("Transition layers require b1 = 0 and Phi(v) = v", b1=sp_.b1)
    if not sp_.a1 / sp_.a2 < sp_.c1 / sp_.c2:
        raise DomainError("Transition layers require a1/a2 < c1/c2", a1=sp_.a1, a2=sp_.a2, c1=sp_.c1, c2=sp_.c2)


def _h(sp_: ShadowParams, lam: float, v):
    """f(lambda, v) / v."""
    return sp_.a2 - sp_.b2 * lam * np.exp(-sp_.r * v) - sp_.c2 * v


def reaction(sp_: ShadowParams, lam: float, v):
    return _h(sp_, lam, v) * v


def reaction_derivative(sp_: ShadowParams, lam: float, v):
    e = np.exp(-sp_.r * v)
    return sp_.a2 - sp_.b2 * lam * e - 2.0 * sp_.c2 * v + sp_.r * sp_.b2 * lam * e * v


def reaction_primitive(sp_: ShadowParams, lam: float, V):
    """F(lambda, V) = integral of f(lambda, s) over [0, V]."""
    r = sp_.r
    tail = (1.0 - np.exp(-r * V) * (1.0 + r * V)) / (r * r)
    return sp_.a2 * V**2 / 2.0 - sp_.c2 * V**3 / 3.0 - sp_.b2 * lam * tail


def full_window(sp_: ShadowParams) -> Tuple[float, float]:
    """(a2/b2, c2/(b2 r) exp(a2 r / c2 - 1)): lambda with three zeros."""
    return sp_.a2 / sp_.b2, sp_.c2 / (sp_.b2 * sp_.r) * math.exp(sp_.a2 * sp_.r / sp_.c2 - 1.0)


def bistable_roots(lam: float, sp_: ShadowParams) -> BistableStructure:
    """
    The two positive zeros of f(lambda, .).

    Raises:
        RTooSmall: If r <= c2/a2 (no interior maximum)
        OutsideWindow: If lambda is outside (a2/b2, lambda_max]
    """
    v_star = sp_.a2 / sp_.c2 - 1.0 / sp_.r
    if v_star <= 0:
        raise RTooSmall(f"r = {sp_.r:.6g} must exceed c2/a2 = {sp_.c2 / sp_.a2:.6g}")
    lo, hi = full_window(sp_)
    if lam <= lo or lam > hi * (1.0 + WINDOW_RTOL):
        raise OutsideWindow(f"lambda = {lam:.10g} outside ({lo:.10g}, {hi:.10g}]", lam=lam)
    if math.isclose(lam, hi, rel_tol=WINDOW_RTOL):
        return BistableStructure(lam=lam, v_bar1=v_star, v_bar2=v_star, v_star=v_star, lambda_window=(lo, hi))
    h = lambda v: _h(sp_, lam, v)  # noqa: E731
    v1 = brentq(h, 0.0, v_star, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    v2 = brentq(h, v_star, sp_.a2 / sp_.c2, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return BistableStructure(lam=lam, v_bar1=v1, v_bar2=v2, v_star=v_star, lambda_window=(lo, hi))


def v_bar2_of(lam: float, sp_: ShadowParams) -> float:
    return bistable_roots(lam, sp_).v_bar2


def lambda_of(v_bar2: float, sp_: ShadowParams) -> float:
    """Inverse of v_bar2(lambda): (a2 - c2 v) exp(r v) / b2."""
    return (sp_.a2 - sp_.c2 * v_bar2) * math.exp(sp_.r * v_bar2) / sp_.b2


def equal_area_lambda(sp_: ShadowParams) -> Tuple[float, float]:
    """
    (lambda*, v_bar2*) with integral of f(lambda*, s) over [0, v_bar2*] = 0.

    Raises:
        NoEqualArea: If the area does not change sign across the window
    """
    lo, hi = full_window(sp_)

    def area(lam):
        return float(reaction_primitive(sp_, lam, v_bar2_of(lam, sp_)))

    a = lo * (1.0 + 1e-12)
    b = hi * (1.0 - 1e-12)
    fa, fb = area(a), area(b)
    if not fa > 0 > fb:
        raise NoEqualArea(f"Area does not change sign on the window ({fa:.3e}, {fb:.3e})")
    lam_star = brentq(area, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    v2 = v_bar2_of(lam_star, sp_)
    logger.debug(f"Equal-area lambda* = {lam_star:.15g}, v_bar2* = {v2:.15g}")
    return lam_star, v2


def lambda_window(sp_: ShadowParams) -> Tuple[float, float]:
    """
    Admissible multipliers for layer solutions.

    For r* < r < r_split the plateau must stay above a1/c1, which cuts
    the upper end to (a2 c1 - a1 c2)/(b2 c1) exp(a1 r / c1).
    """
    _require_layer_params(sp_)
    lo, hi = full_window(sp_)
    r_star, r_split = critical_rs(sp_)
    if r_star < sp_.r < r_split:
        hi = (sp_.a2 * sp_.c1 - sp_.a1 * sp_.c2) / (sp_.b2 * sp_.c1) * math.exp(sp_.a1 * sp_.r / sp_.c1)
    return lo, hi


def critical_rs(sp_: ShadowParams) -> Tuple[float, float]:
    """(r*, r_split)."""
    gap = sp_.a2 * sp_.c1 - sp_.a1 * sp_.c2
    r_star = (sp_.c1 / sp_.a1) * math.log(sp_.a2 * sp_.c1 / gap)
    r_split = sp_.c1 * sp_.c2 / gap
    return r_star, r_split


def interface_position(v_bar2: float, sp_: ShadowParams) -> float:
    """x0 = a1 L / (a1 - (a1 - c1 v_bar2) exp(-r v_bar2))."""
    return sp_.a1 * sp_.L / (sp_.a1 - (sp_.a1 - sp_.c1 * v_bar2) * math.exp(-sp_.r * v_bar2))


def plateau_interval(sp_: ShadowParams) -> Tuple[float, float, float, float]:
    """(r*, r_split, I0 lower, I0 upper) for the current r."""
    _require_layer_params(sp_)
    r_star, r_split = critical_rs(sp_)
    if sp_.r <= r_star:
        raise RTooSmall(f"r = {sp_.r:.6g} must exceed r* = {r_star:.6g}", r=sp_.r, r_star=r_star)
    v_star = sp_.a2 / sp_.c2 - 1.0 / sp_.r
    v_dd = brentq(
        lambda v: lambda_of(v, sp_) - sp_.a2 / sp_.b2,
        max(v_star, 0.0), sp_.a2 / sp_.c2, xtol=1e-15, rtol=4 * np.finfo(float).eps,
    )
    lower = sp_.a1 / sp_.c1 if sp_.r < r_split else v_star
    return r_star, r_split, lower, v_dd


def layer_predict(v_bar2: float, sp_: ShadowParams) -> LayerPrediction:
    """
    Interface position and multiplier for plateau height v_bar2.

    Raises:
        DomainError: If b1 != 0, Phi(v) != v or a1/a2 >= c1/c2
        RTooSmall: If r <= r*
        OutsideI0: If v_bar2 is not in I0
    """
    r_star, r_split, lower, v_dd = plateau_interval(sp_)
    if not lower < v_bar2 < v_dd:
        raise OutsideI0(f"v_bar2 = {v_bar2:.10g} outside I0 = ({lower:.10g}, {v_dd:.10g})", v_bar2=v_bar2)
    return LayerPrediction(
        v_bar2=v_bar2,
        x0=interface_position(v_bar2, sp_),
        lambda0=lambda_of(v_bar2, sp_),
        r_star=r_star,
        r_split=r_split,
        v_bar2_double_star=v_dd,
        I0=(lower, v_dd),
    )


@dataclass(frozen=True, eq=False)
class HeteroclinicProfile:
    """Monotone connection from v_bar2 (z -> -inf) to 0 (z -> +inf), V(0) = v_bar2/2."""

    z: np.ndarray
    V: np.ndarray
    lambda_star: float
    v_bar2: float
    kappa: float
    mu: float
    decay_rate: float
    hamiltonian_drift: float

    def __call__(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.interp(z, self.z, self.V)
        left, right = z < self.z[0], z > self.z[-1]
        out[left] = self.v_bar2 - (self.v_bar2 - self.V[0]) * np.exp(self.mu * (z[left] - self.z[0]))
        out[right] = self.V[-1] * np.exp(-self.kappa * (z[right] - self.z[-1]))
        return out


def heteroclinic_profile(
    sp_: ShadowParams,
    lam: Optional[float] = None,
    z_span: Optional[float] = None,
    nz: int = 2001,
) -> HeteroclinicProfile:
    """
    Connection of V'' + f(lambda*, V) = 0 from v_bar2 to 0.

    The orbit leaves the saddle (v_bar2, 0) along its unstable direction
    and is integrated with DOP853 until it starts to turn away from 0.
    A lambda other than lambda* cannot carry a connection; the
    equal-area value is used and a differing request is logged.

    Raises:
        OutsideWindow: If lam is given and outside the window
        NoEqualArea: If lambda* cannot be bracketed
    """
    if lam is not None:
        bistable_roots(lam, sp_)
    lam_star, v2 = equal_area_lambda(sp_)
    if lam is not None and not math.isclose(lam, lam_star, rel_tol=1e-9):
        logger.info(f"Heteroclinic requested at lambda={lam:.10g}; using equal-area lambda*={lam_star:.10g}")

    mu = math.sqrt(-v2 * (sp_.b2 * lam_star * sp_.r * math.exp(-sp_.r * v2) - sp_.c2))
    kappa = math.sqrt(sp_.b2 * lam_star - sp_.a2)
    z_span = z_span if z_span is not None else 40.0 / kappa

    def rhs(_z, y):
        return [y[1], -float(reaction(sp_, lam_star, y[0]))]

    def turned(_z, y):
        return y[1]

    turned.terminal = True
    turned.direction = 1

    def crossed(_z, y):
        return y[0]

    crossed.terminal = True

    delta = HETEROCLINIC_DELTA
    z_max = 4.0 * math.log(v2 / delta) / mu + 4.0 * z_span
    sol = solve_ivp(
        rhs, (0.0, z_max), [v2 - delta, -mu * delta], method="DOP853",
        rtol=1e-12, atol=1e-15, dense_output=True, events=(turned, crossed),
    )
    z_end = float(sol.t[-1])
    shift = brentq(lambda z: sol.sol(z)[0] - v2 / 2.0, 0.0, z_end, xtol=1e-14)

    fine = np.linspace(0.0, z_end, 20001)
    Y = sol.sol(fine)
    H = 0.5 * Y[1] ** 2 + reaction_primitive(sp_, lam_star, Y[0])
    H0 = 0.5 * (mu * delta) ** 2 + float(reaction_primitive(sp_, lam_star, v2 - delta))
    drift = float(np.max(np.abs(H - H0)))

    lo, hi = TAIL_FIT_RANGE
    tail = (Y[0] >= lo * v2) & (Y[0] <= hi * v2) & (Y[1] < 0)
    if np.count_nonzero(tail) >= 3:
        slope, _ = np.polyfit(fine[tail], np.log(Y[0][tail]), 1)
        decay = float(-slope)
    else:
        logger.warning("Orbit turned before the tail-fit window; decay rate not measured")
        decay = float("nan")

    z = np.linspace(-z_span / 2.0, z_span / 2.0, nz)
    inside = (z + shift >= 0.0) & (z + shift <= z_end)
    V = np.empty(nz)
    V[inside] = sol.sol(z[inside] + shift)[0]
    V_first = float(sol.sol(0.0)[0])
    V_last = float(sol.sol(z_end)[0])
    before = z + shift < 0.0
    after = z + shift > z_end
    V[before] = v2 - (v2 - V_first) * np.exp(mu * (z[before] + shift))
    V[after] = V_last * np.exp(-kappa * (z[after] + shift - z_end))
    logger.debug(f"Heteroclinic: kappa={kappa:.6g}, fitted decay={decay:.6g}, drift={drift:.3e}")
    return HeteroclinicProfile(
        z=z, V=V, lambda_star=lam_star, v_bar2=v2, kappa=kappa, mu=mu,
        decay_rate=decay, hamiltonian_drift=drift,
    )


def smoothstep_cutoff(y: np.ndarray, half_width: float) -> np.ndarray:
    """1 for |y| <= half_width/2, 0 for |y| >= half_width, quintic in between."""
    t = np.clip((np.abs(y) - half_width / 2.0) / (half_width / 2.0), 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t * t)


def layer_ansatz(sp_: ShadowParams, grid: Grid1D, profile: HeteroclinicProfile, x0: float, eps: float) -> np.ndarray:
    """Inner heteroclinic glued to the outer step v_bar2 * H(x0 - x)."""
    x = grid.x
    L_star = min(x0, sp_.L - x0)
    chi0 = smoothstep_cutoff(x - x0, L_star / 2.0)
    inner = profile((x - x0) / math.sqrt(eps))
    outer = np.where(x < x0, profile.v_bar2, 0.0)
    return chi0 * inner + (1.0 - chi0) * outer


def measure_interface(st: ShadowState, level: float) -> float:
    """First downward crossing of level, linearly interpolated."""
    v, x = st.v, st.grid.x
    above = v >= level
    idx = np.nonzero(above[:-1] & ~above[1:])[0]
    if len(idx) == 0:
        return float("nan")
    i = int(idx[0])
    return float(x[i] + (v[i] - level) / (v[i] - v[i + 1]) * (x[i + 1] - x[i]))


def layer_solve(
    sp_: ShadowParams,
    v_bar2: Optional[float] = None,
    n: int = 2001,
    nz: int = 2001,
) -> Tuple[ShadowState, LayerReport]:
    """
    Build the layer ansatz at eps = sp_.eps and correct it with Newton.

    The plateau is the equal-area value v_bar2*; a requested v_bar2 that
    differs from it is checked against I0 and otherwise only recorded.

    Raises:
        DomainError: If b1 != 0, Phi(v) != v or a1/a2 >= c1/c2
        RTooSmall: If r <= r*
        OutsideI0: If the requested v_bar2 is outside I0
        NoEqualArea: If v_bar2* itself is outside I0
        NewtonDiverged: If the correction fails
    """
    r_star, r_split, lower, v_dd = plateau_interval(sp_)
    if v_bar2 is not None and not lower < v_bar2 < v_dd:
        raise OutsideI0(f"v_bar2 = {v_bar2:.10g} outside I0 = ({lower:.10g}, {v_dd:.10g})", v_bar2=v_bar2)
    lam_star, v2 = equal_area_lambda(sp_)
    if not lower < v2 < v_dd:
        raise NoEqualArea(f"Equal-area plateau {v2:.10g} is outside I0 = ({lower:.10g}, {v_dd:.10g})", v_bar2_star=v2)
    if v_bar2 is not None and abs(v_bar2 - v2) > PLATEAU_WARN_TOL:
        logger.warning(f"Requested plateau {v_bar2:.10g} replaced by the equal-area value {v2:.10g}")

    prediction = layer_predict(v2, sp_)
    profile = heteroclinic_profile(sp_, nz=nz)
    grid = Grid1D(n=n, L=sp_.L)
    v0 = layer_ansatz(sp_, grid, profile, prediction.x0, sp_.eps)
    guess = ShadowState(v=v0, lam=prediction.lambda0, eps=sp_.eps, grid=grid)
    st = shadow_newton(sp_, guess)

    x0_measured = measure_interface(st, v2 / 2.0)
    res, constraint = shadow_residuals(st, sp_)
    report = LayerReport(
        eps=sp_.eps,
        v_bar2_requested=v_bar2,
        v_bar2_target=v2,
        lambda_star=lam_star,
        lambda0=prediction.lambda0,
        lambda_eps=st.lam,
        x0_predicted=prediction.x0,
        x0_measured=x0_measured,
        interface_error=abs(x0_measured - prediction.x0),
        r_star=r_star,
        v_bar2_double_star=v_dd,
        I0=(lower, v_dd),
        kappa=profile.kappa,
        residual=res,
        constraint=constraint,
    )
    logger.info(
        f"Layer at eps={sp_.eps:.3g}: x0 predicted {prediction.x0:.6f}, measured {x0_measured:.6f}, "
        f"lambda {st.lam:.10g} (lambda* {lam_star:.10g})"
    )
    return st, report


def reflect_and_resolve(st: ShadowState, sp_: ShadowParams) -> Tuple[ShadowState, ShadowParams]:
    """
    Even reflection onto (0, 2L) followed by a Newton solve there.

    Returns:
        (solution on the doubled domain, the parameters with L doubled)
    """
    sp2 = sp_.replace(L=2.0 * sp_.L)
    grid2 = Grid1D(n=2 * st.grid.n - 1, L=2.0 * sp_.L)
    v2 = np.concatenate([st.v, st.v[::-1][1:]])
    guess = ShadowState(v=v2, lam=st.lam, eps=st.eps, grid=grid2)
    return shadow_newton(sp2, guess), sp2
