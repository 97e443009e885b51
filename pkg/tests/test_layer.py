"""
Tests for the bistable structure, the heteroclinic connection and
transition-layer steady states of the shadow system.
"""

import logging
import math

import numpy as np
import pytest

from app.core.errors import DomainError, OutsideI0, OutsideWindow, RTooSmall
from app.core.params import ShadowParams
from app.shadow.layer import (
    bistable_roots,
    critical_rs,
    equal_area_lambda,
    full_window,
    heteroclinic_profile,
    interface_position,
    lambda_of,
    lambda_window,
    layer_predict,
    layer_solve,
    measure_interface,
    plateau_interval,
    reaction,
    reaction_primitive,
    reflect_and_resolve,
    smoothstep_cutoff,
)
from app.shadow.system import ShadowState
from app.simulation.grid import Grid1D


@pytest.fixture
def printed_params():
    """a = (2, 1), c = (3, 1), r = 2 on the unit interval."""
    return ShadowParams(a1=2.0, a2=1.0, b1=0.0, b2=1.0, c1=3.0, c2=1.0, r=2.0, L=1.0)


def test_critical_rs(printed_params, layer_params):
    """Test r* = (c1/a1) ln(a2 c1 / gap) and r_split = c1 c2 / gap."""
    r_star, r_split = critical_rs(printed_params)
    assert r_star == pytest.approx(1.5 * math.log(3.0), rel=1e-14)
    assert r_split == pytest.approx(3.0)
    r_star, r_split = critical_rs(layer_params)
    assert r_star == pytest.approx(7.0 * math.log(7.0 / 6.0), rel=1e-14)
    assert r_split == pytest.approx(7.0 / 6.0)


def test_plateau_interval_below_split(printed_params):
    """Test I0 starts at a1/c1 when r* < r < r_split."""
    _, _, lower, v_dd = plateau_interval(printed_params)
    assert lower == pytest.approx(2.0 / 3.0)
    assert 0.79 < v_dd < 0.80
    assert lambda_of(v_dd, printed_params) == pytest.approx(1.0, rel=1e-12)


def test_plateau_interval_above_split(layer_params):
    """Test I0 starts at v* = a2/c2 - 1/r when r >= r_split."""
    _, _, lower, _ = plateau_interval(layer_params)
    assert lower == pytest.approx(0.5)


def test_layer_predict_printed_example(printed_params):
    """Test x0 and lambda0 for v_bar2 = 0.75."""
    pred = layer_predict(0.75, printed_params)
    assert pred.lambda0 == pytest.approx(0.25 * math.exp(1.5), rel=1e-14)
    assert pred.x0 == pytest.approx(0.97287, abs=1e-4)
    assert pred.I0[0] == pytest.approx(2.0 / 3.0)


def test_interface_position_without_i0_check(printed_params):
    """Test x0 = L at v_bar2 = a1/c1 and agreement with layer_predict inside I0."""
    assert interface_position(2.0 / 3.0, printed_params) == pytest.approx(1.0, rel=1e-14)
    assert interface_position(0.75, printed_params) == pytest.approx(layer_predict(0.75, printed_params).x0)


def test_layer_predict_outside_i0(printed_params):
    """Test a plateau below a1/c1 is rejected."""
    with pytest.raises(OutsideI0):
        layer_predict(0.6, printed_params)


def test_r_below_r_star_rejected(printed_params):
    """Test r <= r* raises."""
    with pytest.raises(RTooSmall):
        plateau_interval(printed_params.replace(r=1.5))


def test_layer_requires_b1_zero(printed_params):
    """Test b1 != 0 is outside the layer setting."""
    with pytest.raises(DomainError):
        plateau_interval(printed_params.replace(b1=0.5))


def test_lambda_window_cut_below_split(printed_params):
    """Test the upper end drops to (gap / (b2 c1)) exp(a1 r / c1)."""
    lo, hi = lambda_window(printed_params)
    assert lo == pytest.approx(1.0)
    assert hi == pytest.approx(math.exp(4.0 / 3.0) / 3.0, rel=1e-14)
    assert hi < full_window(printed_params)[1]


def test_bistable_roots(printed_params):
    """Test both zeros of f straddle v* and invert lambda_of."""
    lam = 0.25 * math.exp(1.5)
    roots = bistable_roots(lam, printed_params)
    assert roots.v_bar2 == pytest.approx(0.75, abs=1e-12)
    assert roots.v_star == pytest.approx(0.5)
    assert 0.0 < roots.v_bar1 < roots.v_star < roots.v_bar2
    for v in (roots.v_bar1, roots.v_bar2):
        assert abs(reaction(printed_params, lam, v)) < 1e-13


def test_bistable_roots_tangency(printed_params):
    """Test the roots merge at v* at the top of the window."""
    _, hi = full_window(printed_params)
    roots = bistable_roots(hi, printed_params)
    assert roots.v_bar1 == roots.v_bar2 == roots.v_star


def test_bistable_roots_errors(printed_params):
    """Test lambda outside the window and r <= c2/a2 raise."""
    with pytest.raises(OutsideWindow):
        bistable_roots(0.9, printed_params)
    with pytest.raises(OutsideWindow):
        bistable_roots(2.0, printed_params)
    with pytest.raises(RTooSmall):
        bistable_roots(1.1, printed_params.replace(r=0.5))


def test_reaction_primitive_derivative(printed_params):
    """Test dF/dV = f by central differences."""
    lam, h = 1.1, 1e-6
    for V in (0.1, 0.4, 0.7):
        fd = (reaction_primitive(printed_params, lam, V + h) - reaction_primitive(printed_params, lam, V - h)) / (2 * h)
        assert fd == pytest.approx(reaction(printed_params, lam, V), abs=1e-8)


def test_equal_area(layer_params):
    """Test the equal-area plateau sits inside I0 with zero area."""
    lam_star, v2 = equal_area_lambda(layer_params)
    assert abs(reaction_primitive(layer_params, lam_star, v2)) < 1e-12
    assert v2 == pytest.approx(0.651, abs=1e-3)
    _, _, lower, v_dd = plateau_interval(layer_params)
    assert lower < v2 < v_dd


def test_heteroclinic_profile(layer_params):
    """Test the first integral, tail decay and half-height centring."""
    prof = heteroclinic_profile(layer_params)
    assert prof.hamiltonian_drift <= 1e-6
    assert abs(prof.decay_rate / prof.kappa - 1.0) <= 0.02
    assert prof.kappa == pytest.approx(math.sqrt(prof.lambda_star - layer_params.a2))
    assert float(prof(np.array([0.0]))[0]) == pytest.approx(prof.v_bar2 / 2.0, abs=1e-8)
    assert np.all(np.diff(prof.V) <= 1e-12)


def test_heteroclinic_replaces_lambda(layer_params, caplog):
    """Test a lambda other than lambda* is logged and not used."""
    lam_star, _ = equal_area_lambda(layer_params)
    with caplog.at_level(logging.INFO, logger="transition_layer"):
        prof = heteroclinic_profile(layer_params, lam=1.01 * lam_star)
    assert prof.lambda_star == pytest.approx(lam_star)
    assert any("equal-area" in rec.message for rec in caplog.records)


def test_smoothstep_cutoff():
    """Test the cutoff is 1 on the inner half, 0 outside and 1/2 midway."""
    y = np.array([0.0, 0.25, -0.5, 0.75, 1.0, 2.0])
    assert np.allclose(smoothstep_cutoff(y, 1.0), [1.0, 1.0, 1.0, 0.5, 0.0, 0.0])


def test_measure_interface():
    """Test the downward crossing of a linear profile."""
    grid = Grid1D(n=101, L=1.0)
    st = ShadowState(v=1.0 - grid.x, lam=1.0, eps=1e-3, grid=grid)
    assert measure_interface(st, 0.3) == pytest.approx(0.7, abs=1e-12)
    assert math.isnan(measure_interface(st, 2.0))


def test_layer_solve_and_reflect(layer_params, caplog):
    """Test a layer solve at eps = 1e-3 and its even reflection."""
    sp_ = layer_params.replace(eps=1e-3)
    with caplog.at_level(logging.WARNING, logger="transition_layer"):
        st, report = layer_solve(sp_, v_bar2=0.7, n=801)
    assert any("replaced" in rec.message for rec in caplog.records)
    assert report.v_bar2_requested == 0.7
    assert report.v_bar2_target == pytest.approx(0.651, abs=1e-3)
    assert report.residual < 1e-6
    assert report.interface_error < 0.1
    assert report.lambda_eps == pytest.approx(report.lambda0, rel=0.1)
    assert np.all(st.v > -1e-8)

    st2, sp2 = reflect_and_resolve(st, sp_)
    assert sp2.L == pytest.approx(2.0 * sp_.L)
    assert st2.grid.n == 2 * st.grid.n - 1
    assert np.allclose(st2.v, st2.v[::-1], atol=1e-6)
    assert st2.lam == pytest.approx(st.lam, rel=1e-6)
    assert measure_interface(st2, report.v_bar2_target / 2.0) == pytest.approx(report.x0_measured, abs=1e-3)


def test_layer_solve_outside_i0(layer_params):
    """Test a requested plateau outside I0 raises before any solve."""
    with pytest.raises(OutsideI0):
        layer_solve(layer_params.replace(eps=1e-3), v_bar2=0.9, n=801)
