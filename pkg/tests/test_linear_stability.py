"""
Tests for mode matrices, bifurcation values and the instability threshold.
"""

import logging

import numpy as np
import pytest

from app.core.errors import KZero, NoBifurcation, NoFeasibleMode, ZeroSensitivity
from app.core.params import SensitivitySpec
from app.simulation.grid import Grid1D
from app.stability.linear import (
    chi_k,
    chi_threshold,
    dispersion_table,
    eigenvalues_2x2,
    growth_rate,
    is_linearly_stable,
    kinetic_jacobian,
    mode_matrix,
)


def test_chi_1_weak_defaults(weak_params):
    """Test chi_1 = 51/4 with null vector (-5, 1)."""
    bp = chi_k(weak_params, 1)
    assert bp.chi_k == pytest.approx(12.75, rel=1e-14)
    assert bp.Q_k == pytest.approx(-5.0, rel=1e-14)
    assert bp.feasible


def test_chi_2_weak_defaults(weak_params):
    """Test chi_2 = 276/16."""
    assert chi_k(weak_params, 2).chi_k == pytest.approx(17.25, rel=1e-14)


def test_threshold_weak_defaults(weak_params):
    """Test chi_0 = 12.75 at k_0 = 1."""
    chi0, k0 = chi_threshold(weak_params, k_max=64)
    assert k0 == 1
    assert chi0 == pytest.approx(12.75, rel=1e-14)


@pytest.mark.parametrize("k", [1, 2, 3, 7])
def test_det_vanishes_at_chi_k(weak_params, k):
    """Test H_k is singular at chi_k."""
    bp = chi_k(weak_params, k)
    m = mode_matrix(weak_params, k, chi=bp.chi_k)
    scale = abs(m.m11 * m.m22) + abs(m.m12 * m.m21)
    assert abs(m.det) <= 1e-12 * scale


def test_null_vector_at_chi_k(weak_params):
    """Test (Q_k, 1) spans the kernel of H_k(chi_k)."""
    bp = chi_k(weak_params, 2)
    m = mode_matrix(weak_params, 2, chi=bp.chi_k).as_array()
    residual = m @ np.array([bp.Q_k, 1.0])
    assert np.max(np.abs(residual)) < 1e-12 * np.max(np.abs(m))


def test_growth_rate_above_threshold(weak_params):
    """Test mode 1 grows at 1.1 chi_0 and decays at 0.9 chi_0."""
    mu_up, _ = growth_rate(weak_params, 1, chi=1.1 * 12.75)
    mu_down, _ = growth_rate(weak_params, 1, chi=0.9 * 12.75)
    assert mu_up.real == pytest.approx(0.1043, rel=1e-2)
    assert mu_down.real < 0


def test_eigenvalues_match_numpy(weak_params):
    """Test the closed-form 2x2 eigenvalues against numpy."""
    m = mode_matrix(weak_params, 3, chi=20.0)
    ours = sorted(eigenvalues_2x2(m), key=lambda z: z.real)
    ref = sorted(np.linalg.eigvals(m.as_array()), key=lambda z: z.real)
    assert np.allclose(ours, ref, rtol=1e-12, atol=1e-14)


def test_linear_stability_switches_at_threshold(weak_params):
    """Test the coexistence state is stable below chi_0 and unstable above."""
    assert is_linearly_stable(weak_params, chi=12.0)
    assert not is_linearly_stable(weak_params, chi=13.0)


def test_kinetic_jacobian_stable_for_weak(weak_params, strong_params):
    """Test H_0 is stable for weak and unstable for strong competition."""
    assert eigenvalues_2x2(kinetic_jacobian(weak_params))[0].real < 0
    assert eigenvalues_2x2(kinetic_jacobian(strong_params))[0].real > 0
    assert not is_linearly_stable(strong_params)


def test_k_zero_rejected(weak_params):
    """Test k = 0 is not a bifurcation mode."""
    with pytest.raises(KZero):
        chi_k(weak_params, 0)
    with pytest.raises(KZero):
        mode_matrix(weak_params, 0)


def test_zero_sensitivity_rejected(weak_params):
    """Test phi(v_bar) = 0 raises."""
    p = weak_params.replace(sensitivity=SensitivitySpec(p0=-1.0, p1=3.0))
    with pytest.raises(ZeroSensitivity):
        chi_k(p, 1)


def test_b2_zero_has_no_bifurcation(weak_params):
    """Test det H_k does not depend on chi when b2 = 0."""
    p = weak_params.replace(b2=0.0, a2=2.0, c2=2.0)
    with pytest.raises(NoBifurcation):
        chi_k(p, 1)


def test_no_feasible_mode_on_long_strong_domain(strong_params):
    """Test a strong set whose first mode is infeasible raises."""
    strong = strong_params.replace(L=100.0 * np.pi)
    assert not chi_k(strong, 1).feasible
    with pytest.raises(NoFeasibleMode):
        chi_threshold(strong, k_max=1)


def test_discrete_eigenvalue_used_with_grid(weak_params):
    """Test passing a grid swaps in the discrete Neumann eigenvalue."""
    grid = Grid1D(n=64, L=weak_params.L)
    bp = chi_k(weak_params, 1, grid=grid)
    assert bp.Lambda == pytest.approx(grid.neumann_eigenvalue(1))
    assert bp.Lambda < 1.0
    assert bp.chi_k == pytest.approx(12.75, rel=1e-3)


def test_dispersion_table_columns(weak_params):
    """Test the table has one row per mode with the documented columns."""
    table = dispersion_table(weak_params, k_max=8)
    assert list(table.columns) == ["k", "lambda_k", "chi_k", "feasible", "re_mu_plus", "re_mu_minus"]
    assert table["k"].tolist() == list(range(1, 9))
    assert table["chi_k"].iloc[0] == pytest.approx(12.75)


def test_k_max_tail_warning(weak_params, caplog):
    """Test a chi_k still decreasing at k_max is logged."""
    p = weak_params.replace(L=10.0 * np.pi)
    with caplog.at_level(logging.WARNING, logger="linear_stability"):
        chi_threshold(p, k_max=2)
    assert any("k_max" in rec.message for rec in caplog.records)
