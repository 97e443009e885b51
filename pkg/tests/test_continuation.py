"""
Tests for Newton, branch switching and pseudo-arclength continuation.
"""

import numpy as np
import pytest

from app.core.errors import BracketMiss, NewtonDiverged, NonFiniteState
from app.core.kinetics import coexistence_state
from app.core.params import ModelParams, SensitivitySpec
from app.continuation.branch import (
    branch_state,
    branch_switch,
    continue_branch,
    continue_problem,
    fit_pitchfork,
    solve_at_amplitude,
)
from app.continuation.newton import damped_newton, newton_solve
from app.continuation.problem import FullSystemProblem
from app.continuation.weakly_nonlinear import weakly_nonlinear
from app.simulation.grid import Grid1D, State
from app.simulation.operators import steady_residual_norm


def test_damped_newton_scalar():
    """Test Newton finds sqrt(2)."""
    result = damped_newton(lambda x: x**2 - 2.0, lambda x: np.array([[2.0 * x[0]]]), np.array([1.0]))
    assert result.x[0] == pytest.approx(np.sqrt(2.0), rel=1e-14)


def test_damped_newton_rejects_nan_guess():
    """Test a non-finite guess fails fast."""
    with pytest.raises(NonFiniteState):
        damped_newton(lambda x: x, lambda x: np.eye(1), np.array([np.nan]))


def test_damped_newton_reports_divergence():
    """Test x^2 + 1 = 0 gives up."""
    with pytest.raises(NewtonDiverged):
        damped_newton(lambda x: x**2 + 1.0, lambda x: np.array([[2.0 * x[0]]]), np.array([0.5]), max_iter=10)


def test_newton_returns_to_constant_below_threshold(weak_params):
    """Test a small perturbation relaxes to the constant state at chi < chi_0."""
    p = weak_params.replace(chi=5.0)
    grid = Grid1D(n=64, L=p.L)
    guess = branch_switch(p, 1, s=1e-3, grid=grid)
    solved = newton_solve(guess, p)
    u_bar, v_bar = coexistence_state(p)
    assert np.max(np.abs(solved.u - u_bar)) < 1e-10
    assert np.max(np.abs(solved.v - v_bar)) < 1e-10
    assert steady_residual_norm(solved, p) < 1e-9


def test_branch_switch_ansatz(weak_params):
    """Test the ansatz is (u_bar, v_bar) + s (Q_k, 1) cos."""
    grid = Grid1D(n=32, L=weak_params.L)
    s = branch_switch(weak_params, 1, s=0.1, grid=grid)
    assert s.v[0] == pytest.approx(1.0 / 3.0 + 0.1)
    assert (s.u[0] - 4.0 / 3.0) / 0.1 == pytest.approx(-5.0, rel=1e-3)


def test_solve_at_amplitude_hits_target(weak_params):
    """Test the amplitude-constrained solve lands on the requested amplitude."""
    problem = FullSystemProblem(weak_params, Grid1D(n=64, L=weak_params.L), 1)
    mode, chi_ref = problem.critical_mode()
    x, chi, residual = solve_at_amplitude(problem, 0.01, problem.trivial() + 0.01 * mode, chi_ref)
    assert problem.amplitude(x) == pytest.approx(0.01, rel=1e-10)
    assert abs(chi - chi_ref) < 1e-2 * chi_ref
    assert residual < 1e-8


def test_branch_leaves_chi_k_quadratically(weak_params):
    """Test the weak-set k = 1 branch has no linear term and turns like K2."""
    branch = continue_branch(weak_params, 1, (6.0, 26.0), ds=0.005, n=64, s0=0.005, max_points=10)
    assert len(branch) == 10
    assert branch.stop_reason == "max_points"
    assert branch.param_ref == pytest.approx(12.75, rel=1e-3)
    K = fit_pitchfork(branch)
    K2 = weakly_nonlinear(weak_params, 1).K2
    assert abs(K[0]) <= 1e-3 * max(1.0, abs(K[1]))
    assert np.sign(K[1]) == np.sign(K2)
    assert all(pt.residual < 1e-6 for pt in branch.points)


def test_branch_rows_and_state(weak_params):
    """Test branch rows carry the CSV columns and points map back to states."""
    branch = continue_branch(weak_params, 1, (6.0, 26.0), ds=0.01, n=32, s0=0.01, max_points=4)
    rows = branch.rows()
    assert list(rows[0]) == ["chi", "amplitude", "stable", "residual", "norm_u", "norm_v"]
    st = branch_state(branch, 0, Grid1D(n=32, L=weak_params.L))
    assert isinstance(st, State)
    assert st.v[0] > st.v[-1]


def test_bracket_miss(weak_params):
    """Test a span that excludes chi_k is rejected."""
    with pytest.raises(BracketMiss):
        continue_branch(weak_params, 1, (20.0, 30.0), n=32)


def test_nonpositive_ds_rejected(weak_params):
    """Test ds <= 0 is a usage error."""
    problem = FullSystemProblem(weak_params, Grid1D(n=32, L=weak_params.L), 1)
    with pytest.raises(ValueError):
        continue_problem(problem, (6.0, 26.0), ds=0.0)


def test_fit_pitchfork_needs_points(weak_params):
    """Test the fit refuses a branch with too few small-amplitude points."""
    branch = continue_branch(weak_params, 1, (6.0, 26.0), ds=0.01, n=32, s0=0.06, max_points=2)
    with pytest.raises(ValueError):
        fit_pitchfork(branch, s_max=0.05)


def _near_onset_branch(p, k, n=64):
    problem = FullSystemProblem(p, Grid1D(n=n, L=p.L), k)
    ref = problem.critical_mode()[1]
    return continue_problem(problem, (0.5 * ref, 2.0 * ref), ds=0.005, s0=0.005, max_points=10,
                            with_stability=False)


@pytest.mark.parametrize(
    "params, k",
    [
        (ModelParams(), 1),
        (ModelParams(), 2),
        (ModelParams(a1=2.0, a2=1.0, b1=1.0, b2=1.0, c1=3.0, c2=1.0, D1=100.0, D2=0.01), 1),
        (ModelParams(D1=100.0, D2=0.01, sensitivity=SensitivitySpec(p0=13.0 / 6.0, p1=-8.5, p2=15.0)), 1),
    ],
    ids=["weak-k1", "weak-k2", "strong-large-D1", "matched-phi"],
)
def test_branch_turns_by_closed_form_k2(params, k):
    """Test chi - chi_k stays within 10% of K2 s^2 near onset and the fitted K2 matches."""
    branch = _near_onset_branch(params, k)
    K2 = weakly_nonlinear(params, k).K2
    assert fit_pitchfork(branch)[1] == pytest.approx(K2, rel=0.05)
    near = [pt for pt in branch.points if 0 < abs(pt.amplitude) <= 0.02]
    assert len(near) >= 2
    for pt in near:
        s2 = pt.amplitude**2
        assert abs(pt.param - branch.param_ref - K2 * s2) <= 0.1 * abs(K2) * s2


def test_supercritical_branch_turns_by_closed_form_k2(supercritical):
    """Test the fitted K2 of the seeded supercritical draw matches the closed form."""
    p, k0 = supercritical
    branch = _near_onset_branch(p, k0)
    K2 = weakly_nonlinear(p, k0).K2
    assert K2 > 0
    assert fit_pitchfork(branch)[1] == pytest.approx(K2, rel=0.05)
