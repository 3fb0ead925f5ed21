import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nodalbif.continuation import ContinuationConfig, anchor_on_grid, detect_bifurcation_values, start_branch
from nodalbif.discretize import Grid
from nodalbif.errors import DivergenceError
from nodalbif.nonlinear import (FIX_LAMBDA, REAL, ArclengthConstraint, StateVector, jacobian, make_record,
                                newton_correct, problem, residual)


@pytest.fixture(scope="module")
def solution(m2, a_weight, nl_grid):
    """A point on the 1-node branch leaving the negative root of Sigma_2 = 35."""
    bp = detect_bifurcation_values(m2, 35.0, [2])[0]
    anc = anchor_on_grid(bp, 35.0, m2, nl_grid)
    br = start_branch(anc, 35.0, 1, ContinuationConfig(max_points=40), m2, a_weight, nl_grid)
    return br.points[-1]


def test_state_vector_casts():
    st_ = StateVector([0.0, 1.0], 2, 3)
    assert st_.u.dtype == REAL and isinstance(st_.lam, float)
    with pytest.raises(ValueError):
        StateVector([np.nan], 0, 0)
    with pytest.raises(ValueError):
        StateVector(np.zeros((2, 2)), 0, 0)


def test_trivial_residual_zero(m2, a_weight, nl_grid):
    st_ = StateVector(np.zeros(nl_grid.N), 12.0, 5.0)
    assert np.all(residual(st_, m2, a_weight, nl_grid) == 0)


def test_residual_rejects_wrong_length(m2, a_weight, nl_grid):
    with pytest.raises(ValueError):
        residual(StateVector(np.zeros(3), 0, 0), m2, a_weight, nl_grid)


def test_jacobian_matches_difference_quotient(m2, a_weight):
    g = Grid(0.0, 1.0, 40)
    rng = np.random.default_rng(1)
    u = rng.standard_normal(40)
    st_ = StateVector(u, 30.0, 10.0)
    J = jacobian(st_, m2, a_weight, g).dense()
    v = rng.standard_normal(40)
    eps = 1e-6
    fp = residual(StateVector(u + eps * v, 30.0, 10.0), m2, a_weight, g).astype(float)
    fm = residual(StateVector(u - eps * v, 30.0, 10.0), m2, a_weight, g).astype(float)
    assert np.allclose((fp - fm) / (2 * eps), J @ v, rtol=1e-6, atol=1e-4)


def test_solution_record(solution):
    assert solution.residual_norm <= 1e-10
    assert solution.node_count == 1
    assert solution.l2 > 0 and solution.mu == 35.0


def test_newton_quadratic_from_perturbation(solution, m2, a_weight, nl_grid):
    u = solution.state.u + REAL(1e-3) * np.sin(np.pi * nl_grid.nodes).astype(REAL)
    rec = newton_correct(StateVector(u, solution.lam, 35.0), FIX_LAMBDA, m2, a_weight, nl_grid)
    assert rec.residual_norm <= 1e-10
    assert rec.iterations <= 4
    assert np.max(np.abs(rec.state.u - solution.state.u)) < 1e-8


def test_reflection(solution, m2, a_weight, nl_grid):
    ref = solution.state.reflected()
    assert ref.lam == -solution.lam
    rec = newton_correct(ref, FIX_LAMBDA, m2, a_weight, nl_grid)
    assert rec.iterations <= 2 and rec.residual_norm <= 1e-10


def test_arclength_constraint_holds(solution, m2, a_weight, nl_grid):
    u0 = solution.state.u.astype(float)
    tu = np.sin(2 * np.pi * nl_grid.nodes)
    con = ArclengthConstraint(u0, solution.lam, tu, 0.5, 0.05)
    rec = newton_correct(StateVector(solution.state.u, solution.lam, 35.0), con, m2, a_weight, nl_grid)
    g = nl_grid.h * float(tu @ (rec.state.u.astype(float) - u0)) + 0.5 * (rec.lam - solution.lam) - 0.05
    assert abs(g) <= 1e-10 and rec.residual_norm <= 1e-10


def test_mu_as_free_parameter(solution, m2, a_weight, nl_grid):
    u0 = solution.state.u
    con = ArclengthConstraint(u0, 35.0, np.zeros(nl_grid.N), 1.0, 0.5, param="mu")
    rec = newton_correct(StateVector(u0, solution.lam, 35.5), con, m2, a_weight, nl_grid)
    assert rec.mu == pytest.approx(35.5, abs=1e-12) and rec.lam == solution.lam


def test_divergence_reports_history(m2, a_weight, nl_grid):
    u = 50 * np.sin(3 * np.pi * nl_grid.nodes)
    with pytest.raises(DivergenceError) as exc:
        newton_correct(StateVector(u, 10.0, 0.0), FIX_LAMBDA, m2, a_weight, nl_grid, max_iter=1)
    assert exc.value.last_iterate is not None and len(exc.value.history) >= 1


def test_bad_arguments(m2, a_weight, nl_grid):
    st_ = StateVector(np.zeros(nl_grid.N), 0.0, 0.0)
    with pytest.raises(ValueError):
        newton_correct(st_, "fix-mu", m2, a_weight, nl_grid)
    with pytest.raises(ValueError):
        newton_correct(st_, FIX_LAMBDA, m2, a_weight, nl_grid, tol=0.0)
    with pytest.raises(ValueError):
        ArclengthConstraint(np.zeros(2), 0.0, np.zeros(2), 0.0, 0.1, param="a")


def test_stability_hint_trivial(m2, a_weight, nl_grid):
    P = problem(m2, a_weight, nl_grid)
    # at u = 0 the hint counts eigenvalues of -D^2 - mu - lam m below zero
    assert make_record(StateVector(np.zeros(nl_grid.N), 0.0, 0.0), P).stability_hint == 0
    assert make_record(StateVector(np.zeros(nl_grid.N), 0.0, 45.0), P).stability_hint == 2


@given(st.floats(-100, 100), st.floats(0, 60), st.integers(0, 2 ** 16))
def test_reflection_symmetry_of_residual(lam, mu, seed):
    from nodalbif.weights import paper_a, sine

    g = Grid(0.0, 1.0, 30)
    u = np.random.default_rng(seed).standard_normal(30)
    f = residual(StateVector(u, lam, mu), sine(2), paper_a(), g)
    fr = residual(StateVector(u[::-1], -lam, mu), sine(2), paper_a(), g)
    assert np.allclose(f[::-1].astype(float), fr.astype(float), atol=1e-8 * (1 + np.abs(f).max()))
