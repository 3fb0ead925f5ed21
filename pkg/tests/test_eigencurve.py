import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nodalbif.eigencurve import (MINUS_INNER, MINUS_OUTER, PLUS_INNER, PLUS_OUTER, CurveEvaluator,
                                 EigencurveSample, concavity_report, curve_maximum, decay_bound, lambda_grid,
                                 positivity_witness, roots_at_level, sample_curve, sample_curves,
                                 second_derivative_at, spectral_radius)
from nodalbif.errors import ConfigurationError, PreconditionError, RangeTooSmallError
from nodalbif.weights import constant, paper_a, sine

MU2 = 49.0561387  # max of Sigma_2 for m = sin(2 pi x)
MU3 = 124.531988


@pytest.fixture(scope="module")
def sigma2():
    return sample_curve(sine(2), 2, (-200.0, 200.0), 0.5)


def test_lambda_grid_exact_multiples():
    g = lambda_grid((-1.0, 1.0), 0.25)
    assert list(g) == [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]
    g = lambda_grid((-0.3, 1.1), 0.25)
    assert g[0] == -0.25 and g[-1] == 1.0


@pytest.mark.parametrize("rng,step", [((0.0, 1.0), 0.5), ((1.0, 0.0), 0.1), ((0.0, 1.0), 0.0)])
def test_lambda_grid_rejects(rng, step):
    with pytest.raises(ConfigurationError):
        lambda_grid(rng, step)


def test_sample_shape_and_derivatives(sigma2):
    s = sigma2
    assert len(s.lambdas) == 801 and s.step == 0.5
    assert np.isnan(s.d1[0]) and np.isnan(s.d2[-1])
    assert s.values[s.index_of(0.0)] == pytest.approx(4 * np.pi ** 2, abs=1e-8)
    with pytest.raises(PreconditionError):
        s.index_of(0.25)


def test_sample_rejects_short():
    x = np.arange(4.0)
    with pytest.raises(ConfigurationError):
        EigencurveSample(1, x, x, x, x)


def test_constant_weight_is_linear():
    s = sample_curve(constant(1.0), 1, (-10.0, 10.0), 1.0)
    assert np.allclose(s.values, np.pi ** 2 - s.lambdas, atol=1e-9)


def test_fd_and_spectral_agree():
    ev_s = CurveEvaluator(sine(2))
    ev_f = CurveEvaluator(sine(2), "fd", 2000)
    for lam in (-150.0, 30.0, 120.0):
        for n in (1, 3):
            assert ev_f(lam, n) == pytest.approx(ev_s(lam, n), abs=5e-3 * n * n)


def test_jobs_do_not_change_values():
    a = sample_curves(sine(2), [1, 2], (-20.0, 20.0), 1.0, jobs=1)
    b = sample_curves(sine(2), [1, 2], (-20.0, 20.0), 1.0, jobs=4)
    for x, y in zip(a, b):
        assert np.array_equal(x.values, y.values)


def test_roots_mu35(sigma2):
    roots = roots_at_level(sigma2, 35.0)
    assert [r.label for r in roots] == ["minus", "plus"]
    assert roots[0].lam == pytest.approx(-114.782, abs=1e-3)
    assert roots[0].lam == pytest.approx(-roots[1].lam, abs=1e-6)
    assert roots[0].slope > 0 > roots[1].slope


def test_roots_mu45(sigma2):
    roots = roots_at_level(sigma2, 45.0)
    assert [r.label for r in roots] == [MINUS_OUTER, MINUS_INNER, PLUS_INNER, PLUS_OUTER]
    lams = [r.lam for r in roots]
    assert lams == pytest.approx([-85.106, -28.120, 28.120, 85.106], abs=1e-3)
    assert [np.sign(r.slope) for r in roots] == [1, -1, 1, -1]
    for r in roots:
        assert sigma2.sigma(r.lam) == pytest.approx(45.0, abs=1e-8)


def test_tangent_root_at_origin(sigma2):
    roots = roots_at_level(sigma2, 4 * np.pi ** 2)
    inner = [r for r in roots if r.tangent]
    assert {r.label for r in inner} == {MINUS_INNER, PLUS_INNER}
    assert all(abs(r.lam) <= 1e-3 for r in inner)


def test_no_roots_above_max(sigma2):
    assert roots_at_level(sigma2, 50.0) == []


def test_boundary_root_flagged():
    s = sample_curve(sine(2), 2, (-120.0, 50.0), 0.5)
    r = roots_at_level(s, s.values[0])
    assert any(b.boundary for b in r)


def test_curve_maximum(sigma2):
    ext = curve_maximum(sigma2, polish=True)
    assert ext.mu_n == pytest.approx(MU2, abs=1e-6)
    assert len(ext.argmax) == 2
    assert ext.argmax[0] == pytest.approx(-ext.argmax[1], abs=1e-4)
    coarse = curve_maximum(sigma2)
    assert coarse.mu_n == pytest.approx(MU2, abs=1e-4)


def test_curve_maximum_principal_at_zero():
    ext = curve_maximum(sample_curve(sine(2), 1, (-50.0, 50.0), 0.5))
    assert ext.argmax == (0.0,)
    assert ext.mu_n == pytest.approx(np.pi ** 2, abs=1e-8)


def test_curve_maximum_third():
    ext = curve_maximum(sample_curve(sine(2), 3, (-300.0, 300.0), 0.5), polish=True)
    assert ext.mu_n == pytest.approx(MU3, abs=1e-5)
    assert 110 < ext.mu_n < 140


def test_curve_maximum_range_too_small():
    with pytest.raises(RangeTooSmallError):
        curve_maximum(sample_curve(sine(2), 2, (0.0, 20.0), 0.5))


def test_concavity(sigma2):
    rep = concavity_report(sigma2)
    assert not rep.globally_concave
    assert rep.second_diff_at_zero == pytest.approx(5 / (24 * np.pi ** 2), rel=1e-4)
    rep1 = concavity_report(sample_curve(sine(2), 1, (-200.0, 200.0), 0.5))
    assert rep1.globally_concave and rep1.second_diff_at_zero < 0


def test_second_derivative_at_zero():
    # n = 3, k = 1: 1 / (4 pi^2 (9 - 1))
    assert second_derivative_at(sine(2), 3) == pytest.approx(1 / (32 * np.pi ** 2), rel=1e-5)


def test_positivity_witness():
    assert positivity_witness(sine(2)) == pytest.approx(0.25)
    assert positivity_witness(paper_a()) == pytest.approx(0.5)
    assert positivity_witness(constant(-1.0)) is None


def test_decay_bound():
    m = sine(2)
    assert decay_bound(m, 2, 500.0) == pytest.approx((np.pi / 0.2) ** 2 - 500 * np.sin(2 * np.pi * 0.05), rel=1e-6)
    assert decay_bound(m, 2, 500.0, eps=0.1) == pytest.approx((np.pi / 0.1) ** 2 - 500 * np.sin(2 * np.pi * 0.15),
                                                            rel=1e-6)
    ev = CurveEvaluator(m)
    for lam in (100.0, 200.0, 400.0):
        for n in range(1, 6):
            assert ev(lam, n) <= decay_bound(m, n, lam)


def test_decay_bound_preconditions():
    with pytest.raises(PreconditionError):
        decay_bound(sine(2), 1, -5.0)
    with pytest.raises(PreconditionError):
        decay_bound(constant(-1.0), 1, 5.0)
    with pytest.raises(PreconditionError):
        decay_bound(sine(2), 1, 5.0, eps=0.3)


def test_spectral_radius(sigma2):
    s1 = sample_curve(sine(2), 1, (-10.0, 10.0), 1.0)
    assert spectral_radius(s1, s1.index_of(0.0)) == pytest.approx(np.exp(-np.pi ** 2))
    with pytest.raises(PreconditionError):
        spectral_radius(sigma2, 0)


@given(st.floats(-300, 300), st.integers(1, 5))
def test_even_curve_for_odd_weight(lam, n):
    ev = CurveEvaluator(sine(2))
    assert ev(lam, n) == pytest.approx(ev(-lam, n), abs=1e-7)


@given(st.floats(-200, 200), st.floats(0.05, 5.0))
def test_curves_ordered(lam, _):
    v = CurveEvaluator(sine(4)).values(lam, [1, 2, 3, 4])
    assert np.all(np.diff(v) > 0)
