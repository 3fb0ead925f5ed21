import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nodalbif.discretize import Grid
from nodalbif.errors import DomainError
from nodalbif.perturbation import (CLOSED_FORM, CURVE_FD, QUADRATURE, p_closed_form, p_closed_form_published,
                                   p_quadrature, phi_dot, phi_dot_residual, sigma_ddot_zero)

PAIRS = [(2, 1), (3, 1), (3, 2), (5, 2), (4, 1), (5, 3)]


@pytest.mark.parametrize("n,k", PAIRS)
def test_closed_form_matches_quadrature(n, k):
    x = np.linspace(0, 1, 101)
    assert np.max(np.abs(p_closed_form(n, k, x) - p_quadrature(n, k, x))) <= 1e-12


@pytest.mark.parametrize("n,k", PAIRS)
def test_p_boundary_values(n, k):
    assert abs(p_closed_form(n, k, 0.0)) <= 1e-15
    assert abs(p_quadrature(n, k, 0.0)) <= 1e-15
    assert abs(p_quadrature(n, k, 1.0)) <= 1e-12


def test_p_solves_ode():
    n, k = 3, 1
    x = np.linspace(0.05, 0.95, 19)
    h = 1e-3
    p = lambda t: p_closed_form(n, k, t)  # noqa: E731
    lhs = -(p(x + h) - 2 * p(x) + p(x - h)) / h ** 2 - (n * np.pi) ** 2 * p(x)
    rhs = np.sin(2 * k * np.pi * x) * np.sin(n * np.pi * x)
    assert np.max(np.abs(lhs - rhs)) < 1e-4


def test_published_variant():
    assert p_closed_form_published(2, 1, 0.0) == pytest.approx(-2 / (8 * np.pi ** 2 * 3), abs=1e-12)
    assert p_closed_form_published(2, 1, 0.0) == pytest.approx(-0.008443, abs=1e-6)
    x = np.linspace(0, 1, 11)
    diff = p_closed_form_published(3, 1, x) - p_closed_form(3, 1, x)
    ratio = diff / np.where(np.abs(np.cos(3 * np.pi * x)) > 1e-9, np.cos(3 * np.pi * x), np.nan)
    r = ratio[np.isfinite(ratio)]
    assert np.allclose(r, r[0])


@pytest.mark.parametrize("f", [p_closed_form, p_closed_form_published])
def test_resonant_rejected(f):
    with pytest.raises(DomainError):
        f(2, 2, 0.5)


def test_domain_errors():
    with pytest.raises(DomainError):
        p_quadrature(2, 1, 1.5)
    with pytest.raises(DomainError):
        p_quadrature(0, 1, 0.5)
    with pytest.raises(DomainError):
        sigma_ddot_zero(1, 1, CLOSED_FORM)
    with pytest.raises(DomainError):
        sigma_ddot_zero(2, 2, QUADRATURE)
    with pytest.raises(DomainError):
        sigma_ddot_zero(3, 1, "unknown")


@pytest.mark.parametrize("n,k", [(3, 1), (4, 1), (5, 1), (4, 3), (5, 3), (5, 2), (3, 2)])
def test_routes_agree_off_resonance(n, k):
    cf = sigma_ddot_zero(n, k, CLOSED_FORM)
    assert cf == pytest.approx(1 / (4 * np.pi ** 2 * (n * n - k * k)))
    assert sigma_ddot_zero(n, k, QUADRATURE) == pytest.approx(cf, abs=1e-9)
    assert sigma_ddot_zero(n, k, CURVE_FD) == pytest.approx(cf, rel=1e-4)


@pytest.mark.parametrize("k", [1, 2])
def test_double_frequency_value(k):
    n = 2 * k
    expected = 5 / (24 * np.pi ** 2 * k * k)
    assert sigma_ddot_zero(n, k, QUADRATURE) == pytest.approx(expected, rel=1e-9)
    assert sigma_ddot_zero(n, k, CURVE_FD) == pytest.approx(expected, rel=1e-4)
    assert sigma_ddot_zero(n, k, CLOSED_FORM) != pytest.approx(expected, rel=1e-2)


def test_phi_dot_second_order():
    res = [phi_dot_residual(phi_dot(3, 1, Grid(0.0, 1.0, N))) for N in (50, 100, 200, 400)]
    orders = np.log2(np.array(res[:-1]) / np.array(res[1:]))
    assert np.all((orders > 1.8) & (orders < 2.2))


def test_phi_dot_orthogonal_to_phi():
    prof = phi_dot(3, 1, Grid(0.0, 1.0, 2000))
    x = prof.x
    integrand = prof.phi_dot * np.sin(3 * np.pi * x)
    assert abs(np.trapezoid(integrand, x)) < 1e-8
    with pytest.raises(DomainError):
        phi_dot(2, 2, Grid())


@given(st.integers(1, 6), st.integers(1, 4), st.floats(0.0, 1.0))
def test_closed_form_property(n, k, x):
    if n == k:
        return
    assert p_closed_form(n, k, x) == pytest.approx(p_quadrature(n, k, x), abs=1e-12)
