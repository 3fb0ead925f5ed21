"""Second-order perturbation of Sigma_n at lambda = 0 for m = sin(2 k pi x).

With phi = sin(n pi x), the lambda-derivative of the eigenfunction solves
[-D^2 - (n pi)^2] u = m phi, u(0) = u(1) = 0. A particular solution p is
given by variation of constants; u = B phi + p with B fixed by orthogonality
to phi. Three routes to the second derivative of Sigma_n at 0 are provided.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .discretize import Grid
from .eigencurve import FD_DERIVATIVE_STEP, second_derivative_at
from .errors import ConsistencyError, DomainError
from .weights import sine

CLOSED_FORM = "closed-form"
QUADRATURE = "quadrature"
CURVE_FD = "curve-fd"
ROUTES = (CLOSED_FORM, QUADRATURE, CURVE_FD)

# Gauss-Legendre order; integrands are trigonometric polynomials of frequency
# at most (2k + 2n) pi, resolved to rounding level for n + k well below 40
_GL_ORDER = 160


@lru_cache(maxsize=None)
def _gauss_legendre(order: int = _GL_ORDER):
    t, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (t + 1.0), 0.5 * w


def _check_modes(n, k):
    if int(n) != n or int(k) != k or n < 1 or k < 1:
        raise DomainError(f"need positive integers n, k; got n={n}, k={k}")


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any((x < 0.0) | (x > 1.0)):
        raise DomainError("x must lie in [0, 1]")
    return x


def p_quadrature(n: int, k: int, x):
    """(1/(n pi)) int_0^x sin(2k pi s) sin(n pi s) sin(n pi (s - x)) ds by Gauss-Legendre on [0, x]."""
    _check_modes(n, k)
    x = _check_x(x)
    t, w = _gauss_legendre()
    s = np.multiply.outer(x, t)
    f = np.sin(2 * k * np.pi * s) * np.sin(n * np.pi * s) * np.sin(n * np.pi * (s - x[..., None]))
    val = x * (f @ w) / (n * np.pi)
    return float(val) if val.ndim == 0 else val


def p_closed_form(n: int, k: int, x):
    """Closed form of the particular solution, normalized so that p(0) = 0.

    -(1/(8 pi^2)) [cos((2k-n) pi x)/(k(n-k)) + cos((2k+n) pi x)/(k(n+k))
                   - 2n cos(n pi x)/(k(n^2-k^2))].
    Only n = k is resonant.
    """
    _check_modes(n, k)
    if n == k:
        raise DomainError("n = k is resonant for the particular solution")
    x = _check_x(x)
    val = -(np.cos((2 * k - n) * np.pi * x) / (k * (n - k))
            + np.cos((2 * k + n) * np.pi * x) / (k * (n + k))
            - 2 * n * np.cos(n * np.pi * x) / (k * (n * n - k * k))) / (8 * np.pi ** 2)
    return float(val) if np.ndim(val) == 0 else val


def p_closed_form_published(n: int, k: int, x):
    """The variant with coefficient n instead of 2n on cos(n pi x).

    It differs from ``p_closed_form`` by a multiple of cos(n pi x), so it
    solves the same equation but does not vanish at x = 0 (its value there is
    -n / (8 pi^2 k (n^2 - k^2))).
    """
    _check_modes(n, k)
    if n == k:
        raise DomainError("n = k is resonant for the particular solution")
    x = _check_x(x)
    val = -(np.cos((2 * k - n) * np.pi * x) / (k * (n - k))
            + np.cos((2 * k + n) * np.pi * x) / (k * (n + k))
            - n * np.cos(n * np.pi * x) / (k * (n * n - k * k))) / (8 * np.pi ** 2)
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True, eq=False)
class PerturbationProfile:
    n: int
    k: int
    grid: Grid
    p: np.ndarray
    B: float
    phi_dot: np.ndarray

    @property
    def x(self) -> np.ndarray:
        return self.grid.full_nodes


def _B(n, k):
    t, w = _gauss_legendre()
    return -2.0 * float(np.dot(w, np.sin(n * np.pi * t) * p_quadrature(n, k, t)))


def phi_dot(n: int, k: int, grid: Grid) -> PerturbationProfile:
    """Derivative eigenfunction B sin(n pi x) + p(x) on the grid including its end points."""
    _check_modes(n, k)
    if n == k:
        raise DomainError("n = k is resonant")
    x = grid.full_nodes
    p = p_quadrature(n, k, x)
    B = _B(n, k)
    return PerturbationProfile(n, k, grid, p, B, B * np.sin(n * np.pi * x) + p)


def phi_dot_residual(profile: PerturbationProfile) -> float:
    """Discrete L2 norm of [-D^2 - (n pi)^2] u - m sin(n pi x) at interior nodes."""
    n, k, g = profile.n, profile.k, profile.grid
    u = profile.phi_dot
    x = g.nodes
    lap = (-(u[:-2] - 2 * u[1:-1] + u[2:])) / g.h ** 2
    r = lap - (n * np.pi) ** 2 * u[1:-1] - np.sin(2 * k * np.pi * x) * np.sin(n * np.pi * x)
    return float(np.sqrt(g.h * np.sum(r * r)))


def _quadrature_route(n, k):
    t, w = _gauss_legendre()
    m = np.sin(2 * k * np.pi * t)
    phi = np.sin(n * np.pi * t)
    p = p_quadrature(n, k, t)
    B = _B(n, k)
    direct = -4.0 * float(np.dot(w, m * (B * phi + p) * phi))
    reduced = -4.0 * float(np.dot(w, m * p * phi))
    if abs(direct - reduced) > 1e-9 * max(1.0, abs(direct)):
        raise ConsistencyError(f"B-term does not vanish: {direct} vs {reduced}")
    return direct


def sigma_ddot_zero(n: int, k: int, route: str = CLOSED_FORM, step: float = FD_DERIVATIVE_STEP) -> float:
    """Second lambda-derivative of Sigma_n at 0 for m = sin(2 k pi x).

    ``closed-form`` is 1/(4 pi^2 (n^2 - k^2)), stated for n >= k+1. It is not
    correct at n = 2k, where the (2k - n) frequency term of p is constant and
    the true value is 5/(24 pi^2 k^2); the other two routes do not rely on it.
    """
    _check_modes(n, k)
    if route == CLOSED_FORM:
        if n <= k:
            raise DomainError("the closed form needs n >= k + 1")
        return 1.0 / (4 * np.pi ** 2 * (n * n - k * k))
    if route == QUADRATURE:
        if n == k:
            raise DomainError("n = k is resonant")
        return _quadrature_route(n, k)
    if route == CURVE_FD:
        return second_derivative_at(sine(2 * k), n, 0.0, step)
    raise DomainError(f"unknown route {route!r}")
