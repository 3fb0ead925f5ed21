"""Finite-difference residual, Jacobian and Newton corrector for

    -u'' - mu u = lambda m(x) u - a(x) u^2,   u(0) = u(1) = 0.

States and residuals are carried in extended precision (numpy longdouble):
the absolute residual tolerance of 1e-10 lies close to the double-precision
rounding floor of the second difference, eps |u| / h^2, for large solutions.
Linear solves are done in double precision, which is enough for Newton
corrections.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import List, Optional

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .discretize import DiscreteOperator, Grid, second_difference
from .eigen import count_nodes, sturm_count
from .errors import DivergenceError, SingularityError
from .weights import WeightFunction

REAL = np.longdouble
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 25
MAX_HALVINGS = 6
NONLINEAR_N_INTERIOR = 200


@dataclass(frozen=True, eq=False)
class StateVector:
    """Interior values u (boundary values are zero), and the parameters lambda, mu."""

    u: np.ndarray
    lam: float
    mu: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=REAL)
        if u.ndim != 1 or not np.all(np.isfinite(u)):
            raise ValueError("state must be a finite one-dimensional array")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "mu", float(self.mu))

    def reflected(self) -> "StateVector":
        """(-lambda, u(1 - x)); a solution again when m is odd and a even about 1/2."""
        return StateVector(self.u[::-1].copy(), -self.lam, self.mu)


@dataclass(frozen=True, eq=False)
class SolutionRecord:
    state: StateVector
    l2: float
    node_count: int
    residual_norm: float
    stability_hint: int
    iterations: int = 0

    @property
    def lam(self) -> float:
        return self.state.lam

    @property
    def mu(self) -> float:
        return self.state.mu


@dataclass(frozen=True, eq=False)
class Problem:
    """Coefficients of the nonlinear problem sampled on a grid."""

    m: WeightFunction
    a: WeightFunction
    grid: Grid
    mx: np.ndarray = field(init=False, repr=False)
    ax: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        x = self.grid.nodes
        object.__setattr__(self, "mx", np.asarray(self.m(x), dtype=REAL))
        object.__setattr__(self, "ax", np.asarray(self.a(x), dtype=REAL))

    def residual(self, u, lam, mu) -> np.ndarray:
        u = np.asarray(u, dtype=REAL)
        return second_difference(u, self.grid.h) - (REAL(mu) + REAL(lam) * self.mx) * u + self.ax * u * u

    def jacobian_potential(self, u, lam, mu) -> np.ndarray:
        return (-mu - lam * self.mx + 2.0 * self.ax * np.asarray(u, dtype=REAL)).astype(float)

    def jacobian_banded(self, u, lam, mu) -> np.ndarray:
        N, h2 = self.grid.N, self.grid.h ** 2
        ab = np.empty((3, N))
        ab[0, 0] = ab[2, -1] = 0.0
        ab[0, 1:] = -1.0 / h2
        ab[2, :-1] = -1.0 / h2
        ab[1] = 2.0 / h2 + self.jacobian_potential(u, lam, mu)
        return ab

    def param_derivative(self, u, param: str) -> np.ndarray:
        """dF/dlambda = -m u, dF/dmu = -u."""
        u = np.asarray(u, dtype=REAL)
        return -self.mx * u if param == "lam" else -u

    def l2(self, u) -> float:
        return float(np.sqrt(self.grid.h * np.sum(np.asarray(u, dtype=float) ** 2)))

    def inner(self, u, v):
        return REAL(self.grid.h) * np.dot(np.asarray(u, dtype=REAL), np.asarray(v, dtype=REAL))


@lru_cache(maxsize=32)
def problem(m: WeightFunction, a: WeightFunction, grid: Grid) -> Problem:
    return Problem(m, a, grid)


def _check(state, grid):
    if state.u.shape != (grid.N,):
        raise ValueError(f"state has {state.u.shape[0]} values, grid has {grid.N} interior nodes")


def residual(state: StateVector, m: WeightFunction, a: WeightFunction, grid: Grid) -> np.ndarray:
    """F_i = (-u_{i-1} + 2u_i - u_{i+1})/h^2 - mu u_i - lambda m_i u_i + a_i u_i^2."""
    _check(state, grid)
    return problem(m, a, grid).residual(state.u, state.lam, state.mu)


def jacobian(state: StateVector, m: WeightFunction, a: WeightFunction, grid: Grid) -> DiscreteOperator:
    """Tridiagonal Jacobian: diagonal 2/h^2 - mu - lambda m + 2 a u, off-diagonals -1/h^2."""
    _check(state, grid)
    pot = problem(m, a, grid).jacobian_potential(state.u, state.lam, state.mu)
    return DiscreteOperator("fd", potential=pot, grid=grid)


@dataclass(frozen=True, eq=False)
class ArclengthConstraint:
    """h <tu, u - u0> + tp (p - p0) = ds, with p the free parameter ("lam" or "mu").

    With u0 = 0, tu = phi, tp = 0 and ds = eps this fixes the amplitude of u
    along phi while the parameter floats; it is used for branch switching.
    """

    u0: np.ndarray
    p0: float
    tu: np.ndarray
    tp: float
    ds: float
    param: str = "lam"

    def __post_init__(self):
        if self.param not in ("lam", "mu"):
            raise ValueError(f"free parameter must be 'lam' or 'mu', got {self.param!r}")


FIX_LAMBDA = "fix-lambda"


def _solve(ab, rhs_list):
    try:
        out = [solve_banded((1, 1), ab, np.asarray(r, dtype=float), check_finite=False) for r in rhs_list]
    except (LinAlgError, ValueError) as exc:
        raise SingularityError(f"singular Jacobian: {exc}") from None
    if not all(np.all(np.isfinite(z)) for z in out):
        raise SingularityError("Jacobian solve produced non-finite values")
    return out


def _get_param(state, param):
    return state.lam if param == "lam" else state.mu


def _with(u, state, param, p):
    if param == "lam":
        return StateVector(u, p, state.mu)
    return StateVector(u, state.lam, p)


def newton_correct(initial: StateVector, fixed, m: WeightFunction, a: WeightFunction, grid: Grid,
                   tol: float = NEWTON_TOL, max_iter: int = NEWTON_MAX_ITER) -> SolutionRecord:
    """Damped Newton iteration until the max-norm of the residual is at most ``tol``.

    ``fixed`` is FIX_LAMBDA (both parameters fixed) or an ArclengthConstraint
    (one parameter becomes an unknown, solved through a bordered system by two
    tridiagonal solves). A full step that does not reduce the residual is
    halved up to MAX_HALVINGS times.
    """
    if not tol > 0 or max_iter < 1:
        raise ValueError("need tol > 0 and max_iter >= 1")
    _check(initial, grid)
    P = problem(m, a, grid)
    arc = None if isinstance(fixed, str) and fixed == FIX_LAMBDA else fixed
    if arc is not None and not isinstance(arc, ArclengthConstraint):
        raise ValueError(f"unknown constraint {fixed!r}")
    h = REAL(grid.h)
    if arc is not None:
        u0 = np.asarray(arc.u0, dtype=REAL)
        tu = np.asarray(arc.tu, dtype=REAL)
        param = arc.param

    def norms(u, p):
        st = _with(u, initial, param, p) if arc is not None else StateVector(u, initial.lam, initial.mu)
        f = P.residual(u, st.lam, st.mu)
        g = REAL(0.0)
        if arc is not None:
            g = h * np.dot(tu, u - u0) + REAL(arc.tp) * (REAL(p) - REAL(arc.p0)) - REAL(arc.ds)
        return f, g, float(max(np.max(np.abs(f)), abs(g)))

    u = initial.u.copy()
    p = _get_param(initial, arc.param) if arc is not None else initial.lam
    f, g, rn = norms(u, p)
    history: List[float] = [rn]
    it = 0
    while rn > tol:
        if it >= max_iter:
            last = _with(u, initial, arc.param, p) if arc is not None else StateVector(u, initial.lam, initial.mu)
            raise DivergenceError(f"Newton did not converge in {max_iter} iterations (residual {rn:.3e})",
                                  last_iterate=last, history=history)
        it += 1
        lam, mu = (p, initial.mu) if arc is None or arc.param == "lam" else (initial.lam, p)
        ab = P.jacobian_banded(u, lam, mu)
        if arc is None:
            (du,) = _solve(ab, [-f])
            dp = 0.0
        else:
            z1, z2 = _solve(ab, [-f, -P.param_derivative(u, arc.param)])
            tuf = tu.astype(float)
            denom = grid.h * float(tuf @ z2) + arc.tp
            if not np.isfinite(denom) or abs(denom) < 1e-14 * (1.0 + np.abs(z2).max()):
                raise SingularityError("singular bordered system")
            dp = (-float(g) - grid.h * float(tuf @ z1)) / denom
            du = z1 + dp * z2
        du = du.astype(REAL)
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            un, pn = u + REAL(t) * du, p + t * dp
            fn, gn, rnn = norms(un, pn)
            if rnn < rn or not np.isfinite(rn):
                break
            t *= 0.5
        if not np.isfinite(rnn):
            last = _with(u, initial, arc.param, p) if arc is not None else StateVector(u, initial.lam, initial.mu)
            raise DivergenceError("Newton produced non-finite values", last_iterate=last, history=history)
        u, p, f, g, rn = un, pn, fn, gn, rnn
        history.append(rn)
    state = _with(u, initial, arc.param, p) if arc is not None else StateVector(u, initial.lam, initial.mu)
    return make_record(state, P, rn, it)


def make_record(state: StateVector, P: Problem, residual_norm: Optional[float] = None, iterations: int = 0) -> SolutionRecord:
    if residual_norm is None:
        residual_norm = float(np.max(np.abs(P.residual(state.u, state.lam, state.mu))))
    uf = state.u.astype(float)
    jac = DiscreteOperator("fd", potential=P.jacobian_potential(state.u, state.lam, state.mu), grid=P.grid)
    return SolutionRecord(state, P.l2(uf), count_nodes(uf), float(residual_norm), sturm_count(jac, 0.0), iterations)
