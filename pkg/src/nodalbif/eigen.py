"""n-th eigenvalue and eigenfunction of a discrete Sturm-Liouville operator."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .discretize import (
    DiscreteOperator,
    Grid,
    assemble_fd,
    assemble_spectral,
    l2_norm,
    spectral_to_grid,
)
from .errors import ConsistencyError, NumericalError, PreconditionError

BISECTION_TOL = 1e-10
NODE_FLOOR = 1e-9
UNIT_L2 = "unit"
HALF_L2 = "half"


@njit(cache=True, nogil=True)
def _sturm_count(hq, x_scaled):
    """Eigenvalues below x of tridiag(-1, 2 + h^2 q, -1) / h^2, with x_scaled = h^2 x.

    Pivots p_i = 1 + t_i are propagated through t_i, which stays O(h) for
    Laplacian-like matrices, so h^2 (q_i - x) is never absorbed into the 2.
    """
    n = hq.shape[0]
    count = 0
    t = 1.0 + (hq[0] - x_scaled)
    for i in range(n):
        if i > 0:
            p_prev = 1.0 + t
            if p_prev == 0.0:
                p_prev = 1e-300
            t = (hq[i] - x_scaled) + t / p_prev
        if 1.0 + t < 0.0:
            count += 1
    return count


@njit(cache=True, nogil=True)
def _bisect(hq, h2, index, lo, hi, tol):
    # index is 1-based; invariant: count(lo) < index <= count(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _sturm_count(hq, mid * h2) >= index:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@njit(cache=True, nogil=True)
def _shifted_solve(hq, x_scaled, b):
    """Solve (tridiag(-1, 2 + h^2 q, -1) - x_scaled I) y = b by LDL^T in pivot-difference form."""
    n = hq.shape[0]
    p = np.empty(n)
    z = np.empty(n)
    t = 1.0 + (hq[0] - x_scaled)
    p[0] = 1.0 + t
    if p[0] == 0.0:
        p[0] = 1e-300
    z[0] = b[0]
    for i in range(1, n):
        t = (hq[i] - x_scaled) + t / p[i - 1]
        p[i] = 1.0 + t
        if p[i] == 0.0:
            p[i] = 1e-300
        z[i] = b[i] + z[i - 1] / p[i - 1]
    y = np.empty(n)
    y[n - 1] = z[n - 1] / p[n - 1]
    for i in range(n - 2, -1, -1):
        y[i] = (z[i] + y[i + 1]) / p[i]
    return y


def sturm_count(op: DiscreteOperator, x: float) -> int:
    """Number of eigenvalues of a finite-difference operator strictly below x."""
    h2 = op.grid.h ** 2
    return int(_sturm_count(np.ascontiguousarray(h2 * op.potential), h2 * x))


def gershgorin_bracket(op: DiscreteOperator):
    d = op.diagonal
    if op.scheme == "fd":
        r = 2.0 / op.grid.h ** 2
        return float(d.min() - r), float(d.max() + r)
    A = op.matrix
    r = np.abs(A).sum(axis=1) - np.abs(d)
    return float((d - r).min()), float((d + r).max())


def _check_index(op, n):
    if not 1 <= n <= op.dimension:
        raise IndexError(f"eigenvalue index {n} out of range 1..{op.dimension}")


def nth_eigenvalue(op: DiscreteOperator, n: int, tol: float = BISECTION_TOL) -> float:
    _check_index(op, n)
    if op.scheme == "spectral":
        return float(np.linalg.eigvalsh(op.matrix)[n - 1])
    lo, hi = gershgorin_bracket(op)
    h2 = op.grid.h ** 2
    return float(_bisect(np.ascontiguousarray(h2 * op.potential), h2, n, lo, hi, tol))


def eigenvalues(op: DiscreteOperator, modes) -> np.ndarray:
    """Eigenvalues for several 1-based indices."""
    modes = list(modes)
    for n in modes:
        _check_index(op, n)
    if op.scheme == "spectral":
        w = np.linalg.eigvalsh(op.matrix)
        return np.array([w[n - 1] for n in modes])
    return np.array([nth_eigenvalue(op, n) for n in modes])


def count_nodes(values: np.ndarray, floor: float = NODE_FLOOR) -> int:
    """Strict sign changes among grid values above floor * max|v|."""
    v = np.asarray(values, dtype=float)
    vmax = np.abs(v).max() if v.size else 0.0
    if vmax == 0.0:
        return 0
    s = np.sign(v[np.abs(v) > floor * vmax])
    return int(np.count_nonzero(s[1:] != s[:-1]))


@dataclass(frozen=True, eq=False)
class EigenPair:
    index: int
    value: float
    function: np.ndarray
    node_count: int
    normalization: str
    grid: Grid
    coefficients: Optional[np.ndarray] = None
    residual: float = 0.0


def _inverse_iteration(op, sigma, max_iter=50, rtol=1e-8):
    h2 = op.grid.h ** 2
    hq = np.ascontiguousarray(h2 * op.potential)
    v = np.random.default_rng(12345).standard_normal(op.dimension)
    v /= np.linalg.norm(v)
    res = np.inf
    for _ in range(max_iter):
        w = _shifted_solve(hq, h2 * sigma, v)
        if not np.all(np.isfinite(w)):
            w = _shifted_solve(hq, h2 * sigma * (1.0 + 1e-14) + 1e-300, v)
        v = w / np.linalg.norm(w)
        res = np.linalg.norm(op.matvec(v) - sigma * v)
        if res <= rtol:
            return v, res
    raise NumericalError(f"inverse iteration did not converge (residual {res:.3e})", residual=res)


def nth_eigenpair(op: DiscreteOperator, n: int, norm: str = UNIT_L2) -> EigenPair:
    """n-th eigenpair, normalized to unit (or 1/2) squared L2 norm, positive near x=r.

    Raises ConsistencyError when the eigenfunction does not have n-1 interior
    nodes, which signals an under-resolved discretization.
    """
    _check_index(op, n)
    if norm not in (UNIT_L2, HALF_L2):
        raise ValueError(f"unknown normalization {norm!r}")
    target = 1.0 if norm == UNIT_L2 else np.sqrt(0.5)
    coeffs = None
    if op.scheme == "fd":
        sigma = nth_eigenvalue(op, n)
        v, res = _inverse_iteration(op, sigma)
        grid = op.grid
        v = v * target / l2_norm(v, grid)
        if v[0] < 0:
            v = -v
    else:
        w, V = np.linalg.eigh(op.matrix)
        sigma = float(w[n - 1])
        c = V[:, n - 1]
        res = float(np.linalg.norm(op.matrix @ c - sigma * c))
        c = c * target / np.linalg.norm(c)
        # sign of phi'(0) = sum_j sqrt(2) j pi c_j
        if np.dot(np.arange(1, len(c) + 1), c) < 0:
            c = -c
        grid = Grid(0.0, 1.0, 16 * op.n_modes - 1)
        v = spectral_to_grid(c, grid.nodes)
        coeffs = c
    nodes = count_nodes(v)
    if nodes != n - 1:
        raise ConsistencyError(f"eigenfunction {n} has {nodes} interior nodes, expected {n - 1}")
    return EigenPair(n, float(sigma), v, nodes, norm, grid, coeffs, float(res))


def _probe(interval):
    return np.linspace(interval[0], interval[1], 2001)


def monotonicity_check(q, q_tilde, intervals, n: int, N: int = 2000) -> bool:
    """Check sigma_n[-D^2 + q; (r, s)] < sigma_n[-D^2 + q_tilde; (alpha, beta)].

    ``intervals`` is ``((r, s), (alpha, beta))``. The hypotheses are
    [alpha, beta] within [r, s] and q <= q_tilde on [alpha, beta], with either a
    proper subinterval or q != q_tilde somewhere.
    """
    (r, s), (alpha, beta) = intervals
    if not (r <= alpha < beta <= s):
        raise PreconditionError(f"({alpha}, {beta}) is not contained in ({r}, {s})")
    x = _probe((alpha, beta))
    qv = q(x) if callable(q) else np.full_like(x, q)
    qt = q_tilde(x) if callable(q_tilde) else np.full_like(x, q_tilde)
    if np.any(qv > qt):
        raise PreconditionError("q <= q_tilde fails on the probe grid")
    proper = r < alpha and beta < s
    if not proper and not np.any(qv < qt):
        raise PreconditionError("neither a proper subinterval nor q < q_tilde somewhere")
    if (r, s) == (0.0, 1.0) and (alpha, beta) == (0.0, 1.0):
        a = nth_eigenvalue(assemble_spectral(q=q), n)
        b = nth_eigenvalue(assemble_spectral(q=q_tilde), n)
    else:
        a = nth_eigenvalue(assemble_fd(Grid(r, s, N), q), n)
        b = nth_eigenvalue(assemble_fd(Grid(alpha, beta, N), q_tilde), n)
    return bool(a < b)
