"""Discretizations of -D^2 + q(x) with Dirichlet conditions.

Two schemes are provided: centered finite differences on a uniform grid
(symmetric tridiagonal) and a sine-Galerkin method on (0, 1) whose matrix
entries are computed with the composite trapezoid rule.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigurationError

DEFAULT_N_INTERIOR = 2000
DEFAULT_N_MODES = 64

Potential = Union[Callable, float, int]


@dataclass(frozen=True)
class Grid:
    """Uniform grid with ``N`` interior nodes on (r, s)."""

    r: float = 0.0
    s: float = 1.0
    N: int = DEFAULT_N_INTERIOR

    def __post_init__(self):
        if not self.r < self.s:
            raise ConfigurationError(f"need r < s, got ({self.r}, {self.s})")
        if int(self.N) != self.N or self.N < 8:
            raise ConfigurationError(f"grid needs at least 8 interior points, got N={self.N}")

    @property
    def h(self) -> float:
        return (self.s - self.r) / (self.N + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.r + np.arange(1, self.N + 1) * self.h

    @property
    def full_nodes(self) -> np.ndarray:
        """Nodes including both endpoints."""
        return self.r + np.arange(self.N + 2) * self.h


def _evaluate(q: Potential, x: np.ndarray) -> np.ndarray:
    if callable(q):
        return np.broadcast_to(np.asarray(q(x), dtype=float), x.shape).copy()
    return np.full(x.shape, float(q))


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    """Discrete -D^2 + q.

    ``scheme == "fd"``: symmetric tridiagonal on ``grid``; the potential values at
    the nodes are kept separately from the 2/h^2 part so that Sturm counts can be
    evaluated without absorbing q into the large diagonal.
    ``scheme == "spectral"``: dense symmetric Galerkin ``matrix`` in the
    orthonormal basis sqrt(2) sin(j pi x), j = 1..n_modes.
    """

    scheme: str
    potential: Optional[np.ndarray] = None
    grid: Optional[Grid] = None
    matrix: Optional[np.ndarray] = None
    n_modes: Optional[int] = None

    @property
    def dimension(self) -> int:
        return self.grid.N if self.scheme == "fd" else self.n_modes

    @property
    def diagonal(self) -> np.ndarray:
        if self.scheme == "fd":
            return 2.0 / self.grid.h ** 2 + self.potential
        return np.diag(self.matrix).copy()

    @property
    def off_diagonal(self) -> Optional[np.ndarray]:
        if self.scheme == "fd":
            return np.full(self.grid.N - 1, -1.0 / self.grid.h ** 2)
        return None

    def shifted(self, c: float) -> "DiscreteOperator":
        """Operator for q + c."""
        if self.scheme == "fd":
            return DiscreteOperator("fd", potential=self.potential + c, grid=self.grid)
        return DiscreteOperator("spectral", matrix=self.matrix + c * np.eye(self.n_modes), n_modes=self.n_modes)

    def dense(self) -> np.ndarray:
        if self.scheme == "spectral":
            return self.matrix
        off = self.off_diagonal
        return np.diag(self.diagonal) + np.diag(off, 1) + np.diag(off, -1)

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.scheme == "spectral":
            return self.matrix @ v
        return second_difference(v, self.grid.h) + self.potential * v


def second_difference(v: np.ndarray, h: float) -> np.ndarray:
    """(-v[i-1] + 2 v[i] - v[i+1]) / h^2 with zero boundary values.

    Evaluated as a difference of first differences, which keeps the rounding
    error proportional to |v''| instead of |v| / h^2.
    """
    v = np.asarray(v)
    full = np.zeros(len(v) + 2, dtype=np.result_type(v.dtype, float))
    full[1:-1] = v
    d = np.diff(full)
    return (d[:-1] - d[1:]) / (h * h)


def assemble_fd(grid: Grid, q: Potential = 0.0) -> DiscreteOperator:
    return DiscreteOperator("fd", potential=_evaluate(q, grid.nodes), grid=grid)


def trapezoid_weights(P: int) -> np.ndarray:
    w = np.full(P + 1, 1.0 / P)
    w[0] = w[-1] = 0.5 / P
    return w


def sine_basis(M: int, x: np.ndarray) -> np.ndarray:
    """Rows sqrt(2) sin(j pi x), j = 1..M."""
    j = np.arange(1, M + 1)
    return np.sqrt(2.0) * np.sin(np.pi * np.outer(j, x))


@lru_cache(maxsize=8)
def _quadrature_basis(M: int, points_per_mode: int):
    P = points_per_mode * M
    x = np.linspace(0.0, 1.0, P + 1)
    S = sine_basis(M, x)
    S.flags.writeable = False
    w = trapezoid_weights(P)
    w.flags.writeable = False
    x.flags.writeable = False
    return x, w, S


def _check_spectral(M, points_per_mode):
    if int(M) != M or M < 4:
        raise ConfigurationError(f"spectral scheme needs at least 4 modes, got M={M}")
    if points_per_mode < 8:
        raise ConfigurationError("quadrature needs at least 8 points per mode")


def galerkin_matrix(M: int, f: Potential, points_per_mode: int = 8) -> np.ndarray:
    """Symmetric matrix of int f phi_i phi_j by the trapezoid rule (no Laplacian part)."""
    _check_spectral(M, points_per_mode)
    x, w, S = _quadrature_basis(int(M), int(points_per_mode))
    mat = (S * (w * _evaluate(f, x))) @ S.T
    return 0.5 * (mat + mat.T)


def laplacian_diagonal(M: int) -> np.ndarray:
    return (np.arange(1, M + 1) * np.pi) ** 2


def assemble_spectral(M: int = DEFAULT_N_MODES, q: Potential = 0.0, points_per_mode: int = 8) -> DiscreteOperator:
    mat = galerkin_matrix(M, q, points_per_mode)
    mat[np.diag_indices(M)] += laplacian_diagonal(M)
    return DiscreteOperator("spectral", matrix=mat, n_modes=M)


def spectral_to_grid(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    return sine_basis(len(coeffs), x).T @ coeffs


def l2_norm(values: np.ndarray, grid: Grid) -> float:
    """Trapezoid approximation of the L2 norm, boundary values taken as zero."""
    values = np.asarray(values)
    if values.shape != (grid.N,):
        raise ConfigurationError(f"expected {grid.N} interior values, got shape {values.shape}")
    return float(np.sqrt(grid.h * np.sum(values.astype(float) ** 2)))


def inner(u: np.ndarray, v: np.ndarray, grid: Grid) -> float:
    return float(grid.h * np.dot(u, v))
