import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nodalbif.discretize import Grid, assemble_fd, assemble_spectral
from nodalbif.eigen import (count_nodes, eigenvalues, gershgorin_bracket, monotonicity_check, nth_eigenpair,
                            nth_eigenvalue, sturm_count)
from nodalbif.errors import PreconditionError


def fd_exact(n, N):
    h = 1.0 / (N + 1)
    return 4 / h ** 2 * np.sin(n * np.pi * h / 2) ** 2


@pytest.mark.parametrize("n", [1, 2, 3, 5, 10])
def test_fd_laplacian_eigenvalues_exact(n):
    op = assemble_fd(Grid(0.0, 1.0, 100))
    assert nth_eigenvalue(op, n) == pytest.approx(fd_exact(n, 100), abs=1e-9)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_spectral_laplacian(n):
    assert nth_eigenvalue(assemble_spectral(), n) == pytest.approx((n * np.pi) ** 2, abs=1e-9)


def test_fd_n2000_baseline():
    op = assemble_fd(Grid(0.0, 1.0, 2000))
    vals = eigenvalues(op, range(1, 6))
    assert np.all(np.abs(vals - (np.arange(1, 6) * np.pi) ** 2) < 5e-3)


def test_fd_agrees_with_dense():
    g = Grid(0.0, 1.0, 60)
    op = assemble_fd(g, lambda x: -80 * np.sin(2 * np.pi * x))
    w = np.linalg.eigvalsh(op.dense())
    assert eigenvalues(op, [1, 2, 7]) == pytest.approx(w[[0, 1, 6]], rel=1e-9)


def test_sturm_count_and_bracket():
    op = assemble_fd(Grid(0.0, 1.0, 50), 3.0)
    lo, hi = gershgorin_bracket(op)
    assert sturm_count(op, lo) == 0 and sturm_count(op, hi) == 50
    v2 = nth_eigenvalue(op, 2)
    assert sturm_count(op, v2 - 1e-6) == 1 and sturm_count(op, v2 + 1e-6) == 2


def test_index_out_of_range():
    with pytest.raises(IndexError):
        nth_eigenvalue(assemble_fd(Grid(0.0, 1.0, 10)), 11)
    with pytest.raises(IndexError):
        nth_eigenvalue(assemble_spectral(8), 0)


@pytest.mark.parametrize("scheme", ["fd", "spectral"])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_eigenpair_nodes_and_sign(scheme, n):
    q = lambda x: -100 * np.sin(2 * np.pi * x)  # noqa: E731
    op = assemble_fd(Grid(0.0, 1.0, 400), q) if scheme == "fd" else assemble_spectral(32, q)
    pair = nth_eigenpair(op, n)
    assert pair.node_count == n - 1
    assert pair.function[np.argmax(np.abs(pair.function) > 1e-6 * np.abs(pair.function).max())] > 0
    h = pair.grid.h
    assert h * np.sum(pair.function ** 2) == pytest.approx(1.0, rel=1e-3)


def test_eigenpair_half_normalization():
    pair = nth_eigenpair(assemble_fd(Grid(0.0, 1.0, 200)), 1, norm="half")
    assert pair.grid.h * np.sum(pair.function ** 2) == pytest.approx(0.5, rel=1e-9)
    assert np.max(np.abs(pair.function - np.sin(np.pi * pair.grid.nodes))) < 1e-3


def test_count_nodes():
    x = np.linspace(0.01, 0.99, 99)
    assert count_nodes(np.sin(3 * np.pi * x)) == 2
    assert count_nodes(np.zeros(5)) == 0
    assert count_nodes(np.array([1.0, 1e-12, -1e-12, 1.0])) == 0


def test_monotonicity_domain():
    assert monotonicity_check(0.0, 0.0, ((0.0, 1.0), (0.2, 0.8)), 1, N=400)
    assert monotonicity_check(0.0, 1.0, ((0.0, 1.0), (0.0, 1.0)), 3)


def test_monotonicity_preconditions():
    with pytest.raises(PreconditionError):
        monotonicity_check(0.0, 0.0, ((0.0, 1.0), (0.0, 1.0)), 1)
    with pytest.raises(PreconditionError):
        monotonicity_check(1.0, 0.0, ((0.0, 1.0), (0.2, 0.8)), 1)
    with pytest.raises(PreconditionError):
        monotonicity_check(0.0, 0.0, ((0.2, 0.8), (0.0, 1.0)), 1)


@given(st.floats(-300, 300), st.integers(1, 4))
def test_sturm_matches_dense_property(c, n):
    op = assemble_fd(Grid(0.0, 1.0, 40), lambda x: c * np.sin(2 * np.pi * x))
    w = np.linalg.eigvalsh(op.dense())
    assert nth_eigenvalue(op, n) == pytest.approx(w[n - 1], rel=1e-9, abs=1e-7)


@given(st.floats(-200, 200), st.floats(0.0, 50.0))
def test_eigenvalue_monotone_in_potential(lam, c):
    q = lambda x: -lam * np.sin(2 * np.pi * x)  # noqa: E731
    a = nth_eigenvalue(assemble_spectral(24, q), 2)
    b = nth_eigenvalue(assemble_spectral(24, lambda x: q(x) + c), 2)
    assert b == pytest.approx(a + c, abs=1e-8)


def test_monotonicity_rejects_crossing_potentials():
    # -10 sin(2 pi x) and 10 sin(2 pi x) swap order at x = 1/2
    def s(c):
        return lambda x: c * np.sin(2 * np.pi * x)

    with pytest.raises(PreconditionError):
        monotonicity_check(s(-10.0), s(10.0), ((0.0, 1.0), (0.0, 1.0)), 2)
