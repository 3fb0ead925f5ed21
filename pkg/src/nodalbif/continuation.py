"""Pseudo-arclength continuation of solution branches.

Branches start at bifurcation points from u = 0, found as roots of
Sigma_n(lambda) = mu, and are followed in the metric h <du, du> + dlambda^2
with secant predictors and a bordered Newton corrector.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq

from .discretize import Grid, assemble_fd
from .eigen import nth_eigenpair, nth_eigenvalue
from .eigencurve import BifurcationPoint, roots_at_level, sample_curves
from .errors import (ConfigurationError, DivergenceError, NumericalError, PreconditionError,
                     SingularityError, TransversalityError)
from .nonlinear import (FIX_LAMBDA, NONLINEAR_N_INTERIOR, REAL, ArclengthConstraint, SolutionRecord,
                        StateVector, make_record, newton_correct, problem)
from .weights import WeightFunction

# termination kinds
LAMBDA_RANGE_EXIT = "lambda-range-exit"
NORM_CAP = "norm-cap"
STEP_FLOOR = "step-floor"
CLOSED_LOOP = "closed-loop"
TRIVIAL_RECONNECT = "trivial-reconnect"
MAX_POINTS = "max-points"
HOMOTOPY_FAILURE = "homotopy-failure"

# origin kinds
TRIVIAL_BIFURCATION = "trivial-bifurcation"
MU_HOMOTOPY = "mu-homotopy"
MANUAL = "manual"

ANCHOR_TOL = 1e-6
SLOPE_FLOOR = 1e-8
GROWTH = 1.3
GROW_AFTER = 4
MIN_COS = 0.8


@dataclass(frozen=True)
class ContinuationConfig:
    ds: float = 0.05
    ds_min: float = 1e-6
    ds_max: float = 0.5
    tol: float = 1e-10
    max_points: int = 6000
    lam_window: Tuple[float, float] = (-600.0, 600.0)
    norm_cap: float = 50.0
    epsilon: float = 1e-3
    max_newton: int = 12

    def __post_init__(self):
        if not (0 < self.ds_min <= self.ds <= self.ds_max):
            raise ConfigurationError("need 0 < ds_min <= ds <= ds_max")
        if not self.tol > 0:
            raise ConfigurationError("tol must be positive")
        if self.max_points < 2:
            raise ConfigurationError("max_points must be at least 2")
        if not self.lam_window[0] < self.lam_window[1]:
            raise ConfigurationError("empty lambda window")
        if not self.norm_cap > 0 or not self.epsilon > 0:
            raise ConfigurationError("norm_cap and epsilon must be positive")


@dataclass(frozen=True)
class Origin:
    kind: str
    point: Optional[BifurcationPoint] = None
    direction: int = 0
    source: Optional[str] = None
    mu_path: Tuple[float, ...] = ()


@dataclass(frozen=True)
class Termination:
    kind: str
    point: Optional[BifurcationPoint] = None
    note: str = ""


@dataclass(eq=False)
class Branch:
    points: List[SolutionRecord]
    origin: Origin
    termination: Termination
    label: str = ""
    # for branches traced both ways from an interior seed: how the first point was reached
    start_termination: Optional[Termination] = None

    @property
    def mu(self) -> float:
        return self.points[0].mu

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def l2(self) -> np.ndarray:
        return np.array([p.l2 for p in self.points])

    @property
    def node_counts(self) -> List[int]:
        return [p.node_count for p in self.points]

    @property
    def nontrivial(self) -> List[SolutionRecord]:
        return [p for p in self.points if p.l2 > 0.0]


# ---------------------------------------------------------------- anchors

def _fd_sigma(m, grid, lam, n):
    return nth_eigenvalue(assemble_fd(grid, lambda x: -lam * m(x)), n)


def anchor_on_grid(bp: BifurcationPoint, mu: float, m: WeightFunction, grid: Grid) -> BifurcationPoint:
    """Re-solve Sigma_n(lambda) = mu on the finite-difference grid near bp.lam.

    Bifurcation values move by O(h^2) between discretizations; branch
    switching needs the root of the discrete operator actually used.
    """
    n = bp.n
    f = lambda v: _fd_sigma(m, grid, v, n) - mu  # noqa: E731
    lo = hi = bp.lam
    flo = fhi = f(bp.lam)
    if flo == 0.0:
        root = bp.lam
    else:
        width = 1e-3 * max(1.0, abs(bp.lam))
        for _ in range(40):
            lo, hi = bp.lam - width, bp.lam + width
            flo, fhi = f(lo), f(hi)
            if flo * fhi <= 0:
                break
            width *= 2.0
        else:
            raise PreconditionError(f"no root of Sigma_{n} = {mu} on the grid near lambda={bp.lam}")
        root = brentq(f, lo, hi, xtol=1e-13, rtol=8.9e-16)
    if abs(f(root)) > ANCHOR_TOL:
        raise PreconditionError(f"|Sigma_{n} - mu| = {abs(f(root)):.2e} at the refined anchor")
    d = 1e-3
    slope = (f(root + d) - f(root - d)) / (2 * d)
    return replace(bp, lam=float(root), mu=float(mu), slope=float(slope))


def detect_bifurcation_values(m: WeightFunction, mu: float, modes: Sequence[int],
                              lam_range=(-600.0, 600.0), step: float = 0.5, scheme: str = "spectral",
                              n_interior: int = 2000, n_modes: int = 64, jobs: int = 1) -> List[BifurcationPoint]:
    """Roots of Sigma_n(lambda) = mu for each requested mode, merged and sorted by lambda."""
    out = []
    for s in sample_curves(m, list(modes), lam_range, step, scheme, n_interior, n_modes, jobs):
        out.extend(roots_at_level(s, mu))
    return sorted(out, key=lambda b: (b.lam, b.n))


def _unit_eigenfunction(m, grid, lam, n):
    pair = nth_eigenpair(assemble_fd(grid, lambda x: -lam * m(x)), n)
    return pair.function


def branch_switch(bp: BifurcationPoint, mu: float, eps: float, m: WeightFunction, a: WeightFunction,
                  grid: Grid, direction: int = 1) -> StateVector:
    """Predictor u = direction * eps * phi_n, lambda = lambda* + direction * eps * lambda_1.

    phi_n has unit L2 norm (so eps is the L2 amplitude) and
    lambda_1 = int a phi^3 / int m phi^2 comes from the solvability condition
    at second order. ``bp`` should be an anchor on ``grid`` (see anchor_on_grid).
    """
    if not eps > 0:
        raise PreconditionError("amplitude must be positive")
    if abs(_fd_sigma(m, grid, bp.lam, bp.n) - mu) > ANCHOR_TOL:
        raise PreconditionError(f"lambda={bp.lam} is not a root of Sigma_{bp.n} = {mu} on this grid")
    if abs(bp.slope) < SLOPE_FLOOR:
        raise TransversalityError(f"slope {bp.slope:.2e} at lambda={bp.lam}: roots are merging")
    phi = _unit_eigenfunction(m, grid, bp.lam, bp.n)
    x = grid.nodes
    mphi2 = float(np.sum(m(x) * phi ** 2))
    lam1 = float(np.sum(a(x) * phi ** 3)) / mphi2
    s = 1 if direction >= 0 else -1
    return StateVector(REAL(s * eps) * phi.astype(REAL), bp.lam + s * eps * lam1, mu)


# ---------------------------------------------------------------- tracing

def _metric_norm(h, du, dl):
    return float(np.sqrt(h * float(np.dot(du, du)) + dl * dl))


def _tangent(h, u1, l1, u0, l0):
    du = (np.asarray(u1, dtype=REAL) - np.asarray(u0, dtype=REAL)).astype(float)
    dl = l1 - l0
    nr = _metric_norm(h, du, dl)
    return du / nr, dl / nr


def _null_tangent(rec: SolutionRecord, P, direction):
    st = rec.state
    ab = P.jacobian_banded(st.u, st.lam, st.mu)
    from scipy.linalg import solve_banded
    z = solve_banded((1, 1), ab, (P.mx * st.u).astype(float))
    nr = _metric_norm(P.grid.h, z, 1.0)
    s = 1.0 if direction >= 0 else -1.0
    return s * z / nr, s / nr


@dataclass
class _Anchor:
    point: BifurcationPoint
    phi: np.ndarray


def trace(seed: SolutionRecord, cfg: ContinuationConfig, m: WeightFunction, a: WeightFunction, grid: Grid,
          previous: Optional[Tuple[np.ndarray, float]] = None, direction: int = 1,
          anchors: Sequence[BifurcationPoint] = (), origin: Optional[Origin] = None) -> Branch:
    """Follow the branch through ``seed``.

    The first tangent is the secant from ``previous`` (u, lambda) to the seed
    when given (for branches leaving u = 0 this is the eigenfunction
    direction), otherwise the kernel direction of the bordered Jacobian
    oriented by ``direction``. ``anchors`` are bifurcation points on this grid
    used to detect a return to u = 0.
    """
    P = problem(m, a, grid)
    h = grid.h
    mu = seed.mu
    pts = [seed]
    anc = [_Anchor(b, _unit_eigenfunction(m, grid, b.lam, b.n)) for b in anchors]
    if previous is not None:
        tu, tl = _tangent(h, seed.state.u, seed.lam, previous[0], previous[1])
    else:
        tu, tl = _null_tangent(seed, P, direction)
    start_u, start_l = seed.state.u.astype(float), seed.lam
    start_t = (tu.copy(), tl)
    ds, succ = cfg.ds, 0
    origin = origin or Origin(MANUAL)
    term = Termination(MAX_POINTS)
    cur = seed
    far = 0.0
    while len(pts) < cfg.max_points:
        u, lam = cur.state.u, cur.lam
        pred = StateVector(u + REAL(ds) * tu.astype(REAL), lam + ds * tl, mu)
        con = ArclengthConstraint(u, lam, tu, tl, ds)
        try:
            rec = newton_correct(pred, con, m, a, grid, cfg.tol, cfg.max_newton)
            ntu, ntl = _tangent(h, rec.state.u, rec.lam, u, lam)
            ok = h * float(ntu @ tu) + ntl * tl > MIN_COS
        except (DivergenceError, SingularityError, NumericalError):
            ok = False
        if not ok:
            ds *= 0.5
            succ = 0
            if ds < cfg.ds_min:
                term = Termination(STEP_FLOOR, note=f"step below {cfg.ds_min}")
                break
            continue
        pts.append(rec)
        prev, cur = cur, rec
        tu, tl = ntu, ntl
        succ += 1
        if succ >= GROW_AFTER:
            ds = min(ds * GROWTH, cfg.ds_max)
            succ = 0
        hit = _reconnect(prev, cur, anc, P, cfg)
        if hit is not None:
            pts.append(make_record(StateVector(np.zeros(grid.N, dtype=REAL), hit.lam, mu), P))
            term = Termination(TRIVIAL_RECONNECT, hit)
            break
        # a homotopy can start above the cap; only growth past it ends the branch
        if cur.l2 > cfg.norm_cap and cur.l2 >= prev.l2:
            term = Termination(NORM_CAP)
            break
        if not cfg.lam_window[0] <= cur.lam <= cfg.lam_window[1]:
            term = Termination(LAMBDA_RANGE_EXIT)
            break
        dist = _metric_norm(h, cur.state.u.astype(float) - start_u, cur.lam - start_l)
        far = max(far, dist)
        if len(pts) > 10 and far > 20 * ds:
            cos = h * float(tu @ start_t[0]) + tl * start_t[1]
            if dist < 10 * ds and cos > 0.9:
                term = Termination(CLOSED_LOOP)
                break
    return Branch(pts, origin, term)


def _reconnect(prev, cur, anchors, P, cfg):
    """Anchor whose eigenfunction projection changes sign between two small consecutive states."""
    lim = 2.0 * cfg.ds_max
    if prev.l2 > lim or cur.l2 > lim:
        return None
    for an in anchors:
        b = an.point
        if abs(prev.lam - b.lam) > lim or abs(cur.lam - b.lam) > lim:
            continue
        c0 = float(P.inner(prev.state.u, an.phi))
        c1 = float(P.inner(cur.state.u, an.phi))
        if c0 * c1 <= 0 and (c0 != 0 or c1 != 0):
            return b
    return None


def start_branch(bp: BifurcationPoint, mu: float, direction: int, cfg: ContinuationConfig,
                 m: WeightFunction, a: WeightFunction, grid: Grid,
                 anchors: Sequence[BifurcationPoint] = ()) -> Branch:
    """Branch switch at ``bp`` (an anchor on ``grid``) and trace in one direction."""
    pred = branch_switch(bp, mu, cfg.epsilon, m, a, grid, direction)
    phi = _unit_eigenfunction(m, grid, bp.lam, bp.n)
    s = 1 if direction >= 0 else -1
    con = ArclengthConstraint(np.zeros(grid.N), bp.lam, s * phi, 0.0, cfg.epsilon)
    seed = newton_correct(pred, con, m, a, grid, cfg.tol, cfg.max_newton)
    P = problem(m, a, grid)
    trivial = make_record(StateVector(np.zeros(grid.N, dtype=REAL), bp.lam, mu), P)
    others = [b for b in anchors if not (b.n == bp.n and b.lam == bp.lam)]
    br = trace(seed, cfg, m, a, grid, previous=(np.zeros(grid.N), bp.lam), anchors=others,
               origin=Origin(TRIVIAL_BIFURCATION, bp, s))
    br.points.insert(0, trivial)
    return br


def _homotopy_source(branch: Branch, cfg: ContinuationConfig) -> SolutionRecord:
    # points near the norm cap would leave the window as mu changes
    pts = [p for p in branch.points if 0.0 < p.l2 <= 0.25 * cfg.norm_cap] or branch.points
    return max(pts, key=lambda p: p.l2)


def mu_homotopy(branch: Branch, mu_target: float, steps: int, cfg: ContinuationConfig,
                m: WeightFunction, a: WeightFunction, grid: Grid, source: str = "",
                anchors: Sequence[BifurcationPoint] = ()) -> Branch:
    """Carry one point of ``branch`` to mu_target and trace its branch there in both directions.

    The point is the largest one with l2 at most a quarter of the norm cap. mu is
    stepped with lambda fixed; a step that fails, or changes l2 by more than
    half, is redone by arclength continuation in (u, mu). If the point
    shrinks to u = 0 on the way (the branch through it ends at a bifurcation
    point below mu_target) the result is a one-point branch terminated
    HOMOTOPY_FAILURE.
    """
    if steps < 1 or not branch.points:
        raise PreconditionError("homotopy needs a nonempty branch and steps >= 1")
    src = _homotopy_source(branch, cfg)
    path = tuple(float(v) for v in np.linspace(src.mu, mu_target, steps + 1))
    origin = Origin(MU_HOMOTOPY, source=source, mu_path=path)
    rec = src
    for mu in path[1:]:
        try:
            new = newton_correct(StateVector(rec.state.u, rec.lam, mu), FIX_LAMBDA, m, a, grid,
                                 cfg.tol, cfg.max_newton)
            if abs(new.l2 - rec.l2) <= 0.5 * rec.l2:
                rec = new
                continue
        except (DivergenceError, SingularityError):
            pass
        try:
            rec = _mu_arclength(rec, mu, cfg, m, a, grid)
        except (DivergenceError, SingularityError, NumericalError) as exc:
            return Branch([rec], origin, Termination(HOMOTOPY_FAILURE, note=f"lost convergence near mu={mu}: {exc}"))
        if rec.l2 < cfg.epsilon:
            return Branch([rec], origin, Termination(HOMOTOPY_FAILURE, note=f"collapsed to u=0 near mu={mu}"))
    fwd = trace(rec, cfg, m, a, grid, direction=1, anchors=anchors, origin=origin)
    if fwd.termination.kind == CLOSED_LOOP:
        return fwd
    back = trace(rec, cfg, m, a, grid, direction=-1, anchors=anchors, origin=origin)
    return Branch(back.points[::-1] + fwd.points[1:], origin, fwd.termination,
                  start_termination=back.termination)


def _mu_arclength(rec, mu_target, cfg, m, a, grid, max_steps=400):
    """Continue in (u, mu) at fixed lambda until mu_target is reached."""
    h = grid.h
    P = problem(m, a, grid)
    st = rec.state
    ab = P.jacobian_banded(st.u, st.lam, st.mu)
    from scipy.linalg import solve_banded
    z = solve_banded((1, 1), ab, st.u.astype(float))
    s = 1.0 if mu_target > st.mu else -1.0
    nr = _metric_norm(h, z, 1.0)
    tu, tp = s * z / nr, s / nr
    ds = cfg.ds
    for _ in range(max_steps):
        u, mu = rec.state.u, rec.mu
        if (mu_target - mu) * s <= 0:
            break
        step = ds
        pred = StateVector(u + REAL(step) * tu.astype(REAL), rec.lam, mu + step * tp)
        con = ArclengthConstraint(u, mu, tu, tp, step, param="mu")
        try:
            new = newton_correct(pred, con, m, a, grid, cfg.tol, cfg.max_newton)
        except (DivergenceError, SingularityError):
            ds *= 0.5
            if ds < cfg.ds_min:
                raise NumericalError("mu continuation stalled", residual=float("nan"))
            continue
        if (mu_target - new.mu) * s <= 0:
            return newton_correct(StateVector(new.state.u, new.lam, mu_target), FIX_LAMBDA, m, a, grid,
                                  cfg.tol, cfg.max_newton)
        du = (new.state.u - u).astype(float)
        nr = _metric_norm(h, du, new.mu - mu)
        tu, tp = du / nr, (new.mu - mu) / nr
        rec = new
        ds = min(ds * GROWTH, cfg.ds_max)
    return newton_correct(StateVector(rec.state.u, rec.lam, mu_target), FIX_LAMBDA, m, a, grid,
                          cfg.tol, cfg.max_newton)


# ---------------------------------------------------------------- diagrams of branches

@dataclass(frozen=True)
class BranchTask:
    bp: BifurcationPoint
    direction: int


def _run_task(args):
    task, mu, cfg, m, a, grid, anchors = args
    return start_branch(task.bp, mu, task.direction, cfg, m, a, grid, anchors)


def trace_all(anchors: Sequence[BifurcationPoint], mu: float, cfg: ContinuationConfig,
              m: WeightFunction, a: WeightFunction, grid: Grid, jobs: int = 1) -> List[Branch]:
    """Both half-branches at every anchor; results in anchor order, independent of ``jobs``."""
    tasks = [BranchTask(b, d) for b in anchors for d in (1, -1)]
    args = [(t, mu, cfg, m, a, grid, tuple(anchors)) for t in tasks]
    if jobs <= 1 or len(tasks) < 2:
        out = [_run_task(x) for x in args]
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            out = list(pool.map(_run_task, args))
    for br, t in zip(out, tasks):
        br.label = f"n{t.bp.n}:{t.bp.label}:{'+' if t.direction > 0 else '-'}"
    return out


def components(anchors: Sequence[BifurcationPoint], branches: Sequence[Branch]) -> List[List[BifurcationPoint]]:
    """Group anchors joined by branches that return to u = 0 (union-find)."""
    key = lambda b: (b.n, round(b.lam, 9))  # noqa: E731
    parent: Dict = {key(b): key(b) for b in anchors}

    def find(k):
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for br in branches:
        o, t = br.origin, br.termination
        if o.kind == TRIVIAL_BIFURCATION and t.kind == TRIVIAL_RECONNECT:
            ka, kb = key(o.point), key(t.point)
            if ka in parent and kb in parent:
                parent[find(ka)] = find(kb)
    groups: Dict = {}
    for b in anchors:
        groups.setdefault(find(key(b)), []).append(b)
    return sorted((sorted(g, key=lambda b: b.lam) for g in groups.values()), key=lambda g: g[0].lam)


def nonlinear_grid(N: int = NONLINEAR_N_INTERIOR) -> Grid:
    return Grid(0.0, 1.0, N)
