"""Eigencurves Sigma_n(lambda) = sigma_n[-D^2 - lambda m; (0, 1)].

Sampling, level-set roots, curve maxima, concavity diagnostics and the
decay bound obtained by comparison with a small subinterval where m > 0.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .discretize import (DEFAULT_N_INTERIOR, DEFAULT_N_MODES, DiscreteOperator, Grid, galerkin_matrix,
                         laplacian_diagonal)
from .eigen import eigenvalues
from .errors import ConfigurationError, PreconditionError, RangeTooSmallError
from .weights import PROBE, WeightFunction

ROOT_TOL = 1e-8
ARGMAX_TOL = 1e-6
CONCAVITY_TOL = 1e-8
FD_DERIVATIVE_STEP = 0.25
DECAY_EPSILONS = (0.2, 0.1, 0.05, 0.02)

MINUS_OUTER = "minus-outer"
MINUS_INNER = "minus-inner"
PLUS_INNER = "plus-inner"
PLUS_OUTER = "plus-outer"
MINUS = "minus"
PLUS = "plus"


@dataclass(frozen=True)
class CurveEvaluator:
    """Evaluates Sigma_n(lambda) for a fixed weight and discretization."""

    m: WeightFunction
    scheme: str = "spectral"
    n_interior: int = DEFAULT_N_INTERIOR
    n_modes: int = DEFAULT_N_MODES

    def __post_init__(self):
        if self.scheme not in ("spectral", "fd"):
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "spectral":
            # A(lambda) = K - lambda W with W the Galerkin matrix of m
            W = galerkin_matrix(self.n_modes, self.m)
            object.__setattr__(self, "_weight_matrix", W)
            object.__setattr__(self, "_laplacian", np.diag(laplacian_diagonal(self.n_modes)))
        else:
            grid = Grid(0.0, 1.0, self.n_interior)
            object.__setattr__(self, "_grid", grid)
            object.__setattr__(self, "_m_nodes", np.asarray(self.m(grid.nodes), dtype=float))

    def operator(self, lam: float) -> DiscreteOperator:
        if self.scheme == "spectral":
            return DiscreteOperator("spectral", matrix=self._laplacian - lam * self._weight_matrix,
                                    n_modes=self.n_modes)
        return DiscreteOperator("fd", potential=-lam * self._m_nodes, grid=self._grid)

    def values(self, lam: float, modes: Sequence[int]) -> np.ndarray:
        return eigenvalues(self.operator(lam), modes)

    def __call__(self, lam: float, n: int) -> float:
        return float(self.values(lam, [n])[0])

    def table(self, lambdas, modes: Sequence[int], jobs: int = 1) -> np.ndarray:
        """Array of shape (len(lambdas), len(modes)); rows are computed independently."""
        lambdas = [float(v) for v in lambdas]
        modes = list(modes)
        if jobs <= 1 or len(lambdas) < 2:
            rows = [self.values(v, modes) for v in lambdas]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                rows = list(pool.map(lambda v: self.values(v, modes), lambdas))
        return np.array(rows, dtype=float).reshape(len(lambdas), len(modes))


def lambda_grid(lam_range: Tuple[float, float], step: float) -> np.ndarray:
    """Multiples of ``step`` inside the range, so that 0 and +-lambda pairs are exact."""
    lo, hi = float(lam_range[0]), float(lam_range[1])
    if not step > 0:
        raise ConfigurationError(f"step must be positive, got {step}")
    if not lo < hi:
        raise ConfigurationError(f"empty lambda range ({lo}, {hi})")
    i0 = math.ceil(lo / step - 1e-9)
    i1 = math.floor(hi / step + 1e-9)
    lambdas = step * np.arange(i0, i1 + 1, dtype=float)
    if lambdas.size < 5:
        raise ConfigurationError(f"range ({lo}, {hi}) with step {step} has fewer than 5 points")
    return lambdas


def _central_differences(values: np.ndarray, step: float):
    d1 = np.full_like(values, np.nan)
    d2 = np.full_like(values, np.nan)
    d1[1:-1] = (values[2:] - values[:-2]) / (2.0 * step)
    d2[1:-1] = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / step ** 2
    return d1, d2


@dataclass(frozen=True, eq=False)
class EigencurveSample:
    """Samples of Sigma_n on a uniform lambda grid; d1, d2 are NaN at the two ends."""

    n: int
    lambdas: np.ndarray
    values: np.ndarray
    d1: np.ndarray
    d2: np.ndarray
    evaluator: Optional[CurveEvaluator] = field(default=None, repr=False)

    def __post_init__(self):
        k = len(self.lambdas)
        if k < 5 or not (len(self.values) == len(self.d1) == len(self.d2) == k):
            raise ConfigurationError("a sample needs at least 5 points and equal-length sequences")
        if np.any(np.diff(self.lambdas) <= 0):
            raise ConfigurationError("lambdas must be strictly increasing")

    @property
    def step(self) -> float:
        return float(self.lambdas[1] - self.lambdas[0])

    def index_of(self, lam: float) -> int:
        i = int(np.argmin(np.abs(self.lambdas - lam)))
        if abs(self.lambdas[i] - lam) > 1e-9 * max(1.0, abs(lam)):
            raise PreconditionError(f"lambda={lam} is not a sample point")
        return i

    def sigma(self, lam: float) -> float:
        """Sigma_n at an arbitrary lambda (needs the evaluator)."""
        if self.evaluator is None:
            raise PreconditionError("sample carries no evaluator")
        return self.evaluator(lam, self.n)


def sample_curves(m: WeightFunction, modes: Sequence[int], lam_range=(-200.0, 200.0), step: float = 0.5,
                  scheme: str = "spectral", n_interior: int = DEFAULT_N_INTERIOR,
                  n_modes: int = DEFAULT_N_MODES, jobs: int = 1) -> List[EigencurveSample]:
    """One sample per mode, sharing the eigenvalue computations."""
    ev = CurveEvaluator(m, scheme, n_interior, n_modes)
    lambdas = lambda_grid(lam_range, step)
    table = ev.table(lambdas, modes, jobs)
    out = []
    for j, n in enumerate(modes):
        vals = table[:, j].copy()
        d1, d2 = _central_differences(vals, step)
        out.append(EigencurveSample(int(n), lambdas, vals, d1, d2, ev))
    return out


def sample_curve(m: WeightFunction, n: int, lam_range=(-200.0, 200.0), step: float = 0.5,
                 scheme: str = "spectral", n_interior: int = DEFAULT_N_INTERIOR,
                 n_modes: int = DEFAULT_N_MODES, jobs: int = 1) -> EigencurveSample:
    return sample_curves(m, [n], lam_range, step, scheme, n_interior, n_modes, jobs)[0]


@dataclass(frozen=True)
class BifurcationPoint:
    """A solution of Sigma_n(lambda) = mu; ``boundary`` marks a root at the sampled range end."""

    n: int
    label: str
    lam: float
    mu: float
    slope: float
    boundary: bool = False
    tangent: bool = False


def _slope(sample: EigencurveSample, lam: float, delta: float = 1e-3) -> float:
    if sample.evaluator is None:
        return float(np.interp(lam, sample.lambdas[1:-1], sample.d1[1:-1]))
    return (sample.sigma(lam + delta) - sample.sigma(lam - delta)) / (2.0 * delta)


def _refine(sample, mu, a, b, fa, fb):
    if sample.evaluator is None:
        # linear interpolation only
        return a - fa * (b - a) / (fb - fa)
    f = lambda v: sample.sigma(v) - mu  # noqa: E731
    return brentq(f, a, b, xtol=1e-13, rtol=8.9e-16, maxiter=200)


def _label_roots(sides: List[int]) -> List[str]:
    """Labels from the side (-1, 0, +1) of each root, roots sorted by lambda."""
    neg = [i for i, sd in enumerate(sides) if sd < 0]
    pos = [i for i, sd in enumerate(sides) if sd > 0]
    labels = ["zero"] * len(sides)
    if len(neg) == 1:
        labels[neg[0]] = MINUS
    elif len(neg) == 2:
        labels[neg[0]], labels[neg[1]] = MINUS_OUTER, MINUS_INNER
    else:
        for j, i in enumerate(neg):
            labels[i] = f"minus-{len(neg) - j}"
    if len(pos) == 1:
        labels[pos[0]] = PLUS
    elif len(pos) == 2:
        labels[pos[0]], labels[pos[1]] = PLUS_INNER, PLUS_OUTER
    else:
        for j, i in enumerate(pos):
            labels[i] = f"plus-{j + 1}"
    return labels


def _sides(found, step):
    sides = []
    i = 0
    while i < len(found):
        r, _, tangent = found[i]
        if tangent and i + 1 < len(found) and found[i + 1][2] and abs(r) < step:
            # double root at the origin: one root on each side
            sides += [-1, 1]
            i += 2
            continue
        sides.append(int(np.sign(r)))
        i += 1
    return sides


def roots_at_level(sample: EigencurveSample, mu: float) -> List[BifurcationPoint]:
    """All solutions of Sigma_n(lambda) = mu found from the sample.

    Sign changes between consecutive samples are refined with Brent's method.
    Near-tangential pairs that fit between two samples are found by locating
    the local extremum of Sigma_n - mu; a double root is reported twice with
    ``tangent=True``.
    """
    lam = sample.lambdas
    f = sample.values - mu
    step = sample.step
    found: List[Tuple[float, bool, bool]] = []  # (lambda, boundary, tangent)
    last = len(lam) - 1
    for i in range(last):
        a, b, fa, fb = lam[i], lam[i + 1], f[i], f[i + 1]
        if fa == 0.0:
            if i == 0:
                found.append((a, True, False))
            elif f[i - 1] * fb < 0:
                found.append((a, False, False))
            else:
                found.append((a, False, True))
                found.append((a, False, True))
            continue
        if fa * fb < 0:
            r = _refine(sample, mu, a, b, fa, fb)
            found.append((r, False, False))
    if f[last] == 0.0:
        found.append((lam[last], True, False))
    # extrema of f pointing towards zero with no sign change around them
    if sample.evaluator is not None:
        for i in range(1, last):
            fl, fc, fr = f[i - 1], f[i], f[i + 1]
            if fc == 0.0 or fl * fc <= 0 or fc * fr <= 0:
                continue
            s = np.sign(fc)
            if not (s * fc <= s * fl and s * fc <= s * fr):
                continue
            # only bother when the parabola through the samples could reach zero
            curv = abs(fl - 2 * fc + fr)
            if abs(fc) > 2.0 * curv + 1e-6:
                continue
            g = lambda v: s * (sample.sigma(v) - mu)  # noqa: E731
            res = minimize_scalar(g, bounds=(lam[i - 1], lam[i + 1]), method="bounded",
                                  options={"xatol": 1e-10})
            xm, gm = float(res.x), float(res.fun)
            if abs(gm) <= ROOT_TOL:
                found.append((xm, False, True))
                found.append((xm, False, True))
            elif gm < 0:
                fm = s * gm
                found.append((_refine(sample, mu, lam[i - 1], xm, fl, fm), False, False))
                found.append((_refine(sample, mu, xm, lam[i + 1], fm, fr), False, False))
    found.sort(key=lambda t: t[0])
    labels = _label_roots(_sides(found, step))
    out = []
    for (r, boundary, tangent), label in zip(found, labels):
        slope = 0.0 if tangent else _slope(sample, r)
        out.append(BifurcationPoint(sample.n, label, float(r), float(mu), float(slope), boundary, tangent))
    return out


@dataclass(frozen=True)
class CurveExtremum:
    n: int
    mu_n: float
    argmax: Tuple[float, ...]


def curve_maximum(sample: EigencurveSample, polish: bool = False) -> CurveExtremum:
    """Maximum of Sigma_n over the sampled range, refined by a parabola through
    the three samples around each candidate. With ``polish`` the candidates are
    further refined by a bounded scalar maximization of the evaluator.

    All local maxima within ARGMAX_TOL of the best one are returned.
    """
    v = sample.values
    lam = sample.lambdas
    h = sample.step
    imax = int(np.argmax(v))
    if imax == 0 or imax == len(v) - 1:
        raise RangeTooSmallError(f"maximum of Sigma_{sample.n} attained at the range end lambda={lam[imax]}")
    cands = []
    for i in range(1, len(v) - 1):
        if v[i] >= v[i - 1] and v[i] >= v[i + 1] and v[i] >= v[imax] - 10 * ARGMAX_TOL - abs(v[i + 1] - 2 * v[i] + v[i - 1]):
            denom = v[i - 1] - 2 * v[i] + v[i + 1]
            if denom < 0:
                delta = 0.5 * (v[i - 1] - v[i + 1]) / denom
                x, val = lam[i] + delta * h, v[i] - 0.25 * (v[i - 1] - v[i + 1]) * delta
            else:
                x, val = lam[i], v[i]
            if polish and sample.evaluator is not None:
                res = minimize_scalar(lambda t: -sample.sigma(t), bounds=(lam[i - 1], lam[i + 1]),
                                      method="bounded", options={"xatol": 1e-8})
                x, val = float(res.x), float(-res.fun)
            cands.append((float(x), float(val)))
    best = max(c[1] for c in cands)
    argmax = tuple(sorted(c[0] for c in cands if best - c[1] <= ARGMAX_TOL))
    return CurveExtremum(sample.n, best, argmax)


@dataclass(frozen=True)
class ConcavityReport:
    globally_concave: bool
    second_diff_at_zero: float
    max_second_diff: float


def concavity_report(sample: EigencurveSample) -> ConcavityReport:
    i0 = sample.index_of(0.0)
    d2 = sample.d2[1:-1]
    v, h = sample.values, sample.step
    if 2 <= i0 <= len(v) - 3:
        at0 = (-v[i0 - 2] + 16 * v[i0 - 1] - 30 * v[i0] + 16 * v[i0 + 1] - v[i0 + 2]) / (12 * h * h)
    else:
        at0 = sample.d2[i0]
    mx = float(np.max(d2))
    return ConcavityReport(bool(mx < CONCAVITY_TOL), float(at0), mx)


def second_derivative_at(m: WeightFunction, n: int, lam: float = 0.0, step: float = FD_DERIVATIVE_STEP,
                         scheme: str = "spectral", n_interior: int = DEFAULT_N_INTERIOR,
                         n_modes: int = DEFAULT_N_MODES) -> float:
    """Five-point central estimate of the second lambda-derivative of Sigma_n."""
    ev = CurveEvaluator(m, scheme, n_interior, n_modes)
    f = [ev(lam + j * step, n) for j in (-2, -1, 0, 1, 2)]
    return (-f[0] + 16 * f[1] - 30 * f[2] + 16 * f[3] - f[4]) / (12 * step * step)


def positivity_witness(m: WeightFunction) -> Optional[float]:
    """Interior probe point with the largest m > 0 (closest to 1/2 among ties)."""
    x = PROBE[1:-1]
    v = m(x)
    top = v.max()
    if top <= 0:
        return None
    ties = x[v >= top]
    return float(ties[np.argmin(np.abs(ties - 0.5))])


def decay_bound(m: WeightFunction, n: int, lam: float, eps: Optional[float] = None) -> float:
    """Upper bound (n pi / (2 eps))^2 - lam * m_L for Sigma_n(lam), lam > 0.

    m_L is the minimum of m on J = [x+ - eps, x+ + eps] around a positivity
    witness x+. Without ``eps`` the largest admissible value of
    DECAY_EPSILONS is used.
    """
    if not lam > 0:
        raise PreconditionError(f"decay bound needs lambda > 0, got {lam}")
    xp = positivity_witness(m)
    if xp is None:
        raise PreconditionError("weight has no point where it is positive")
    choices = DECAY_EPSILONS if eps is None else (float(eps),)
    for e in choices:
        if not (0.0 < xp - e and xp + e < 1.0):
            continue
        J = PROBE[(PROBE >= xp - e - 1e-12) & (PROBE <= xp + e + 1e-12)]
        mL = float(np.min(m(J)))
        if mL > 0:
            return (n * np.pi / (2 * e)) ** 2 - lam * mL
    raise PreconditionError(f"no admissible interval around x+={xp} for eps in {choices}")


def spectral_radius(sample: EigencurveSample, index: int) -> float:
    """exp(-Sigma_1(lambda)) at sample position ``index``."""
    if sample.n != 1:
        raise PreconditionError("spectral radius uses the principal eigencurve (n=1)")
    return float(np.exp(-sample.values[index]))
