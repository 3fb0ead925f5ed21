"""High-level runs shared by the command line and the figure recipes."""
from __future__ import annotations

import hashlib
import json
import os
import platform
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .config import HomotopySpec, RunConfig
from .continuation import (HOMOTOPY_FAILURE, Branch, ContinuationConfig, anchor_on_grid,
                           components, detect_bifurcation_values, mu_homotopy, trace_all)
from .discretize import Grid
from .eigencurve import EigencurveSample, BifurcationPoint, sample_curves
from .perturbation import CLOSED_FORM, CURVE_FD, QUADRATURE, sigma_ddot_zero
from .weights import WeightFunction


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class Manifest:
    command: str
    config: Dict
    argv: List[str] = field(default_factory=list)
    checks: List[Check] = field(default_factory=list)
    artifacts: List[str] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)
    failure: str = ""

    def check(self, name: str, passed: bool, detail: str = "") -> bool:
        self.checks.append(Check(name, bool(passed), detail))
        return bool(passed)

    @property
    def ok(self) -> bool:
        return not self.failure and all(c.passed for c in self.checks)

    def write(self, directory: str) -> str:
        import numba
        import scipy

        os.makedirs(directory, exist_ok=True)
        arts = []
        for p in self.artifacts:
            with open(p, "rb") as fh:
                arts.append({"path": os.path.relpath(p, directory), "sha256": hashlib.sha256(fh.read()).hexdigest()})
        doc = {
            "command": self.command,
            "argv": self.argv,
            "config": self.config,
            "versions": {"nodalbif": __version__, "python": platform.python_version(), "numpy": np.__version__,
                         "scipy": scipy.__version__, "numba": numba.__version__},
            "timings_s": {k: round(v, 3) for k, v in self.timings.items()},
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in self.checks],
            "artifacts": arts,
            "status": "ok" if self.ok else "failed",
            "failure": self.failure,
        }
        path = os.path.join(directory, f"manifest-{self.command}.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


class Timer:
    def __init__(self, manifest: Manifest, name: str):
        self.m, self.name = manifest, name

    def __enter__(self):
        self.t = time.perf_counter()

    def __exit__(self, *exc):
        self.m.timings[self.name] = self.m.timings.get(self.name, 0.0) + time.perf_counter() - self.t


# ---------------------------------------------------------------- eigencurves

def eigencurves(cfg: RunConfig, m: Optional[WeightFunction] = None) -> List[EigencurveSample]:
    return sample_curves(m or cfg.m, cfg.modes, cfg.lam_range, cfg.step, cfg.scheme, cfg.n_interior,
                         cfg.n_modes, cfg.jobs)


def check_eigencurves(samples: Sequence[EigencurveSample], cfg: RunConfig, man: Manifest):
    tol = 1e-8 if cfg.scheme == "spectral" else 5e-3
    for s in samples:
        if s.lambdas[0] <= 0.0 <= s.lambdas[-1]:
            v0 = s.values[s.index_of(0.0)]
            err = abs(v0 - (s.n * np.pi) ** 2)
            man.check(f"sigma_{s.n}(0)=(n pi)^2", err <= tol, f"error {err:.3e} (tol {tol:g})")
        m = s.evaluator.m if s.evaluator else None
        if m is not None and m.odd_about_half and np.isclose(s.lambdas[0], -s.lambdas[-1]):
            asym = float(np.max(np.abs(s.values - s.values[::-1])))
            man.check(f"sigma_{s.n} even", asym <= 1e-6, f"max asymmetry {asym:.3e}")


# ---------------------------------------------------------------- theorem check

THEOREM_COLUMNS = ("n", "k", "closed_form", "quadrature", "curve_fd", "quad_minus_closed", "fd_rel_error")


def theorem_rows(k: int, modes: Sequence[int]):
    rows = []
    for n in modes:
        if n <= k:
            continue
        cf = sigma_ddot_zero(n, k, CLOSED_FORM)
        q = sigma_ddot_zero(n, k, QUADRATURE)
        fd = sigma_ddot_zero(n, k, CURVE_FD)
        rows.append((n, k, cf, q, fd, q - cf, abs(fd - cf) / abs(cf)))
    return rows


def check_theorem(rows, man: Manifest):
    for n, k, cf, q, fd, dq, rel in rows:
        man.check(f"quadrature=closed-form n={n} k={k}", abs(dq) <= 1e-6, f"difference {dq:.3e}")
        man.check(f"curve-fd=closed-form n={n} k={k}", abs(fd - cf) <= 1e-4 * abs(cf) + 1e-6,
                  f"relative error {rel:.3e}")


# ---------------------------------------------------------------- bifurcation points

def bifpoints(cfg: RunConfig, mu: float, modes: Sequence[int]) -> List[BifurcationPoint]:
    return detect_bifurcation_values(cfg.m, mu, modes, cfg.continuation.lam_window, cfg.step, cfg.scheme,
                                     cfg.n_interior, cfg.n_modes, cfg.jobs)


def check_bifpoints(points: Sequence[BifurcationPoint], cfg: RunConfig, man: Manifest):
    for b in points:
        if b.tangent:
            continue
        if b.boundary:
            man.check(f"root n={b.n} {b.label} inside range", False, f"lambda={b.lam} at the range end")
    if cfg.m.odd_about_half:
        for n in sorted({b.n for b in points}):
            lams = sorted(b.lam for b in points if b.n == n)
            asym = max((abs(x + y) for x, y in zip(lams, lams[::-1])), default=0.0)
            man.check(f"roots n={n} symmetric", asym <= 1e-4, f"max |lambda_+ + lambda_-| = {asym:.2e}")


# ---------------------------------------------------------------- diagrams

@dataclass
class Panel:
    mu: float
    anchors: List[BifurcationPoint]
    branches: List[Branch]
    notes: List[str] = field(default_factory=list)


def nonlinear_grid(cfg: RunConfig) -> Grid:
    return Grid(0.0, 1.0, cfg.nonlinear_n_interior)


class PanelBuilder:
    """Computes panels, caching traced branches per (mode, mu) for homotopy sources."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.grid = nonlinear_grid(cfg)
        self._cache: Dict[Tuple[int, float], Tuple[List[BifurcationPoint], List[Branch]]] = {}

    def attached(self, mode: int, mu: float):
        key = (mode, float(mu))
        if key not in self._cache:
            cfg = self.cfg
            bps = [b for b in bifpoints(cfg, mu, [mode]) if not b.tangent]
            anchors = [anchor_on_grid(b, mu, cfg.m, self.grid) for b in bps]
            branches = trace_all(anchors, mu, cfg.continuation, cfg.m, cfg.a, self.grid, cfg.jobs) if anchors else []
            self._cache[key] = (anchors, branches)
        return self._cache[key]

    def homotoped(self, hs: HomotopySpec, mu: float) -> Tuple[List[Branch], List[str]]:
        _, src = self.attached(hs.mode, hs.from_mu)
        out, notes = [], []
        for br in src:
            # arcs joining two bifurcation points may shrink to u = 0 on the way; that is reported, not fatal
            res = mu_homotopy(br, mu, hs.steps, self.cfg.continuation, self.cfg.m, self.cfg.a, self.grid,
                              source=br.label)
            if res.termination.kind == HOMOTOPY_FAILURE:
                notes.append(f"{br.label}: {res.termination.note}")
                continue
            if any(_same_component(res, o) for o in out):
                continue
            res.label = f"n{hs.mode}:isola-from-{br.label}"
            out.append(res)
        return out, notes

    def panel(self, mu: float, modes: Sequence[int], homotopy: Sequence[HomotopySpec] = ()) -> Panel:
        anchors, branches, notes = [], [], []
        for n in modes:
            a, b = self.attached(n, mu)
            anchors += a
            branches += b
        for hs in homotopy:
            b, nt = self.homotoped(hs, mu)
            branches += b
            notes += nt
        return Panel(float(mu), anchors, branches, notes)


def _same_component(a: Branch, b: Branch, tol: float = 1.0) -> bool:
    """True when the lowest point of ``a`` lies on ``b`` (in the lambda, l2 plane)."""
    i = int(np.argmin(a.l2))
    p = np.array([a.lambdas[i], a.l2[i]])
    q = np.column_stack([b.lambdas, b.l2])
    return bool(np.min(np.hypot(*(q - p).T)) < tol)


def check_panel(panel: Panel, cfg: ContinuationConfig, man: Manifest):
    for br in panel.branches:
        nz = [p for p in br.points if p.l2 > 0]
        worst = max((p.residual_norm for p in br.points), default=0.0)
        man.check(f"mu={panel.mu:g} {br.label} residual", worst <= cfg.tol, f"max residual {worst:.2e}")
        counts = sorted({p.node_count for p in nz})
        man.check(f"mu={panel.mu:g} {br.label} node count constant", len(counts) <= 1, f"node counts {counts}")


def panel_components(panel: Panel) -> List[List[BifurcationPoint]]:
    return components(panel.anchors, [b for b in panel.branches if b.origin.point is not None])


def component_curve(branches: Sequence[Branch]) -> List:
    """Points of the half-branches leaving one anchor, joined through the anchor."""
    pts = []
    for br in branches:
        pts.extend(br.points if not pts else br.points[1:])
    return pts


def select_profiles(branches: Sequence[Branch], side: str, count: int):
    """``count`` solutions spread along the branches lying on one side of lambda = 0."""
    def mean_lam(b):
        return float(np.mean([p.lam for p in b.points if p.l2 > 0] or [0.0]))

    chosen = [b for b in branches if (mean_lam(b) < 0) == (side == "left")]
    recs = [p for b in chosen for p in b.points if p.l2 > 0]
    if not recs:
        return []
    recs.sort(key=lambda p: (p.lam, p.l2))
    idx = np.unique(np.linspace(0, len(recs) - 1, count).round().astype(int))
    return [recs[i] for i in idx]
