"""Bifurcation diagrams, eigencurve plots and solution profiles as CSV and SVG.

All output is produced with fixed formatting so that identical inputs give
byte-identical files.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .continuation import Branch
from .eigencurve import BifurcationPoint, EigencurveSample
from .errors import ConsistencyError, ConfigurationError
from .nonlinear import SolutionRecord

POSITIVE = "positive"
ONE_NODE = "1-node"
TWO_NODE = "2-node"
EIGENCURVE = "eigencurve"
TRIVIAL = "trivial"

COLORS = {POSITIVE: "#1f4fd6", ONE_NODE: "#d62020", TWO_NODE: "#000000", EIGENCURVE: "#2a7f3f", TRIVIAL: "#7f7f7f"}
_EXTRA_COLORS = ("#9c27b0", "#ff8f00", "#00897b", "#5d4037")
CURVE_PALETTE = ("#1f4fd6", "#d62020", "#000000", "#2a7f3f", "#ff8f00", "#9c27b0", "#00897b", "#5d4037")

BRANCH_COLUMNS = ("index", "lambda", "mu", "l2", "nodes", "residual", "stability_hint")
CURVE_COLUMNS = ("n", "lambda", "sigma", "d1", "d2")
DIAGRAM_COLUMNS = ("series", "role", "source", "x", "y")
PROFILE_COLUMNS = ("profile", "lambda", "mu", "nodes", "x", "u")


def fmt(v) -> str:
    """12 significant digits; integers stay integers."""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    if v == 0.0:
        return "0"
    return f"{v:.12g}"


def role_for_nodes(k: int) -> str:
    if k == 0:
        return POSITIVE
    if k == 1:
        return ONE_NODE
    if k == 2:
        return TWO_NODE
    return f"{k}-node"


def color_for(role: str, index: int = 0) -> str:
    if role in COLORS:
        return COLORS[role]
    return _EXTRA_COLORS[index % len(_EXTRA_COLORS)]


@dataclass(frozen=True)
class Series:
    label: str
    role: str
    points: Tuple[Tuple[float, float], ...]
    source: str = ""
    color: str = ""


@dataclass(frozen=True)
class Annotation:
    x: float
    y: float
    text: str


@dataclass(frozen=True)
class DiagramDocument:
    title: str
    x_range: Tuple[float, float]
    y_range: Tuple[float, float]
    series: Tuple[Series, ...] = ()
    annotations: Tuple[Annotation, ...] = ()
    x_label: str = "lambda"
    y_label: str = "||u||_2"


def _padded(lo, hi, pad=0.03):
    if not np.isfinite(lo) or not np.isfinite(hi):
        return (0.0, 1.0)
    if hi <= lo:
        w = max(abs(lo), 1.0)
        return (lo - 0.5 * w, hi + 0.5 * w)
    d = hi - lo
    return (lo - pad * d, hi + pad * d)


def _dominant_nodes(branch: Branch) -> int:
    counts = [p.node_count for p in branch.points if p.l2 > 0.0]
    if not counts:
        return 0
    vals, freq = np.unique(counts, return_counts=True)
    return int(vals[np.argmax(freq)])


def assemble_diagram(branches: Sequence[Branch], bifpoints: Sequence[BifurcationPoint] = (),
                     title: str = "", x_range: Optional[Tuple[float, float]] = None,
                     y_range: Optional[Tuple[float, float]] = None) -> DiagramDocument:
    """(lambda, ||u||_2) diagram with one series per branch plus the trivial line u = 0.

    Series are colored by the node count of their solutions.
    """
    mus = {float(b.mu) for b in branches if b.points}
    if len(mus) > 1:
        raise ConsistencyError(f"branches at different mu values: {sorted(mus)}")
    xs = [p.lam for b in branches for p in b.points] + [bp.lam for bp in bifpoints]
    ys = [p.l2 for b in branches for p in b.points]
    if x_range is None:
        x_range = _padded(min(xs), max(xs)) if xs else (-1.0, 1.0)
    if y_range is None:
        y_range = (0.0, _padded(0.0, max(ys))[1]) if ys and max(ys) > 0 else (0.0, 1.0)
    series = [Series("u=0", TRIVIAL, ((float(x_range[0]), 0.0), (float(x_range[1]), 0.0)),
                     source="trivial-solution", color=COLORS[TRIVIAL])]
    for i, b in enumerate(branches):
        role = role_for_nodes(_dominant_nodes(b))
        pts = tuple((float(p.lam), float(p.l2)) for p in b.points)
        series.append(Series(b.label or f"branch-{i}", role, pts, source=b.label or f"branch-{i}",
                             color=color_for(role, i)))
    ann = tuple(Annotation(float(bp.lam), 0.0, f"n={bp.n} {bp.label}") for bp in bifpoints)
    mu_txt = f" (mu={fmt(next(iter(mus)))})" if mus else ""
    return DiagramDocument(title or f"bifurcation diagram{mu_txt}", tuple(map(float, x_range)),
                           tuple(map(float, y_range)), tuple(series), ann)


def merge_documents(docs: Sequence[DiagramDocument], title: str) -> DiagramDocument:
    """Superimpose documents (used for diagrams with several modes at one mu)."""
    series, ann = [], []
    for d in docs:
        series.extend(s for s in d.series if s.role != TRIVIAL)
        ann.extend(d.annotations)
    xs = [p[0] for s in series for p in s.points] + [a.x for a in ann]
    ys = [p[1] for s in series for p in s.points]
    xr = _padded(min(xs), max(xs)) if xs else (-1.0, 1.0)
    yr = (0.0, _padded(0.0, max(ys))[1]) if ys and max(ys) > 0 else (0.0, 1.0)
    triv = Series("u=0", TRIVIAL, ((xr[0], 0.0), (xr[1], 0.0)), source="trivial-solution", color=COLORS[TRIVIAL])
    return DiagramDocument(title, xr, yr, tuple([triv] + series), tuple(ann))


def eigencurve_document(samples: Sequence[EigencurveSample], title: str = "eigencurves") -> DiagramDocument:
    series = []
    for i, s in enumerate(samples):
        pts = tuple((float(x), float(y)) for x, y in zip(s.lambdas, s.values))
        series.append(Series(f"Sigma_{s.n}", EIGENCURVE, pts, source=f"sample-n{s.n}",
                             color=CURVE_PALETTE[i % len(CURVE_PALETTE)]))
    xs = [p[0] for s in series for p in s.points]
    ys = [p[1] for s in series for p in s.points]
    xr = (min(xs), max(xs)) if xs else (-1.0, 1.0)
    yr = _padded(min(ys), max(ys)) if ys else (-1.0, 1.0)
    return DiagramDocument(title, xr, yr, tuple(series), (), x_label="lambda", y_label="Sigma_n")


def profile_document(records: Sequence[SolutionRecord], x_nodes: np.ndarray, title: str = "profiles",
                     labels: Optional[Sequence[str]] = None) -> DiagramDocument:
    """u(x) for each record on grid nodes with boundary zeros appended."""
    x = np.concatenate(([0.0], np.asarray(x_nodes, dtype=float), [1.0]))
    series = []
    for i, r in enumerate(records):
        u = np.concatenate(([0.0], r.state.u.astype(float), [0.0]))
        role = role_for_nodes(r.node_count)
        lab = labels[i] if labels else f"lambda={fmt(r.lam)}"
        series.append(Series(lab, role, tuple(zip(x.tolist(), u.tolist())), source=lab,
                             color=CURVE_PALETTE[i % len(CURVE_PALETTE)]))
    ys = [p[1] for s in series for p in s.points]
    yr = _padded(min(ys), max(ys)) if ys else (-1.0, 1.0)
    return DiagramDocument(title, (0.0, 1.0), yr, tuple(series), (), x_label="x", y_label="u")


# ---------------------------------------------------------------- CSV

def _write(path, text: str):
    try:
        d = os.path.dirname(os.fspath(path))
        if d:
            os.makedirs(d, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([c if isinstance(c, str) else fmt(c) for c in r])
    return buf.getvalue()


def branch_rows(branch: Branch):
    for i, p in enumerate(branch.points):
        yield (i, p.lam, p.mu, p.l2, p.node_count, p.residual_norm, p.stability_hint)


def csv_text(obj) -> str:
    if isinstance(obj, Branch):
        return _csv_text(BRANCH_COLUMNS, branch_rows(obj))
    if isinstance(obj, EigencurveSample):
        obj = [obj]
    if isinstance(obj, (list, tuple)) and obj and all(isinstance(s, EigencurveSample) for s in obj):
        rows = (r for s in obj for r in zip([s.n] * len(s.lambdas), s.lambdas, s.values, s.d1, s.d2))
        return _csv_text(CURVE_COLUMNS, rows)
    if isinstance(obj, DiagramDocument):
        rows = ((s.label, s.role, s.source, x, y) for s in obj.series for x, y in s.points)
        return _csv_text(DIAGRAM_COLUMNS, rows)
    raise ConfigurationError(f"cannot export {type(obj).__name__} as CSV")


def export_csv(obj: Union[Branch, EigencurveSample, Sequence[EigencurveSample], DiagramDocument], path) -> None:
    _write(path, csv_text(obj))


def export_profiles_csv(records: Sequence[SolutionRecord], x_nodes: np.ndarray, path) -> None:
    x = np.concatenate(([0.0], np.asarray(x_nodes, dtype=float), [1.0]))
    rows = []
    for i, r in enumerate(records):
        u = np.concatenate(([0.0], r.state.u.astype(float), [0.0]))
        rows.extend((i, r.lam, r.mu, r.node_count, xi, ui) for xi, ui in zip(x, u))
    _write(path, _csv_text(PROFILE_COLUMNS, rows))


@dataclass(frozen=True)
class BranchTable:
    """A branch read back from CSV."""

    label: str
    lam: np.ndarray
    mu: np.ndarray
    l2: np.ndarray
    nodes: np.ndarray
    residual: np.ndarray
    stability_hint: np.ndarray


def read_branch_csv(path) -> BranchTable:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != BRANCH_COLUMNS:
        raise ConfigurationError(f"{path}: not a branch CSV (header {rows[0] if rows else None})")
    data = np.array([[float(c) for c in r] for r in rows[1:]], dtype=float).reshape(-1, len(BRANCH_COLUMNS))
    label = os.path.splitext(os.path.basename(os.fspath(path)))[0]
    return BranchTable(label, data[:, 1], data[:, 2], data[:, 3], data[:, 4].astype(int), data[:, 5],
                       data[:, 6].astype(int))


def table_document(tables: Sequence[BranchTable], title: str = "") -> DiagramDocument:
    series = []
    for i, t in enumerate(tables):
        nz = t.nodes[t.l2 > 0]
        k = int(np.bincount(nz).argmax()) if nz.size else 0
        role = role_for_nodes(k)
        series.append(Series(t.label, role, tuple(zip(t.lam.tolist(), t.l2.tolist())), source=t.label,
                             color=color_for(role, i)))
    xs = [p[0] for s in series for p in s.points]
    ys = [p[1] for s in series for p in s.points]
    xr = _padded(min(xs), max(xs)) if xs else (-1.0, 1.0)
    yr = (0.0, _padded(0.0, max(ys))[1]) if ys and max(ys) > 0 else (0.0, 1.0)
    triv = Series("u=0", TRIVIAL, ((xr[0], 0.0), (xr[1], 0.0)), source="trivial-solution", color=COLORS[TRIVIAL])
    return DiagramDocument(title or "bifurcation diagram", xr, yr, tuple([triv] + series))


# ---------------------------------------------------------------- SVG

def nice_ticks(lo: float, hi: float, target: int = 6) -> List[float]:
    if not hi > lo:
        return [lo]
    raw = (hi - lo) / max(target, 1)
    mag = 10.0 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step - 1e-9) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(t) < 1e-12 * step else t)
        t = first + len(ticks) * step
    return ticks


def _c(v: float) -> str:
    s = f"{v:.2f}"
    return "0.00" if s == "-0.00" else s


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def svg_text(doc: DiagramDocument, size: Tuple[int, int] = (720, 540)) -> str:
    W, H = size
    left, right, top, bottom = 70, 170, 40, 55
    pw, ph = W - left - right, H - top - bottom
    (x0, x1), (y0, y1) = doc.x_range, doc.y_range
    if x1 <= x0:
        x0, x1 = x0 - 1.0, x0 + 1.0
    if y1 <= y0:
        y0, y1 = y0 - 1.0, y0 + 1.0

    def X(x):
        return left + (x - x0) / (x1 - x0) * pw

    def Y(y):
        return top + (y1 - y) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" '
        f'viewBox="0 0 {W} {H}">',
        f'<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>',
        f'<text x="{_c(left + pw / 2)}" y="22" text-anchor="middle" font-family="sans-serif" '
        f'font-size="15">{_esc(doc.title)}</text>',
        '<g id="axes" stroke="#000000" stroke-width="1" fill="none">',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}"/>',
    ]
    ticks_x, ticks_y = nice_ticks(x0, x1), nice_ticks(y0, y1)
    for t in ticks_x:
        out.append(f'<line x1="{_c(X(t))}" y1="{top + ph}" x2="{_c(X(t))}" y2="{top + ph + 5}"/>')
    for t in ticks_y:
        out.append(f'<line x1="{left - 5}" y1="{_c(Y(t))}" x2="{left}" y2="{_c(Y(t))}"/>')
    out.append("</g>")
    out.append('<g id="tick-labels" font-family="sans-serif" font-size="11" fill="#000000">')
    for t in ticks_x:
        out.append(f'<text x="{_c(X(t))}" y="{top + ph + 18}" text-anchor="middle">{fmt(round(t, 10))}</text>')
    for t in ticks_y:
        out.append(f'<text x="{left - 8}" y="{_c(Y(t) + 4)}" text-anchor="end">{fmt(round(t, 10))}</text>')
    out.append(f'<text x="{_c(left + pw / 2)}" y="{H - 12}" text-anchor="middle" font-size="13">'
               f'{_esc(doc.x_label)}</text>')
    out.append(f'<text x="18" y="{_c(top + ph / 2)}" text-anchor="middle" font-size="13" '
               f'transform="rotate(-90 18 {_c(top + ph / 2)})">{_esc(doc.y_label)}</text>')
    out.append("</g>")
    out.append(f'<clipPath id="plot-area"><rect x="{left}" y="{top}" width="{pw}" height="{ph}"/></clipPath>')
    out.append('<g id="series" clip-path="url(#plot-area)" fill="none" stroke-width="1.5">')
    for s in doc.series:
        pts = " ".join(f"{_c(X(x))},{_c(Y(y))}" for x, y in s.points)
        dash = ' stroke-dasharray="4 3"' if s.role == TRIVIAL else ""
        out.append(f'<polyline data-label="{_esc(s.label)}" data-role="{_esc(s.role)}" '
                   f'stroke="{s.color or color_for(s.role)}"{dash} points="{pts}"/>')
    out.append("</g>")
    if doc.annotations:
        out.append('<g id="annotations" fill="#000000">')
        for a in doc.annotations:
            out.append(f'<circle cx="{_c(X(a.x))}" cy="{_c(Y(a.y))}" r="3"><title>{_esc(a.text)}</title></circle>')
        out.append("</g>")
    out.append('<g id="legend" font-family="sans-serif" font-size="11">')
    seen = []
    for s in doc.series:
        key = s.label if s.role in (EIGENCURVE,) or doc.x_label == "x" else s.role
        if key in [k for k, _ in seen]:
            continue
        seen.append((key, s.color or color_for(s.role)))
    for i, (key, col) in enumerate(seen[:30]):
        y = top + 10 + 16 * i
        lx = left + pw + 12
        out.append(f'<line x1="{lx}" y1="{y}" x2="{lx + 20}" y2="{y}" stroke="{col}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{y + 4}">{_esc(key)}</text>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def export_svg(doc: DiagramDocument, path, size: Tuple[int, int] = (720, 540)) -> None:
    _write(path, svg_text(doc, size))
