"""Command-line interface.

Exit status: 0 when every check of the run passes, 1 on a numerical failure
or a failed check, 2 on an invalid configuration.
"""
from __future__ import annotations

import argparse
import os
import re
import sys
from dataclasses import replace
from importlib import resources
from typing import List, Optional, Sequence

from . import config as C
from . import diagram as D
from . import pipeline as P
from .config import HomotopySpec, RunConfig
from .errors import ConfigurationError, NodalBifError
from .weights import parse as parse_weight

FIGURES = tuple(f"fig{i}" for i in range(1, 9))


def _slug(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]+", "_", text).strip("_")


def _mu_tag(mu: float) -> str:
    return f"mu{mu:g}"


# ---------------------------------------------------------------- argument handling

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="TOML run configuration; flags override its values")
    p.add_argument("--m", help="weight m: sine:K, paper-a, constant:V")
    p.add_argument("--a", help="weight a: sine:K, paper-a, constant:V")
    p.add_argument("--mu", help="mu value or comma-separated list")
    p.add_argument("--mode", "--modes", dest="modes", help="mode list: 2, 2,3 or 1..5")
    p.add_argument("--range", dest="lam_range", help="lambda range lo:hi")
    p.add_argument("--step", type=float, help="lambda sampling step")
    p.add_argument("--scheme", choices=("spectral", "fd"))
    p.add_argument("--n-interior", type=int, help="interior nodes of the eigenvalue FD grid")
    p.add_argument("--n-modes", type=int, help="sine modes of the spectral scheme")
    p.add_argument("--out", help=f"output file or directory (default root: ${C.OUT_ENV} or {C.DEFAULT_OUT})")
    p.add_argument("--jobs", type=int, help="worker count")
    p.add_argument("--seed", type=int, help="recorded in the manifest; all pipelines are deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nodalbif", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("eigencurves", help="sample Sigma_n(lambda)")
    _common(p)
    p = sub.add_parser("verify-theorem", help="second derivative of Sigma_n at 0 by three routes")
    _common(p)
    p.add_argument("--k", type=int, help="weight m = sin(2 k pi x)")
    p = sub.add_parser("bifpoints", help="roots of Sigma_n(lambda) = mu")
    _common(p)
    p = sub.add_parser("branch", help="trace all branches bifurcating from u = 0 at one mu")
    _common(p)
    p = sub.add_parser("sweep", help="bifurcation diagrams for a list of mu values")
    _common(p)
    p.add_argument("--mu-list", help="comma-separated mu values")
    p = sub.add_parser("plot", help="SVG diagram from branch CSV files")
    p.add_argument("--in", dest="inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--title", default="")
    p = sub.add_parser("reproduce", help="run a figure recipe")
    _common(p)
    p.add_argument("figure", choices=FIGURES)
    return parser


def _fix_negative_values(argv: Sequence[str]) -> List[str]:
    # "--range -200:200" would otherwise be read as an option
    out, it = [], iter(argv)
    for tok in it:
        if tok in ("--range", "--mu", "--mu-list"):
            nxt = next(it, None)
            out.append(tok if nxt is None else f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def resolve_config(args) -> RunConfig:
    cfg = C.load(args.config) if getattr(args, "config", None) else RunConfig()
    over = {}
    if getattr(args, "m", None):
        over["m"] = parse_weight(args.m)
    if getattr(args, "a", None):
        over["a"] = parse_weight(args.a)
    if getattr(args, "mu_list", None):
        over["mu"] = C.parse_floats(args.mu_list)
    elif getattr(args, "mu", None):
        over["mu"] = C.parse_floats(args.mu)
    if getattr(args, "modes", None):
        over["modes"] = C.parse_modes(args.modes)
    if getattr(args, "lam_range", None):
        over["lam_range"] = C.parse_range(args.lam_range)
    for key in ("step", "scheme", "n_interior", "n_modes", "out", "jobs", "seed", "k"):
        v = getattr(args, key, None)
        if v is not None:
            over[key] = v
    return replace(cfg, **over)


def _target(cfg: RunConfig, default_name: str):
    """(directory, file path) for a single-file command."""
    out = cfg.out_dir
    if out.endswith(".csv"):
        d = os.path.dirname(out) or "."
        return d, out
    return out, os.path.join(out, default_name)


# ---------------------------------------------------------------- commands

def cmd_eigencurves(cfg: RunConfig, man: P.Manifest):
    d, path = _target(cfg, "curves.csv")
    with P.Timer(man, "sampling"):
        samples = P.eigencurves(cfg)
    D.export_csv(samples, path)
    svg = os.path.splitext(path)[0] + ".svg"
    D.export_svg(D.eigencurve_document(samples, f"Sigma_n(lambda), m={cfg.m.label}"), svg)
    man.artifacts += [path, svg]
    P.check_eigencurves(samples, cfg, man)
    return d


def cmd_verify_theorem(cfg: RunConfig, man: P.Manifest):
    d, path = _target(cfg, "theorem.csv")
    with P.Timer(man, "routes"):
        rows = P.theorem_rows(cfg.k, cfg.modes)
    D._write(path, D._csv_text(P.THEOREM_COLUMNS, rows))
    man.artifacts.append(path)
    P.check_theorem(rows, man)
    for r in rows:
        print("n={} k={} closed-form={} quadrature={} curve-fd={}".format(*map(D.fmt, r[:5])))
    return d


BIFPOINT_COLUMNS = ("n", "label", "lambda", "mu", "slope", "boundary", "tangent")


def cmd_bifpoints(cfg: RunConfig, man: P.Manifest):
    d, path = _target(cfg, "bifpoints.csv")
    rows = []
    for mu in cfg.mu:
        with P.Timer(man, "detection"):
            pts = P.bifpoints(cfg, mu, cfg.modes)
        P.check_bifpoints(pts, cfg, man)
        for b in pts:
            rows.append((b.n, b.label, b.lam, b.mu, b.slope, int(b.boundary), int(b.tangent)))
            print(f"mu={D.fmt(mu)} n={b.n} {b.label:12s} lambda={D.fmt(b.lam)} slope={D.fmt(b.slope)}")
    D._write(path, D._csv_text(BIFPOINT_COLUMNS, rows))
    man.artifacts.append(path)
    return d


def _write_panel(panel: P.Panel, directory: str, cfg: RunConfig, man: P.Manifest, title: str = ""):
    os.makedirs(directory, exist_ok=True)
    for br in panel.branches:
        path = os.path.join(directory, f"branch_{_slug(br.label)}.csv")
        D.export_csv(br, path)
        man.artifacts.append(path)
    doc = D.assemble_diagram(panel.branches, panel.anchors, title=title or f"mu = {D.fmt(panel.mu)}")
    csv_path = os.path.join(directory, "diagram.csv")
    svg_path = os.path.join(directory, "diagram.svg")
    D.export_csv(doc, csv_path)
    D.export_svg(doc, svg_path)
    man.artifacts += [csv_path, svg_path]
    P.check_panel(panel, cfg.continuation, man)
    comps = P.panel_components(panel)
    man.check(f"mu={panel.mu:g} components", True,
              "; ".join("[" + ", ".join(f"{b.lam:.4f}" for b in c) + "]" for c in comps) or "none attached")
    for note in panel.notes:
        man.check(f"mu={panel.mu:g} note", True, note)
    return doc


def cmd_branch(cfg: RunConfig, man: P.Manifest):
    d = cfg.out_dir
    pattern = None
    if d.endswith(".csv"):
        pattern, d = os.path.basename(d), os.path.dirname(d) or "."
    builder = P.PanelBuilder(cfg)
    mu = cfg.mu[0]
    with P.Timer(man, "tracing"):
        panel = builder.panel(mu, cfg.modes, cfg.homotopy)
    if pattern and "*" in pattern:
        os.makedirs(d, exist_ok=True)
        for br in panel.branches:
            path = os.path.join(d, pattern.replace("*", _slug(br.label)))
            D.export_csv(br, path)
            man.artifacts.append(path)
        doc = D.assemble_diagram(panel.branches, panel.anchors, title=f"mu = {D.fmt(mu)}")
        svg = os.path.join(d, pattern.replace("*", "diagram").replace(".csv", ".svg"))
        D.export_svg(doc, svg)
        man.artifacts.append(svg)
        P.check_panel(panel, cfg.continuation, man)
    else:
        _write_panel(panel, d, cfg, man)
    for br in panel.branches:
        print(f"{br.label}: {len(br.points)} points, {br.termination.kind}"
              + (f" at lambda={br.termination.point.lam:.6g}" if br.termination.point else ""))
    return d


def cmd_sweep(cfg: RunConfig, man: P.Manifest):
    d = cfg.out_dir
    builder = P.PanelBuilder(cfg)
    last_attached = {}
    docs = []
    for mu in sorted(cfg.mu):
        specs = list(cfg.homotopy)
        modes = []
        for n in cfg.modes:
            anchors, _ = builder.attached(n, mu)
            if anchors:
                modes.append(n)
                last_attached[n] = mu
            elif n in last_attached and not any(s.mode == n for s in specs):
                specs.append(HomotopySpec(n, last_attached[n], 10))
        with P.Timer(man, f"mu={mu:g}"):
            panel = builder.panel(mu, modes, specs)
        docs.append(_write_panel(panel, os.path.join(d, _mu_tag(mu)), cfg, man))
    return d


def cmd_plot(args, man: P.Manifest):
    tables = [D.read_branch_csv(p) for p in args.inputs]
    doc = D.table_document(tables, args.title)
    D.export_svg(doc, args.out)
    man.artifacts.append(args.out)
    return os.path.dirname(args.out) or "."


# ---------------------------------------------------------------- recipes

def load_recipe(figure: str) -> dict:
    text = resources.files("nodalbif").joinpath("recipes", f"{figure}.toml").read_text(encoding="utf-8")
    return C.tomllib.loads(text)


def recipe_config(recipe: dict, base: Optional[RunConfig] = None) -> RunConfig:
    return C.from_mapping(recipe.get("config", {}), base)


def run_recipe(figure: str, cfg_overrides: dict, out_dir: str, man: P.Manifest, jobs: int = 1) -> str:
    recipe = load_recipe(figure)
    cfg = recipe_config(recipe)
    cfg = replace(cfg, jobs=jobs, **cfg_overrides)
    kind = recipe["kind"]
    man.config = {"recipe": figure, **cfg.to_dict()}
    os.makedirs(out_dir, exist_ok=True)
    if kind == "eigencurves":
        for panel in recipe["panel"]:
            m = parse_weight(panel["m"]) if "m" in panel else cfg.m
            pc = replace(cfg, m=m)
            with P.Timer(man, f"panel {panel['name']}"):
                samples = P.eigencurves(pc)
            stem = os.path.join(out_dir, f"{figure}{panel['name']}")
            D.export_csv(samples, stem + ".csv")
            D.export_svg(D.eigencurve_document(samples, f"Sigma_n(lambda), m={m.label}"), stem + ".svg")
            man.artifacts += [stem + ".csv", stem + ".svg"]
            P.check_eigencurves(samples, pc, man)
        return out_dir
    builder = P.PanelBuilder(cfg)
    for panel in recipe["panel"]:
        specs = [HomotopySpec(**h) for h in panel.get("homotopy", [])]
        with P.Timer(man, f"panel {panel['name']}"):
            pn = builder.panel(panel["mu"], panel.get("modes", []), specs)
        sub = os.path.join(out_dir, f"{figure}{panel['name']}")
        _write_panel(pn, sub, cfg, man, title=f"{figure}{panel['name']}: mu = {D.fmt(pn.mu)}")
        if kind == "profiles":
            recs = P.select_profiles(pn.branches, panel.get("side", "left"), int(panel.get("count", 6)))
            grid = P.nonlinear_grid(cfg)
            ppath = os.path.join(sub, "profiles.csv")
            D.export_profiles_csv(recs, grid.nodes, ppath)
            pdoc = D.profile_document(recs, grid.nodes, title=f"{figure}{panel['name']}: solutions")
            svg = os.path.join(sub, "profiles.svg")
            D.export_svg(pdoc, svg)
            man.artifacts += [ppath, svg]
            man.check(f"{figure}{panel['name']} profiles", len(recs) > 0, f"{len(recs)} solutions")
    return out_dir


# ---------------------------------------------------------------- entry point

def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _fix_negative_values(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    man = P.Manifest(args.command, {}, argv=list(argv))
    out_dir = None
    stage = args.command
    try:
        if args.command == "plot":
            out_dir = cmd_plot(args, man)
        elif args.command == "reproduce":
            cfg = resolve_config(args)
            over = {}
            for key in ("n_interior", "n_modes", "scheme", "step"):
                v = getattr(args, key, None)
                if v is not None:
                    over[key] = v
            root = args.out or os.path.join(C.default_out_root(), args.figure)
            out_dir = run_recipe(args.figure, over, root, man, cfg.jobs)
        else:
            cfg = resolve_config(args)
            man.config = cfg.to_dict()
            handler = {"eigencurves": cmd_eigencurves, "verify-theorem": cmd_verify_theorem,
                       "bifpoints": cmd_bifpoints, "branch": cmd_branch, "sweep": cmd_sweep}[args.command]
            out_dir = handler(cfg, man)
    except ConfigurationError as exc:
        print(f"nodalbif: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except (NodalBifError, ArithmeticError) as exc:
        man.failure = f"{stage}: {type(exc).__name__}: {exc}"
        print(f"nodalbif: {stage} failed: {exc}", file=sys.stderr)
    except OSError as exc:
        man.failure = f"{stage}: {exc}"
        print(f"nodalbif: {exc}", file=sys.stderr)
    if out_dir is not None or man.failure:
        dest = out_dir or getattr(args, "out", None) or C.default_out_root()
        if dest.endswith((".csv", ".svg")):
            dest = os.path.dirname(dest) or "."
        path = man.write(dest)
        for c in man.checks:
            if not c.passed:
                print(f"FAILED {c.name}: {c.detail}", file=sys.stderr)
        print(f"manifest: {path}")
    return 0 if man.ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
