#!/usr/bin/env python3
"""Bracket the mu at which the mode-3 branches reorganize.

Below the critical value the two inner roots of Sigma_3 = mu are joined by
one branch; above it each inner root is joined to the outer root on its
side. The attachment pattern is computed at each trial mu and the interval
is bisected.
"""
import argparse
import sys

from nodalbif.config import RunConfig
from nodalbif.eigencurve import MINUS_INNER, MINUS_OUTER, PLUS_INNER, PLUS_OUTER
from nodalbif.pipeline import PanelBuilder, panel_components

INNER_LINKED = "inner-linked"
REORGANIZED = "reorganized"


def pattern(builder: PanelBuilder, mu: float, mode: int) -> str:
    comps = panel_components(builder.panel(mu, [mode]))
    labels = [frozenset(b.label for b in c) for c in comps]
    if frozenset({MINUS_INNER, PLUS_INNER}) in labels:
        return INNER_LINKED
    if frozenset({MINUS_OUTER, MINUS_INNER}) in labels and frozenset({PLUS_INNER, PLUS_OUTER}) in labels:
        return REORGANIZED
    return "other: " + "; ".join(",".join(sorted(s)) for s in labels)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--lo", type=float, default=105.0)
    ap.add_argument("--hi", type=float, default=108.1)
    ap.add_argument("--mode", type=int, default=3)
    ap.add_argument("--tol", type=float, default=0.02)
    args = ap.parse_args(argv)
    builder = PanelBuilder(RunConfig())
    lo, hi = args.lo, args.hi
    plo, phi = pattern(builder, lo, args.mode), pattern(builder, hi, args.mode)
    print(f"mu={lo:g}: {plo}\nmu={hi:g}: {phi}")
    if plo != INNER_LINKED or phi != REORGANIZED:
        print("end points do not bracket the reorganization", file=sys.stderr)
        return 1
    while hi - lo > args.tol:
        mid = 0.5 * (lo + hi)
        p = pattern(builder, mid, args.mode)
        print(f"mu={mid:.4f}: {p}")
        if p == INNER_LINKED:
            lo = mid
        elif p == REORGANIZED:
            hi = mid
        else:
            print("unclassified pattern; stopping", file=sys.stderr)
            break
    print(f"critical mu in ({lo:.4f}, {hi:.4f})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
