#!/usr/bin/env python3
"""Run every figure recipe (or a chosen subset) and summarize the manifests."""
import argparse
import json
import os
import sys
import time

from nodalbif import cli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("figures", nargs="*", default=list(cli.FIGURES), help="subset of " + ", ".join(cli.FIGURES))
    ap.add_argument("--out", default="figures", help="output root; one subdirectory per figure")
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args(argv)
    status = 0
    for fig in args.figures:
        out = os.path.join(args.out, fig)
        t0 = time.perf_counter()
        rc = cli.main(["reproduce", fig, "--out", out, "--jobs", str(args.jobs)])
        with open(os.path.join(out, "manifest-reproduce.json")) as fh:
            man = json.load(fh)
        failed = [c["name"] for c in man["checks"] if not c["passed"]]
        print(f"{fig}: exit {rc}, {len(man['artifacts'])} artifacts, {len(failed)} failed checks, "
              f"{time.perf_counter() - t0:.1f} s")
        status = max(status, rc)
    return status


if __name__ == "__main__":
    sys.exit(main())
