"""Batch figure rendering over one or more run directories."""

from __future__ import annotations

import argparse
import sys
from collections import defaultdict
from pathlib import Path

from .artifacts import RunArtifacts, SchemaError
from .figures import plot_cost_error, plot_variance_decay


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mlqmc-eig-plots",
        description="Render variance-decay and cost-error figures from "
                    "mlqmc-eig run directories")
    parser.add_argument("run_dirs", nargs="+", help="run directories to read")
    parser.add_argument("--out", required=True, help="figure output directory")
    parser.add_argument("--quantity", default="eigenvalue",
                        choices=["eigenvalue", "functional"])
    args = parser.parse_args(argv)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rendered = 0
    by_mode: dict[str, list[RunArtifacts]] = defaultdict(list)

    for run_dir in args.run_dirs:
        try:
            art = RunArtifacts.load(run_dir)
        except (SchemaError, FileNotFoundError) as err:
            print(f"error: {err}", file=sys.stderr)
            return 1
        name = Path(run_dir).name or "run"
        levels_csv = art.path / "levels.csv"
        if art.levels is not None:
            try:
                fig, sidecar = plot_variance_decay(levels_csv, out / f"variance_{name}.png")
                print(f"wrote {fig} and {sidecar}")
                rendered += 1
            except ValueError as err:
                print(f"note: {run_dir}: {err}", file=sys.stderr)
        if art.mode is not None and art.eps is not None and art.summary is not None:
            by_mode[art.mode].append(art)

    usable = {mode: runs for mode, runs in by_mode.items() if len(runs) >= 2}
    if usable:
        try:
            fig, sidecar, exps = plot_cost_error(usable, out / "cost_error.png",
                                                 quantity=args.quantity)
            print(f"wrote {fig} and {sidecar}: exponents {exps}")
            rendered += 1
        except ValueError as err:
            print(f"note: cost-error figure skipped: {err}", file=sys.stderr)

    if rendered == 0:
        print("error: nothing could be rendered from the given run directories",
              file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
