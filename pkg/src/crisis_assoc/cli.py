"""``crisis-assoc`` command line."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .panel import PanelError, YearWindow, write_panel
from .report import (ALL_FORMATS, OUT_ENV, Outputs, RunConfig, do_chi2, do_cluster, do_corr,
                     do_ingest, do_runs, do_summary, load_config_panel, run_report, write_atomic)
from .runs import CONVENTIONS

COMMANDS = ("ingest", "summary", "runs", "corr", "chi2", "cluster", "report", "synth")


def _alphas(text):
    return tuple(float(a) for a in text.split(","))


def _formats(text):
    return tuple(f.strip() for f in text.split(",") if f.strip())


def _cutoff(text):
    return text if text == "auto" else float(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crisis-assoc",
        description="Randomness, association and clustering analysis of binary crisis panels.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--input", type=Path, help="panel CSV (long or wide layout)")
    parser.add_argument("--layout", choices=("long", "wide"), default="long")
    parser.add_argument("--window", type=YearWindow.parse, help="START:END, inclusive")
    parser.add_argument("--continent-map", type=Path, help="country_code,continent CSV (default: bundled map)")
    parser.add_argument("--convention", choices=CONVENTIONS, default="doubled",
                        help="exact runs-test p-value convention")
    parser.add_argument("--continuity", action="store_true", help="continuity correction in the runs approximation")
    parser.add_argument("--alpha", type=_alphas, default=(0.10, 0.05, 0.01),
                        help="significance levels, descending (default 0.10,0.05,0.01)")
    parser.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUT_ENV} or ./crisis_out)")
    parser.add_argument("--format", type=_formats, default=ALL_FORMATS, help="subset of csv,json,svg,newick")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--coefficient", choices=("tetrachoric", "phi"), default="tetrachoric")
    parser.add_argument("--test", choices=("wald", "lr"), default="wald")
    parser.add_argument("--yates", action="store_true")
    parser.add_argument("--cutoff", type=_cutoff, help="dendrogram cut height, or 'auto' for the largest gap")
    parser.add_argument("--linkage", choices=("average", "weighted"), default="average")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes for pairwise estimation")
    parser.add_argument("--recession-start", type=int, choices=(2006, 2007), default=2007)
    synth = parser.add_argument_group("synth")
    synth.add_argument("--countries", type=int, default=10)
    synth.add_argument("--blocks", type=int, default=2)
    synth.add_argument("--within-rho", type=float, default=0.8)
    synth.add_argument("--across-rho", type=float, default=0.0)
    synth.add_argument("--threshold", type=float, default=1.5)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config(args) -> RunConfig:
    kwargs = dict(input=args.input, layout=args.layout, window=args.window,
                  continent_map=args.continent_map, convention=args.convention,
                  alphas=args.alpha, formats=args.format, seed=args.seed,
                  coefficient=args.coefficient, test=args.test, yates=args.yates,
                  cutoff=args.cutoff, linkage=args.linkage, continuity=args.continuity,
                  n_jobs=args.jobs, recession_start=args.recession_start)
    if args.out is not None:
        kwargs["out"] = args.out
    return RunConfig(**kwargs)


def _synth(args, config: RunConfig) -> None:
    import io

    from .synth import block_correlation, generate_panel

    k, blocks = args.countries, max(1, args.blocks)
    sizes = [k // blocks + (1 if i < k % blocks else 0) for i in range(blocks)]
    corr = block_correlation([s for s in sizes if s], args.within_rho, args.across_rho)
    window = args.window or YearWindow(1800, 2014)
    panel = generate_panel([args.threshold] * k, corr, len(window), config.seed, start_year=window.start)
    fh = io.StringIO()
    write_panel(panel, fh)
    write_atomic(config.out / "synth_panel.csv", fh.getvalue())


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        config = _config(args)
        if args.command == "synth":
            _synth(args, config)
            return 0
        if args.command == "report":
            run_report(config)
            return 0
        panel = load_config_panel(config)
        out = Outputs(config)
        if args.command == "ingest":
            do_ingest(panel, out)
            print(f"{len(panel)} countries, window {panel.window}, "
                  f"{int(panel.observed().sum())} observed cells")
        elif args.command == "summary":
            do_summary(panel, out)
        elif args.command == "runs":
            do_runs(panel, out)
        elif args.command == "corr":
            do_corr(panel, out)
        elif args.command == "chi2":
            do_chi2(do_corr(panel, Outputs(_no_files(config))), out)
        elif args.command == "cluster":
            do_cluster(panel, out)
    except (PanelError, ValueError, KeyError, OSError) as exc:
        print(f"crisis-assoc {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def _no_files(config: RunConfig) -> RunConfig:
    from dataclasses import replace

    return replace(config, formats=())


if __name__ == "__main__":
    sys.exit(main())
