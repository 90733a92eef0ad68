"""Command-line entry point: ``sshnet {simulate,identify,montecarlo,prior-sample,summarize}``.

Exit codes: 0 success, 1 usage, 2 I/O or parse failure, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import logging
import sys
from pathlib import Path

import numpy as np

from ..distributions import RngStream
from ..errors import ParameterError, SSHNetError
from ..gibbs import ChainConfig
from ..netsim import synthesize_dataset
from . import experiments as ex
from . import io

log = logging.getLogger("sshnet")

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERICAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _csv_list(cast):
    def parse(text):
        try:
            return [cast(x) for x in text.split(",") if x.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


def _add_dims(sp, with_q=True):
    sp.add_argument("--preset", choices=sorted(ex.PRESETS), default=None)
    sp.add_argument("--p", type=int, help="number of modules")
    if with_q:
        sp.add_argument("--q", type=int, help="number of active modules")
    sp.add_argument("--n", type=int, help="number of retained outputs")
    sp.add_argument("--m", type=int, help="FIR length")
    sp.add_argument("--snr", type=float, help="noiseless-output variance over noise variance")
    sp.add_argument("--input", dest="input_kind", choices=["white", "lowpass"], default="white")


def _add_chain(sp):
    sp.add_argument("--iters", type=int, help="Gibbs sweeps (default: preset or 20000)")
    sp.add_argument("--burn-in", type=float, default=0.25, help="burn-in fraction of sweeps")
    sp.add_argument("--thin", type=int, help="keep every THIN-th post-burn-in sweep")
    sp.add_argument("--evidence-stride", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--alpha", type=float, default=None)
    g.add_argument("--alpha-grid", type=ex.parse_alpha_grid, default=None,
                   help="e.g. 0.8:0.05:0.95,0.99")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sshnet", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("simulate", help="generate a synthetic sparse network dataset")
    _add_dims(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", required=True, type=Path)

    sp = sub.add_parser("identify", help="run the sampler on a dataset file")
    sp.add_argument("--data", required=True, type=Path)
    sp.add_argument("--preset", choices=sorted(ex.PRESETS), default=None)
    _add_chain(sp)
    sp.add_argument("--out", type=Path, default=Path("report.json"))
    sp.add_argument("--chain-csv", type=Path, default=None)
    sp.add_argument("--theta-csv-dir", type=Path, default=None)
    sp.add_argument("--no-bands", action="store_true", help="omit credible bands from the report")

    sp = sub.add_parser("montecarlo", help="repeated simulate + identify with random sparsity")
    _add_dims(sp)
    _add_chain(sp)
    sp.add_argument("--runs", type=int, default=100)
    sp.add_argument("--out-dir", type=Path, default=Path("montecarlo"))

    sp = sub.add_parser("prior-sample", help="draws and shrinkage histograms from the prior")
    sp.add_argument("--alpha", type=float, default=0.8)
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--m", type=int, default=50)
    sp.add_argument("--shrinkage", type=_csv_list(int), default=None,
                    help="comma-separated lags; emit histograms instead of draws")
    sp.add_argument("--bins", type=float, default=0.01, help="histogram bin width")
    sp.add_argument("--samples", type=int, default=10**5, help="draws per histogram")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", type=Path, default=None, help="CSV path (default: stdout)")

    sp = sub.add_parser("summarize", help="print a report as a table")
    sp.add_argument("report", type=Path)
    sp.add_argument("--format", choices=["table", "csv"], default="table")
    return parser


def _dims(args, base=None):
    preset = dict(ex.PRESETS[args.preset]) if args.preset else dict(ex.PRESETS["desk"])
    out = {}
    for key in ("p", "q", "n", "m", "snr"):
        val = getattr(args, key, None)
        out[key] = preset[key] if val is None else val
    return out, preset


def _chain_config(args, preset) -> ChainConfig:
    iters = args.iters if args.iters is not None else preset["n_iters"]
    thin = args.thin if args.thin is not None else preset["thin"]
    stride = args.evidence_stride
    if stride is None and args.alpha_grid is not None:
        stride = 50
    return ChainConfig(n_iters=iters, burn_in_fraction=args.burn_in, thin=thin, seed=args.seed,
                       evidence_stride=stride)


def _alpha(args):
    if args.alpha is None and args.alpha_grid is None:
        return 0.9, None
    return args.alpha, args.alpha_grid


def cmd_simulate(args) -> int:
    dims, _ = _dims(args)
    ds = synthesize_dataset(dims["p"], dims["q"], dims["n"], dims["m"], dims["snr"],
                            args.input_kind, RngStream(args.seed))
    io.save_dataset(args.out, ds)
    log.info("wrote %s (p=%d, q=%d, n=%d, m=%d)", args.out, ds.p, dims["q"], ds.n, ds.m)
    return EXIT_OK


def cmd_identify(args) -> int:
    ds = io.load_dataset(args.data)
    preset = ex.PRESETS[args.preset] if args.preset else ex.PRESETS["desk"]
    chain = _chain_config(args, preset)
    alpha, grid = _alpha(args)
    record, evidence, selected = ex.identify(ds, chain, alpha, grid)
    config = {"data": str(args.data), "alpha": alpha,
              "alpha_grid": None if grid is None else list(grid), "chain": chain.as_dict()}
    report = ex.build_report(ds, record, config, evidence, selected, bands=not args.no_bands)
    io.write_json(args.out, report)
    if args.chain_csv is not None:
        io.write_chain_csv(args.chain_csv, record)
    if args.theta_csv_dir is not None:
        io.write_theta_csvs(args.theta_csv_dir, record)
    log.info("wrote %s", args.out)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    dims, preset = _dims(args)
    alpha, grid = _alpha(args)
    cfg = ex.ExperimentConfig(chain=_chain_config(args, preset), alpha=alpha, alpha_grid=grid,
                              input_kind=args.input_kind, runs=args.runs, **dims)
    try:
        agg = ex.montecarlo(cfg, args.seed, out_dir=args.out_dir)
    except ex.MonteCarloFailure as exc:
        log.error("%s", exc)
        return EXIT_NUMERICAL
    log.info("median fit %s over %d fits; wrote %s", agg["fits"].get("median"),
             agg["fits"]["count"], args.out_dir / "aggregate.json")
    return EXIT_OK


def cmd_prior_sample(args) -> int:
    if args.shrinkage:
        header, rows = ex.shrinkage_rows(args.shrinkage, args.alpha, args.bins, args.samples, args.seed)
    else:
        if args.count < 1 or args.m < 1:
            raise ParameterError("--count and --m must be positive")
        header, rows = ex.prior_draw_rows(args.m, args.alpha, args.count, args.seed)
    if args.out is None:
        sys.stdout.write(io._csv_text(header, rows))
    else:
        io.write_csv(args.out, header, rows)
    return EXIT_OK


def summary_rows(report: dict):
    rows = []
    for k, v in report.get("fits", {}).items():
        rows.append(("fit", f"module {k}", f"{v:.1f}%"))
    norms = np.array(list(report.get("null_norms", {}).values()), dtype=float)
    if norms.size:
        q = np.quantile(norms, [0.0, 0.25, 0.5, 0.75, 1.0])
        rows.append(("null norms", f"{norms.size} modules",
                     "min {:.3g} q25 {:.3g} med {:.3g} q75 {:.3g} max {:.3g}".format(*q)))
    if "selected_alpha" in report:
        rows.append(("alpha", "selected", f"{report['selected_alpha']:g}"))
    elif "alpha" in report:
        rows.append(("alpha", "fixed", f"{report['alpha']:g}"))
    timing = report.get("timing_seconds", {})
    if "wall" in timing:
        rows.append(("timing", "wall", f"{timing['wall']:.1f} s"))
    return rows


def cmd_summarize(args) -> int:
    report = io.read_json(args.report)
    rows = summary_rows(report)
    if args.format == "csv":
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["section", "item", "value"])
        w.writerows(rows)
        sys.stdout.write(buf.getvalue())
        return EXIT_OK
    widths = [max(len(r[i]) for r in rows + [("section", "item", "value")]) for i in range(3)]
    for r in [("section", "item", "value")] + rows:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "montecarlo": cmd_montecarlo,
    "prior-sample": cmd_prior_sample,
    "summarize": cmd_summarize,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except SSHNetError as exc:
        print(f"sshnet {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"sshnet {args.command}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
