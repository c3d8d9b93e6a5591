"""Command-line front end: one subcommand per analysis, reproducible artifacts.

Every run is a pure function of its flags and seed; with --out, results go to
CSV (or JSON) next to a manifest recording the merged configuration, and the
report commands can render a matplotlib figure alongside the delimited output.

Exit codes: 0 success, 1 usage error, 2 numerical degeneracy or per-scale
failure, 3 oracle budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

from . import __version__, markov, multiscale, reporting
from .estimators import (
    EnumerationBudgetError,
    enumerate_exact,
    estimate_backscatter_overlap,
    estimate_closure_correlator,
    estimate_crossing,
    estimate_kernel,
    estimate_passage_table,
    estimate_r2_proxy,
)
from .geometry import PhasePoint, SlabGeometry, Velocity, canonical_entry
from .multiscale import ScaleReport, alpha_from_overlap, iterate_kappa, kappa_from_c

USAGE_ERROR = 1
DEGENERATE = 2
BUDGET_ERROR = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _dim(text: str) -> int:
    value = int(text)
    if value < 2:
        raise argparse.ArgumentTypeError(f"dimension must be >= 2, got {value}")
    return value


def _count(text: str) -> int:
    value = int(float(text))
    if value < 1:
        raise argparse.ArgumentTypeError(f"count must be >= 1, got {text}")
    return value


def _seed(text: str) -> int:
    try:
        return int(text, 0)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad seed {text!r}: {exc}") from None


def _scale_range(text: str) -> tuple[int, int]:
    try:
        if ".." in text:
            lo, hi = text.split("..")
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad scale range {text!r}") from None
    if lo < 0 or hi < lo:
        raise argparse.ArgumentTypeError(f"bad scale range {text!r}")
    return lo, hi


def _add_common(sub, *, samples=True, geometry=True):
    sub.add_argument("--seed", type=_seed, default=1, help="master seed (decimal or 0x hex)")
    sub.add_argument("--workers", type=int, default=1, help="worker process count")
    sub.add_argument("--format", choices=("csv", "json"), default="csv")
    sub.add_argument("--out", type=Path, default=None, help="output file path")
    if samples:
        sub.add_argument("--samples", type=_count, default=100_000,
                         help="sample count (accepts 1e6 notation)")
    if geometry:
        sub.add_argument("--dim", type=_dim, default=3)
        sub.add_argument("--aspect", type=int, default=8,
                         help="transverse extent per unit width")


def build_parser() -> _Parser:
    parser = _Parser(prog="mirrorslab", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", type=Path, default=None,
                        help="JSON file of default option values")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    parser.command_parsers = commands

    sub = commands.add_parser("markov", help="exact baseline table, optional MC check")
    sub.add_argument("--max-n", type=int, default=4, help="largest doubling scale")
    sub.add_argument("--verify", action="store_true", help="add a Monte Carlo column")
    _add_common(sub)

    sub = commands.add_parser("cross", help="crossing probability and conductivity")
    sub.add_argument("--width", type=_count, required=True)
    sub.add_argument("--model", choices=("mirrors", "markov"), default="mirrors")
    _add_common(sub)

    sub = commands.add_parser("kernel", help="projected exit distribution of one entry")
    sub.add_argument("--width", type=_count, required=True)
    sub.add_argument("--projection", choices=("side", "transverse", "full"), default="side")
    sub.add_argument("--model", choices=("mirrors", "markov"), default="mirrors")
    _add_common(sub)

    sub = commands.add_parser("closure", help="two-entry joint exit statistics")
    sub.add_argument("--width", type=_count, required=True)
    sub.add_argument("--projection", choices=("side", "offset"), default="side")
    sub.add_argument("--offset", type=int, default=0,
                     help="transverse offset of the reverse entry")
    _add_common(sub)

    sub = commands.add_parser("overlap", help="backscatter overlap at one scale")
    sub.add_argument("--n", type=int, default=4, help="scale exponent; width is 2^n")
    sub.add_argument("--model", choices=("mirrors", "markov"), default="mirrors")
    _add_common(sub)

    sub = commands.add_parser("passage", help="interface-passage table of a doubled slab")
    sub.add_argument("--n", type=int, default=2, help="half-slab scale; width is 2^(n+1)")
    sub.add_argument("--l-max", type=int, default=8)
    sub.add_argument("--model", choices=("mirrors", "markov"), default="mirrors")
    sub.add_argument("--plot", type=Path, default=None, help="render a figure to this path")
    _add_common(sub)

    sub = commands.add_parser("r2", help="reverse-crossing fluctuation correlator")
    sub.add_argument("--n", type=int, default=2, help="scale exponent; width is 2^n")
    sub.add_argument("--model", choices=("mirrors", "markov"), default="mirrors")
    _add_common(sub)

    sub = commands.add_parser("recurse", help="iterate the conductivity recursion")
    sub.add_argument("--kappa", type=float, required=True)
    sub.add_argument("--n", type=int, required=True, help="starting scale exponent")
    sub.add_argument("--alpha", type=float, required=True)
    sub.add_argument("--mode", choices=("leading", "exact"), default="leading")
    _add_common(sub, samples=False, geometry=False)

    sub = commands.add_parser("oracle", help="exact enumeration of a small slab")
    sub.add_argument("--width", type=_count, required=True)
    sub.add_argument("--transverse", type=_count, required=True)
    sub.add_argument("--budget", type=_count, default=10**8)
    sub.add_argument("--dim", type=_dim, default=2)
    _add_common(sub, samples=False, geometry=False)

    sub = commands.add_parser("sweep", help="scale sweep: crossing, overlap, doubling ratios")
    sub.add_argument("--n", type=_scale_range, default=(0, 4), metavar="LO..HI")
    sub.add_argument("--model", choices=("mirrors", "markov"), default="mirrors")
    sub.add_argument("--overlap-samples", type=_count, default=None)
    sub.add_argument("--plot", type=Path, default=None, help="render a figure to this path")
    _add_common(sub)

    return parser


def _config_dict(args: argparse.Namespace) -> dict:
    config = {}
    for key, value in sorted(vars(args).items()):
        if key in ("config",):
            continue
        if isinstance(value, Path):
            value = str(value)
        elif isinstance(value, tuple):
            value = list(value)
        config[key] = value
    return config


def _emit(args, header: list[str], rows: list[list], extra_outputs: list[str] = ()) -> None:
    if args.format == "json":
        payload = [
            {k: (str(v) if not isinstance(v, (int, float, str)) else v)
             for k, v in zip(header, row)}
            for row in rows
        ]
        text = json.dumps(payload, indent=2) + "\n"
    else:
        text = reporting.render_csv(header, rows)
    if args.out:
        Path(args.out).write_text(text)
        manifest = Path(str(args.out) + ".manifest.json")
        outputs = [str(args.out), *extra_outputs]
        reporting.write_manifest(manifest, args.command, _config_dict(args), outputs)
    else:
        sys.stdout.write(text)


def _cmd_markov(args) -> int:
    state = markov.MarkovScaleState.initial(args.dim)
    states = [state]
    for _ in range(args.max_n):
        state = state.double()
        states.append(state)
    header = ["n", "N", "c_exact", "c_float", "kappa_exact"]
    if args.verify:
        header += ["mc_estimate", "mc_stderr", "mc_ci_low", "mc_ci_high"]
    rows = []
    for s in states:
        row = [s.n, 2**s.n, s.c_hat, float(s.c_hat), s.kappa_hat]
        if args.verify:
            geom = SlabGeometry(args.dim, 2**s.n, args.aspect * 2**s.n)
            est = markov.simulate_nb_walk(geom, args.samples, args.seed + s.n)
            row += [est.p_hat, est.stderr, est.ci_low, est.ci_high]
        rows.append(row)
    _emit(args, header, rows)
    return 0


def _cmd_cross(args) -> int:
    geom = SlabGeometry(args.dim, args.width, args.aspect * args.width)
    est = estimate_crossing(geom, args.samples, args.seed,
                            model=args.model, workers=args.workers)
    rows = [reporting.estimate_row("crossing", geom, est.samples, est.p_hat,
                                   est.stderr, est.ci_low, est.ci_high, args.seed)]
    if est.degenerate:
        _emit(args, reporting.ESTIMATE_HEADER, rows)
        print("crossing estimate is degenerate (0 or 1)", file=sys.stderr)
        return DEGENERATE
    kappa = kappa_from_c(geom.width, est.p_hat)
    rows.append(reporting.estimate_row(
        "kappa", geom, est.samples, kappa,
        geom.width * est.stderr / (1.0 - est.p_hat) ** 2,
        kappa_from_c(geom.width, est.ci_low) if est.ci_low > 0 else 0.0,
        kappa_from_c(geom.width, est.ci_high) if est.ci_high < 1 else float("inf"),
        args.seed,
    ))
    _emit(args, reporting.ESTIMATE_HEADER, rows)
    return 0


def _cmd_kernel(args) -> int:
    geom = SlabGeometry(args.dim, args.width, args.aspect * args.width)
    hist = estimate_kernel(geom, canonical_entry(geom), args.samples, args.seed,
                           args.projection, model=args.model, workers=args.workers)
    header, rows = reporting.kernel_rows(hist)
    _emit(args, header, rows)
    return 0


def _cmd_closure(args) -> int:
    geom = SlabGeometry(args.dim, args.width, args.aspect * args.width)
    entry_a = canonical_entry(geom)
    site = [geom.width] + [1] * (geom.dim - 1)
    site[1] += args.offset
    entry_b = PhasePoint(geom.wrap(tuple(site)), Velocity(0, -1))
    stats = estimate_closure_correlator(
        geom, entry_a, entry_b, args.samples, args.seed,
        args.projection, workers=args.workers,
    )
    header, rows = reporting.closure_rows(stats)
    _emit(args, header, rows)
    return 0


def _cmd_overlap(args) -> int:
    width = 2**args.n
    geom = SlabGeometry(args.dim, width, args.aspect * width)
    est = estimate_backscatter_overlap(geom, args.samples, args.seed,
                                       model=args.model, workers=args.workers)
    alpha_err = est.stderr if math.isnan(est.stderr) else 2.0 * est.stderr
    rows = [
        reporting.estimate_row("overlap", geom, est.samples, est.value,
                               est.stderr, est.ci_low, est.ci_high, args.seed),
        reporting.estimate_row("alpha", geom, est.samples,
                               alpha_from_overlap(est.value), alpha_err,
                               2.0 * est.ci_low, 2.0 * est.ci_high, args.seed),
    ]
    _emit(args, reporting.ESTIMATE_HEADER, rows)
    return 0


def _cmd_passage(args) -> int:
    width = 2 ** (args.n + 1)
    geom = SlabGeometry(args.dim, width, args.aspect * width)
    # the halves of the doubled slab share its transverse extent
    half_geom = SlabGeometry(args.dim, width // 2, geom.transverse)
    c_n = estimate_crossing(half_geom, args.samples, multiscale.subseed(args.seed, 1),
                            model=args.model, workers=args.workers)
    table = estimate_passage_table(geom, args.samples, args.seed, args.l_max,
                                   c_n=c_n, model=args.model, workers=args.workers)
    rows = reporting.passage_rows(table)
    extra = []
    if args.plot:
        reporting.render_passage_figure(table, args.plot)
        extra.append(str(args.plot))
    _emit(args, reporting.PASSAGE_HEADER, rows, extra)
    return 0


def _cmd_r2(args) -> int:
    width = 2**args.n
    geom = SlabGeometry(args.dim, width, args.aspect * width)
    est = estimate_r2_proxy(geom, args.samples, args.seed,
                            model=args.model, workers=args.workers)
    header, rows = reporting.r2_rows(est, geom, args.seed)
    _emit(args, header, rows)
    return 0


def _cmd_recurse(args) -> int:
    sequence, limit = iterate_kappa(args.kappa, args.n, args.alpha, mode=args.mode)
    header = ["step", "n", "kappa"]
    rows = [[i, args.n + i, k] for i, k in enumerate(sequence)]
    rows.append(["limit", "", limit])
    _emit(args, header, rows)
    return 0


def _cmd_oracle(args) -> int:
    geom = SlabGeometry(args.dim, args.width, args.transverse)
    try:
        result = enumerate_exact(geom, budget=args.budget)
    except EnumerationBudgetError as exc:
        print(f"oracle: {exc}", file=sys.stderr)
        return BUDGET_ERROR
    header, rows = reporting.oracle_rows(result)
    _emit(args, header, rows)
    return 0


def _cmd_sweep(args) -> int:
    n_lo, n_hi = args.n
    overlap_samples = args.overlap_samples or args.samples
    crossings = {}
    reports: list[ScaleReport] = []
    failure: Optional[str] = None
    for n in range(n_lo, n_hi + 1):
        try:
            for k in (n, n + 1):
                if k not in crossings:
                    width = 2**k
                    geom = SlabGeometry(args.dim, width, args.aspect * width)
                    crossings[k] = estimate_crossing(
                        geom, args.samples, multiscale.subseed(args.seed, 2 * k),
                        model=args.model, workers=args.workers,
                    )
            width = 2**n
            geom = SlabGeometry(args.dim, width, args.aspect * width)
            overlap = estimate_backscatter_overlap(
                geom, overlap_samples, multiscale.subseed(args.seed, 2 * n + 1),
                model=args.model, workers=args.workers,
            )
            reports.append(ScaleReport(
                n, width, geom.transverse, args.samples,
                crossings[n], crossings[n + 1], overlap,
            ))
        except Exception as exc:  # flush whatever completed, then fail
            failure = f"scale n={n} failed: {exc}"
            break

    extra = []
    if args.out:
        figure_csv = args.out.with_suffix(".figure.csv")
        reporting.write_csv(figure_csv, reporting.FIGURE_HEADER,
                            reporting.figure_rows(reports))
        extra.append(str(figure_csv))
    if args.plot and reports:
        reporting.render_sweep_figure(reports, args.plot)
        extra.append(str(args.plot))
    _emit(args, reporting.SCALE_HEADER, reporting.scale_rows(reports), extra)
    if failure:
        print(f"sweep: {failure}", file=sys.stderr)
        return DEGENERATE
    return 0


_COMMANDS = {
    "markov": _cmd_markov,
    "cross": _cmd_cross,
    "kernel": _cmd_kernel,
    "closure": _cmd_closure,
    "overlap": _cmd_overlap,
    "passage": _cmd_passage,
    "r2": _cmd_r2,
    "recurse": _cmd_recurse,
    "oracle": _cmd_oracle,
    "sweep": _cmd_sweep,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args, _ = parser.parse_known_args(argv)
        if getattr(args, "config", None):
            try:
                defaults = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                print(f"mirrorslab: bad config file: {exc}", file=sys.stderr)
                return USAGE_ERROR
            parser.set_defaults(**defaults)
            # subparsers parse into a fresh namespace, so they need the
            # config-provided defaults as well
            for sub in parser.command_parsers.choices.values():
                sub.set_defaults(**defaults)
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse help/version/usage paths
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except ValueError as exc:
        print(f"mirrorslab {args.command}: {exc}", file=sys.stderr)
        return DEGENERATE


if __name__ == "__main__":
    sys.exit(main())
