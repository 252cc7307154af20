"""Command-line entry point: ``tadscan {detect,compare,simulate,calibrate,evaluate}``.

Every output is a UTF-8 TSV whose first line is a ``#`` comment recording
the command and its configuration, followed by a ``#`` line naming the
columns. Errors print a one-line message and exit with status 1 (2 for
argument errors, as argparse does).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .compare import match_and_classify, summary_counts
from .evaluate import score_boundaries, summarize
from .glr import scan_window
from .matrix import MatrixFormatError, load_matrix, default_min_tad_bins, write_matrix
from .null import (
    CACHE_ENV,
    DEFAULT_GRID_N,
    DEFAULT_REPLICATES,
    NullProvider,
    default_cache_dir,
)
from .pipeline import DEFAULT_ALPHA0, DEFAULT_ALPHA1, detect
from .simulate import gen_gaussian, gen_nb, gen_nested, read_truth, write_truth

log = logging.getLogger("tadscan")

GENERATORS = {"gaussian": gen_gaussian, "nb": gen_nb, "nested": gen_nested}


class CliError(Exception):
    """A user-facing failure: bad input, inconsistent files, unusable config."""


# -- TSV helpers ---------------------------------------------------------------


def _config_line(command, **config):
    items = " ".join(f"{k}={v}" for k, v in config.items())
    return f"# tadscan {__version__} {command} {items}\n"


def _write_tsv(path, config_line, columns, rows, footer=None):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(config_line)
        fh.write("# " + "\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")
        if footer:
            fh.write(footer)


def _fmt(value):
    if value is None:
        return "NA"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _read_config(path):
    """Key=value pairs from the first ``#`` line of a tadscan TSV."""
    with Path(path).open(encoding="utf-8") as fh:
        first = fh.readline()
    if not first.startswith("# tadscan"):
        raise CliError(f"{path}: not a tadscan output file")
    return dict(tok.split("=", 1) for tok in first.split() if "=" in tok)


def _read_boundaries(path):
    """(position, p_value) pairs and the config of a boundary TSV."""
    config = _read_config(path)
    rows = []
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#") or not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            try:
                rows.append((int(fields[1]), float(fields[3])))
            except (IndexError, ValueError):
                raise CliError(f"{path}: malformed boundary row {line.strip()!r}") from None
    return sorted(rows), config


# -- subcommands ---------------------------------------------------------------


def _provider(args):
    cache = args.null_cache if args.null_cache is not None else default_cache_dir()
    if cache is None:
        log.warning("no null cache (--null-cache or %s); tables are simulated in memory", CACHE_ENV)
    return NullProvider(
        grid_n=args.grid,
        replicates=args.replicates,
        seed=args.seed,
        cache_dir=cache,
        workers=args.threads,
    )


def _check_alphas(args):
    if not 0 < args.alpha1 <= args.alpha0 < 1:
        raise CliError("need 0 < alpha1 <= alpha0 < 1")


def run_detect(args):
    _check_alphas(args)
    if args.resolution <= 0:
        raise CliError("resolution must be positive")
    try:
        matrix = load_matrix(args.input, format=args.format, resolution=args.resolution, chrom=args.chrom)
    except (OSError, MatrixFormatError) as exc:
        raise CliError(str(exc)) from None
    xi = args.min_tad_bins if args.min_tad_bins is not None else default_min_tad_bins(args.resolution)
    if xi < 2:
        raise CliError("minimum TAD size must be at least 2 bins")
    if matrix.n < 2 * xi:
        raise CliError(f"matrix has {matrix.n} bins, fewer than twice the minimum TAD size {xi}")

    result = detect(matrix, _provider(args), xi=xi, alpha0=args.alpha0, alpha1=args.alpha1)
    chrom = matrix.chrom or "NA"
    config = _config_line(
        "detect",
        input=Path(args.input).name,
        format=args.format,
        resolution=args.resolution,
        min_tad_bins=xi,
        alpha0=args.alpha0,
        alpha1=args.alpha1,
        seed=args.seed,
        grid=args.grid,
        replicates=args.replicates,
    )
    prefix = args.out
    _write_tsv(
        f"{prefix}.boundaries.tsv",
        config,
        ["chrom", "bin", "genomic_start", "p_value", "layer"],
        [
            (chrom, c.position, matrix.genomic_start(c.position), c.p_value, c.layer)
            for c in result.boundaries
        ],
    )
    _write_tsv(
        f"{prefix}.tads.tsv",
        config,
        ["chrom", "start_bin", "end_bin", "order"],
        [(chrom, t.start, t.end, t.order) for t in result.tree.nodes()],
    )
    if args.emit_profile:
        scan = scan_window(matrix, 1, matrix.n, xi, keep_profile=True)
        _write_tsv(
            f"{prefix}.profile.tsv",
            config,
            ["split", "z"],
            zip(scan.splits.tolist(), scan.z_profile.tolist()),
        )
    print(f"{len(result.boundaries)} boundaries, {len(result.tree.nodes())} TADs -> {prefix}.*.tsv")


def run_compare(args):
    (a, cfg_a), (b, cfg_b) = (_read_boundaries(p) for p in args.input)
    res_a, res_b = cfg_a.get("resolution"), cfg_b.get("resolution")
    if res_a != res_b:
        raise CliError(f"resolutions differ ({res_a} vs {res_b}); boundaries are not comparable")
    matches = match_and_classify(a, b, tol_bins=args.tol, conserved_alpha=args.conserved_alpha)
    counts = summary_counts(matches)
    summary = "# summary " + " ".join(f"{k}={v}" for k, v in counts.items()) + "\n"
    _write_tsv(
        args.out,
        _config_line(
            "compare",
            a=Path(args.input[0]).name,
            b=Path(args.input[1]).name,
            resolution=res_a,
            tol=args.tol,
            conserved_alpha=args.conserved_alpha,
        ),
        ["pos_a", "pos_b", "p_a", "p_b", "p_fisher", "classification"],
        [(m.pos_a, m.pos_b, m.p_a, m.p_b, m.p_fisher, m.classification) for m in matches],
        footer=summary,
    )
    print(summary[2:].strip())


def run_simulate(args):
    kwargs = dict(sqrt_nu=args.sqrt_nu, seed=args.seed)
    if args.n is not None:
        kwargs["n"] = args.n
    if args.K is not None:
        if args.kind == "nested":
            raise CliError("--K does not apply to nested simulations")
        kwargs["K"] = args.K
    try:
        truth = GENERATORS[args.kind](**kwargs)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    write_matrix(truth.matrix, f"{args.out}.matrix.tsv", format=args.format)
    write_truth(truth, f"{args.out}.truth.tsv")
    print(
        f"{truth.matrix.n} bins, {truth.K} boundaries, resolution {truth.matrix.resolution}"
        f" -> {args.out}.matrix.tsv, {args.out}.truth.tsv"
    )


def run_calibrate(args):
    cache = args.null_cache if args.null_cache is not None else default_cache_dir()
    if cache is None:
        raise CliError(f"calibrate needs --null-cache or {CACHE_ENV}")
    provider = _provider(args)
    provider.calibrate()
    print(f"null tables written to {provider.cache_dir}")


def _score_rows(detected, truth, tols=(0, 1)):
    row = {}
    for tol in tols:
        tpr, fdr, k_diff = score_boundaries(detected, truth, tol)
        row.update({f"tpr_tol{tol}": tpr, f"fdr_tol{tol}": fdr})
        row["k_diff"] = k_diff
    return row


def run_evaluate(args):
    fields = ["tpr_tol0", "fdr_tol0", "tpr_tol1", "fdr_tol1", "k_diff"]
    if args.detected is not None:
        if args.truth is None:
            raise CliError("--detected needs --truth")
        detected, _ = _read_boundaries(args.detected)
        truth, _ = read_truth(args.truth)
        row = _score_rows([p for p, _ in detected], truth)
        _write_tsv(
            args.out,
            _config_line("evaluate", detected=Path(args.detected).name, truth=Path(args.truth).name),
            fields,
            [[row[f] for f in fields]],
        )
        print(" ".join(f"{f}={_fmt(row[f])}" for f in fields))
        return

    _check_alphas(args)
    null = _provider(args)
    gen = GENERATORS[args.kind]
    if args.kind == "nested":
        raise CliError("sweeps score boundaries of flat simulations; use --kind gaussian or nb")
    rows = []
    for sqrt_nu in args.sqrt_nu_grid:
        for rep in range(args.matrices):
            seed = args.seed * 1_000_003 + rep
            truth = gen(sqrt_nu=sqrt_nu, seed=seed)
            result = detect(truth.matrix, null, alpha0=args.alpha0, alpha1=args.alpha1)
            rows.append({"sqrt_nu": sqrt_nu, **_score_rows(result.positions, truth.true_boundaries)})
    table = summarize(rows, "sqrt_nu", fields)
    columns = ["sqrt_nu", "n"] + [f"{f}_{s}" for f in fields for s in ("mean", "sd")]
    _write_tsv(
        args.out,
        _config_line(
            "evaluate",
            kind=args.kind,
            matrices=args.matrices,
            alpha0=args.alpha0,
            alpha1=args.alpha1,
            seed=args.seed,
        ),
        columns,
        [[rec[c] for c in columns] for rec in table],
    )
    for rec in table:
        print(" ".join(f"{c}={_fmt(rec[c])}" for c in columns))


# -- argument parsing ----------------------------------------------------------


def _add_null_args(p):
    p.add_argument("--null-cache", type=Path, default=None, help=f"null table cache dir (default: ${CACHE_ENV})")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--grid", type=int, default=DEFAULT_GRID_N, help="null simulation grid size")
    p.add_argument("--replicates", type=int, default=DEFAULT_REPLICATES)


def _add_alpha_args(p):
    p.add_argument("--alpha0", type=float, default=DEFAULT_ALPHA0, help="pruning threshold")
    p.add_argument("--alpha1", type=float, default=DEFAULT_ALPHA1, help="merging threshold")


def build_parser():
    parser = argparse.ArgumentParser(prog="tadscan", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="call hierarchical TAD boundaries in one matrix")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=("dense", "triplet"), default="dense")
    p.add_argument("--resolution", type=int, required=True, help="bin size in bp")
    p.add_argument("--chrom", default=None)
    p.add_argument("--min-tad-bins", type=int, default=None, help="minimum TAD size in bins")
    p.add_argument("--out", required=True, help="output prefix")
    p.add_argument("--emit-profile", action="store_true", help="also write the whole-matrix Z_m profile")
    _add_alpha_args(p)
    _add_null_args(p)
    p.set_defaults(func=run_detect)

    p = sub.add_parser("compare", help="match the boundaries of two samples")
    p.add_argument("--input", nargs=2, required=True, metavar=("A", "B"), help="two boundary TSVs")
    p.add_argument("--tol", type=int, default=2, help="matching tolerance in bins")
    p.add_argument("--conserved-alpha", type=float, default=0.01)
    p.add_argument("--out", required=True)
    p.set_defaults(func=run_compare)

    p = sub.add_parser("simulate", help="write a synthetic matrix and its true boundaries")
    p.add_argument("--kind", choices=sorted(GENERATORS), default="nb")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--sqrt-nu", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("dense", "triplet"), default="dense")
    p.add_argument("--out", required=True, help="output prefix")
    p.set_defaults(func=run_simulate)

    p = sub.add_parser("calibrate", help="simulate and cache the null tables")
    _add_null_args(p)
    p.set_defaults(func=run_calibrate)

    p = sub.add_parser("evaluate", help="score detections against simulated truth")
    p.add_argument("--detected", default=None, help="boundary TSV from detect")
    p.add_argument("--truth", default=None, help="truth TSV from simulate")
    p.add_argument("--kind", choices=sorted(GENERATORS), default="nb")
    p.add_argument("--sqrt-nu-grid", type=float, nargs="+", default=[0.0, 0.05, 0.10, 0.15])
    p.add_argument("--matrices", type=int, default=20, help="matrices per noise level")
    p.add_argument("--out", required=True)
    _add_alpha_args(p)
    _add_null_args(p)
    p.set_defaults(func=run_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        args.func(args)
    except (CliError, OSError) as exc:
        print(f"tadscan: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
