"""Command line front end.

Four subcommands: ``fit`` and ``ci`` operate on x,y CSV files,
``simulate`` runs scenario files, and ``quantiles`` prints or rebuilds
the limit-law tables.  Reports are JSON on stdout (or --out); errors
print one line to stderr as ``[ErrorClass] message`` and exit with 3
for data problems or 4 for numeric instability.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import confidence, harness, limit_process, links, nuisance, parametric, stump
from .errors import ParseError, SplitsetError


def read_xy_csv(path) -> stump.Sample:
    """Read a two-column CSV with the exact header ``x,y``.

    Raises ParseError naming the offending row on any malformed,
    missing, or non-numeric entry.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise ParseError("cannot open %s: %s" % (path, exc)) from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("%s is empty" % path) from None
        if [c.strip() for c in header] != ["x", "y"]:
            raise ParseError("expected header 'x,y', got %r" % ",".join(header))
        xs, ys = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ParseError("row %d: expected two fields, got %d" % (lineno, len(row)))
            try:
                xv, yv = float(row[0]), float(row[1])
            except ValueError:
                raise ParseError("row %d: non-numeric entry %r" % (lineno, ",".join(row))) from None
            if not (np.isfinite(xv) and np.isfinite(yv)):
                raise ParseError("row %d: entries must be finite" % lineno)
            xs.append(xv)
            ys.append(yv)
    if len(xs) < 2:
        raise ParseError("%s holds fewer than two data rows" % path)
    return stump.Sample(xs, ys)


def write_xy_csv(path, sample: stump.Sample) -> None:
    """Write a sample as x,y CSV at full float precision."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y"])
        for xv, yv in zip(sample.x, sample.y):
            writer.writerow([repr(float(xv)), repr(float(yv))])


def _emit(text: str, out_path) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_model(text: str):
    if text == "stump":
        return None
    if text.startswith("poly:"):
        parts = text[len("poly:"):].split(",")
        if len(parts) == 2:
            try:
                return parametric.WorkingModel(int(parts[0]), int(parts[1]))
            except ValueError as exc:
                raise argparse.ArgumentTypeError(str(exc)) from None
    raise argparse.ArgumentTypeError("model must be 'stump' or 'poly:kl,ku'")


def _parse_bandwidth(text: str):
    if text == "cv":
        return nuisance.BandwidthPolicy.cv()
    if text.startswith("fixed:"):
        try:
            return nuisance.BandwidthPolicy.fixed(float(text[len("fixed:"):]))
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    raise argparse.ArgumentTypeError("bandwidth must be 'cv' or 'fixed:h'")


def _parse_levels(text: str):
    try:
        levels = [float(tok) for tok in text.split(",") if tok]
    except ValueError:
        raise argparse.ArgumentTypeError("levels must be a comma list of reals") from None
    if not levels or any(not (0.0 < lv < 1.0) for lv in levels):
        raise argparse.ArgumentTypeError("levels must lie strictly in (0, 1)")
    return levels


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _nuisance_block(sample, fit, policy):
    """Nuisance estimates and limit constants, or None plus a warning."""
    try:
        nuis, lp = nuisance.estimate_limit_params(sample, fit, policy)
    except SplitsetError as exc:
        return None, None, "%s: %s" % (type(exc).__name__, exc)
    nblock = {"density": nuis.density, "cdf": nuis.cdf,
              "fprime": nuis.fprime, "sigma2": nuis.sigma2}
    lblock = {"a": lp.a, "b": lp.b, "b0": lp.b0, "c1": lp.c1, "c2": lp.c2,
              "jump": lp.jump, "unstable": lp.is_unstable}
    return nblock, lblock, None


def cmd_fit(args) -> int:
    sample = read_xy_csv(args.data)
    model = _parse_model(args.model) if isinstance(args.model, str) else args.model
    link = links.LinkSpec(args.link)
    warnings = []
    if model is None:
        fit = stump.fit_stump(sample, args.min_side)
        theta_l, theta_u, _ = links.transform_fit(fit, link)
        nblock, lblock, warn = _nuisance_block(sample, fit, args.bandwidth)
        if warn:
            warnings.append(warn)
        report = {
            "model": {"kind": "stump"},
            "link": link.kind,
            "n": sample.n,
            "d_hat": fit.d_hat,
            "beta_l": fit.beta_l,
            "beta_u": fit.beta_u,
            "theta_l": theta_l,
            "theta_u": theta_u,
            "rss": fit.rss,
            "n_left": fit.n_left,
            "nuisance": nblock,
            "limit_constants": lblock,
            "warnings": warnings,
        }
    else:
        if link.kind != "identity":
            raise ParseError("links apply to stump levels; use --model stump")
        pfit = parametric.fit_parametric(sample, model, args.min_side)
        psi_l, psi_u = parametric.branch_values(pfit, pfit.d_hat)
        report = {
            "model": {"kind": "poly", "degree_left": model.degree_left,
                      "degree_right": model.degree_right},
            "n": sample.n,
            "d_hat": pfit.d_hat,
            "coef_l": list(pfit.coef_l),
            "coef_u": list(pfit.coef_u),
            "branch_l": psi_l,
            "branch_u": psi_u,
            "rss": pfit.rss,
            "n_left": pfit.n_left,
            "warnings": warnings,
        }
    _emit(_json(report), args.out)
    return 0


def _set_report(cs: confidence.ConfidenceSet) -> dict:
    return {
        "method": cs.method,
        "level": cs.level,
        "point_estimate": cs.point_estimate,
        "intervals": [list(iv) for iv in cs.accepted],
        "longest": list(cs.longest_component) if cs.longest_component else None,
        "empty": cs.is_empty,
        "diagnostics": cs.diagnostics,
    }


def cmd_ci(args) -> int:
    sample = read_xy_csv(args.data)
    fit = stump.fit_stump(sample, args.min_side)
    if args.method == "subsample":
        spec = confidence.SubsampleSpec(gamma=args.gamma,
                                        n_subsamples=args.subsamples,
                                        seed=args.seed)
        cs = confidence.subsample_ci(sample, spec, args.alpha, min_side=args.min_side)
        report = _set_report(cs)
    else:
        _, lp = nuisance.estimate_limit_params(sample, fit, args.bandwidth)
        if args.method == "wald":
            iv = confidence.wald_cis(fit, lp, sample.n, args.alpha)
            report = {
                "method": "wald",
                "level": 1.0 - args.alpha,
                "point_estimate": fit.d_hat,
                "intervals": {"beta_l": list(iv.beta_l),
                              "beta_u": list(iv.beta_u),
                              "d": list(iv.d)},
                "delta": iv.delta,
                "diagnostics": {"a": lp.a, "b": lp.b, "c1": lp.c1, "c2": lp.c2},
            }
        elif args.method == "rss1":
            report = _set_report(confidence.rss1_set(sample, fit, lp, args.alpha,
                                                     min_side=args.min_side))
        elif args.method == "rss2":
            report = _set_report(confidence.rss2_set(sample, fit, lp, args.alpha,
                                                     min_side=args.min_side))
        else:
            report = _set_report(confidence.pivot_set(sample, fit, lp, args.alpha,
                                                      min_side=args.min_side))
    _emit(_json(report), args.out)
    return 0


def cmd_simulate(args) -> int:
    scenarios = harness.load_scenarios(args.config)
    rows = harness.reproduce_table(scenarios)
    _emit(harness.coverage_table_tsv(rows), args.out)
    return 0


def cmd_quantiles(args) -> int:
    if args.regenerate:
        spec = limit_process.ProcessSpec(half_width=args.T, step=args.step,
                                         replications=args.reps, seed=args.seed)
        argmax_table, max_table = limit_process.generate_tables(spec)
        table = argmax_table if args.dist == limit_process.CHERNOFF_ARGMAX else max_table
    else:
        table = limit_process.load_embedded_table(args.dist)
    if args.levels:
        levels = np.asarray(sorted(args.levels))
        quants = [limit_process.quantile_at(table, lv) for lv in levels]
        table = limit_process.QuantileTable(dist=table.dist, levels=levels,
                                            quantiles=quants,
                                            provenance=table.provenance)
    _emit(limit_process.format_table(table), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitset",
        description="Split-point estimation and confidence sets for threshold regression.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a stump or two-phase polynomial")
    fit.add_argument("data", help="CSV file with header x,y")
    fit.add_argument("--model", type=_parse_model, default="stump",
                     help="stump (default) or poly:kl,ku")
    fit.add_argument("--link", choices=["identity", "logit", "log"],
                     default="identity")
    fit.add_argument("--min-side", type=int, default=1, dest="min_side")
    fit.add_argument("--bandwidth", type=_parse_bandwidth, default=None,
                     help="nuisance bandwidth: cv or fixed:h")
    fit.add_argument("--out", default=None)
    fit.set_defaults(func=cmd_fit)

    ci = sub.add_parser("ci", help="confidence set for the split point")
    ci.add_argument("data", help="CSV file with header x,y")
    ci.add_argument("--method", choices=list(harness.METHODS), default="rss2")
    ci.add_argument("--alpha", type=float, default=0.05)
    ci.add_argument("--min-side", type=int, default=1, dest="min_side")
    ci.add_argument("--nuisance", choices=["auto"], default="auto",
                    help="nuisance handling (estimated at the fitted split)")
    ci.add_argument("--bandwidth", type=_parse_bandwidth, default=None,
                    help="nuisance bandwidth: cv or fixed:h")
    ci.add_argument("--gamma", type=float, default=0.6,
                    help="subsampling block exponent")
    ci.add_argument("--subsamples", type=int, default=1000)
    ci.add_argument("--seed", type=int, default=0)
    ci.add_argument("--out", default=None)
    ci.set_defaults(func=cmd_ci)

    sim = sub.add_parser("simulate", help="run coverage scenarios from a JSON file")
    sim.add_argument("config", help="scenario object or array, JSON")
    sim.add_argument("--out", default=None)
    sim.set_defaults(func=cmd_simulate)

    quant = sub.add_parser("quantiles", help="print or regenerate limit-law tables")
    quant.add_argument("--dist", choices=list(limit_process._KNOWN_DISTS),
                       default=limit_process.CHERNOFF_ARGMAX)
    quant.add_argument("--levels", type=_parse_levels, default=None,
                       help="comma list of probability levels to report")
    quant.add_argument("--regenerate", action="store_true",
                       help="re-simulate instead of using the embedded table")
    quant.add_argument("--reps", type=int, default=200_000)
    quant.add_argument("--T", type=float, default=3.0, dest="T")
    quant.add_argument("--h", type=float, default=5e-4, dest="step")
    quant.add_argument("--seed", type=int, default=limit_process.DEFAULT_SEED)
    quant.add_argument("--out", default=None)
    quant.set_defaults(func=cmd_quantiles)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SplitsetError as exc:
        sys.stderr.write("[%s] %s\n" % (type(exc).__name__, exc))
        return exc.exit_code
    except ValueError as exc:
        sys.stderr.write("[ValueError] %s\n" % exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
