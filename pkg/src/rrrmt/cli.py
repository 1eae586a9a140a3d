"""Command-line entry point: ``rrrmt <subcommand> [flags]``.

Every run writes its results plus ``manifest.json`` (resolved parameters,
seed and library versions) to ``--out``.  Exit status is 0 on success, 1 on
a usage error and 2 on a numeric or domain error.
"""

import argparse
import json
import os
from pathlib import Path
import platform
import sys

import numpy as np
import scipy
import sklearn
from scipy.stats import kstest

from . import __version__
from .ensembles import SignalConvention, simulate_model
from .estimation import (CorrectionKind, clt_parameters, correction_from_A,
                         empirical_correction, estimate_thetas_from_A,
                         estimate_thetas_from_Y, export_threshold_surface,
                         threshold_surface)
from .exceptions import RRRError
from .montecarlo import (ExperimentConfig, Output, aggregate, clt_series,
                         export_results, run_experiment, write_outputs)
from .regression import fit, ols_coefficients, singular_values
from .spectra import law_from_kind, law_table

SEED_ENV = "RRR_SEED"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def parse_grid(text):
    """``start:stop:count`` with inclusive endpoints."""
    try:
        start, stop, count = text.split(":")
        count = int(count)
        start, stop = float(start), float(stop)
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"grid must look like start:stop:count, got {text!r}") from None
    if count < 1:
        raise argparse.ArgumentTypeError("grid count must be at least 1")
    return np.linspace(start, stop, count)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def _float_list(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config")
    common.add_argument("--out", type=Path, default=Path("rrrmt_out"),
                        help="output directory (default: %(default)s)")
    common.add_argument("--seed", type=int,
                        help=f"master seed (default: ${SEED_ENV}, then config, then 0)")
    common.add_argument("--reps", type=int, help="replications")
    common.add_argument("--threads", type=int, default=1, help="worker threads")

    model = argparse.ArgumentParser(add_help=False)
    model.add_argument("--N", type=int)
    model.add_argument("--p", type=int)
    model.add_argument("--r", type=_int_list, help="one value or a comma list")
    model.add_argument("--rank", type=int)
    model.add_argument("--theta", type=_float_list, help="spike strength(s)")
    model.add_argument("--convention", choices=[c.value for c in SignalConvention])
    model.add_argument("--significance", type=float)

    parser = _Parser(prog="rrrmt", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="subcommand",
                                parser_class=_Parser)
    sub.required = True
    sub.add_parser("simulate", parents=[common, model],
                   help="run an experiment and write every requested output")
    sub.add_parser("rank-select", parents=[common, model],
                   help="mean selected rank per (r, algorithm)")
    est = sub.add_parser("estimate", parents=[common, model],
                         help="de-biased spike estimates on one dataset")
    est.add_argument("--estimator", action="append",
                     choices=[k.value for k in CorrectionKind],
                     help="repeatable (default: FromA and FromY)")
    sub.add_parser("clt-check", parents=[common, model],
                   help="studentized errors of the rank-one estimator")
    law = sub.add_parser("law", parents=[common],
                         help="density and CDF table of a limiting law")
    law.add_argument("--kind", choices=["mp", "ab"], required=True)
    law.add_argument("--lambda", dest="lam", type=float)
    law.add_argument("--beta", type=float, required=True)
    law.add_argument("--grid", type=int, default=1000)
    law.add_argument("--upper", type=float,
                     help="right end of the grid when the support is unbounded")
    thr = sub.add_parser("thresholds", parents=[common],
                         help="detection thresholds on a (lambda, beta) grid")
    thr.add_argument("--lambda-grid", type=parse_grid, default="0.05:2:40")
    thr.add_argument("--beta-grid", type=parse_grid, default="0.1:3:40")
    return parser


def _resolve_seed(args, doc):
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return int(doc.get("master_seed", 0))


def _experiment_doc(args, defaults):
    doc = dict(defaults)
    if args.config is not None:
        try:
            doc.update(json.loads(args.config.read_text()))
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
    overrides = {"N": args.N, "p": args.p, "rank": args.rank,
                 "thetas": args.theta, "signal_convention": args.convention,
                 "replications": args.reps, "significance": args.significance}
    if args.r is not None:
        overrides["r"] = args.r if len(args.r) > 1 else args.r[0]
    doc.update({k: v for k, v in overrides.items() if v is not None})
    missing = [k for k in ("N", "p", "r") if k not in doc]
    if missing:
        raise UsageError(f"missing model parameters: {', '.join('--' + m for m in missing)}")
    doc["master_seed"] = _resolve_seed(args, doc)
    return doc


def _versions():
    return {"rrrmt": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__,
            "scikit-learn": sklearn.__version__}


def _print_table(table):
    print(f"{'r':>6} {'algorithm':>9} {'mean':>8} {'se':>8} {'reps':>6}")
    for r, alg, mean, se, n in table.rows():
        print(f"{r:>6} {alg:>9} {mean:8.4f} {se:8.4f} {n:>6}")
    if table.failures:
        print(f"{table.failures} replication(s) failed and were excluded")


def cmd_experiment(args, outputs):
    doc = _experiment_doc(args, {"outputs": outputs})
    cfg = ExperimentConfig.from_dict(doc)
    result = run_experiment(cfg, args.threads)
    written = write_outputs(result, args.out)
    if Output.RANK_TABLE in cfg.outputs and result.records:
        _print_table(aggregate(result.records, result.failure_count))
    return cfg.to_dict(), written


def cmd_estimate(args):
    doc = _experiment_doc(args, {"rank": 1, "replications": 1})
    kinds = args.estimator or ["FromA", "FromY"]
    cfg = ExperimentConfig.from_dict(doc)
    model = cfg.model
    ds = simulate_model(model, cfg.master_seed, 0)
    A_hat, Y_hat = fit(ds.X, ds.Y)
    s = max(model.rank, 1)
    rows = []
    for kind in map(CorrectionKind, kinds):
        if kind is CorrectionKind.FROM_Y:
            recs = estimate_thetas_from_Y(Y_hat, model.r, s, model.beta, model.mu)
        else:
            if kind is CorrectionKind.FROM_A:
                corr = correction_from_A(model.lam, model.beta)
            else:
                corr = empirical_correction(
                    singular_values(ols_coefficients(ds.X, ds.U)), model.p, model.r)
            recs = estimate_thetas_from_A(A_hat, s, corr, model.lam, model.beta,
                                          N=model.N)
        for rec in recs:
            rows.append({"estimator": kind.value, "index": rec.index,
                         "sigma_hat": rec.sigma_hat, "theta_hat": rec.theta_hat,
                         "above_threshold": rec.above_threshold,
                         "std_error": rec.std_error})
    path = args.out / "estimates.json"
    path.write_text(json.dumps(rows, indent=2) + "\n")
    for row in rows:
        th = "below threshold" if row["theta_hat"] is None else f"{row['theta_hat']:.4f}"
        print(f"{row['estimator']:>10} #{row['index']}: sigma_hat={row['sigma_hat']:.4f} "
              f"theta_hat={th}")
    params = cfg.to_dict()
    params["estimators"] = list(kinds)
    return params, [path]


def cmd_clt(args):
    doc = _experiment_doc(args, {"rank": 1, "replications": 1000,
                                 "estimators": ["FromA", "EmpiricalA"],
                                 "algorithms": ["TW_Ahat"],
                                 "outputs": ["clt_histogram"]})
    cfg = ExperimentConfig.from_dict(doc)
    model = cfg.model
    if model.rank != 1:
        raise UsageError("clt-check needs --rank 1")
    result = run_experiment(cfg, args.threads)
    written = write_outputs(result, args.out)
    par = clt_parameters(model.thetas[0], model.lam, model.beta)
    summary = {"omega": par.omega, "sigma": par.sigma, "failures": result.failure_count}
    for kind in cfg.estimators:
        z = clt_series(result.records, kind)
        if z.size:
            summary[kind.value] = {"n": int(z.size),
                                   "ks": float(kstest(z, "norm").statistic),
                                   "variance": float(np.var(z, ddof=1)),
                                   "mean": float(np.mean(z))}
    path = args.out / "clt_summary.json"
    path.write_text(json.dumps(summary, indent=2) + "\n")
    print(f"omega = {par.omega:.6g}")
    for kind in cfg.estimators:
        if kind.value in summary:
            s = summary[kind.value]
            print(f"{kind.value:>10}: n={s['n']} KS={s['ks']:.4f} var={s['variance']:.4f}")
    return cfg.to_dict(), written + [path]


def cmd_law(args):
    law = law_from_kind(args.kind, args.lam, args.beta)
    lo, hi = law.support()
    x, dens, cdf = law_table(law, args.grid, args.upper)
    path = args.out / f"law_{args.kind}.tsv"
    export_results(np.column_stack([x, dens, cdf]), path, "TSV",
                   header=("x", "density", "cdf"))
    print(f"support [{lo:.6g}, {hi:.6g}], atom at 0: {law.atom:.6g}")
    params = {"kind": args.kind, "lambda": args.lam, "beta": args.beta,
              "grid": args.grid, "upper": args.upper}
    return params, [path]


def cmd_thresholds(args):
    rows = threshold_surface(args.lambda_grid, args.beta_grid)
    path = args.out / "threshold_surface.csv"
    export_threshold_surface(rows, path)
    diff = np.array([row[4] for row in rows])
    print(f"{len(rows)} grid points; theta_A - theta_Y in "
          f"[{diff.min():.4g}, {diff.max():.4g}]")
    params = {"lambda_grid": args.lambda_grid.tolist(),
              "beta_grid": args.beta_grid.tolist()}
    return params, [path]


def _write_manifest(out, command, argv, params, outputs, status, error=None):
    manifest = {"command": command, "argv": list(argv), "parameters": params,
                "status": status, "error": error, "versions": _versions(),
                "outputs": [str(Path(p).name) for p in outputs]}
    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, default=str) + "\n")


COMMANDS = {
    "simulate": lambda args: cmd_experiment(
        args, ["rank_table", "tw_null_cdf", "esd_overlay"]),
    "rank-select": lambda args: cmd_experiment(args, ["rank_table"]),
    "estimate": cmd_estimate,
    "clt-check": cmd_clt,
    "law": cmd_law,
    "thresholds": cmd_thresholds,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # --help and --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    params, written, status, error = {}, [], 0, None
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        params, written = COMMANDS[args.command](args)
    except UsageError as exc:
        status, error = 1, str(exc)
    except (RRRError, ArithmeticError, np.linalg.LinAlgError) as exc:
        status, error = 2, f"{type(exc).__name__}: {exc}"
    except OSError as exc:
        status, error = 1, str(exc)
    if error is not None:
        print(f"rrrmt: {error}", file=sys.stderr)
    try:
        _write_manifest(args.out, args.command, argv, params, written, status, error)
    except OSError as exc:
        print(f"rrrmt: cannot write manifest: {exc}", file=sys.stderr)
        return status or 1
    return status


if __name__ == "__main__":
    sys.exit(main())
