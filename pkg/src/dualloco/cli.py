"""Command-line interface: ``dualloco {fit,cv,compare,predict,bound,rank}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 convergence error.
"""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .core import FitConfig, PrimalSolution
from .io import ParseError, load_dataset, load_model, save_model
from .metrics import MetricsRecord, UndefinedMetricError, normalized_mse, normalized_param_mse
from .runtime import cross_validate, fit, numerical_rank, predict, theoretical_error_bound
from .solver import ConvergenceError, exact_solve

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_CONVERGENCE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _tau_subs(text):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or a fraction, got {text!r}") from None


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_data_args(p, required=True):
    p.add_argument("--data", required=required, help="training data file")
    p.add_argument("--format", choices=["csv", "libsvm"], default="csv")
    p.add_argument("--dimension", type=int, default=None, help="number of features (libsvm)")
    p.add_argument("--binarize", type=float, default=None, metavar="POS_LABEL",
                   help="map this label to +1 and every other label to -1")


def _add_fit_args(p):
    _add_data_args(p)
    p.add_argument("--test-data", default=None, help="optional held-out data, same format")
    p.add_argument("--loss", choices=["squared", "logistic", "smoothed_hinge", "hinge"],
                   default="squared")
    p.add_argument("--smoothing", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=4)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-2)
    p.add_argument("--tau-subs", type=_tau_subs, default=0.1,
                   help="random features per worker: an integer, or a fraction of p - tau")
    p.add_argument("--projection", choices=["srht", "identity"], default="srht")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--gap-tol", type=float, default=1e-8)
    p.add_argument("--max-epochs", type=int, default=1000)


def build_parser():
    parser = _Parser(prog="dualloco", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("fit", help="distributed fit, optionally writing a model file")
    _add_fit_args(p)
    p.add_argument("--out", default=None, help="model file to write")

    p = sub.add_parser("cv", help="cross-validate lambda")
    _add_fit_args(p)
    p.add_argument("--lambdas", type=_float_list, required=True)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--cv-seed", type=int, default=0)

    p = sub.add_parser("compare", help="distributed fit against the single-machine solution")
    _add_fit_args(p)

    p = sub.add_parser("predict", help="apply a saved model")
    _add_data_args(p)
    p.add_argument("--model", required=True)
    p.add_argument("--out", default=None, help="predictions file (default: stdout)")

    p = sub.add_parser("bound", help="evaluate the error bound")
    p.add_argument("--r", type=int, required=True, help="rank of the design")
    p.add_argument("--tau-subs", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--c0", type=float, default=1.0)
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("rank", help="numerical rank of a design")
    _add_data_args(p)
    p.add_argument("--rel-tol", type=float, default=1e-10)
    return parser


def _load(args, path=None):
    return load_dataset(path or args.data, args.format, args.dimension, args.binarize)


def _config(args):
    return FitConfig(
        lam=args.lam, num_workers=args.workers, projection_dim=args.tau_subs, loss=args.loss,
        smoothing=args.smoothing, gap_tol=args.gap_tol, max_epochs=args.max_epochs,
        seed=args.seed, projection=args.projection,
    )


def _nmse(pred, y):
    try:
        return normalized_mse(pred, y)
    except UndefinedMetricError:
        return float("nan")


def _cmd_fit(args, out):
    data = _load(args)
    config = _config(args)
    solution = fit(data, config)
    test = _load(args, args.test_data) if args.test_data else None
    record = MetricsRecord(
        train_mse_normalized=_nmse(predict(solution, data.features), data.labels),
        test_mse_normalized=_nmse(predict(solution, test.features), test.labels) if test else None,
        wall_time_seconds=solution.metrics["wall_time_seconds"],
        bytes_communicated=solution.metrics["bytes_communicated"],
    )
    solution.metrics = {**record.as_dict(), "random_features": solution.metrics["random_features"],
                        "projection_mode": solution.metrics["projection_mode"]}
    for key, value in solution.metrics.items():
        print(f"{key}\t{value}", file=out)
    if args.out:
        # timings stay out of the file so identical runs give identical models
        kept = {k: v for k, v in solution.metrics.items() if not k.startswith("time_")}
        save_model(PrimalSolution(solution.coefficients, solution.config_echo, kept), args.out)
    return EXIT_OK


def _cmd_cv(args, out):
    data = _load(args)
    best, table = cross_validate(data, _config(args), args.lambdas, args.folds, args.cv_seed)
    print("lambda\tmean_mse\tfold_mse", file=out)
    for row in table:
        folds = ",".join(f"{e:.6g}" for e in row.fold_errors)
        print(f"{row.lam!r}\t{row.mean_error:.6g}\t{folds}", file=out)
    print(f"best_lambda\t{best!r}", file=out)
    return EXIT_OK


def _cmd_compare(args, out):
    data = _load(args)
    config = _config(args)
    solution = fit(data, config)
    reference = exact_solve(data, config.family, config.lam, min(config.gap_tol, 1e-10),
                            max(config.max_epochs, 10000), config.seed)
    rows = [("param_mse_normalized", normalized_param_mse(solution.coefficients, reference.coefficients)),
            ("train_mse_normalized_distributed", _nmse(predict(solution, data.features), data.labels)),
            ("train_mse_normalized_exact", _nmse(predict(reference, data.features), data.labels))]
    if args.test_data:
        test = _load(args, args.test_data)
        rows += [("test_mse_normalized_distributed", _nmse(predict(solution, test.features), test.labels)),
                 ("test_mse_normalized_exact", _nmse(predict(reference, test.features), test.labels))]
    for key, value in rows:
        print(f"{key}\t{value:.6g}", file=out)
    return EXIT_OK


def _cmd_predict(args, out):
    solution = load_model(args.model)
    data = _load(args)
    lines = "".join(f"{float(v)!r}\n" for v in predict(solution, data.features))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(lines)
    else:
        out.write(lines)
    return EXIT_OK


def _cmd_bound(args, out):
    bound = theoretical_error_bound(args.r, args.tau_subs, args.delta, args.c0, args.workers)
    print(f"rho\t{bound.rho:.6g}", file=out)
    print(f"global_bound_factor\t{bound.global_bound_factor:.6g}", file=out)
    print(f"out_of_regime\t{bound.out_of_regime}", file=out)
    return EXIT_OK


def _cmd_rank(args, out):
    print(numerical_rank(_load(args).features, args.rel_tol), file=out)
    return EXIT_OK


COMMANDS = {"fit": _cmd_fit, "cv": _cmd_cv, "compare": _cmd_compare, "predict": _cmd_predict,
            "bound": _cmd_bound, "rank": _cmd_rank}


def run_cli(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return COMMANDS[args.command](args, out)
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ParseError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
