"""
Command-line entry point: fit, predict, simulate and crossval.

Exit codes: 0 success, 1 runtime failure (I/O, schema, config bounds),
2 usage error. Logs go to stderr at the level named by HEBART_LOG.
"""

import argparse
import sys
from typing import Optional, Sequence

from hebart_engine.application.services.config_service import parse_mode, resolve_config
from hebart_engine.application.services.crossval_service import CrossvalRequest, CrossvalService
from hebart_engine.application.services.fit_service import FitRequest, FitService
from hebart_engine.application.services.prediction_service import PredictRequest, PredictionService
from hebart_engine.application.services.simulation_service import SimulateRequest, SimulationService
from shared.config.settings import settings
from shared.utils.constants import ExitCodes, FitMode
from shared.utils.exceptions import HebartException
from shared.utils.logging_config import get_logger, setup_logging

logger = get_logger(__name__)


def _column_list(values: Sequence[str]) -> tuple[str, ...]:
    """Accept `--covariates a,b` as well as `--covariates a b`."""
    return tuple(part.strip() for value in values for part in value.split(",") if part.strip())


def _add_data_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--data", required=True, help="Training CSV with a header row")
    parser.add_argument("--response", required=True, help="Response column")
    parser.add_argument("--group", required=True, help="Group label column")
    parser.add_argument("--covariates", required=True, nargs="+", help="Covariate columns (comma or space separated)")


def _add_hyperparam_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="YAML or JSON file with a `hyperparams` mapping and optional `mode`")
    parser.add_argument("--seed", type=int, help="RNG seed (64-bit unsigned)")
    parser.add_argument("--trees", type=int, dest="num_trees", help="Number of trees P")
    parser.add_argument("--iterations", type=int, help="Total MCMC sweeps")
    parser.add_argument("--burn-in", type=int, dest="burn_in", help="Sweeps discarded before storing draws")
    parser.add_argument("--thin", type=int, help="Keep every thin-th sweep after burn-in")
    parser.add_argument("--k2", type=float, help="Node-mean precision scaling")


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "rng_seed": args.seed,
        "num_trees": args.num_trees,
        "iterations": args.iterations,
        "burn_in": args.burn_in,
        "thin": args.thin,
        "k2": args.k2,
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hebart", description="Hierarchical Embedded BART")
    subparsers = parser.add_subparsers(dest="command", required=True)

    fit = subparsers.add_parser("fit", help="Fit one chain and write its artifacts")
    _add_data_arguments(fit)
    _add_hyperparam_arguments(fit)
    fit.add_argument("--mode", choices=[m.value for m in FitMode], help="hebart (default) or bart")
    fit.add_argument("--holdout-groups", dest="holdout_groups", nargs="+", default=[],
                     help="Raw group labels held out of training entirely")
    fit.add_argument("--holdout-fraction", dest="holdout_fraction", type=float,
                     help="Seeded fraction of the remaining rows held out")
    fit.add_argument("--out", required=True, help="Output directory")
    fit.set_defaults(handler=cmd_fit)

    predict = subparsers.add_parser("predict", help="Predict rows of a CSV from a fitted model")
    predict.add_argument("--model", required=True, help="Output directory of a fit")
    predict.add_argument("--data", required=True, help="CSV with the model's covariate columns")
    predict.add_argument("--group", help="Group label column; omitted means no group information")
    predict.add_argument("--response", help="Truth column for RMSE (defaults to the model's response if present)")
    predict.add_argument("--level", type=float, help="Credible level (default from the fit)")
    predict.add_argument("--out", required=True, help="Output CSV")
    predict.set_defaults(handler=cmd_predict)

    simulate = subparsers.add_parser("simulate", help="Write a simulated grouped dataset and its truth")
    simulate.add_argument("--n", type=int, default=500)
    simulate.add_argument("--groups", type=int, default=10)
    simulate.add_argument("--trees", type=int, default=10)
    simulate.add_argument("--k1", type=float, default=8.0)
    simulate.add_argument("--k2", type=float, default=5.0)
    simulate.add_argument("--tau-shape", dest="tau_shape", type=float, default=0.5)
    simulate.add_argument("--tau-rate", dest="tau_rate", type=float, default=1.0)
    simulate.add_argument("--seed", type=int, default=0)
    simulate.add_argument("--out", required=True, help="Output CSV; the truth goes to <stem>.truth.txt")
    simulate.set_defaults(handler=cmd_simulate)

    crossval = subparsers.add_parser("crossval", help="K-fold cross-validated RMSE")
    _add_data_arguments(crossval)
    _add_hyperparam_arguments(crossval)
    crossval.add_argument("--folds", type=int, default=30)
    crossval.add_argument("--baseline", choices=[FitMode.BART.value], help="Also fit the BART-mode baseline")
    crossval.add_argument("--jobs", type=int, default=None, help="Worker processes (default HEBART_DEFAULT_JOBS)")
    crossval.add_argument("--out", help="Directory for crossval_folds.csv and crossval_summary.txt")
    crossval.set_defaults(handler=cmd_crossval)
    return parser


def cmd_fit(args: argparse.Namespace) -> int:
    config = resolve_config(args.config, _overrides(args), args.mode)
    result = FitService().fit(FitRequest(
        data_path=args.data,
        response_col=args.response,
        group_col=args.group,
        covariate_cols=_column_list(args.covariates),
        out_dir=args.out,
        config=config,
        holdout_groups=_column_list(args.holdout_groups),
        holdout_fraction=args.holdout_fraction,
        show_progress=settings.show_progress,
    ))
    print(f"train_rmse={result.train_scores.standardized:.6f}")
    if result.test_scores is not None:
        print(f"test_rmse={result.test_scores.standardized:.6f}")
    ratio = result.summary.get("sqrt_k1_over_tau")
    if ratio is not None:
        print(f"sqrt_k1_over_tau={ratio['standardized']['mean']:.6f}")
    return ExitCodes.SUCCESS


def cmd_predict(args: argparse.Namespace) -> int:
    result = PredictionService().predict(PredictRequest(
        model_dir=args.model,
        data_path=args.data,
        out_path=args.out,
        group_col=args.group,
        response_col=args.response,
        level=args.level,
    ))
    if result.rmse_standardized is not None:
        print(f"rmse={result.rmse_standardized:.6f}")
        print(f"rmse_raw={result.rmse_raw:.6f}")
    return ExitCodes.SUCCESS


def cmd_simulate(args: argparse.Namespace) -> int:
    result = SimulationService().simulate(SimulateRequest(
        n=args.n,
        groups=args.groups,
        trees=args.trees,
        k1=args.k1,
        k2=args.k2,
        seed=args.seed,
        out_path=args.out,
        tau_shape=args.tau_shape,
        tau_rate=args.tau_rate,
    ))
    print(f"data={result.data_path}")
    print(f"truth={result.truth_path}")
    return ExitCodes.SUCCESS


def cmd_crossval(args: argparse.Namespace) -> int:
    config = resolve_config(args.config, _overrides(args))
    report = CrossvalService().run(CrossvalRequest(
        data_path=args.data,
        response_col=args.response,
        group_col=args.group,
        covariate_cols=_column_list(args.covariates),
        config=config,
        folds=args.folds,
        baseline=None if args.baseline is None else parse_mode(args.baseline),
        jobs=args.jobs if args.jobs is not None else settings.default_jobs,
        out_dir=args.out,
    ))
    sys.stdout.write(report.format_table())
    return ExitCodes.SUCCESS


def main(argv: Optional[Sequence[str]] = None) -> int:
    setup_logging(
        log_level=settings.log_level,
        log_file=settings.log_file,
        log_to_console=settings.log_to_console,
    )
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return ExitCodes.SUCCESS if e.code in (0, None) else ExitCodes.USAGE_ERROR

    try:
        return args.handler(args)
    except HebartException as e:
        logger.debug("Command failed", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return ExitCodes.RUNTIME_FAILURE
    except OSError as e:
        print(f"error: I/O: {e}", file=sys.stderr)
        return ExitCodes.RUNTIME_FAILURE


if __name__ == "__main__":
    sys.exit(main())
