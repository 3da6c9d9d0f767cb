"""Command-line interface: ``sslearn <command> [flags]``.

Every command writes its results to files (or stdout when ``--output -``)
and exits 0. Failures print one JSON object ``{"error", "message", ...}`` to
stderr and exit 2 for bad input or flags, 3 for numerical failures.
Wall-clock timings never enter output files, so outputs are reproducible.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import evaluation, general, simulation
from .estimator import FitConfig, fit, interpolate
from .forecast import ForecastRequest, forecast
from .io import CSVFormatError, fmt, read_exogenous_csv, read_series_csv, write_columns_csv
from .matrix import TimeSeries, build_design, build_forecast_rows

THREADS_ENV = "SSLEARN_THREADS"


class UsageError(ValueError):
    pass


def default_workers() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be >= 1")
    return n


# -- argument groups ----------------------------------------------------------


def _fit_flags(p: argparse.ArgumentParser, *, needs_input: bool = True) -> None:
    if needs_input:
        p.add_argument("--input", required=True, help="series CSV with header t,value")
    p.add_argument("--s", type=int, default=12, help="seasonal period (1 = none)")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--criterion", choices=("AIC", "BIC", "aic", "bic"), default="AIC")
    p.add_argument("--outliers", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--stabilize", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--terminal-window", type=int, default=None)
    p.add_argument("--exogenous", default=None, help="CSV with header t,x1..xp covering 1..T")
    p.add_argument("--epsilon", type=float, default=0.05)


def _out(p: argparse.ArgumentParser, required: bool = True, help: str = "output file, '-' for stdout") -> None:
    p.add_argument("--output", "-o", required=required, help=help)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sslearn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="estimate the model, write JSON")
    _fit_flags(p)
    _out(p)

    p = sub.add_parser("forecast", help="fit then forecast, write CSV t,yhat")
    _fit_flags(p)
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--future-exogenous", default=None, help="CSV t,x1..xp covering T+1..T+H")
    _out(p)

    p = sub.add_parser("components", help="fit then write per-component CSV")
    _fit_flags(p)
    _out(p)
    p.add_argument("--json", default=None, help="also write the fit JSON here")

    p = sub.add_parser("interpolate", help="fill missing values with the structural fit")
    _fit_flags(p)
    _out(p)

    p = sub.add_parser("simulate", help="exogenous selection Monte Carlo")
    p.add_argument("--relevant", type=int, default=3)
    p.add_argument("--candidates", type=int, default=50)
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--length", type=int, default=144)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--criteria", default="AIC,BIC")
    p.add_argument("--workers", type=int, default=None, help=f"default from {THREADS_ENV}")
    p.add_argument("--output-dir", required=True)

    p = sub.add_parser("evaluate", help="holdout sMAPE/MASE/OWA against Naive2")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="directory of t,value CSVs or a long id,t,value CSV")
    src.add_argument("--bundled", action="store_true", help="use the bundled synthetic monthly panel")
    p.add_argument("--horizon", type=int, default=18)
    p.add_argument("--s", type=int, default=12)
    p.add_argument("--train-window", type=int, default=60, help="0 = whole history")
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--criterion", choices=("AIC", "BIC", "aic", "bic"), default="AIC")
    p.add_argument("--models", default="Naive2,SSL,SSL-O")
    p.add_argument("--workers", type=int, default=None, help=f"default from {THREADS_ENV}")
    p.add_argument("--output-dir", required=True)

    p = sub.add_parser("matrix-dump", help="write the regression design as CSV")
    p.add_argument("--T", type=int, required=True, dest="T")
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--outliers", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--stabilize", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--terminal-window", type=int, default=None)
    p.add_argument("--horizon", type=int, default=0, help="dump forecast rows T+1..T+H instead")
    _out(p)

    p = sub.add_parser("general-fit", help="fit a user-supplied linear state space system")
    p.add_argument("--system", required=True, help="JSON with Z, T, R and optional d, c")
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--criterion", choices=("AIC", "BIC", "aic", "bic"), default="AIC")
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--grouping", choices=("coordinate", "time"), default="coordinate")
    _out(p)
    return parser


# -- helpers -----------------------------------------------------------------


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_csv(path: str, header, columns) -> None:
    write_columns_csv(sys.stdout if path == "-" else path, header, columns)


def _series_and_fit(args):
    values = read_series_csv(args.input)
    series = TimeSeries(values, args.s, label=Path(args.input).stem)
    exog = None
    if args.exogenous:
        exog = read_exogenous_csv(args.exogenous)
        if exog.shape[0] != len(series):
            raise UsageError(f"exogenous file has {exog.shape[0]} rows, series has {len(series)}")
    config = FitConfig(
        alpha=args.alpha,
        criterion=args.criterion,
        epsilon=args.epsilon,
        outliers=args.outliers,
        stabilize_terminal=args.stabilize,
        terminal_window=args.terminal_window,
    )
    return series, exog, fit(series, config, exogenous=exog)


def _validate(args) -> None:
    # cheap checks before any expensive work
    for name in ("horizon", "reps", "candidates", "length", "T"):
        v = getattr(args, name, None)
        if v is not None and v < (0 if name == "horizon" and args.command == "matrix-dump" else 1):
            raise UsageError(f"--{name.lower()} must be positive, got {v}")
    if getattr(args, "s", 1) < 1:
        raise UsageError("--s must be >= 1")
    if hasattr(args, "alpha") and not 0 <= args.alpha <= 1:
        raise UsageError("--alpha must lie in [0, 1]")
    if args.command == "simulate" and not 1 <= args.relevant <= args.candidates:
        raise UsageError("--relevant must lie in [1, --candidates]")
    if args.command == "forecast" and bool(args.exogenous) != bool(args.future_exogenous):
        raise UsageError("--exogenous and --future-exogenous must be given together")
    for name in ("input", "exogenous", "future_exogenous", "system"):
        v = getattr(args, name, None)
        if v and not Path(v).exists():
            raise UsageError(f"no such file: {v}")


# -- commands ----------------------------------------------------------------


def cmd_fit(args) -> None:
    _, _, res = _series_and_fit(args)
    _write_text(args.output, res.to_json(indent=2) + "\n")


def cmd_forecast(args) -> None:
    series, exog, res = _series_and_fit(args)
    fut = None
    if args.future_exogenous:
        fut = read_exogenous_csv(args.future_exogenous, start_t=len(series) + 1)
        if fut.shape[0] != args.horizon:
            raise UsageError(f"future exogenous covers {fut.shape[0]} times, horizon is {args.horizon}")
    yhat = forecast(res, ForecastRequest(args.horizon, fut))
    t = np.arange(len(series) + 1, len(series) + args.horizon + 1)
    _write_csv(args.output, ["t", "yhat"], [t, yhat])


def cmd_components(args) -> None:
    series, _, res = _series_and_fit(args)
    t = np.arange(1, len(series) + 1)
    _write_csv(
        args.output,
        ["t", "y", "mu", "nu", "gamma", "outlier", "exog", "fitted", "residual"],
        [t, series.values, res.mu, res.nu, res.gamma, res.outlier, res.exog, res.fitted, res.residuals],
    )
    if args.json:
        Path(args.json).write_text(res.to_json(indent=2) + "\n", encoding="utf-8")


def cmd_interpolate(args) -> None:
    series, _, res = _series_and_fit(args)
    t = np.arange(1, len(series) + 1)
    structural = interpolate(res, series)
    filled = np.where(series.observed, series.values, structural)
    _write_csv(args.output, ["t", "value", "filled", "structural"], [t, series.values, filled, structural])


def cmd_simulate(args) -> None:
    crit = tuple(c.strip().upper() for c in args.criteria.split(",") if c.strip())
    config = simulation.SimConfig(
        n_relevant=args.relevant,
        n_candidates=args.candidates,
        replications=args.reps,
        length=args.length,
        seed=args.seed,
        criteria=crit,
        alpha=args.alpha,
    )
    workers = args.workers or default_workers()
    stats, reps = simulation.run_experiment(config, workers=workers)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "replications.csv").open("w", encoding="utf-8", newline="") as fh:
        fh.write("replication,criterion,relevant,selected,n_selected,sq_error,bias,error\n")
        for r in sorted(reps, key=lambda r: (r.index, r.criterion)):
            fh.write(
                f"{r.index},{r.criterion},{' '.join(str(i + 1) for i in r.relevant)},"
                f"{' '.join(str(i + 1) for i in r.selected)},{len(r.selected)},"
                f"{fmt(r.sq_error)},{fmt(r.bias)},{r.error.replace(',', ';')}\n"
            )
    agg = {}
    for c, st in stats.items():
        d = st.to_dict()
        d.pop("avg_time", None)
        agg[c] = d
    (out / "summary.json").write_text(json.dumps(agg, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    for c, st in stats.items():
        print(f"{c}: avg fit time {st.avg_time:.3f} s", file=sys.stderr)


def cmd_evaluate(args) -> None:
    panel = evaluation.bundled_panel() if args.bundled else evaluation.read_panel(args.input)
    config = evaluation.EvalConfig(
        horizon=args.horizon,
        period=args.s,
        train_window=args.train_window or None,
        models=tuple(m.strip() for m in args.models.split(",") if m.strip()),
        alpha=args.alpha,
        criterion=args.criterion.upper(),
    )
    report = evaluation.evaluate_panel(panel, config, workers=args.workers or default_workers())
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report.write(out / "per_series.csv", out / "aggregate.json")


def cmd_matrix_dump(args) -> None:
    series = TimeSeries(np.zeros(args.T), args.s)
    design = build_design(
        series,
        outliers=args.outliers,
        stabilize_terminal=args.stabilize,
        terminal_window=args.terminal_window,
    )
    if args.horizon:
        design = build_forecast_rows(design, args.horizon)
    _write_text(args.output, design.to_csv())


def cmd_general_fit(args) -> None:
    y = read_series_csv(args.input)
    system = general.load_system(args.system, y.size)
    res = general.fit_general(
        system, y, alpha=args.alpha, criterion=args.criterion.upper(),
        epsilon=args.epsilon, grouping=args.grouping,
    )
    names = res.regression.names
    doc = {
        "n": int(y.size),
        "lambda_selected": list(res.lambda_selected),
        "initial_state": res.initial_state.tolist(),
        "coefficients": {k: float(v) for k, v in zip(names, res.coef) if v != 0},
        "fitted": res.fitted.tolist(),
    }
    _write_text(args.output, json.dumps(doc, indent=2) + "\n")


COMMANDS = {
    "fit": cmd_fit,
    "forecast": cmd_forecast,
    "components": cmd_components,
    "interpolate": cmd_interpolate,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "matrix-dump": cmd_matrix_dump,
    "general-fit": cmd_general_fit,
}


def _fail(kind: str, exc: Exception, code: int) -> int:
    err = {"error": kind, "message": str(exc)}
    if isinstance(exc, CSVFormatError):
        err.update(file=exc.path, line=exc.line)
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _validate(args)
        COMMANDS[args.command](args)
    except CSVFormatError as exc:
        return _fail("malformed_csv", exc, 2)
    except (UsageError, FileNotFoundError) as exc:
        return _fail("usage", exc, 2)
    except RuntimeError as exc:
        return _fail("numerical", exc, 3)
    except ValueError as exc:
        return _fail("invalid_input", exc, 2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
