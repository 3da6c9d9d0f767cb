"""Linear state space models estimated as weighted elastic-net regressions."""
from .enet import enet_path, information_criterion, kkt_violations, lambda_path, solve_weighted_enet
from .estimator import FitConfig, FitResult, export_gaussian_init, fit, from_coefficients, interpolate
from .evaluation import EvalConfig, EvalRecord, mase, naive2_forecast, owa, smape
from .forecast import ForecastRequest, forecast
from .general import StateSpaceSystem, fit_general, to_regression
from .matrix import ColumnMeta, DesignMatrix, TimeSeries, build_design, build_forecast_rows
from .simulation import SimConfig, run_experiment

__all__ = [
    "ColumnMeta",
    "DesignMatrix",
    "EvalConfig",
    "EvalRecord",
    "FitConfig",
    "FitResult",
    "ForecastRequest",
    "SimConfig",
    "StateSpaceSystem",
    "TimeSeries",
    "build_design",
    "build_forecast_rows",
    "enet_path",
    "export_gaussian_init",
    "fit",
    "fit_general",
    "forecast",
    "from_coefficients",
    "information_criterion",
    "interpolate",
    "kkt_violations",
    "lambda_path",
    "mase",
    "naive2_forecast",
    "owa",
    "run_experiment",
    "smape",
    "solve_weighted_enet",
    "to_regression",
]
