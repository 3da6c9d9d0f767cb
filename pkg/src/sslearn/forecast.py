"""Point forecasts by extrapolating the regressor matrix."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .estimator import FitResult
from .matrix import TimeSeries, build_forecast_rows

__all__ = ["ForecastRequest", "forecast"]


@dataclass(frozen=True)
class ForecastRequest:
    horizon: int
    future_exogenous: np.ndarray | None = None

    def __post_init__(self):
        if int(self.horizon) < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")


def forecast(
    result: FitResult, request: ForecastRequest | int, series: TimeSeries | None = None
) -> np.ndarray:
    """H-step-ahead point forecasts for times T+1..T+H.

    Unseen innovations and the observation noise are set to their zero mean,
    and outlier dummies vanish out of sample.
    """
    if not isinstance(request, ForecastRequest):
        request = ForecastRequest(int(request))
    if series is not None and len(series) != result.design.n_obs:
        raise ValueError("series does not match the fitted design")
    rows = build_forecast_rows(result.design, int(request.horizon), request.future_exogenous)
    return rows.values @ result.coef
