"""Forecast accuracy metrics, the Naive2 benchmark and a batch harness."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

__all__ = [
    "EvalRecord",
    "EvalConfig",
    "EvalReport",
    "smape",
    "mase",
    "acf",
    "seasonality_test",
    "seasonal_indices",
    "naive2_forecast",
    "owa",
    "read_panel",
    "write_panel",
    "synthetic_panel",
    "bundled_panel",
    "evaluate_series",
    "evaluate_panel",
]


@dataclass(frozen=True)
class EvalRecord:
    series_id: str
    model: str
    horizon: int
    smape: float
    mase: float

    def __post_init__(self):
        if not 0.0 <= self.smape <= 200.0 + 1e-9:
            raise ValueError(f"smape out of [0, 200]: {self.smape}")
        if not self.mase >= 0.0:
            raise ValueError(f"mase must be non-negative, got {self.mase}")


def _pair(actual, forecast):
    a = np.asarray(actual, dtype=float).ravel()
    f = np.asarray(forecast, dtype=float).ravel()
    if a.size != f.size:
        raise ValueError(f"length mismatch: {a.size} actual vs {f.size} forecast")
    if a.size == 0:
        raise ValueError("empty horizon")
    return a, f


def smape(actual, forecast) -> float:
    """Symmetric MAPE in percent; terms with |y| + |yhat| = 0 count as 0."""
    a, f = _pair(actual, forecast)
    den = np.abs(a) + np.abs(f)
    num = np.abs(a - f)
    terms = np.divide(num, den, out=np.zeros_like(num), where=den > 0)
    return float(200.0 * terms.mean())


def mase(train, actual, forecast, s: int) -> float:
    """Mean absolute error scaled by the in-sample seasonal naive error."""
    a, f = _pair(actual, forecast)
    y = np.asarray(train, dtype=float).ravel()
    s = int(s)
    if s < 1 or y.size <= s:
        raise ValueError(f"need more than s={s} training points, got {y.size}")
    scale = np.mean(np.abs(y[s:] - y[:-s]))
    if not scale > 0:
        raise ValueError("in-sample seasonal naive error is zero, MASE undefined")
    return float(np.mean(np.abs(a - f)) / scale)


def acf(x, k: int) -> float:
    x = np.asarray(x, dtype=float)
    d = x - x.mean()
    den = d @ d
    if den == 0:
        return 0.0
    return float(d[: x.size - k] @ d[k:] / den)


def seasonality_test(x, s: int) -> bool:
    """90% two-sided test of the lag-s autocorrelation (Bartlett bound)."""
    x = np.asarray(x, dtype=float)
    acc = sum(acf(x, i) ** 2 for i in range(1, s))
    limit = 1.645 * np.sqrt((1.0 + 2.0 * acc) / x.size)
    return abs(acf(x, s)) > limit


def seasonal_indices(x, s: int) -> np.ndarray:
    """Multiplicative classical decomposition; returns one index per time.

    Trend is the centered moving average (2 x s for even s), ratios are
    averaged by season and normalized to mean one.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if s % 2 == 0:
        kernel = np.r_[0.5, np.ones(s - 1), 0.5] / s
    else:
        kernel = np.ones(s) / s
    half = kernel.size // 2
    trend = np.full(n, np.nan)
    trend[half : n - half] = np.convolve(x, kernel, mode="valid")
    ratio = x / trend
    season = np.array([np.nanmean(ratio[i::s]) for i in range(s)])
    season /= season.mean()
    return season[np.arange(n) % s]


def naive2_forecast(train, s: int, horizon: int) -> np.ndarray:
    """Seasonally adjusted naive forecast.

    The seasonal adjustment applies only when s > 1, at least 3s points are
    available, all values are positive and the lag-s autocorrelation is
    significant; otherwise the last value is repeated.
    """
    y = np.asarray(train, dtype=float).ravel()
    if y.size == 0:
        raise ValueError("empty training series")
    h = int(horizon)
    if h < 1:
        raise ValueError("horizon must be >= 1")
    n = y.size
    if s > 1 and n >= 3 * s and (y > 0).all() and seasonality_test(y, s):
        idx = seasonal_indices(y, s)
        per_season = idx[:s]
        out = per_season[(n + np.arange(h)) % s]
        return np.full(h, y[-1] / idx[-1]) * out
    return np.full(h, y[-1])


def owa(records_model, records_naive2) -> float:
    """Overall weighted average of mean sMAPE and mean MASE relative to Naive2."""
    rm, rn = list(records_model), list(records_naive2)
    if not rm or not rn:
        raise ValueError("empty record set")
    ids_m = sorted(r.series_id for r in rm)
    ids_n = sorted(r.series_id for r in rn)
    if ids_m != ids_n:
        raise ValueError("model and Naive2 records cover different series")
    sm_n = np.mean([r.smape for r in rn])
    ma_n = np.mean([r.mase for r in rn])
    if sm_n == 0 or ma_n == 0:
        raise ValueError("Naive2 aggregate is zero, OWA undefined")
    sm_m = np.mean([r.smape for r in rm])
    ma_m = np.mean([r.mase for r in rm])
    return float(0.5 * (sm_m / sm_n + ma_m / ma_n))


# -- panels -----------------------------------------------------------------


def read_panel(path) -> dict[str, np.ndarray]:
    """Read a long CSV (id, t, value) or a directory of ``t,value`` files."""
    from .io import read_series_csv

    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
        if not files:
            raise ValueError(f"no CSV files in {path}")
        return {f.stem: read_series_csv(f) for f in files}
    out: dict[str, list[tuple[int, float]]] = {}
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["id", "t", "value"]:
            raise ValueError(f"{path}:1: expected header 'id,t,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                t = int(row[1])
                v = float(row[2]) if row[2].strip() else np.nan
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
            out.setdefault(row[0], []).append((t, v))
    panel = {}
    for sid, pairs in out.items():
        pairs.sort()
        ts = [p[0] for p in pairs]
        if ts != list(range(1, len(ts) + 1)):
            raise ValueError(f"{path}: series {sid!r} times are not 1..T contiguous")
        panel[sid] = np.array([p[1] for p in pairs])
    return panel


def write_panel(panel: dict[str, np.ndarray], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "t", "value"])
        for sid, y in panel.items():
            for t, v in enumerate(y, start=1):
                w.writerow([sid, t, "" if np.isnan(v) else repr(float(v))])


def synthetic_panel(
    n_series: int = 20, length: int = 96, period: int = 12, horizon: int = 18, seed: int = 2024
):
    """Monthly series with level shifts, slope changes and additive spikes.

    Each series has a positive level, a seasonal wave, one level shift and
    one slope change, and three spikes of 6 to 10 noise standard deviations
    placed in the last 60 training points (one of them within the final six
    training points). The last ``horizon`` points are clean.
    """
    rng = np.random.default_rng(seed)
    panel = {}
    t = np.arange(length)
    end = length - horizon  # first holdout position
    for i in range(n_series):
        level = rng.uniform(80, 150)
        slope = rng.uniform(-0.2, 0.4)
        amp = rng.uniform(0.05, 0.15) * level
        phase = rng.uniform(0, 2 * np.pi)
        sigma = rng.uniform(0.01, 0.03) * level
        y = level + slope * t + amp * np.sin(2 * np.pi * t / period + phase)
        b1 = rng.integers(end - 48, end - 12)
        y[b1:] += rng.choice([-1, 1]) * rng.uniform(5, 10) * sigma
        b2 = rng.integers(end - 48, end - 12)
        y[b2:] += rng.uniform(-1.0, 1.0) * (t[b2:] - b2) * sigma / 4
        y += rng.normal(0, sigma, length)
        early = rng.choice(np.arange(end - 60, end - 6), size=2, replace=False)
        late = rng.integers(end - 6, end)
        spikes = np.r_[early, late]
        y[spikes] += rng.choice([-1, 1], size=3) * rng.uniform(6, 10, size=3) * sigma
        panel[f"S{i + 1:02d}"] = y
    return panel


def bundled_panel() -> dict[str, np.ndarray]:
    """The 20-series synthetic monthly panel shipped with the package."""
    ref = resources.files("sslearn") / "data" / "synthetic_monthly.csv"
    with resources.as_file(ref) as p:
        return read_panel(p)


# -- harness ----------------------------------------------------------------


@dataclass(frozen=True)
class EvalConfig:
    """Holdout evaluation settings.

    ``train_window`` limits the points handed to the SSL models; the MASE
    scale and Naive2 use the same window.
    """

    horizon: int = 18
    period: int = 12
    train_window: int | None = 60
    models: tuple[str, ...] = ("Naive2", "SSL", "SSL-O")
    alpha: float = 0.1
    criterion: str = "AIC"

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        unknown = set(self.models) - {"Naive2", "SSL", "SSL-O"}
        if unknown:
            raise ValueError(f"unknown models {sorted(unknown)}")
        if "Naive2" not in self.models:
            raise ValueError("Naive2 is required as the OWA reference")


def _model_forecast(model, train, config: EvalConfig):
    if model == "Naive2":
        return naive2_forecast(train, config.period, config.horizon)
    from .estimator import FitConfig, fit
    from .forecast import forecast
    from .matrix import TimeSeries

    cfg = FitConfig(alpha=config.alpha, criterion=config.criterion, outliers=model == "SSL-O")
    res = fit(TimeSeries(train, config.period), cfg)
    return forecast(res, config.horizon)


def evaluate_series(series_id: str, y, config: EvalConfig):
    """Hold out the last ``horizon`` points and score every model."""
    y = np.asarray(y, dtype=float)
    if np.isnan(y[-config.horizon :]).any():
        raise ValueError(f"series {series_id}: missing values in the holdout")
    train, test = y[: -config.horizon], y[-config.horizon :]
    if config.train_window is not None:
        train = train[-config.train_window :]
    seen = train[~np.isnan(train)]
    out = []
    for model in config.models:
        f = _model_forecast(model, train if model != "Naive2" else seen, config)
        out.append(
            EvalRecord(
                series_id=series_id,
                model=model,
                horizon=config.horizon,
                smape=smape(test, f),
                mase=mase(seen, test, f, config.period),
            )
        )
    return out


def _evaluate_item(args):
    return evaluate_series(*args)


@dataclass
class EvalReport:
    records: list[EvalRecord]
    aggregate: dict[str, dict[str, float]] = field(default_factory=dict)

    def write(self, per_series_csv, aggregate_json) -> None:
        with Path(per_series_csv).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["series_id", "model", "horizon", "smape", "mase"])
            for r in self.records:
                w.writerow([r.series_id, r.model, r.horizon, repr(r.smape), repr(r.mase)])
        Path(aggregate_json).write_text(json.dumps(self.aggregate, indent=2, sort_keys=True) + "\n")


def evaluate_panel(panel: dict[str, np.ndarray], config: EvalConfig | None = None, workers: int = 1) -> EvalReport:
    """Score every model on every series; aggregate means and OWA per model."""
    config = config or EvalConfig()
    items = [(sid, y, config) for sid, y in panel.items()]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            chunks = list(ex.map(_evaluate_item, items))
    else:
        chunks = [_evaluate_item(it) for it in items]
    records = [r for chunk in chunks for r in chunk]
    naive = [r for r in records if r.model == "Naive2"]
    agg = {}
    for model in config.models:
        rs = [r for r in records if r.model == model]
        agg[model] = {
            "sMAPE": float(np.mean([r.smape for r in rs])),
            "MASE": float(np.mean([r.mase for r in rs])),
            "OWA": owa(rs, naive),
        }
    return EvalReport(records=records, aggregate=agg)

