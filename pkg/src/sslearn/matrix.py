"""Regression matrix for the unrolled basic structural model.

Every regressor is a deterministic function of time: steps for level
innovations, ramps for slope innovations, seasonal dummies for the initial
seasonal states and signed +-1 patterns for seasonal innovations. Times are
1-based throughout, as in the model equations.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "KINDS",
    "TimeSeries",
    "ColumnMeta",
    "DesignMatrix",
    "seasonal_index",
    "seasonal_support",
    "build_design",
    "build_forecast_rows",
]

KINDS = ("mu1", "xi", "nu1", "zeta", "gamma_init", "omega", "outlier", "exogenous")

_NAME_PREFIX = {
    "xi": "xi",
    "zeta": "zeta",
    "gamma_init": "gamma",
    "omega": "omega",
    "outlier": "o",
    "exogenous": "beta",
}


@dataclass(frozen=True)
class TimeSeries:
    """Observed series with NaN marking missing entries."""

    values: np.ndarray
    period: int = 1
    label: str = ""

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).ravel()
        if values.size < 1:
            raise ValueError("series must contain at least one value")
        if int(self.period) < 1:
            raise ValueError(f"period must be >= 1, got {self.period}")
        if np.isinf(values).any():
            raise ValueError("series contains infinite values")
        if np.isnan(values).all():
            raise ValueError("series has no observed values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "period", int(self.period))

    def __len__(self) -> int:
        return self.values.size

    @property
    def observed(self) -> np.ndarray:
        """Boolean mask of non-missing positions."""
        return ~np.isnan(self.values)

    @property
    def observed_times(self) -> np.ndarray:
        """1-based times of the observed entries."""
        return np.flatnonzero(self.observed) + 1


@dataclass(frozen=True)
class ColumnMeta:
    kind: str
    index: int = 0
    constrained_to_zero: bool = False

    @property
    def name(self) -> str:
        if self.kind in ("mu1", "nu1"):
            return self.kind
        return f"{_NAME_PREFIX[self.kind]}_{self.index}"


@dataclass(frozen=True)
class DesignMatrix:
    """Dense regressor matrix plus per-column metadata.

    ``n_obs`` and ``period`` describe the in-sample series the columns were
    built for; ``row_times`` are the times of the rows actually held.
    """

    values: np.ndarray
    columns: tuple[ColumnMeta, ...]
    row_times: np.ndarray
    n_obs: int
    period: int
    n_exogenous: int = 0

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def kinds(self) -> np.ndarray:
        return np.array([c.kind for c in self.columns])

    @property
    def constrained(self) -> np.ndarray:
        return np.array([c.constrained_to_zero for c in self.columns], dtype=bool)

    def mask(self, *kinds: str) -> np.ndarray:
        return np.isin(self.kinds, kinds)

    def column_index(self, name: str) -> int:
        return self.names.index(name)

    def to_csv(self) -> str:
        """Row-major CSV with a ``t`` column and one header per column name."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", *self.names])
        for t, row in zip(self.row_times, self.values):
            writer.writerow([int(t), *(f"{v:.17g}" for v in row)])
        return buf.getvalue()


def seasonal_index(t: int, s: int) -> int:
    """First in-sample time sharing the season of ``t``: ``t - s*floor((t-1)/s)``."""
    if t < 1 or s < 1:
        raise ValueError(f"need t >= 1 and s >= 1, got t={t}, s={s}")
    return t - s * ((t - 1) // s)


def seasonal_support(t: int, s: int) -> list[int]:
    """Same-season times after the first occurrence, up to and including ``t``.

    >>> seasonal_support(7, 2)
    [3, 5, 7]
    """
    if t < 1 or s < 1:
        raise ValueError(f"need t >= 1 and s >= 1, got t={t}, s={s}")
    m = seasonal_index(t, s)
    return list(range(m + s, t + 1, s))


def _structural_columns(n_obs: int, s: int) -> list[ColumnMeta]:
    cols = [ColumnMeta("mu1", 1)]
    cols += [ColumnMeta("xi", tau) for tau in range(2, n_obs + 1)]
    cols.append(ColumnMeta("nu1", 1))
    # zeta_T never reaches an in-sample observation, so the block stops at T-1
    cols += [ColumnMeta("zeta", tau) for tau in range(2, n_obs)]
    if s > 1:
        cols += [ColumnMeta("gamma_init", k) for k in range(1, s + 1)]
        cols += [ColumnMeta("omega", tau) for tau in range(s, n_obs + 1)]
    return cols


def _structural_rows(times: np.ndarray, cols: Sequence[ColumnMeta], n_obs: int, s: int) -> np.ndarray:
    """Evaluate the structural regressors at ``times``.

    Innovation indices above ``n_obs`` have no column and are dropped, which
    for future rows amounts to setting unseen innovations to their zero mean.
    """
    pos = {(c.kind, c.index): j for j, c in enumerate(cols)}
    out = np.zeros((len(times), len(cols)))
    for i, t in enumerate(times):
        t = int(t)
        out[i, pos["mu1", 1]] = 1.0
        out[i, pos["nu1", 1]] = t - 1.0
        for tau in range(2, min(t, n_obs) + 1):
            out[i, pos["xi", tau]] = 1.0
        for tau in range(2, min(t - 1, n_obs - 1) + 1):
            out[i, pos["zeta", tau]] = float(t - tau)
        if s > 1:
            out[i, pos["gamma_init", seasonal_index(t, s)]] += 1.0
            for tau in seasonal_support(t, s):
                for j, sign in ((tau, 1.0), (tau - 1, -1.0)):
                    key = ("omega", j)
                    if key in pos:
                        out[i, pos[key]] += sign
    return out


def _constrained(kind: str, index: int, n_obs: int, window: int) -> bool:
    if kind == "xi":
        return index == n_obs
    if kind == "zeta":
        return index == n_obs - 1 or index > n_obs - window
    if kind == "omega":
        return index == n_obs or index > n_obs - window
    return False


def build_design(
    series: TimeSeries,
    *,
    outliers: bool = False,
    exogenous: np.ndarray | None = None,
    stabilize_terminal: bool = False,
    terminal_window: int | None = None,
) -> DesignMatrix:
    """Build the in-sample regressor matrix, one row per time 1..T.

    Columns are ordered (mu1, xi_2..xi_T, nu1, zeta_2..zeta_{T-1},
    gamma_1..gamma_s, omega_s..omega_T, o_1..o_T, beta_1..beta_p).

    With ``stabilize_terminal`` the columns xi_T, zeta_{T-1}, omega_T and every
    zeta/omega with index in (T - terminal_window, T] are flagged as
    constrained to zero. ``terminal_window`` defaults to the period.
    """
    n_obs, s = len(series), series.period
    if n_obs < 2:
        raise ValueError(f"need at least 2 time points, got {n_obs}")
    if exogenous is not None:
        exogenous = np.asarray(exogenous, dtype=float)
        if exogenous.ndim == 1:
            exogenous = exogenous[:, None]
        if exogenous.shape[0] != n_obs:
            raise ValueError(
                f"exogenous has {exogenous.shape[0]} rows but the series has {n_obs}"
            )
        if not np.isfinite(exogenous).all():
            raise ValueError("exogenous matrix contains non-finite values")
    window = s if terminal_window is None else int(terminal_window)
    if window < 0:
        raise ValueError("terminal_window must be >= 0")

    cols = _structural_columns(n_obs, s)
    times = np.arange(1, n_obs + 1)
    blocks = [_structural_rows(times, cols, n_obs, s)]
    if outliers:
        cols += [ColumnMeta("outlier", t) for t in times]
        blocks.append(np.eye(n_obs))
    n_exog = 0
    if exogenous is not None:
        n_exog = exogenous.shape[1]
        cols += [ColumnMeta("exogenous", k) for k in range(1, n_exog + 1)]
        blocks.append(exogenous)

    if stabilize_terminal:
        cols = [
            ColumnMeta(c.kind, c.index, _constrained(c.kind, c.index, n_obs, window))
            for c in cols
        ]
    return DesignMatrix(
        values=np.hstack(blocks),
        columns=tuple(cols),
        row_times=times,
        n_obs=n_obs,
        period=s,
        n_exogenous=n_exog,
    )


def build_forecast_rows(
    design: DesignMatrix, horizon: int, future_exogenous: np.ndarray | None = None
) -> DesignMatrix:
    """Rows for times T+1..T+H over the same columns as ``design``.

    Outlier dummies are zero out of sample; exogenous columns take
    ``future_exogenous`` (H rows), which is required iff the design has them.
    """
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    n_obs, s = design.n_obs, design.period
    if design.n_exogenous:
        if future_exogenous is None:
            raise ValueError("design has exogenous columns; future_exogenous is required")
        future_exogenous = np.asarray(future_exogenous, dtype=float)
        if future_exogenous.ndim == 1:
            future_exogenous = future_exogenous[:, None]
        if future_exogenous.shape != (horizon, design.n_exogenous):
            raise ValueError(
                f"future_exogenous must have shape {(horizon, design.n_exogenous)}, "
                f"got {future_exogenous.shape}"
            )
    elif future_exogenous is not None:
        raise ValueError("design has no exogenous columns but future_exogenous was given")

    times = np.arange(n_obs + 1, n_obs + horizon + 1)
    structural = [c for c in design.columns if c.kind not in ("outlier", "exogenous")]
    rows = np.zeros((horizon, len(design.columns)))
    rows[:, : len(structural)] = _structural_rows(times, structural, n_obs, s)
    if design.n_exogenous:
        rows[:, -design.n_exogenous :] = future_exogenous
    rows[:, design.constrained] = 0.0
    return DesignMatrix(
        values=rows,
        columns=design.columns,
        row_times=times,
        n_obs=n_obs,
        period=s,
        n_exogenous=design.n_exogenous,
    )
