"""Two-step adaptive estimation of the state space learning regression."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .enet import PathResult, enet_path
from .matrix import DesignMatrix, TimeSeries, build_design

__all__ = [
    "FitConfig",
    "StepTrace",
    "FitResult",
    "fit",
    "from_coefficients",
    "interpolate",
    "export_gaussian_init",
]

_INITIAL_STATES = ("mu1", "nu1", "gamma_init")
_INNOVATIONS = ("xi", "zeta", "omega")


@dataclass(frozen=True)
class FitConfig:
    """Estimation settings.

    ``fixed_lambda`` skips the path search and solves both steps at that value.
    ``terminal_window`` of None means one seasonal period.
    """

    alpha: float = 0.1
    criterion: str = "AIC"
    epsilon: float = 0.05
    outliers: bool = True
    stabilize_terminal: bool = True
    terminal_window: int | None = None
    path_count: int = 100
    path_min_ratio: float = 1e-4
    fixed_lambda: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.criterion.upper() not in ("AIC", "BIC"):
            raise ValueError(f"criterion must be AIC or BIC, got {self.criterion!r}")
        object.__setattr__(self, "criterion", self.criterion.upper())
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.terminal_window is not None and self.terminal_window < 0:
            raise ValueError("terminal_window must be >= 0")
        if self.fixed_lambda is not None and not self.fixed_lambda > 0:
            raise ValueError("fixed_lambda must be positive")


@dataclass(frozen=True)
class StepTrace:
    lambdas: np.ndarray
    ic: np.ndarray
    selected: int

    @property
    def lambda_selected(self) -> float:
        return float(self.lambdas[self.selected])


@dataclass(frozen=True)
class FitResult:
    """Estimated coefficients and reconstructed components.

    ``coef`` is aligned with ``design.columns``; constrained columns hold
    exact zeros. Component arrays have length T; ``residuals`` is NaN at
    missing times.
    """

    series: TimeSeries
    design: DesignMatrix
    config: FitConfig
    coef: np.ndarray
    steps: tuple[StepTrace, ...]
    mu: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    outlier: np.ndarray
    exog: np.ndarray
    residuals: np.ndarray

    def _block(self, *kinds):
        return self.coef[self.design.mask(*kinds)]

    @property
    def mu1(self) -> float:
        return float(self._block("mu1")[0])

    @property
    def nu1(self) -> float:
        return float(self._block("nu1")[0])

    @property
    def gamma_init(self) -> np.ndarray:
        return self._block("gamma_init")

    @property
    def xi(self) -> np.ndarray:
        return self._block("xi")

    @property
    def zeta(self) -> np.ndarray:
        return self._block("zeta")

    @property
    def omega(self) -> np.ndarray:
        return self._block("omega")

    @property
    def outlier_coef(self) -> np.ndarray:
        return self._block("outlier")

    @property
    def beta(self) -> np.ndarray:
        return self._block("exogenous")

    @property
    def theta0(self) -> np.ndarray:
        """Initial states (mu1, nu1, gamma_1..gamma_s)."""
        return np.concatenate([[self.mu1, self.nu1], self.gamma_init])

    @property
    def lambda_selected(self) -> tuple[float, ...]:
        return tuple(s.lambda_selected for s in self.steps)

    @property
    def fitted(self) -> np.ndarray:
        return self.mu + self.gamma + self.outlier + self.exog

    def coefficients(self, nonzero_only: bool = False) -> dict[str, float]:
        return {
            name: float(v)
            for name, v in zip(self.design.names, self.coef)
            if v != 0 or not nonzero_only
        }

    def to_dict(self) -> dict:
        innov = [
            name for name, c, v in zip(self.design.names, self.design.columns, self.coef)
            if c.kind in _INNOVATIONS and v != 0
        ]
        return {
            "label": self.series.label,
            "T": len(self.series),
            "period": self.series.period,
            "alpha": self.config.alpha,
            "criterion": self.config.criterion,
            "lambda_selected": list(self.lambda_selected),
            "mu1": self.mu1,
            "nu1": self.nu1,
            "gamma_init": self.gamma_init.tolist(),
            "nonzero_innovations": innov,
            "coefficients": self.coefficients(nonzero_only=True),
            "components": {
                "mu": self.mu.tolist(),
                "nu": self.nu.tolist(),
                "gamma": self.gamma.tolist(),
                "outlier": self.outlier.tolist(),
                "exog": self.exog.tolist(),
                "fitted": self.fitted.tolist(),
                "residual": [None if np.isnan(r) else float(r) for r in self.residuals],
            },
            "ic_trace": [
                {"lambdas": s.lambdas.tolist(), "ic": s.ic.tolist(), "selected": s.selected}
                for s in self.steps
            ],
            "gaussian_init": export_gaussian_init(self),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _select(path: PathResult, criterion: str) -> StepTrace:
    ic = path.ic(criterion)
    return StepTrace(lambdas=path.lambdas, ic=ic, selected=int(np.argmin(ic)))


def _solve_step(X, y, weights, config: FitConfig) -> tuple[np.ndarray, StepTrace]:
    if not (weights > 0).any():
        # nothing to penalize: ordinary least squares on the active columns
        theta = np.linalg.lstsq(X, y, rcond=None)[0]
        r = y - X @ theta
        return theta, StepTrace(np.array([np.nan]), np.array([float(r @ r)]), 0)
    lambdas = None if config.fixed_lambda is None else [config.fixed_lambda]
    path = enet_path(
        X, y,
        alpha=config.alpha,
        weights=weights,
        lambdas=lambdas,
        count=config.path_count,
        min_ratio=config.path_min_ratio,
    )
    trace = _select(path, config.criterion)
    return path.coefs[trace.selected], trace


def adaptive_weights(design: DesignMatrix, coef: np.ndarray, epsilon: float) -> np.ndarray:
    """Second-step penalty weights from first-step coefficients (all columns).

    Innovation groups share ``1/(eps + ||group||_2)``; nu1, each gamma_i, each
    beta_i and each outlier get ``1/(eps + |coef|)``; mu1 stays unpenalized.
    """
    kinds = design.kinds
    w = np.zeros(coef.size)
    with np.errstate(divide="ignore"):
        for kind in _INNOVATIONS:
            m = kinds == kind
            if m.any():
                w[m] = 1.0 / (epsilon + np.linalg.norm(coef[m]))
        m = np.isin(kinds, ("nu1", "gamma_init", "exogenous", "outlier"))
        w[m] = 1.0 / (epsilon + np.abs(coef[m]))
    if not np.isfinite(w).all():
        raise ValueError("epsilon = 0 with a zero first-step coefficient gives an infinite weight")
    return w


def fit(series: TimeSeries, config: FitConfig | None = None, exogenous=None) -> FitResult:
    """Estimate the model by the two-step adaptive elastic net.

    Step 1 leaves the initial states unpenalized and penalizes everything else
    with unit weight; step 2 reweights by the step-1 magnitudes. Each step
    picks lambda by the configured information criterion. Missing times
    contribute no rows.
    """
    config = config or FitConfig()
    s = series.period
    n_seen = int(series.observed.sum())
    needed = s + 3
    if n_seen < needed:
        raise ValueError(
            f"too few observations: {n_seen} observed, at least {needed} needed for period {s}"
        )
    design = build_design(
        series,
        outliers=config.outliers,
        exogenous=exogenous,
        stabilize_terminal=config.stabilize_terminal,
        terminal_window=config.terminal_window,
    )
    rows = series.observed
    X_obs = design.values[rows]
    y = series.values[rows]
    # constrained columns and columns with no observed support never enter the solve
    active = ~design.constrained & (np.abs(X_obs).sum(axis=0) > 0)
    X = X_obs[:, active]
    kinds = design.kinds[active]

    w1 = np.where(np.isin(kinds, _INITIAL_STATES), 0.0, 1.0)
    theta1, trace1 = _solve_step(X, y, w1, config)

    full1 = np.zeros(design.shape[1])
    full1[active] = theta1
    w2 = adaptive_weights(design, full1, config.epsilon)[active]
    theta2, trace2 = _solve_step(X, y, w2, config)

    coef = np.zeros(design.shape[1])
    coef[active] = theta2
    return _assemble(series, design, config, coef, (trace1, trace2))


def from_coefficients(
    series: TimeSeries, design: DesignMatrix, coef, config: FitConfig | None = None, steps=()
) -> FitResult:
    """Build a result (components, residuals) from a given coefficient vector.

    Useful for forecasting or inspecting hand-set or externally estimated
    coefficients. ``coef`` is aligned with ``design.columns``.
    """
    coef = np.array(coef, dtype=float)
    if coef.shape != (design.shape[1],):
        raise ValueError(f"need {design.shape[1]} coefficients, got shape {coef.shape}")
    if design.n_obs != len(series):
        raise ValueError("design and series lengths differ")
    return _assemble(series, design, config or FitConfig(), coef, steps)


def _assemble(series, design, config, coef, steps) -> FitResult:
    Xv = design.values
    level = design.mask("mu1", "xi", "nu1", "zeta")
    seas = design.mask("gamma_init", "omega")
    mu = Xv[:, level] @ coef[level]
    gamma = Xv[:, seas] @ coef[seas]
    outlier = Xv[:, design.mask("outlier")] @ coef[design.mask("outlier")]
    exog = Xv[:, design.mask("exogenous")] @ coef[design.mask("exogenous")]
    zeta = np.zeros(len(series) + 1)  # zeta_t at position t; zeta_1 and zeta_T are 0
    for c, v in zip(design.columns, coef):
        if c.kind == "zeta":
            zeta[c.index] = v
    nu = coef[design.mask("nu1")][0] + np.cumsum(zeta[1:])
    residuals = series.values - (mu + gamma + outlier + exog)
    for arr in (coef, mu, nu, gamma, outlier, exog, residuals):
        arr.setflags(write=False)
    return FitResult(
        series=series,
        design=design,
        config=config,
        coef=coef,
        steps=tuple(steps),
        mu=mu,
        nu=nu,
        gamma=gamma,
        outlier=outlier,
        exog=exog,
        residuals=residuals,
    )


def interpolate(result: FitResult, series: TimeSeries | None = None) -> np.ndarray:
    """Structural fit ``mu_t + gamma_t + X_t beta`` at every time.

    Outlier pulses and residuals are excluded, so at missing times this is the
    fill-in value and at observed times the cleaned signal.
    """
    if series is not None and len(series) != result.mu.size:
        raise ValueError(
            f"series has length {len(series)} but the fit has {result.mu.size} components"
        )
    return result.mu + result.gamma + result.exog


def export_gaussian_init(result: FitResult) -> dict:
    """Starting values for a Gaussian structural model.

    Variances are squared l2 norms of the estimated innovation and residual
    vectors. ``selected_exogenous`` lists 1-based feature indices with a
    nonzero coefficient; ``missing_mask_outliers`` lists 1-based times whose
    outlier coefficient is nonzero (to be treated as missing).
    """
    resid = result.residuals[~np.isnan(result.residuals)]
    o_cols = [c for c in result.design.columns if c.kind == "outlier"]
    b_cols = [c for c in result.design.columns if c.kind == "exogenous"]
    return {
        "sigma2_xi": float(np.sum(result.xi**2)),
        "sigma2_zeta": float(np.sum(result.zeta**2)),
        "sigma2_omega": float(np.sum(result.omega**2)),
        "sigma2_eps": float(np.sum(resid**2)),
        "selected_exogenous": [int(c.index) for c, b in zip(b_cols, result.beta) if b != 0],
        "missing_mask_outliers": [int(c.index) for c, o in zip(o_cols, result.outlier_coef) if o != 0],
    }
