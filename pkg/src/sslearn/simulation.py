"""Monte Carlo subset-selection experiment.

The target is a basic structural model plus a few relevant exogenous series
hidden among SARIMA(p,0,q)(P,0,Q)_12 candidates. Each replication owns a
PCG64 stream seeded from ``SeedSequence([seed, replication])``, so results
are reproducible for a given seed regardless of how replications are
scheduled.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import signal

from .estimator import FitConfig, fit
from .matrix import TimeSeries

__all__ = [
    "BSMParams",
    "SimConfig",
    "SarimaCoefficients",
    "Replication",
    "SelectionStats",
    "generate_bsm",
    "polynomial_roots_ok",
    "draw_sarima",
    "simulate_sarima",
    "generate_sarima_candidate",
    "run_replication",
    "run_experiment",
    "summarize",
]

GAMMA0 = (1.5, 2.6, 3.0, 2.6, 1.5, 0.0, -1.5, -2.6, -3.0, -2.6, -1.5)


@dataclass(frozen=True)
class BSMParams:
    mu0: float = 1.0
    nu0: float = 0.001
    gamma0: tuple[float, ...] = GAMMA0
    sigma_xi: float = 0.5
    sigma_zeta: float = 0.001
    sigma_omega: float = 0.3
    sigma_eps: float = 0.2

    @property
    def period(self) -> int:
        return len(self.gamma0) + 1


@dataclass(frozen=True)
class BSMDraw:
    """Simulated series with the draws that produced it.

    ``xi``, ``zeta``, ``omega`` are indexed by time (position t-1); entries
    before a component's first innovation are 0.
    """

    y: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    gamma: np.ndarray
    eps: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray
    omega: np.ndarray
    period: int


def generate_bsm(params: BSMParams, n: int, rng: np.random.Generator | int) -> BSMDraw:
    """Simulate level, slope, dummy seasonal and noise for times 1..n.

    mu_1 = mu0, nu_1 = nu0, gamma_1..gamma_{s-1} = gamma0, and for t >= s
    gamma_t = -(gamma_{t-1} + ... + gamma_{t-s+1}) + omega_t.
    """
    rng = np.random.default_rng(rng)
    s = params.period
    if n < 2 * s:
        raise ValueError(f"need n >= 2s = {2 * s}, got {n}")
    if min(params.sigma_xi, params.sigma_zeta, params.sigma_omega, params.sigma_eps) < 0:
        raise ValueError("standard deviations must be non-negative")
    xi = np.zeros(n)
    zeta = np.zeros(n)
    omega = np.zeros(n)
    xi[1:] = rng.normal(0.0, params.sigma_xi, n - 1)
    zeta[1:] = rng.normal(0.0, params.sigma_zeta, n - 1)
    omega[s - 1 :] = rng.normal(0.0, params.sigma_omega, n - s + 1)
    eps = rng.normal(0.0, params.sigma_eps, n)

    mu = np.empty(n)
    nu = np.empty(n)
    gamma = np.empty(n)
    mu[0], nu[0] = params.mu0, params.nu0
    for t in range(1, n):
        nu[t] = nu[t - 1] + zeta[t]
        mu[t] = mu[t - 1] + nu[t - 1] + xi[t]
    gamma[: s - 1] = params.gamma0
    for t in range(s - 1, n):
        gamma[t] = -gamma[t - s + 1 : t].sum() + omega[t]
    return BSMDraw(mu + gamma + eps, mu, nu, gamma, eps, xi, zeta, omega, s)


@dataclass(frozen=True)
class SarimaCoefficients:
    """Coefficients in the sign convention
    (1 - sum ar_i L^i)(1 - sar L^s) x_t = (1 + sum ma_i L^i)(1 + sma L^s) e_t.
    """

    ar: tuple[float, ...] = ()
    ma: tuple[float, ...] = ()
    sar: tuple[float, ...] = ()
    sma: tuple[float, ...] = ()
    period: int = 12

    def polynomials(self) -> tuple[np.ndarray, np.ndarray]:
        """Lag polynomials (ascending powers) of the AR and MA sides."""
        s = self.period
        ar = np.r_[1.0, -np.asarray(self.ar, dtype=float)]
        sar = np.zeros(s * len(self.sar) + 1)
        sar[0] = 1.0
        sar[s::s] = -np.asarray(self.sar, dtype=float)
        ma = np.r_[1.0, np.asarray(self.ma, dtype=float)]
        sma = np.zeros(s * len(self.sma) + 1)
        sma[0] = 1.0
        sma[s::s] = np.asarray(self.sma, dtype=float)
        return np.polymul(ar[::-1], sar[::-1])[::-1], np.polymul(ma[::-1], sma[::-1])[::-1]


def polynomial_roots_ok(lag_poly, margin: float = 1e-6) -> bool:
    """True when every root of the lag polynomial lies strictly outside the unit circle."""
    coefs = np.asarray(lag_poly, dtype=float)
    # negligible top coefficients only add roots of enormous modulus
    big = np.flatnonzero(np.abs(coefs) > 1e-12 * np.abs(coefs).max())
    coefs = coefs[: big[-1] + 1]
    if coefs.size <= 1:
        return True
    roots = np.roots(coefs[::-1])
    return bool(np.all(np.abs(roots) > 1.0 + margin))


def admissible(coefs: SarimaCoefficients) -> bool:
    """Stationary AR side and invertible MA side."""
    ar, ma = coefs.polynomials()
    return polynomial_roots_ok(ar) and polynomial_roots_ok(ma)


def draw_sarima(
    orders: tuple[int, int, int, int],
    rng: np.random.Generator,
    coef_sd: float = 0.2,
    period: int = 12,
    max_tries: int = 1000,
) -> SarimaCoefficients:
    """Draw N(0, coef_sd) coefficients until the process is stationary and invertible."""
    p, q, P, Q = orders
    if not (0 <= p <= 5 and 0 <= q <= 5 and P in (0, 1) and Q in (0, 1)):
        raise ValueError(f"orders out of range: {orders}")
    for _ in range(max_tries):
        c = SarimaCoefficients(
            ar=tuple(rng.normal(0, coef_sd, p)),
            ma=tuple(rng.normal(0, coef_sd, q)),
            sar=tuple(rng.normal(0, coef_sd, P)),
            sma=tuple(rng.normal(0, coef_sd, Q)),
            period=period,
        )
        if admissible(c):
            return c
    raise RuntimeError(f"no admissible SARIMA{orders} draw in {max_tries} tries")


def simulate_sarima(
    coefs: SarimaCoefficients, n: int, rng: np.random.Generator, noise_var: float = 3.0, burn: int = 200
) -> np.ndarray:
    if not admissible(coefs):
        raise ValueError("SARIMA coefficients are not stationary and invertible")
    ar, ma = coefs.polynomials()
    e = rng.normal(0.0, np.sqrt(noise_var), n + burn)
    return signal.lfilter(ma, ar, e)[burn:]


def generate_sarima_candidate(
    orders: tuple[int, int, int, int],
    n: int,
    rng: np.random.Generator | int,
    coef_sd: float = 0.2,
    noise_var: float = 3.0,
    max_tries: int = 1000,
) -> tuple[np.ndarray, SarimaCoefficients]:
    rng = np.random.default_rng(rng)
    coefs = draw_sarima(orders, rng, coef_sd, max_tries=max_tries)
    return simulate_sarima(coefs, n, rng, noise_var), coefs


@dataclass(frozen=True)
class SimConfig:
    n_relevant: int = 3
    n_candidates: int = 50
    replications: int = 500
    length: int = 144
    seed: int = 0
    criteria: tuple[str, ...] = ("AIC", "BIC")
    alpha: float = 1.0
    beta_relevant: float = 1.0
    bsm: BSMParams = field(default_factory=BSMParams)
    coef_sd: float = 0.2
    noise_var: float = 3.0
    outliers: bool = False
    stabilize_terminal: bool = False

    def __post_init__(self):
        if not 0 < self.n_relevant <= self.n_candidates:
            raise ValueError("need 0 < n_relevant <= n_candidates")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")


@dataclass(frozen=True)
class Replication:
    index: int
    criterion: str
    relevant: tuple[int, ...]
    selected: tuple[int, ...]
    beta_hat: tuple[float, ...]
    beta_true: tuple[float, ...]
    seconds: float
    error: str = ""

    @property
    def sq_error(self) -> float:
        return float(np.mean((np.array(self.beta_hat) - np.array(self.beta_true)) ** 2))

    @property
    def bias(self) -> float:
        return float(np.mean(np.array(self.beta_hat) - np.array(self.beta_true)))


@dataclass(frozen=True)
class SelectionStats:
    criterion: str
    replications: int
    failures: int
    correct_sparsity: float
    true_model_included: float
    frac_relevant_included: float
    frac_irrelevant_excluded: float
    n_included: float
    n_irrelevant_included: float
    avg_mse: float
    avg_bias: float
    median_mse: float
    median_bias: float
    avg_time: float

    def to_dict(self) -> dict:
        return asdict(self)


def _replication_data(config: SimConfig, index: int):
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, index]))
    n, k = config.length, config.n_candidates
    X = np.empty((n, k))
    for j in range(k):
        orders = (int(rng.integers(0, 6)), int(rng.integers(0, 6)), int(rng.integers(0, 2)), int(rng.integers(0, 2)))
        X[:, j], _ = generate_sarima_candidate(orders, n, rng, config.coef_sd, config.noise_var)
    relevant = np.sort(rng.choice(k, config.n_relevant, replace=False))
    beta = np.zeros(k)
    beta[relevant] = config.beta_relevant
    draw = generate_bsm(config.bsm, n, rng)
    return draw.y + X @ beta, X, beta, relevant


def run_replication(config: SimConfig, index: int) -> list[Replication]:
    """One data draw, fitted once per criterion."""
    y, X, beta, relevant = _replication_data(config, index)
    series = TimeSeries(y, config.bsm.period)
    out = []
    for crit in config.criteria:
        fc = FitConfig(
            alpha=config.alpha,
            criterion=crit,
            outliers=config.outliers,
            stabilize_terminal=config.stabilize_terminal,
        )
        start = time.perf_counter()
        try:
            res = fit(series, fc, exogenous=X)
            beta_hat = res.beta
            err = ""
        except (ValueError, RuntimeError) as exc:
            beta_hat = np.full(beta.size, np.nan)
            err = f"{type(exc).__name__}: {exc}"
        elapsed = time.perf_counter() - start
        out.append(
            Replication(
                index=index,
                criterion=crit,
                relevant=tuple(int(i) for i in relevant),
                selected=tuple(int(i) for i in np.flatnonzero(beta_hat != 0) if not np.isnan(beta_hat[i])),
                beta_hat=tuple(float(b) for b in beta_hat),
                beta_true=tuple(float(b) for b in beta),
                seconds=elapsed,
                error=err,
            )
        )
    return out


def summarize(reps: list[Replication], n_candidates: int) -> SelectionStats:
    """Aggregate replications of a single criterion into the selection panels."""
    ok = [r for r in reps if not r.error]
    crit = reps[0].criterion if reps else ""
    if not ok:
        nan = float("nan")
        return SelectionStats(crit, len(reps), len(reps), *([nan] * 11))
    correct, included, frac_rel, frac_irr, n_inc, n_irr = [], [], [], [], [], []
    for r in ok:
        rel, sel = set(r.relevant), set(r.selected)
        irrelevant = n_candidates - len(rel)
        correct.append(sel == rel)
        included.append(rel <= sel)
        frac_rel.append(len(rel & sel) / len(rel))
        frac_irr.append(1.0 - len(sel - rel) / irrelevant if irrelevant else 1.0)
        n_inc.append(len(sel))
        n_irr.append(len(sel - rel))
    mse = np.array([r.sq_error for r in ok])
    bias = np.array([r.bias for r in ok])
    return SelectionStats(
        criterion=crit,
        replications=len(reps),
        failures=len(reps) - len(ok),
        correct_sparsity=float(np.mean(correct)),
        true_model_included=float(np.mean(included)),
        frac_relevant_included=float(np.mean(frac_rel)),
        frac_irrelevant_excluded=float(np.mean(frac_irr)),
        n_included=float(np.mean(n_inc)),
        n_irrelevant_included=float(np.mean(n_irr)),
        avg_mse=float(mse.mean()),
        avg_bias=float(bias.mean()),
        median_mse=float(np.median(mse)),
        median_bias=float(np.median(bias)),
        avg_time=float(np.mean([r.seconds for r in ok])),
    )


def run_experiment(config: SimConfig, workers: int = 1) -> tuple[dict[str, SelectionStats], list[Replication]]:
    """Run every replication and aggregate per criterion."""
    indices = range(config.replications)
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            batches = list(pool.map(run_replication, [config] * config.replications, indices))
    else:
        batches = [run_replication(config, i) for i in indices]
    reps = [r for batch in batches for r in batch]
    stats = {
        crit: summarize([r for r in reps if r.criterion == crit], config.n_candidates)
        for crit in config.criteria
    }
    return stats, reps
