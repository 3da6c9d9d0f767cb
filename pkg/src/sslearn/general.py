"""Regression form of a general additive linear state space model.

    y_t     = Z_t a_t + d_t + eps_t
    a_{t+1} = T_t a_t + c_t + R_t eta_t

Unrolling the state equation with the transition operator
Phi(t, tau) = T_{t-1} ... T_tau gives

    y_t - d_t - Z_t sum_{tau<t} Phi(t, tau+1) c_tau
        = Z_t Phi(t, 1) a_1 + sum_{tau<t} Z_t Phi(t, tau+1) R_tau eta_tau + eps_t,

a linear regression on the initial state and every disturbance.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .enet import enet_path

__all__ = [
    "StateSpaceSystem",
    "GeneralRegression",
    "GeneralFit",
    "transition_product",
    "to_regression",
    "simulate_system",
    "fit_general",
    "load_system",
    "local_level",
    "basic_structural",
]


def _per_time(arr, n, base_ndim, name):
    arr = np.asarray(arr, dtype=float)
    if arr.ndim == base_ndim:
        return np.broadcast_to(arr, (n, *arr.shape)).copy()
    if arr.ndim == base_ndim + 1 and arr.shape[0] == n:
        return arr.copy()
    raise ValueError(f"{name} must be a constant or have one entry per time (n={n}), got shape {arr.shape}")


@dataclass(frozen=True)
class StateSpaceSystem:
    """Time-varying system matrices, stored per time (index 0 is t = 1).

    Constant inputs are broadcast: ``Z`` (m,), ``T`` (m, m), ``R`` (m, r),
    ``d`` scalar, ``c`` (m,). Per-time inputs carry a leading axis of length
    ``n``. Only T_1..T_{n-1}, R_1..R_{n-1}, c_1..c_{n-1} are ever used.
    """

    Z: np.ndarray
    T: np.ndarray
    R: np.ndarray
    n: int
    d: np.ndarray = 0.0
    c: np.ndarray | None = None
    unpenalized_initial_states: tuple[int, ...] = ()

    def __post_init__(self):
        n = int(self.n)
        if n < 1:
            raise ValueError("n must be >= 1")
        Z = _per_time(self.Z, n, 1, "Z")
        T = _per_time(self.T, n, 2, "T")
        m = Z.shape[1]
        if T.shape[1:] != (m, m):
            raise ValueError(f"T must be {m}x{m}, got {T.shape[1:]}")
        R = np.asarray(self.R, dtype=float)
        if R.ndim == 1:
            R = R[:, None]
        R = _per_time(R, n, 2, "R")
        if R.shape[1] != m:
            raise ValueError(f"R must have {m} rows, got {R.shape[1]}")
        d = _per_time(self.d, n, 0, "d")
        c = _per_time(np.zeros(m) if self.c is None else self.c, n, 1, "c")
        if c.shape[1] != m:
            raise ValueError(f"c must have length {m}")
        for name, a in (("Z", Z), ("T", T), ("R", R), ("d", d), ("c", c)):
            if not np.isfinite(a).all():
                raise ValueError(f"{name} contains non-finite values")
        bad = [i for i in self.unpenalized_initial_states if not 0 <= i < m]
        if bad:
            raise ValueError(f"unpenalized initial states out of range: {bad}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "unpenalized_initial_states", tuple(self.unpenalized_initial_states))

    @property
    def state_dim(self) -> int:
        return self.Z.shape[1]

    @property
    def noise_dim(self) -> int:
        return self.R.shape[2]


def transition_product(system: StateSpaceSystem, start: int, stop: int) -> np.ndarray:
    """Phi(stop, start) = T_{stop-1} ... T_start, the identity when equal (1-based)."""
    if not 1 <= start <= stop <= system.n:
        raise IndexError(f"need 1 <= start <= stop <= {system.n}, got ({start}, {stop})")
    phi = np.eye(system.state_dim)
    for k in range(start, stop):
        phi = system.T[k - 1] @ phi
    return phi


@dataclass(frozen=True)
class GeneralRegression:
    """``X`` columns: the m initial states, then noise (tau, k) for tau = 1..n-1."""

    X: np.ndarray
    y_adjust: np.ndarray
    columns: tuple[tuple[str, int, int], ...]

    @property
    def names(self) -> list[str]:
        return [f"a1_{i + 1}" if kind == "init" else f"eta_{tau}_{i + 1}" for kind, tau, i in self.columns]


def to_regression(system: StateSpaceSystem) -> GeneralRegression:
    n, m, r = system.n, system.state_dim, system.noise_dim
    init = np.zeros((n, m))
    noise = np.zeros((n, (n - 1) * r))
    adjust = system.d.copy()
    for t in range(1, n + 1):
        # Phi(t, tau) for tau = t, t-1, ..., 1 built right to left
        phi = np.eye(m)
        drift = np.zeros(m)
        for tau in range(t - 1, 0, -1):
            # phi currently holds Phi(t, tau+1)
            zphi = system.Z[t - 1] @ phi
            noise[t - 1, (tau - 1) * r : tau * r] = zphi @ system.R[tau - 1]
            drift += phi @ system.c[tau - 1]
            phi = phi @ system.T[tau - 1]
        init[t - 1] = system.Z[t - 1] @ phi
        adjust[t - 1] += system.Z[t - 1] @ drift
    cols = [("init", 0, i) for i in range(m)]
    cols += [("noise", tau, k) for tau in range(1, n) for k in range(r)]
    return GeneralRegression(X=np.hstack([init, noise]), y_adjust=adjust, columns=tuple(cols))


def simulate_system(system: StateSpaceSystem, a1, eta, eps=None) -> tuple[np.ndarray, np.ndarray]:
    """Run the recursion directly. ``eta`` has shape (n-1, r). Returns (y, states)."""
    n, m = system.n, system.state_dim
    eta = np.asarray(eta, dtype=float).reshape(n - 1, system.noise_dim)
    states = np.zeros((n, m))
    states[0] = a1
    for t in range(1, n):
        states[t] = system.T[t - 1] @ states[t - 1] + system.c[t - 1] + system.R[t - 1] @ eta[t - 1]
    y = np.einsum("tm,tm->t", system.Z, states) + system.d
    if eps is not None:
        y = y + eps
    return y, states


@dataclass(frozen=True)
class GeneralFit:
    regression: GeneralRegression
    coef: np.ndarray
    lambda_selected: tuple[float, float]

    @property
    def initial_state(self) -> np.ndarray:
        m = sum(1 for c in self.regression.columns if c[0] == "init")
        return self.coef[:m]

    @property
    def fitted(self) -> np.ndarray:
        return self.regression.X @ self.coef + self.regression.y_adjust


def fit_general(
    system: StateSpaceSystem,
    y,
    *,
    alpha: float = 0.1,
    criterion: str = "AIC",
    epsilon: float = 0.05,
    grouping: str = "coordinate",
    path_count: int = 100,
    path_min_ratio: float | None = None,
) -> GeneralFit:
    """Two-step adaptive elastic net on the unrolled regression.

    Step 1 leaves every initial state unpenalized. Step 2 keeps only
    ``unpenalized_initial_states`` free, weights the other initial states by
    ``1/(eps + |a1_i|)`` and each disturbance group by ``1/(eps + ||group||)``.
    ``grouping`` is "coordinate" (one group per noise coordinate k) or "time"
    (one group per disturbance time tau). Missing y (NaN) rows are dropped.
    """
    if grouping not in ("coordinate", "time"):
        raise ValueError(f"grouping must be 'coordinate' or 'time', got {grouping!r}")
    y = np.asarray(y, dtype=float).ravel()
    if y.size != system.n:
        raise ValueError(f"y has {y.size} entries, system has n={system.n}")
    reg = to_regression(system)
    rows = ~np.isnan(y)
    X = reg.X[rows]
    target = (y - reg.y_adjust)[rows]
    live = np.abs(X).sum(axis=0) > 0
    is_init = np.array([c[0] == "init" for c in reg.columns])
    group_key = np.array([c[2] if grouping == "coordinate" else c[1] for c in reg.columns])

    def run(weights):
        w = weights[live]
        if not (w > 0).any():
            theta = np.linalg.lstsq(X[:, live], target, rcond=None)[0]
            return theta, float("nan")
        n_live = int(live.sum())
        ratio = path_min_ratio if path_min_ratio is not None else (1e-2 if X.shape[0] < n_live else 1e-4)
        path = enet_path(X[:, live], target, alpha=alpha, weights=w, count=path_count, min_ratio=ratio)
        k = path.best(criterion)
        return path.coefs[k], float(path.lambdas[k])

    w1 = np.where(is_init, 0.0, 1.0)
    theta1, lam1 = run(w1)
    full1 = np.zeros(reg.X.shape[1])
    full1[live] = theta1

    w2 = np.zeros(reg.X.shape[1])
    for i in np.flatnonzero(is_init):
        w2[i] = 0.0 if i in system.unpenalized_initial_states else 1.0 / (epsilon + abs(full1[i]))
    noise = ~is_init
    for g in np.unique(group_key[noise]):
        m = noise & (group_key == g)
        w2[m] = 1.0 / (epsilon + np.linalg.norm(full1[m]))
    theta2, lam2 = run(w2)
    coef = np.zeros(reg.X.shape[1])
    coef[live] = theta2
    return GeneralFit(regression=reg, coef=coef, lambda_selected=(lam1, lam2))


def load_system(path, n: int) -> StateSpaceSystem:
    """Read a JSON system description.

    Keys: "Z", "T", "R" (required), "d", "c", "unpenalized_initial_states".
    Each matrix is either constant or a list with one entry per time.
    """
    doc = json.loads(Path(path).read_text())
    missing = [k for k in ("Z", "T", "R") if k not in doc]
    if missing:
        raise ValueError(f"system file lacks keys {missing}")
    return StateSpaceSystem(
        Z=doc["Z"],
        T=doc["T"],
        R=doc["R"],
        n=n,
        d=doc.get("d", 0.0),
        c=doc.get("c"),
        unpenalized_initial_states=tuple(doc.get("unpenalized_initial_states", ())),
    )


def local_level(n: int) -> StateSpaceSystem:
    return StateSpaceSystem(Z=[1.0], T=[[1.0]], R=[[1.0]], n=n, unpenalized_initial_states=(0,))


def basic_structural(n: int, s: int) -> StateSpaceSystem:
    """Level, slope and dummy seasonal in companion form; state (mu, nu, gamma_t, ..., gamma_{t-s+2})."""
    m = 2 + (s - 1)
    T = np.zeros((m, m))
    T[0, 0] = T[0, 1] = T[1, 1] = 1.0
    if s > 1:
        T[2, 2:] = -1.0
        for i in range(3, m):
            T[i, i - 1] = 1.0
    R = np.zeros((m, 3 if s > 1 else 2))
    # eta_tau = (xi, zeta, omega) dated tau+1
    R[0, 0] = 1.0
    R[1, 1] = 1.0
    if s > 1:
        R[2, 2] = 1.0
    Z = np.zeros(m)
    Z[0] = 1.0
    if s > 1:
        Z[2] = 1.0
    return StateSpaceSystem(Z=Z, T=T, R=R[:, : (3 if s > 1 else 2)], n=n, unpenalized_initial_states=(0,))
