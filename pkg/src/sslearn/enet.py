"""Weighted elastic net by coordinate descent.

Minimizes

    (1/n) ||y - X theta||^2 + lam * sum_j w_j * ((1 - alpha) theta_j^2 / 2 + alpha |theta_j|)

on internally rescaled columns (unit root-mean-square). Coefficients with
``w_j == 0`` are unpenalized and updated jointly as one least-squares block,
which keeps collinear unpenalized columns (intercept plus seasonal dummies)
from stalling the coordinate sweeps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

__all__ = [
    "PathResult",
    "column_scale",
    "enet_objective",
    "kkt_violations",
    "solve_weighted_enet",
    "lambda_path",
    "enet_path",
    "information_criterion",
]

ALPHA_FLOOR = 1e-3
DEV_RATIO_MAX = 0.999
DEV_CHANGE_MIN = 1e-5
MIN_PATH_BEFORE_STOP = 5
TOL_KKT = 1e-9
# a stalled active-set search is accepted below this violation (rounding floor)
STALL_KKT = 1e-7
MAX_SWEEPS = 100_000
CD_BURST = 100


@numba.njit(cache=True)
def _soft(z, g):
    if z > g:
        return z - g
    if z < -g:
        return z + g
    return 0.0


@numba.njit(cache=True)
def _unpen_update(Xt, r, theta, unpen, pinv_u):
    n = r.shape[0]
    for a in range(unpen.shape[0]):
        j = unpen[a]
        if theta[j] != 0.0:
            for i in range(n):
                r[i] += Xt[j, i] * theta[j]
    dmax = 0.0
    for a in range(unpen.shape[0]):
        j = unpen[a]
        new = 0.0
        for i in range(n):
            new += pinv_u[a, i] * r[i]
        d = abs(new - theta[j])
        if d > dmax:
            dmax = d
        theta[j] = new
    for a in range(unpen.shape[0]):
        j = unpen[a]
        if theta[j] != 0.0:
            for i in range(n):
                r[i] -= Xt[j, i] * theta[j]
    return dmax


@numba.njit(cache=True)
def _pen_sweep(Xt, r, theta, pen, l1, l2, sq, active_only):
    n = r.shape[0]
    scale = 2.0 / n
    dmax = 0.0
    for a in range(pen.shape[0]):
        j = pen[a]
        old = theta[j]
        if active_only and old == 0.0:
            continue
        denom = sq[j] + l2[j]
        if denom <= 0.0:
            continue
        g = 0.0
        for i in range(n):
            g += Xt[j, i] * r[i]
        g = scale * g + sq[j] * old
        new = _soft(g, l1[j]) / denom
        if new != old:
            d = new - old
            for i in range(n):
                r[i] -= Xt[j, i] * d
            theta[j] = new
            if abs(d) > dmax:
                dmax = abs(d)
    return dmax


@numba.njit(cache=True)
def _max_kkt(Xt, r, theta, pen, unpen, l1, l2, sq):
    n = r.shape[0]
    scale = 2.0 / n
    worst = 0.0
    for a in range(unpen.shape[0]):
        j = unpen[a]
        g = 0.0
        for i in range(n):
            g += Xt[j, i] * r[i]
        worst = max(worst, abs(scale * g))
    for a in range(pen.shape[0]):
        j = pen[a]
        g = 0.0
        for i in range(n):
            g += Xt[j, i] * r[i]
        g = -scale * g + l2[j] * theta[j]
        if theta[j] > 0.0:
            v = abs(g + l1[j])
        elif theta[j] < 0.0:
            v = abs(g - l1[j])
        else:
            v = max(abs(g) - l1[j], 0.0)
        worst = max(worst, v)
    return worst


@numba.njit(cache=True)
def _coordinate_descent(Xt, y, theta, pen, unpen, pinv_u, l1, l2, sq, tol, tol_kkt, max_sweeps):
    p, n = Xt.shape
    r = np.empty(n)
    sweeps = 0
    while sweeps < max_sweeps:
        # full sweep over every coordinate, with a fresh residual
        for i in range(n):
            r[i] = y[i]
        for j in range(p):
            if theta[j] != 0.0:
                for i in range(n):
                    r[i] -= Xt[j, i] * theta[j]
        d = _unpen_update(Xt, r, theta, unpen, pinv_u)
        d = max(d, _pen_sweep(Xt, r, theta, pen, l1, l2, sq, False))
        sweeps += 1
        # cycle on the active set until coefficients settle
        inner = 0
        while d >= tol and sweeps < max_sweeps and inner < 1000:
            d = _unpen_update(Xt, r, theta, unpen, pinv_u)
            d = max(d, _pen_sweep(Xt, r, theta, pen, l1, l2, sq, True))
            sweeps += 1
            inner += 1
        # refresh the residual before certifying optimality
        for i in range(n):
            r[i] = y[i]
        for j in range(p):
            if theta[j] != 0.0:
                for i in range(n):
                    r[i] -= Xt[j, i] * theta[j]
        if _max_kkt(Xt, r, theta, pen, unpen, l1, l2, sq) <= tol_kkt:
            return sweeps
    return -1


def column_scale(X: np.ndarray) -> np.ndarray:
    """Root-mean-square of each column; 1 for constant columns (zeros included)."""
    X = np.asarray(X, dtype=float)
    scale = np.sqrt(np.mean(X**2, axis=0))
    constant = np.ptp(X, axis=0) == 0
    scale[constant | (scale == 0)] = 1.0
    return scale


def _check_inputs(X, y, weights):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValueError("X must be a 2-D array")
    if X.shape[0] < 1:
        raise ValueError("empty observed set")
    if X.shape[0] != y.size:
        raise ValueError(f"X has {X.shape[0]} rows but y has {y.size} entries")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite values in X or y")
    weights = np.asarray(weights, dtype=float).ravel()
    if weights.size != X.shape[1]:
        raise ValueError(f"{weights.size} weights for {X.shape[1]} columns")
    if (weights < 0).any() or not np.isfinite(weights).all():
        raise ValueError("weights must be finite and non-negative")
    return X, y, weights


class _Problem:
    """Scaled design and cached quantities shared by every lambda of a path."""

    def __init__(self, X, y, alpha, weights, standardize=True):
        X, y, weights = _check_inputs(X, y, weights)
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        self.n, self.p = X.shape
        self.y = y
        self.alpha = float(alpha)
        self.weights = weights
        self.scale = column_scale(X) if standardize else np.ones(self.p)
        self.Xs = X / self.scale
        self.Xt = np.ascontiguousarray(self.Xs.T)
        self.sq = 2.0 / self.n * np.einsum("ij,ij->j", self.Xs, self.Xs)
        self.unpen = np.flatnonzero(weights == 0).astype(np.int64)
        self.pen = np.flatnonzero(weights > 0).astype(np.int64)
        if self.unpen.size:
            self.pinv_u = np.ascontiguousarray(np.linalg.pinv(self.Xs[:, self.unpen]))
            self.theta_null = np.zeros(self.p)
            self.theta_null[self.unpen] = self.pinv_u @ y
        else:
            self.pinv_u = np.zeros((0, self.n))
            self.theta_null = np.zeros(self.p)
        self.resid_null = y - self.Xs @ self.theta_null

    def solve(self, lam, theta0=None, tol=1e-8, tol_kkt=TOL_KKT, max_sweeps=MAX_SWEEPS):
        """Scaled-coefficient solution at ``lam``.

        Coordinate descent runs in bursts; when a burst ends without
        certifying optimality, feature-sign search takes over from the
        current point. Both only ever decrease the objective. Returns once
        the coordinate-wise KKT violation is at most ``tol_kkt``, or once the
        search stalls in rounding noise below ``STALL_KKT``.
        """
        if not lam > 0:
            raise ValueError(f"lambda must be positive, got {lam}")
        theta = self.theta_null.copy() if theta0 is None else np.array(theta0, dtype=float)
        l1 = lam * self.weights * self.alpha
        l2 = lam * self.weights * (1.0 - self.alpha)
        used = 0
        while used < max_sweeps:
            burst = min(CD_BURST, max_sweeps - used)
            sweeps = _coordinate_descent(
                self.Xt, self.y, theta, self.pen, self.unpen, self.pinv_u,
                l1, l2, self.sq, tol, tol_kkt, burst,
            )
            if sweeps >= 0:
                return theta
            used += burst
            done, viol = self._feature_sign(theta, l1, l2, tol_kkt)
            if done or viol <= max(tol_kkt, STALL_KKT):
                return theta
        raise RuntimeError(
            f"coordinate descent did not converge in {max_sweeps} sweeps (lambda={lam:g})"
        )

    def _piece_step(self, theta, sign, idx, l1, l2):
        """Minimize the objective restricted to the orthant piece fixed by ``sign`` on ``idx``.

        Returns the candidate points on the segment towards the piece minimizer:
        the minimizer itself and every point where a coordinate crosses zero.
        On a singular piece with a linear descent direction, returns the point
        where that direction first zeroes a coordinate.
        """
        Xa = self.Xs[:, idx]
        H = 2.0 / self.n * Xa.T @ Xa + np.diag(l2[idx])
        b = 2.0 / self.n * Xa.T @ self.y - l1[idx] * sign[idx]
        evals, evecs = np.linalg.eigh(H)
        keep = evals > max(evals[-1], 0.0) * 1e-12
        coef_b = evecs.T @ b
        cur = theta[idx]
        pen = self.weights[idx] > 0
        null_b = evecs[:, ~keep] @ coef_b[~keep]
        if np.linalg.norm(null_b) > 1e-10 * max(np.linalg.norm(b), 1e-300):
            d = null_b
            hits = pen & (sign[idx] != 0) & (np.sign(d) == -sign[idx])
            if not hits.any():
                return []
            t = np.min(np.abs(cur[hits] / d[hits]))
            pts = [cur + t * d]
        else:
            target = evecs[:, keep] @ (coef_b[keep] / evals[keep])
            d = target - cur
            cross = pen & (cur != 0) & (np.sign(target) != sign[idx])
            pts = [target]
            for i in np.flatnonzero(cross):
                pts.append(cur + (cur[i] / (cur[i] - target[i])) * d)
        out = []
        for pt in pts:
            # snap coordinates that crossed (or sit on) zero
            pt = np.where(pen & (np.sign(pt) == -sign[idx]), 0.0, pt)
            pt = np.where(pen & (np.abs(pt) < 1e-15 * (1 + np.abs(cur))), 0.0, pt)
            out.append(pt)
        return out

    def _feature_sign(self, theta, l1, l2, tol_kkt, max_iter=None):
        """Active-set polishing by feature-sign search.

        Each outer step admits the most violating zero coordinate, then
        re-solves on sign-fixed orthant pieces, taking the best of the piece
        minimizer and the zero-crossing points. The objective decreases
        strictly, so no sign pattern repeats. Returns whether KKT holds and
        the last measured violation.
        """
        max_iter = max_iter or 4 * self.n + 50
        f_cur = self._objective(theta, l1, l2)
        for _ in range(max_iter):
            r = self.y - self.Xs @ theta
            grad = -2.0 / self.n * (self.Xt @ r) + l2 * theta
            sign = np.sign(theta)
            pen = self.weights > 0
            viol = np.where((theta == 0) & pen, np.abs(grad) - l1, -np.inf)
            j = int(np.argmax(viol))
            on = np.where(theta != 0, np.abs(grad + l1 * sign), 0.0)
            on[self.unpen] = np.abs(grad[self.unpen])
            worst = max(viol[j], on.max())
            if worst <= tol_kkt:
                return True, worst
            best, f_best = None, f_cur
            # with the entering coordinate first, then without it: on a singular
            # piece the descent direction may push the new coordinate the wrong way
            attempts = [True, False] if viol[j] > tol_kkt else [False]
            for enter in attempts:
                sgn = sign.copy()
                if enter:
                    sgn[j] = -np.sign(grad[j])
                active = sgn != 0
                active[self.unpen] = True
                idx = np.flatnonzero(active)
                for pt in self._piece_step(theta, sgn, idx, l1, l2):
                    trial = theta.copy()
                    trial[idx] = pt
                    f = self._objective(trial, l1, l2)
                    if f < f_best:
                        best, f_best = trial, f
                if best is not None:
                    break
            if best is None:
                return False, worst
            theta[:] = best
            f_cur = f_best
        return False, np.inf

    def _objective(self, theta, l1, l2):
        r = self.y - self.Xs @ theta
        return r @ r / self.n + np.sum(l2 * theta**2 / 2 + l1 * np.abs(theta))

    def lambda_max(self):
        if self.pen.size == 0:
            raise ValueError("lambda path needs at least one penalized column")
        grad = 2.0 / self.n * np.abs(self.Xs[:, self.pen].T @ self.resid_null)
        return float(np.max(grad / (max(self.alpha, ALPHA_FLOOR) * self.weights[self.pen])))


def enet_objective(X, y, theta, lam, *, alpha, weights, standardize=True) -> float:
    """Objective value at ``theta`` (original scale); the penalty acts on scaled coefficients."""
    X, y, weights = _check_inputs(X, y, weights)
    scale = column_scale(X) if standardize else np.ones(X.shape[1])
    ts = np.asarray(theta, dtype=float) * scale
    resid = y - X @ np.asarray(theta, dtype=float)
    penalty = np.sum(weights * ((1 - alpha) * ts**2 / 2 + alpha * np.abs(ts)))
    return float(resid @ resid / y.size + lam * penalty)


def kkt_violations(X, y, theta, lam, *, alpha, weights, standardize=True) -> np.ndarray:
    """Per-coordinate subgradient optimality violation on the scaled problem."""
    X, y, weights = _check_inputs(X, y, weights)
    scale = column_scale(X) if standardize else np.ones(X.shape[1])
    Xs = X / scale
    ts = np.asarray(theta, dtype=float) * scale
    n = y.size
    grad = -2.0 / n * Xs.T @ (y - Xs @ ts) + lam * weights * (1 - alpha) * ts
    l1 = lam * weights * alpha
    return np.where(
        ts != 0,
        np.abs(grad + l1 * np.sign(ts)),
        np.maximum(np.abs(grad) - l1, 0.0),
    )


def solve_weighted_enet(
    X,
    y,
    lam: float,
    *,
    alpha: float,
    weights,
    warm_start=None,
    standardize: bool = True,
    tol: float = 1e-8,
    tol_kkt: float = TOL_KKT,
    max_sweeps: int = MAX_SWEEPS,
) -> np.ndarray:
    """Minimizer of the weighted elastic-net objective at a single ``lam``.

    ``warm_start`` is on the original coefficient scale. Returns original-scale
    coefficients.
    """
    prob = _Problem(X, y, alpha, weights, standardize)
    theta0 = None if warm_start is None else np.asarray(warm_start, dtype=float) * prob.scale
    return prob.solve(lam, theta0, tol, tol_kkt, max_sweeps) / prob.scale


def lambda_path(X, y, *, alpha, weights, count=100, min_ratio=1e-4, standardize=True) -> np.ndarray:
    """Descending geometric grid from the smallest all-zero lambda.

    The top value is the smallest lambda at which every penalized coefficient
    is zero given the unpenalized least-squares fit. If that fit is already
    exact, any lambda gives the same solution and a single value is returned.
    """
    prob = _Problem(X, y, alpha, weights, standardize)
    return _grid(prob, count, min_ratio)


def _grid(prob, count, min_ratio):
    if count < 1:
        raise ValueError("count must be >= 1")
    if not 0 < min_ratio <= 1:
        raise ValueError("min_ratio must lie in (0, 1]")
    lmax = prob.lambda_max()
    if not lmax > 1e-12 * max(1.0, float(np.abs(prob.y).max())):
        return np.array([1.0])
    if count == 1:
        return np.array([lmax])
    return lmax * np.geomspace(1.0, min_ratio, count)


def information_criterion(rss: float, n: int, k_nonzero: int, kind: str = "AIC") -> float:
    """AIC ``n ln(rss/n) + 2k`` or BIC ``n ln(rss/n) + k ln n``."""
    if n <= 0:
        raise ValueError("n must be positive")
    if rss < 0:
        raise ValueError("rss must be non-negative")
    fit = n * np.log(max(rss, 1e-30) / n)
    kind = kind.upper()
    if kind == "AIC":
        return float(fit + 2 * k_nonzero)
    if kind == "BIC":
        return float(fit + k_nonzero * np.log(n))
    raise ValueError(f"unknown criterion {kind!r}")


@dataclass(frozen=True)
class PathResult:
    lambdas: np.ndarray
    coefs: np.ndarray  # (n_lambda, p), original scale
    rss: np.ndarray
    df: np.ndarray
    n: int

    def ic(self, kind: str = "AIC") -> np.ndarray:
        return np.array(
            [information_criterion(r, self.n, k, kind) for r, k in zip(self.rss, self.df)]
        )

    @property
    def aic(self) -> np.ndarray:
        return self.ic("AIC")

    @property
    def bic(self) -> np.ndarray:
        return self.ic("BIC")

    def best(self, kind: str = "AIC") -> int:
        """Index of the lambda minimizing the criterion (first one on ties)."""
        return int(np.argmin(self.ic(kind)))


def enet_path(
    X,
    y,
    *,
    alpha: float,
    weights,
    lambdas=None,
    count: int = 100,
    min_ratio: float = 1e-4,
    standardize: bool = True,
    early_stop: bool = False,
    tol: float = 1e-8,
    tol_kkt: float = TOL_KKT,
    max_sweeps: int = MAX_SWEEPS,
) -> PathResult:
    """Solve along a descending lambda sequence with warm starts.

    With ``early_stop`` the path is cut once the fraction of deviance
    explained (relative to the unpenalized fit) exceeds 0.999 or stops
    improving by more than a relative 1e-5.
    """
    prob = _Problem(X, y, alpha, weights, standardize)
    grid = _grid(prob, count, min_ratio) if lambdas is None else np.asarray(lambdas, dtype=float)
    rss_null = float(prob.resid_null @ prob.resid_null)

    theta = prob.theta_null.copy()
    kept_l, kept_c, kept_rss, kept_df = [], [], [], []
    prev_ratio = 0.0
    for k, lam in enumerate(grid):
        theta = prob.solve(lam, theta, tol, tol_kkt, max_sweeps)
        resid = prob.y - prob.Xs @ theta
        rss = float(resid @ resid)
        df = int(np.count_nonzero(theta))
        kept_l.append(lam)
        kept_c.append(theta / prob.scale)
        kept_rss.append(rss)
        kept_df.append(df)
        if early_stop and lambdas is None and rss_null > 0:
            ratio = 1.0 - rss / rss_null
            if ratio >= DEV_RATIO_MAX:
                break
            if k >= MIN_PATH_BEFORE_STOP and ratio - prev_ratio < DEV_CHANGE_MIN * ratio:
                break
            prev_ratio = ratio
    return PathResult(
        lambdas=np.array(kept_l),
        coefs=np.array(kept_c),
        rss=np.array(kept_rss),
        df=np.array(kept_df),
        n=prob.n,
    )
