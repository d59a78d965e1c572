"""Dense numerical kernels shared by the rest of the package.

Everything here is a pure function of its inputs: plain least squares /
ridge, coordinate-descent elastic net, ridge-stabilized IRLS logistic
regression, Nadaraya-Watson kernel smoothing, and weighted statistics.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateInputError,
    DimensionMismatchError,
    NoConvergenceWarning,
    NonFiniteError,
    ZeroWeightError,
)

# IRLS keeps a tiny ridge floor so perfectly separable data cannot push
# the weighted system singular.
LOGISTIC_RIDGE_FLOOR = 1e-8

ENET_TOL = 1e-8
ENET_MAX_SWEEPS = 10_000


@dataclass
class FitResult:
    """Outcome of a linear-model solve.

    ``intercept`` is 0.0 for fitters that do not model one.  ``converged``
    is False when an iterative solver hit its cap; the coefficients are
    still the best iterate found.
    """

    coefficients: np.ndarray
    intercept: float
    objective: float
    iterations: int
    converged: bool = True
    objective_path: list = field(default_factory=list, repr=False)


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-D design matrix, got ndim={X.ndim}")
    return X


def _check_finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError("input contains NaN or infinite values")


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def log1pexp(z: np.ndarray) -> np.ndarray:
    """log(1 + exp(z)) without overflow."""
    z = np.asarray(z, dtype=float)
    out = np.where(z > 0, z, 0.0) + np.log1p(np.exp(-np.abs(z)))
    return out


def solve_least_squares(X, y, ridge: float = 0.0) -> FitResult:
    """argmin ||y - X b||^2 + ridge * ||b||^2, no intercept.

    With ridge = 0 a rank-deficient system returns the minimum-norm
    solution (pivoted orthogonal factorization via ``lstsq``).
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if X.shape[0] < 1:
        raise DimensionMismatchError("need at least one row")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    _check_finite(X, y)

    if ridge == 0.0:
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    else:
        # Augmented system keeps the solve well-posed for any X.
        k = X.shape[1]
        Xa = np.vstack([X, np.sqrt(ridge) * np.eye(k)])
        ya = np.concatenate([y, np.zeros(k)])
        beta, *_ = np.linalg.lstsq(Xa, ya, rcond=None)

    resid = y - X @ beta
    obj = float(resid @ resid + ridge * (beta @ beta))
    return FitResult(coefficients=beta, intercept=0.0, objective=obj, iterations=1)


def _soft_threshold(rho: float, lam: float) -> float:
    if rho > lam:
        return rho - lam
    if rho < -lam:
        return rho + lam
    return 0.0


def _enet_objective_gram(beta, G, c, y_sq_mean, l1, l2) -> float:
    # (1/2N)||yc - Xc b||^2 expressed through the Gram matrix.
    quad = 0.5 * (y_sq_mean - 2.0 * beta @ c + beta @ (G @ beta))
    return float(quad + l1 * np.abs(beta).sum() + 0.5 * l2 * beta @ beta)


def enet_gaussian_gram(G, c, y_sq_mean, l1, l2, max_sweeps=ENET_MAX_SWEEPS,
                       tol=ENET_TOL, beta0=None):
    """Coordinate descent on centered-data Gram statistics.

    G = Xc'Xc/N, c = Xc'yc/N, y_sq_mean = yc'yc/N.  Returns
    ``(beta, path, sweeps, converged)``; one sweep costs O(K^2) regardless
    of N.
    """
    k = G.shape[0]
    diag = np.diag(G).copy()
    beta = np.zeros(k) if beta0 is None else np.asarray(beta0, dtype=float).copy()
    v = G @ beta
    path = [_enet_objective_gram(beta, G, c, y_sq_mean, l1, l2)]
    sweeps = 0
    converged = False
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(k):
            old = beta[j]
            rho = c[j] - v[j] + diag[j] * old
            denom = diag[j] + l2
            new = 0.0 if denom <= 0 else _soft_threshold(rho, l1) / denom
            if new != old:
                v += G[:, j] * (new - old)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        path.append(_enet_objective_gram(beta, G, c, y_sq_mean, l1, l2))
        if max_delta < tol:
            converged = True
            break
    return beta, path, sweeps, converged


def _enet_gaussian(X, y, l1, l2, max_sweeps, tol):
    n = X.shape[0]
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    Xc = X - x_mean
    yc = y - y_mean

    G = (Xc.T @ Xc) / n
    c = (Xc.T @ yc) / n
    y_sq_mean = float(yc @ yc) / n
    beta, path, sweeps, converged = enet_gaussian_gram(G, c, y_sq_mean, l1, l2,
                                                       max_sweeps, tol)
    intercept = y_mean - float(x_mean @ beta)
    return beta, intercept, path, sweeps, converged


def _enet_logistic(X, y, l1, l2, max_sweeps, tol):
    n, k = X.shape
    beta = np.zeros(k)
    intercept = float(np.log((y.mean() + 1e-12) / (1 - y.mean() + 1e-12)))
    path = []
    outer = 0
    converged = False
    for outer in range(1, max_sweeps + 1):
        z = intercept + X @ beta
        p = sigmoid(z)
        w = np.clip(p * (1 - p), 1e-6, None)
        work = z + (y - p) / w
        w_sum = w.sum()

        max_delta = 0.0
        # One penalized weighted least-squares sweep per outer step.
        r = work - intercept - X @ beta
        for j in range(k):
            xj = X[:, j]
            old = beta[j]
            rho = (w * xj * (r + xj * old)).sum() / n
            denom = (w * xj * xj).sum() / n + l2
            new = 0.0 if denom <= 0 else _soft_threshold(rho, l1) / denom
            if new != old:
                r -= xj * (new - old)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        new_intercept = float((w * (r + intercept)).sum() / w_sum)
        max_delta = max(max_delta, abs(new_intercept - intercept))
        r += intercept - new_intercept
        intercept = new_intercept

        z = intercept + X @ beta
        nll = float(np.mean(log1pexp(z) - y * z))
        path.append(nll + l1 * np.abs(beta).sum() + 0.5 * l2 * beta @ beta)
        if max_delta < tol:
            converged = True
            break
    return beta, intercept, path, outer, converged


def elastic_net_fit(X, y, l1: float, l2: float, family: str = "regression",
                    max_sweeps: int = ENET_MAX_SWEEPS, tol: float = ENET_TOL) -> FitResult:
    """Coordinate-descent elastic net with an unpenalized intercept.

    Regression objective: (1/2N)||y - b0 - Xb||^2 + l1*||b||_1 + (l2/2)*||b||_2^2.
    The logistic family replaces the quadratic term by the mean negative
    log-likelihood and wraps each sweep in IRLS working responses.

    Emits ``NoConvergenceWarning`` (and flags the result) if the sweep cap
    is reached before the max coefficient change drops below ``tol``.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if l1 < 0 or l2 < 0:
        raise ValueError("penalties must be >= 0")
    _check_finite(X, y)

    if family == "regression":
        beta, intercept, path, sweeps, converged = _enet_gaussian(X, y, l1, l2, max_sweeps, tol)
    elif family == "logistic":
        beta, intercept, path, sweeps, converged = _enet_logistic(X, y, l1, l2, max_sweeps, tol)
    else:
        raise ValueError(f"unknown family {family!r}")

    if not converged:
        warnings.warn(
            f"elastic net hit the {max_sweeps}-sweep cap before tolerance {tol}",
            NoConvergenceWarning,
        )
    return FitResult(coefficients=beta, intercept=intercept, objective=path[-1],
                     iterations=sweeps, converged=converged, objective_path=path)


def logistic_fit(X, y, ridge: float = 0.0, max_iter: int = 100, tol: float = 1e-10) -> FitResult:
    """Ridge-penalized logistic regression via IRLS, intercept unpenalized.

    The effective ridge never drops below ``LOGISTIC_RIDGE_FLOOR`` so that
    separable data keeps the Newton system bounded.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("y must be binary 0/1")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    _check_finite(X, y)

    lam = max(ridge, LOGISTIC_RIDGE_FLOOR)
    n, k = X.shape
    Xd = np.hstack([np.ones((n, 1)), X])
    pen = np.ones(k + 1) * lam
    pen[0] = 0.0

    theta = np.zeros(k + 1)
    theta[0] = float(np.log((y.mean() + 1e-12) / (1 - y.mean() + 1e-12)))

    def objective(t):
        z = Xd @ t
        return float(np.sum(log1pexp(z) - y * z) + 0.5 * np.sum(pen * t * t))

    obj = objective(theta)
    it = 0
    for it in range(1, max_iter + 1):
        z = Xd @ theta
        p = sigmoid(z)
        w = np.clip(p * (1 - p), 1e-10, None)
        grad = Xd.T @ (y - p) - pen * theta
        H = (Xd * w[:, None]).T @ Xd + np.diag(pen)
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            step, *_ = np.linalg.lstsq(H, grad, rcond=None)

        # Step halving keeps the penalized likelihood monotone.
        scale = 1.0
        for _ in range(30):
            cand = theta + scale * step
            cand_obj = objective(cand)
            if cand_obj <= obj + 1e-12:
                break
            scale *= 0.5
        theta = theta + scale * step
        obj = objective(theta)
        if not np.isfinite(obj):
            raise NonFiniteError(f"logistic objective became non-finite at iteration {it}")
        if np.max(np.abs(scale * step)) < tol:
            break

    return FitResult(coefficients=theta[1:], intercept=float(theta[0]),
                     objective=obj, iterations=it)


def silverman_bandwidth(x: np.ndarray) -> float:
    """Silverman's rule of thumb for a Gaussian kernel."""
    x = np.asarray(x, dtype=float)
    n = x.size
    sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25)
    spread = min(sd, iqr / 1.34) if iqr > 0 else sd
    if spread <= 0:
        raise DegenerateInputError("cannot pick a bandwidth for constant x")
    return 0.9 * spread * n ** (-0.2)


def kernel_smooth(x, t, eval_grid, bandwidth="auto") -> np.ndarray:
    """Nadaraya-Watson estimate of E(t | x) on ``eval_grid``.

    Gaussian kernel; ``bandwidth="auto"`` applies Silverman's rule.  The
    output is a convex combination of ``t`` so it stays within
    [min(t), max(t)].
    """
    x = np.asarray(x, dtype=float).ravel()
    t = np.asarray(t, dtype=float).ravel()
    grid = np.asarray(eval_grid, dtype=float).ravel()
    if x.shape[0] != t.shape[0]:
        raise DimensionMismatchError("x and t must have the same length")
    if x.shape[0] < 2:
        raise DegenerateInputError("need at least two observations to smooth")
    _check_finite(x, t, grid)
    if np.ptp(x) == 0:
        raise DegenerateInputError("x is constant")

    if bandwidth == "auto":
        h = silverman_bandwidth(x)
    else:
        h = float(bandwidth)
        if not h > 0:
            raise ValueError("bandwidth must be positive")

    out = np.empty(grid.shape[0])
    # Chunked so huge grids do not allocate a grid x n matrix at once.
    chunk = max(1, int(4_000_000 // max(x.size, 1)))
    for start in range(0, grid.size, chunk):
        g = grid[start:start + chunk]
        d = (g[:, None] - x[None, :]) / h
        e = -0.5 * d * d
        e -= e.max(axis=1, keepdims=True)  # shift avoids total underflow
        w = np.exp(e)
        out[start:start + chunk] = (w @ t) / w.sum(axis=1)
    return out


def weighted_std(values, weights) -> float:
    """sqrt( sum w_i (v_i - mean_w)^2 / sum w_i )."""
    v = np.asarray(values, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if v.shape[0] != w.shape[0]:
        raise DimensionMismatchError("values and weights must have the same length")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise ZeroWeightError("all weights are zero")
    mean = float((w @ v) / total)
    var = float((w @ (v - mean) ** 2) / total)
    return float(np.sqrt(max(var, 0.0)))
