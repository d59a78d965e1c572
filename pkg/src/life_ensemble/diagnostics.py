"""Ambiguity loss decompositions, the accuracy/diversity sweep over the
cutoff point, and the two-stage stacking comparator.

For simplex weights ``beta`` and per-learner predictions f(j), the
ensemble loss splits into a weighted per-learner loss (accuracy) minus a
disagreement term (diversity).  For squared error the diversity term has
the explicit form mean_i sum_j beta_j (f_ens_i - f_i(j))^2; for
cross-entropy it is reported as the exact residual accuracy - total
(the Taylor-remainder midpoint is not a computable quantity), with the
quadratic deviation kept as a separate proxy.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .core_math import log1pexp, logistic_fit, solve_least_squares
from .datasets import Scaler
from .errors import (
    NonFiniteError,
    ProbabilityOutOfRangeError,
    TooFewLearnersError,
    WeightsOffSimplexError,
)
from . import nn as nn_mod
from .nn import CLASSIFICATION, REGRESSION
from .pipeline import LifeConfig, fit_base_learners

SIMPLEX_TOL = 1e-10


@dataclass
class DecompositionReport:
    total_loss: float
    accuracy_term: float
    diversity_term: float
    weights: np.ndarray
    space: str  # "mse" | "probability" | "log_odds"
    per_learner_losses: np.ndarray
    quadratic_proxy: float


@dataclass
class StackingModel:
    weights: np.ndarray
    intercept: float
    mode: str  # "unconstrained" | "simplex"

    def predict(self, predictions) -> np.ndarray:
        P = _as_pred_matrix(predictions)
        return self.intercept + P @ self.weights


def _as_pred_matrix(predictions) -> np.ndarray:
    """Stack per-learner prediction vectors into an N x M matrix."""
    if isinstance(predictions, np.ndarray) and predictions.ndim == 2:
        return np.asarray(predictions, dtype=float)
    return np.column_stack([np.asarray(p, dtype=float).ravel() for p in predictions])


def _check_simplex(weights, m: int) -> np.ndarray:
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape[0] != m:
        raise WeightsOffSimplexError(f"{w.shape[0]} weights for {m} learners")
    if np.any(w < -1e-12) or abs(float(w.sum()) - 1.0) > 1e-8:
        raise WeightsOffSimplexError(
            f"weights must be nonnegative and sum to 1 (sum={w.sum():.3e})")
    return w


def mse_decomposition(y, predictions, weights) -> DecompositionReport:
    """Squared-error split: ensemble MSE = accuracy - diversity."""
    P = _as_pred_matrix(predictions)
    y = np.asarray(y, dtype=float).ravel()
    w = _check_simplex(weights, P.shape[1])
    f_ens = P @ w
    per = np.mean((y[:, None] - P) ** 2, axis=0)
    accuracy = float(per @ w)
    diversity = float(np.mean((f_ens[:, None] - P) ** 2, axis=0) @ w)
    total = float(np.mean((y - f_ens) ** 2))
    return DecompositionReport(total, accuracy, diversity, w, "mse", per, diversity)


def ce_decomposition_probability(y, probabilities, weights) -> DecompositionReport:
    """Cross-entropy split with probability-space averaging."""
    P = _as_pred_matrix(probabilities)
    y = np.asarray(y, dtype=float).ravel()
    if np.any(P <= 0.0) or np.any(P >= 1.0):
        raise ProbabilityOutOfRangeError("probabilities must lie strictly in (0, 1)")
    w = _check_simplex(weights, P.shape[1])
    f_ens = P @ w
    per = -np.mean(y[:, None] * np.log(P) + (1 - y[:, None]) * np.log(1 - P), axis=0)
    accuracy = float(per @ w)
    total = float(-np.mean(y * np.log(f_ens) + (1 - y) * np.log(1 - f_ens)))
    diversity = accuracy - total
    proxy = float(np.mean((f_ens[:, None] - P) ** 2, axis=0) @ w)
    return DecompositionReport(total, accuracy, diversity, w, "probability", per, proxy)


def ce_decomposition_logodds(y, logits, weights) -> DecompositionReport:
    """Cross-entropy split with log-odds-space averaging."""
    F = _as_pred_matrix(logits)
    y = np.asarray(y, dtype=float).ravel()
    if not np.all(np.isfinite(F)):
        raise NonFiniteError("logits contain non-finite values")
    w = _check_simplex(weights, F.shape[1])
    f_ens = F @ w
    # y*log(1+e^-f) + (1-y)*log(1+e^f) == log(1+e^f) - y*f
    per = np.mean(log1pexp(F) - y[:, None] * F, axis=0)
    accuracy = float(per @ w)
    total = float(np.mean(log1pexp(f_ens) - y * f_ens))
    diversity = accuracy - total
    proxy = float(np.mean((f_ens[:, None] - F) ** 2, axis=0) @ w)
    return DecompositionReport(total, accuracy, diversity, w, "log_odds", per, proxy)


def project_to_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w : w >= 0, sum w = 1}."""
    v = np.asarray(v, dtype=float).ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.flatnonzero(u * np.arange(1, v.size + 1) > (css - 1.0))[-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _simplex_least_squares(P: np.ndarray, y: np.ndarray,
                           max_iter: int = 20_000, tol: float = 1e-13) -> np.ndarray:
    n, m = P.shape
    G = P.T @ P / n
    c = P.T @ y / n
    lips = float(np.linalg.eigvalsh(G)[-1])
    step = 1.0 / max(lips, 1e-12)
    w = np.full(m, 1.0 / m)
    for _ in range(max_iter):
        w_new = project_to_simplex(w - step * (G @ w - c))
        if np.max(np.abs(w_new - w)) < tol:
            w = w_new
            break
        w = w_new
    return w


def stacking_fit(predictions, y, mode: str = "unconstrained",
                 task: str = REGRESSION) -> StackingModel:
    """Second-stage fit on base-learner predictions.

    ``unconstrained`` runs OLS (or a logistic fit for classification) with
    an intercept; ``simplex`` solves the least-squares problem constrained
    to nonnegative weights summing to one, via projected gradient.
    """
    P = _as_pred_matrix(predictions)
    y = np.asarray(y, dtype=float).ravel()
    if P.shape[1] < 1:
        raise TooFewLearnersError("stacking needs at least one learner")

    if mode == "simplex":
        w = _simplex_least_squares(P, y)
        return StackingModel(weights=w, intercept=0.0, mode=mode)
    if mode != "unconstrained":
        raise ValueError(f"unknown stacking mode {mode!r}")

    if task == CLASSIFICATION:
        fit = logistic_fit(P, y)
        return StackingModel(weights=fit.coefficients, intercept=fit.intercept, mode=mode)
    design = np.hstack([np.ones((P.shape[0], 1)), P])
    fit = solve_least_squares(design, y)
    return StackingModel(weights=fit.coefficients[1:], intercept=float(fit.coefficients[0]),
                         mode=mode)


@dataclass
class SweepRow:
    cp: float
    mean_ratio: float
    accuracy: float = float("nan")
    diversity: float = float("nan")
    total: float = float("nan")
    error: str | None = None


def accuracy_diversity_sweep(X, y, cp_grid, config: LifeConfig,
                             task: str | None = None, n_jobs: int = 1) -> list:
    """One stacking (no-flattening) fit per cutoff point.

    Each grid point trains the base learners with that cp, combines their
    predictions with simplex weights, and decomposes the resulting loss.
    Fit failures are recorded on the row instead of aborting the sweep.
    Rows come back sorted by mean subset ratio.
    """
    cp_grid = list(cp_grid)
    if not cp_grid:
        raise ValueError("cp grid must be non-empty")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if task is None:
        u = np.unique(y)
        task = CLASSIFICATION if u.size <= 2 and np.all(np.isin(u, (0.0, 1.0))) else REGRESSION

    scaler = Scaler.fit(X) if config.standardize else Scaler.identity(X.shape[1])
    Xs = scaler.transform(X)

    rows = []
    for cp in cp_grid:
        cfg = replace(config, sampling=replace(config.sampling, cp=float(cp), seed=config.seed),
                      base_trainer=replace(config.base_trainer, seed=config.seed))
        try:
            learners, trace = fit_base_learners(Xs, y, cfg, task, n_jobs=n_jobs)
            preds = np.column_stack([nn_mod.forward(net, Xs) for net in learners])
            stack = stacking_fit(preds, y, mode="simplex", task=task)
            if task == REGRESSION:
                rep = mse_decomposition(y, preds, stack.weights)
            else:
                probs = np.clip(preds, 1e-12, 1 - 1e-12)
                rep = ce_decomposition_probability(y, probs, stack.weights)
            rows.append(SweepRow(cp=float(cp), mean_ratio=trace.mean_kept_ratio(),
                                 accuracy=rep.accuracy_term, diversity=rep.diversity_term,
                                 total=rep.total_loss))
        except Exception as exc:  # tagged per grid point
            rows.append(SweepRow(cp=float(cp), mean_ratio=float("nan"),
                                 error=f"{type(exc).__name__}: {exc}"))

    ok = [r for r in rows if r.error is None]
    bad = [r for r in rows if r.error is not None]
    return sorted(ok, key=lambda r: r.mean_ratio) + bad
