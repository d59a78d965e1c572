"""Base-learner selection: drop learners whose prediction errors are most
explainable by the other learners' errors, then refit the aggregation.

For each learner j the training residuals r(j) are regressed on all the
other learners' residuals; a high R^2 means learner j adds little
diversity.  Learners are removed greedily by highest R^2 until the
requested fraction remains.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import nn as nn_mod
from .core_math import solve_least_squares
from .datasets import log_loss, r2_score
from .errors import TooFewLearnersError
from .pipeline import FitTrace, LifeModel, _flatten_bank, aggregate_features
from .nn import REGRESSION


@dataclass
class SelectionReport:
    """Outcome of one selection run.

    ``r_squared`` holds the first-round R^2 per learner; ``score_curve``
    tracks (neuron count, training fit score) after each removal, the fit
    score being R^2 for regression and 1 - logloss/logloss_null otherwise.
    """

    r_squared: list
    removal_order: list
    retained: list
    tau: float
    degenerate: list = field(default_factory=list)
    score_curve: list = field(default_factory=list)


def _residual_r2(per_learner_residuals: np.ndarray, active: list, n_jobs: int = 1) -> dict:
    """R^2 of regressing each active learner's residuals on the others'."""

    def one(j):
        others = [k for k in active if k != j]
        r = per_learner_residuals[:, j]
        sst = float(np.sum((r - r.mean()) ** 2))
        if sst == 0.0:
            return j, None  # fits the training data exactly
        design = np.hstack([np.ones((r.shape[0], 1)), per_learner_residuals[:, others]])
        fit = solve_least_squares(design, r)
        sse = float(np.sum((r - design @ fit.coefficients) ** 2))
        return j, 1.0 - sse / sst

    if n_jobs > 1 and len(active) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            return dict(pool.map(one, active))
    return dict(one(j) for j in active)


def _training_score(model: LifeModel, X, y) -> float:
    if model.task == REGRESSION:
        return r2_score(y, model.predict(X))
    null = log_loss(y, np.full_like(y, y.mean()))
    return 1.0 - log_loss(y, model.predict(X)) / null


def _rebuild(model: LifeModel, retained: list, X, y) -> LifeModel:
    learners = [model.base_learners[j] for j in retained]
    final_iter = len(model.config.hidden_per_iteration)
    W, b, provenance = _flatten_bank(learners, final_iter)
    feats = np.maximum(model.scaler.transform(np.atleast_2d(np.asarray(X, float))) @ W.T + b, 0.0)
    beta, intercept, dead = aggregate_features(feats, y, model.config.aggregation,
                                               model.task, seed=model.config.seed)
    trace = FitTrace(iterations=model.trace.iterations, dead_features=dead)
    return replace(model, hidden_weights=W, hidden_biases=b, beta=beta,
                   intercept=intercept, provenance=provenance,
                   base_learners=learners, trace=trace)


def base_learner_selection(model: LifeModel, X, y, tau: float,
                           recompute_r2: bool = True, n_jobs: int = 1):
    """Prune base learners down to a ceil(tau * M) retained set.

    Returns ``(report, pruned_model)``.  With ``recompute_r2`` the
    residual regressions are rerun after every removal (the pool they are
    fit against changes); switching it off ranks once and removes in that
    fixed order.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must be in (0, 1]")
    m = len(model.base_learners)
    if m < 2:
        raise TooFewLearnersError(f"selection needs at least 2 learners, got {m}")

    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    Xs = model.scaler.transform(X)
    preds = np.column_stack([nn_mod.forward(net, Xs) for net in model.base_learners])
    residuals = y[:, None] - preds

    active = list(range(m))
    first_round = _residual_r2(residuals, active, n_jobs)
    degenerate = sorted(j for j, v in first_round.items() if v is None)
    r_squared = [0.0 if first_round[j] is None else float(first_round[j]) for j in range(m)]

    target = math.ceil(tau * m)
    removal_order: list = []
    score_curve = [(model.n_neurons, _training_score(model, X, y))]

    current = dict(first_round)
    pruned = model
    while len(active) > target:
        candidates = {j: v for j, v in current.items() if v is not None}
        if not candidates:
            break  # every remaining learner is degenerate-exact; keep them all
        worst = max(candidates, key=lambda j: (candidates[j], -j))
        removal_order.append(worst)
        active.remove(worst)
        pruned = _rebuild(model, active, X, y)
        score_curve.append((pruned.n_neurons, _training_score(pruned, X, y)))
        if recompute_r2 and len(active) > target:
            current = _residual_r2(residuals, active, n_jobs)
        elif not recompute_r2:
            current = {j: v for j, v in current.items() if j in active}

    report = SelectionReport(r_squared=r_squared, removal_order=removal_order,
                             retained=sorted(active), tau=tau,
                             degenerate=degenerate, score_curve=score_curve)
    return report, pruned
