"""End-to-end ensemble fit: hierarchical projection sampling, parallel
narrow-network training, neuron flattening, and regularized aggregation.

Iteration 1 trains one network on the full data.  Each later iteration
turns every hidden neuron of the previous iteration into a candidate
subset (evaluated against the FULL training set), drops subsets whose
size ratio leaves (l, u), and trains one new network per kept subset.
The final iteration's neurons are flattened into one wide feature matrix
and re-weighted jointly by a single linear or logistic fit.
"""

from __future__ import annotations

import json
import logging
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import nn as nn_mod
from .core_math import (
    elastic_net_fit,
    enet_gaussian_gram,
    log1pexp,
    logistic_fit,
    solve_least_squares,
)
from .datasets import Scaler
from .errors import (
    AllNeuronsDroppedError,
    DimensionMismatchError,
    NoConvergenceWarning,
    NonFiniteError,
    SchemaMismatchError,
)
from .nn import CLASSIFICATION, REGRESSION, SingleLayerNN, TrainConfig, hidden_activations
from .sampling import (
    BOOTSTRAP,
    NN_PROJECTION,
    RANDOM_PROJECTION,
    SamplingConfig,
    bootstrap_subsets,
    coverage_fraction,
    filter_by_size,
    project_subset,
    random_projection_subsets,
)

log = logging.getLogger(__name__)

MODEL_FILE_VERSION = 1

# Penalty grid scanned when aggregation runs in cross-validated mode.
# Every cell carries at least a whisper of l2 so coordinate descent stays
# fast on exactly collinear flattened features.
CV_GRID = tuple((l1, l2) for l1 in (0.0, 1e-3, 1e-2) for l2 in (1e-4, 1e-2))
CV_MAX_SWEEPS = 1_000
CV_TOL = 1e-7


@dataclass
class AggregationConfig:
    """How the flattened features are combined.

    mode "none" is a plain OLS / logistic fit, "fixed" applies the given
    elastic-net penalties, "cv" picks (l1, l2) from a small grid by
    k-fold cross-validation.
    """

    mode: str = "cv"
    l1: float = 0.0
    l2: float = 0.0
    cv_folds: int = 5

    def __post_init__(self):
        if self.mode not in ("none", "fixed", "cv"):
            raise ValueError(f"unknown aggregation mode {self.mode!r}")


@dataclass
class LifeConfig:
    hidden_per_iteration: list = field(default_factory=lambda: [10, 10])
    sampling: SamplingConfig = field(default_factory=SamplingConfig)
    base_trainer: TrainConfig = field(default_factory=TrainConfig)
    aggregation: AggregationConfig | None = field(default_factory=AggregationConfig)
    seed: int = 0
    standardize: bool = True

    def __post_init__(self):
        ks = list(self.hidden_per_iteration)
        if not ks or any(int(k) < 1 for k in ks):
            raise ValueError("hidden_per_iteration needs J >= 1 positive entries")
        self.hidden_per_iteration = [int(k) for k in ks]


@dataclass
class IterationTrace:
    iteration: int
    considered: int
    kept: int
    neuron_ids: list = field(default_factory=list)
    ratios: list = field(default_factory=list)
    kept_mask: list = field(default_factory=list)
    coverage: float = 1.0
    seconds: float = 0.0


@dataclass
class FitTrace:
    iterations: list = field(default_factory=list)
    dead_features: list = field(default_factory=list)

    def mean_kept_ratio(self) -> float:
        """Average size ratio of the subsets actually used for training."""
        ratios = [r for it in self.iterations if it.iteration > 1
                  for r, keep in zip(it.ratios, it.kept_mask) if keep]
        return float(np.mean(ratios)) if ratios else 1.0


def _derived_seed(seed: int, iteration: int, learner: int) -> int:
    return int(np.random.SeedSequence((seed, iteration, learner)).generate_state(1)[0])


@dataclass
class LifeModel:
    """The fitted ensemble: a flattened neuron bank plus its output layer."""

    task: str
    scaler: Scaler
    hidden_weights: np.ndarray
    hidden_biases: np.ndarray
    beta: np.ndarray
    intercept: float
    provenance: list
    base_learners: list
    trace: FitTrace
    config: LifeConfig

    @property
    def n_neurons(self) -> int:
        return self.hidden_weights.shape[0]

    def flatten_to_single_nn(self) -> SingleLayerNN:
        """The equivalent wide single-hidden-layer network.

        Operates on standardized inputs, i.e. on ``scaler.transform(X)``.
        """
        return SingleLayerNN(self.hidden_weights.copy(), self.hidden_biases.copy(),
                             self.beta.copy(), self.intercept, self.task)

    def predict_linear(self, X) -> np.ndarray:
        """Linear output; the log-odds when the task is classification."""
        return nn_mod.forward_linear(self.flatten_to_single_nn(),
                                     self.scaler.transform(np.atleast_2d(np.asarray(X, float))))

    def predict(self, X) -> np.ndarray:
        return nn_mod.forward(self.flatten_to_single_nn(),
                              self.scaler.transform(np.atleast_2d(np.asarray(X, float))))

    def to_json(self) -> str:
        doc = {
            "version": MODEL_FILE_VERSION,
            "task": self.task,
            "config": _config_to_dict(self.config),
            "scaler": self.scaler.to_dict(),
            "neuron_bank": {
                "W": self.hidden_weights.ravel().tolist(),
                "b": self.hidden_biases.tolist(),
                "p": self.hidden_weights.shape[1],
                "m": self.hidden_weights.shape[0],
            },
            "beta": self.beta.tolist(),
            "intercept": self.intercept,
            "provenance": [list(pv) for pv in self.provenance],
            "base_learners": [json.loads(bl.to_json()) for bl in self.base_learners],
            "trace": {
                "iterations": [asdict(it) for it in self.trace.iterations],
                "dead_features": list(self.trace.dead_features),
            },
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "LifeModel":
        doc = json.loads(text)
        version = doc.get("version")
        if version != MODEL_FILE_VERSION:
            raise SchemaMismatchError(
                f"model file version {version!r} unsupported (expected {MODEL_FILE_VERSION})")
        bank = doc["neuron_bank"]
        W = np.asarray(bank["W"], dtype=float).reshape(bank["m"], bank["p"])
        trace = FitTrace(
            iterations=[IterationTrace(**it) for it in doc["trace"]["iterations"]],
            dead_features=list(doc["trace"]["dead_features"]),
        )
        return cls(
            task=doc["task"],
            scaler=Scaler.from_dict(doc["scaler"]),
            hidden_weights=W,
            hidden_biases=np.asarray(bank["b"], dtype=float),
            beta=np.asarray(doc["beta"], dtype=float),
            intercept=float(doc["intercept"]),
            provenance=[tuple(pv) for pv in doc["provenance"]],
            base_learners=[SingleLayerNN.from_json(json.dumps(bl))
                           for bl in doc["base_learners"]],
            trace=trace,
            config=_config_from_dict(doc["config"]),
        )


def _config_to_dict(config: LifeConfig) -> dict:
    return asdict(config)


def _config_from_dict(doc: dict) -> LifeConfig:
    agg = doc.get("aggregation")
    return LifeConfig(
        hidden_per_iteration=list(doc["hidden_per_iteration"]),
        sampling=SamplingConfig(**doc["sampling"]),
        base_trainer=TrainConfig(**doc["base_trainer"]),
        aggregation=None if agg is None else AggregationConfig(**agg),
        seed=int(doc["seed"]),
        standardize=bool(doc.get("standardize", True)),
    )


def _train_one(Xs, y, base: TrainConfig, k: int, iteration: int, learner: int,
               task: str, indices=None) -> SingleLayerNN:
    cfg = replace(base, hidden_units=k, seed=_derived_seed(base.seed, iteration, learner))
    if indices is not None:
        Xs, y = Xs[indices], y[indices]
    return nn_mod.train(Xs, y, cfg, task)


def fit_base_learners(Xs, y, config: LifeConfig, task: str, n_jobs: int = 1):
    """Run the sampling hierarchy on standardized inputs.

    Returns ``(learners, trace)`` where ``learners`` are the
    final-iteration networks in a deterministic order.
    """
    ks = config.hidden_per_iteration
    n = Xs.shape[0]
    samp = config.sampling
    trace = FitTrace()

    t0 = time.perf_counter()
    if samp.scheme == NN_PROJECTION:
        current = [_train_one(Xs, y, config.base_trainer, ks[0], 1, 0, task)]
        trace.iterations.append(IterationTrace(
            iteration=1, considered=1, kept=1, neuron_ids=[0], ratios=[1.0],
            kept_mask=[True], coverage=1.0, seconds=time.perf_counter() - t0))

        for j in range(2, len(ks) + 1):
            t0 = time.perf_counter()
            specs = []
            for net in current:
                for w, b in zip(net.hidden_weights, net.hidden_biases):
                    specs.append(project_subset(w, b, samp.cp, Xs))
            kept_mask = [filter_by_size(s, samp.lower, samp.upper) for s in specs]
            kept_specs = [s for s, keep in zip(specs, kept_mask) if keep]
            if not kept_specs:
                raise AllNeuronsDroppedError(j, [s.ratio for s in specs])
            uncovered = 1.0 - coverage_fraction(n, kept_specs)
            if uncovered > 0:
                log.info("iteration %d: %.1f%% of training rows not covered by any kept subset",
                         j, 100 * uncovered)

            jobs = [(idx, s.indices) for idx, s in enumerate(kept_specs)]
            current = _train_many(Xs, y, config.base_trainer, ks[j - 1], j, jobs, task, n_jobs)
            trace.iterations.append(IterationTrace(
                iteration=j, considered=len(specs), kept=len(kept_specs),
                neuron_ids=list(range(len(specs))), ratios=[s.ratio for s in specs],
                kept_mask=list(kept_mask), coverage=coverage_fraction(n, kept_specs),
                seconds=time.perf_counter() - t0))
        return current, trace

    # Ablation schemes: the hierarchy collapses to a flat list of subsets,
    # one candidate per would-be neuron of the last sampling iteration.
    n_candidates = int(np.prod(ks[:-1])) if len(ks) > 1 else 1
    if len(ks) == 1:
        current = [_train_one(Xs, y, config.base_trainer, ks[0], 1, 0, task)]
        trace.iterations.append(IterationTrace(
            iteration=1, considered=1, kept=1, neuron_ids=[0], ratios=[1.0],
            kept_mask=[True], coverage=1.0, seconds=time.perf_counter() - t0))
        return current, trace

    if samp.scheme == RANDOM_PROJECTION:
        specs = random_projection_subsets(Xs, n_candidates, samp)
        kept_mask = [filter_by_size(s, samp.lower, samp.upper) for s in specs]
        kept = [(idx, s.indices) for idx, (s, keep) in enumerate(zip(specs, kept_mask)) if keep]
        ratios = [s.ratio for s in specs]
        if not kept:
            raise AllNeuronsDroppedError(2, ratios)
        kept_specs = [s for s, keepit in zip(specs, kept_mask) if keepit]
        cov = coverage_fraction(n, kept_specs)
    else:  # bootstrap
        draws = bootstrap_subsets(n, n_candidates, samp.seed)
        kept_mask = [True] * len(draws)
        kept = list(enumerate(draws))
        ratios = [len(np.unique(d)) / n for d in draws]
        cov = 1.0

    jobs = [(idx, indices) for idx, (_, indices) in enumerate(kept)]
    learners = _train_many(Xs, y, config.base_trainer, ks[-1], 2, jobs, task, n_jobs)
    trace.iterations.append(IterationTrace(
        iteration=2, considered=len(kept_mask), kept=len(jobs),
        neuron_ids=list(range(len(kept_mask))), ratios=ratios,
        kept_mask=list(kept_mask), coverage=cov, seconds=time.perf_counter() - t0))
    return learners, trace


def _train_many(Xs, y, base, k, iteration, jobs, task, n_jobs):
    def run(job):
        idx, indices = job
        return nn_mod.train(Xs[indices], y[indices],
                            replace(base, hidden_units=k,
                                    seed=_derived_seed(base.seed, iteration, idx)),
                            task)

    if n_jobs <= 1 or len(jobs) <= 1:
        return [run(job) for job in jobs]
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(run, jobs))


def _flatten_bank(learners, final_iteration: int):
    Ws, bs, provenance = [], [], []
    for li, net in enumerate(learners):
        for w, b in zip(net.hidden_weights, net.hidden_biases):
            Ws.append(w)
            bs.append(b)
            provenance.append((final_iteration, li))
    return np.vstack(Ws), np.asarray(bs), provenance


def extract_features(model_or_bank, X) -> np.ndarray:
    """N x m matrix of flattened neuron activations relu(b_k + x.w_k).

    Accepts a LifeModel (X given in original units), a SingleLayerNN, or
    a ``(W, b)`` pair (both taking already-standardized inputs).
    """
    if isinstance(model_or_bank, LifeModel):
        Xs = model_or_bank.scaler.transform(np.atleast_2d(np.asarray(X, float)))
        W, b = model_or_bank.hidden_weights, model_or_bank.hidden_biases
    elif isinstance(model_or_bank, SingleLayerNN):
        return hidden_activations(model_or_bank, X)
    else:
        W, b = model_or_bank
        W = np.atleast_2d(np.asarray(W, float))
        b = np.asarray(b, float).ravel()
        Xs = np.atleast_2d(np.asarray(X, float))
    if Xs.shape[1] != W.shape[1]:
        raise DimensionMismatchError("input width does not match the neuron bank")
    return np.maximum(Xs @ W.T + b, 0.0)


def _standardized_enet(feats, y, l1, l2, task, alive):
    mu = feats[:, alive].mean(axis=0)
    sd = feats[:, alive].std(axis=0)
    Z = (feats[:, alive] - mu) / sd
    family = "regression" if task == REGRESSION else "logistic"
    fit = elastic_net_fit(Z, y, l1, l2, family=family)
    beta = np.zeros(feats.shape[1])
    beta[alive] = fit.coefficients / sd
    intercept = fit.intercept - float((fit.coefficients * mu / sd).sum())
    return beta, intercept


def _cv_grid_losses(feats, y, task, folds, seed):
    """Mean validation loss per CV_GRID cell; one Gram pass per fold."""
    n = feats.shape[0]
    rng = np.random.default_rng((seed, 0xCF))
    order = rng.permutation(n)
    bounds = np.linspace(0, n, folds + 1).astype(int)
    losses = np.zeros(len(CV_GRID))
    for f in range(folds):
        va = order[bounds[f]:bounds[f + 1]]
        tr = np.concatenate([order[:bounds[f]], order[bounds[f + 1]:]])
        alive = feats[tr].std(axis=0) > 0
        Xtr = feats[tr][:, alive]
        mu, sd = Xtr.mean(axis=0), Xtr.std(axis=0)
        Z = (Xtr - mu) / sd
        Zva = (feats[va][:, alive] - mu) / sd

        if task == REGRESSION:
            y_mean = float(y[tr].mean())
            yc = y[tr] - y_mean
            G = Z.T @ Z / Z.shape[0]
            c = Z.T @ yc / Z.shape[0]
            ysq = float(yc @ yc) / Z.shape[0]
            for g, (l1, l2) in enumerate(CV_GRID):
                beta, *_ = enet_gaussian_gram(G, c, ysq, l1, l2,
                                              max_sweeps=CV_MAX_SWEEPS, tol=CV_TOL)
                pred = y_mean + Zva @ beta
                losses[g] += float(np.mean((y[va] - pred) ** 2))
        else:
            for g, (l1, l2) in enumerate(CV_GRID):
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", NoConvergenceWarning)
                    fit = elastic_net_fit(Z, y[tr], l1, l2, family="logistic",
                                          max_sweeps=CV_MAX_SWEEPS, tol=CV_TOL)
                z = fit.intercept + Zva @ fit.coefficients
                losses[g] += float(np.mean(log1pexp(z) - y[va] * z))
    return losses / folds


def aggregate_features(feats, y, aggregation: AggregationConfig | None, task: str,
                       seed: int = 0):
    """Fit the output layer on flattened features.

    Returns ``(beta, intercept, dead_feature_ids)``.  Dead (all-zero)
    columns get coefficient 0 and are reported so the trace can flag them.
    """
    feats = np.asarray(feats, dtype=float)
    dead = np.flatnonzero(feats.std(axis=0) == 0.0)
    alive = feats.std(axis=0) > 0.0

    if aggregation is None or aggregation.mode == "none":
        beta = np.zeros(feats.shape[1])
        if task == REGRESSION:
            design = np.hstack([np.ones((feats.shape[0], 1)), feats[:, alive]])
            fit = solve_least_squares(design, y)
            beta[alive] = fit.coefficients[1:]
            intercept = float(fit.coefficients[0])
        else:
            fit = logistic_fit(feats[:, alive], y, ridge=0.0)
            beta[alive] = fit.coefficients
            intercept = fit.intercept
        return beta, intercept, dead.tolist()

    if aggregation.mode == "fixed":
        beta, intercept = _standardized_enet(feats, y, aggregation.l1, aggregation.l2,
                                             task, alive)
        return beta, intercept, dead.tolist()

    losses = _cv_grid_losses(feats, y, task, aggregation.cv_folds, seed)
    l1, l2 = CV_GRID[int(np.argmin(losses))]
    log.debug("aggregation CV picked l1=%g l2=%g", l1, l2)
    beta, intercept = _standardized_enet(feats, y, l1, l2, task, alive)
    return beta, intercept, dead.tolist()


def fit(X, y, config: LifeConfig, task: str | None = None, n_jobs: int = 1) -> LifeModel:
    """Fit the full ensemble.

    ``task=None`` infers classification when y only takes values 0/1.
    Deterministic for a fixed config: every learner draws its own seed
    from (seed, iteration, learner id).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError("X and y row counts differ")
    if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
        raise NonFiniteError("training data contains non-finite values")
    if X.shape[0] <= max(10, max(config.hidden_per_iteration)):
        raise ValueError("need more rows than max(10, largest hidden width)")

    if task is None:
        u = np.unique(y)
        task = CLASSIFICATION if u.size <= 2 and np.all(np.isin(u, (0.0, 1.0))) else REGRESSION

    base = replace(config.base_trainer, seed=config.seed)
    cfg = replace(config, base_trainer=base,
                  sampling=replace(config.sampling, seed=config.seed))

    scaler = Scaler.fit(X) if config.standardize else Scaler.identity(X.shape[1])
    Xs = scaler.transform(X)

    learners, trace = fit_base_learners(Xs, y, cfg, task, n_jobs=n_jobs)
    W, b, provenance = _flatten_bank(learners, len(cfg.hidden_per_iteration))

    feats = np.maximum(Xs @ W.T + b, 0.0)
    beta, intercept, dead = aggregate_features(feats, y, cfg.aggregation, task,
                                               seed=cfg.seed)
    trace.dead_features = dead
    if dead:
        log.info("flattened features %s are identically zero on the training data", dead)

    return LifeModel(task=task, scaler=scaler, hidden_weights=W, hidden_biases=b,
                     beta=beta, intercept=intercept, provenance=provenance,
                     base_learners=learners, trace=trace, config=cfg)


def refit_output_layer(model: LifeModel, X, y) -> LifeModel:
    """Re-run the aggregation step of an existing model on (X, y)."""
    feats = extract_features(model, X)
    beta, intercept, dead = aggregate_features(feats, y, model.config.aggregation,
                                               model.task, seed=model.config.seed)
    trace = FitTrace(iterations=model.trace.iterations, dead_features=dead)
    return replace(model, beta=beta, intercept=intercept, trace=trace)
