"""Single-hidden-layer ReLU network and its two trainers.

The network is ``f(x) = beta0 + sum_k beta_k * relu(b_k + w_k . x)`` for
regression, passed through the logistic link for classification.  Two
optimizers are provided:

* ``train_adam`` -- minibatch stochastic gradients with Adam moments.
* ``train_lla`` -- iterative least squares on the first-order Taylor
  linearization of each ReLU feature.  Per step it regresses the target
  on the features ``z1 = relu(pre)``, ``z2 = 1[pre > 0]`` and
  ``z3 = x * 1[pre > 0]`` and moves each neuron by
  ``b += gamma_hat / beta_hat``, ``w += eta_hat / beta_hat`` whenever
  ``|beta_hat|`` clears the stability threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .core_math import log1pexp, logistic_fit, sigmoid, solve_least_squares
from .errors import DimensionMismatchError, NonFiniteError, SingularSystemError


def _derive_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence((seed, stream)).generate_state(1)[0])

REGRESSION = "regression"
CLASSIFICATION = "classification"

LLA_DEFAULT_EPSILON = 1e-3
LLA_DEFAULT_MAX_ITER = 200
LLA_PARAM_TOL = 1e-6
# The linearized objective usually plateaus long before the parameter
# oscillation settles; stop after this many iterations without relative
# improvement above LLA_PLATEAU_RTOL.
LLA_PLATEAU_PATIENCE = 25
LLA_PLATEAU_RTOL = 1e-6
ADAM_DEFAULT_EPOCHS = 100


@dataclass
class SingleLayerNN:
    """Parameters of one ReLU single-hidden-layer network.

    hidden_weights has shape (K, p), row k holding w_k.
    """

    hidden_weights: np.ndarray
    hidden_biases: np.ndarray
    output_coefficients: np.ndarray
    output_intercept: float
    task: str = REGRESSION

    def __post_init__(self):
        self.hidden_weights = np.atleast_2d(np.asarray(self.hidden_weights, dtype=float))
        self.hidden_biases = np.asarray(self.hidden_biases, dtype=float).ravel()
        self.output_coefficients = np.asarray(self.output_coefficients, dtype=float).ravel()
        self.output_intercept = float(self.output_intercept)
        k = self.hidden_weights.shape[0]
        if self.hidden_biases.shape[0] != k or self.output_coefficients.shape[0] != k:
            raise DimensionMismatchError("weights, biases and coefficients disagree on K")
        if self.task not in (REGRESSION, CLASSIFICATION):
            raise ValueError(f"unknown task {self.task!r}")

    @property
    def n_hidden(self) -> int:
        return self.hidden_weights.shape[0]

    @property
    def n_inputs(self) -> int:
        return self.hidden_weights.shape[1]

    def to_json(self) -> str:
        doc = {
            "task": self.task,
            "p": self.n_inputs,
            "K": self.n_hidden,
            "W": self.hidden_weights.ravel().tolist(),
            "b": self.hidden_biases.tolist(),
            "beta": self.output_coefficients.tolist(),
            "beta0": self.output_intercept,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "SingleLayerNN":
        doc = json.loads(text)
        W = np.asarray(doc["W"], dtype=float).reshape(doc["K"], doc["p"])
        return cls(W, np.asarray(doc["b"]), np.asarray(doc["beta"]),
                   doc["beta0"], doc["task"])


@dataclass
class TrainConfig:
    """Knobs for both optimizers; irrelevant fields are ignored.

    ``epochs`` counts Adam epochs or linearization iterations; ``None``
    picks the per-optimizer default (100 / 200).  The linearized trainer
    is sensitive to its starting point, so it warms up ``restarts``
    seeded inits for ``restart_iters`` steps each and continues from the
    best one.
    """

    optimizer: str = "lla"
    hidden_units: int = 10
    epochs: int | None = None
    learning_rate: float = 0.01
    batch_size: int = 128
    lla_ridge: float = 0.0
    lla_epsilon: float = LLA_DEFAULT_EPSILON
    restarts: int = 3
    restart_iters: int = 8
    seed: int = 0

    def resolved_epochs(self) -> int:
        if self.epochs is not None:
            return int(self.epochs)
        return ADAM_DEFAULT_EPOCHS if self.optimizer == "adam" else LLA_DEFAULT_MAX_ITER


def hidden_activations(model: SingleLayerNN, X) -> np.ndarray:
    """N x K matrix with entries relu(b_k + x_i . w_k)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_inputs:
        raise DimensionMismatchError(
            f"X has {X.shape[1]} columns, model expects {model.n_inputs}")
    pre = X @ model.hidden_weights.T + model.hidden_biases
    return np.maximum(pre, 0.0)


def forward_linear(model: SingleLayerNN, X) -> np.ndarray:
    """Linear output (the log-odds when task is classification)."""
    act = hidden_activations(model, X)
    return model.output_intercept + act @ model.output_coefficients


def forward(model: SingleLayerNN, X) -> np.ndarray:
    """Model prediction: linear output, or its logistic link for classification."""
    z = forward_linear(model, X)
    if model.task == CLASSIFICATION:
        return sigmoid(z)
    return z


def _init_network(X: np.ndarray, y: np.ndarray, config: TrainConfig, task: str) -> SingleLayerNN:
    # Seeded normal weights scaled by 1/sqrt(p), zero biases, output layer
    # from one OLS solve on the initial activations.
    n, p = X.shape
    rng = np.random.default_rng(config.seed)
    W = rng.normal(scale=1.0 / np.sqrt(p), size=(config.hidden_units, p))
    b = np.zeros(config.hidden_units)
    act = np.maximum(X @ W.T + b, 0.0)
    design = np.hstack([np.ones((n, 1)), act])
    target = y if task == REGRESSION else y - 0.5
    fit = solve_least_squares(design, target)
    return SingleLayerNN(W, b, fit.coefficients[1:], fit.coefficients[0], task)


def _loss(model: SingleLayerNN, X: np.ndarray, y: np.ndarray) -> float:
    z = forward_linear(model, X)
    if model.task == CLASSIFICATION:
        return float(np.mean(log1pexp(z) - y * z))
    return float(np.mean((z - y) ** 2))


def loss_and_gradients(model: SingleLayerNN, X, y):
    """Full-batch training loss and its analytic parameter gradients.

    Returns ``(loss, (dW, db, dbeta, dbeta0))``; this is the same math the
    Adam trainer applies per minibatch.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    n = X.shape[0]
    pre = X @ model.hidden_weights.T + model.hidden_biases
    act = np.maximum(pre, 0.0)
    z = model.output_intercept + act @ model.output_coefficients
    if model.task == CLASSIFICATION:
        loss = float(np.mean(log1pexp(z) - y * z))
        dz = (sigmoid(z) - y) / n
    else:
        loss = float(np.mean((z - y) ** 2))
        dz = 2.0 * (z - y) / n
    d_act = np.outer(dz, model.output_coefficients) * (pre > 0)
    return loss, (d_act.T @ X, d_act.sum(axis=0), act.T @ dz, float(dz.sum()))


def _looks_binary(y: np.ndarray) -> bool:
    u = np.unique(y)
    return u.size <= 2 and np.all(np.isin(u, (0.0, 1.0)))


def _resolve_task(y: np.ndarray, task: str | None) -> str:
    if task is not None:
        return task
    return CLASSIFICATION if _looks_binary(y) else REGRESSION


def train_adam(X, y, config: TrainConfig, task: str | None = None) -> SingleLayerNN:
    """Minibatch Adam on MSE (regression) or logistic loss (classification).

    Deterministic for a fixed seed: initialization and the per-epoch
    shuffles come from one seeded generator.  ``task=None`` infers
    classification when y is 0/1.
    """
    if config.optimizer != "adam":
        raise ValueError("config.optimizer must be 'adam'")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    return _train_adam_task(X, y, config, _resolve_task(y, task))


def _train_adam_task(X, y, config: TrainConfig, task: str) -> SingleLayerNN:
    n, p = X.shape
    model = _init_network(X, y, config, task)
    rng = np.random.default_rng((config.seed, 0xADA))

    W = model.hidden_weights.copy()
    b = model.hidden_biases.copy()
    beta = model.output_coefficients.copy()
    beta0 = np.array([model.output_intercept])

    params = [W, b, beta, beta0]
    m = [np.zeros_like(q) for q in params]
    v = [np.zeros_like(q) for q in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    lr = config.learning_rate
    t = 0

    epochs = config.resolved_epochs()
    batch = max(1, min(config.batch_size, n))
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            Xb, yb = X[idx], y[idx]
            nb = Xb.shape[0]

            pre = Xb @ W.T + b
            act = np.maximum(pre, 0.0)
            z = beta0[0] + act @ beta
            if task == CLASSIFICATION:
                dz = (sigmoid(z) - yb) / nb
            else:
                dz = 2.0 * (z - yb) / nb

            g_beta0 = np.array([dz.sum()])
            g_beta = act.T @ dz
            d_act = np.outer(dz, beta) * (pre > 0)
            g_W = d_act.T @ Xb
            g_b = d_act.sum(axis=0)

            t += 1
            for q, g, mq, vq in zip(params, [g_W, g_b, g_beta, g_beta0], m, v):
                mq *= b1
                mq += (1 - b1) * g
                vq *= b2
                vq += (1 - b2) * g * g
                m_hat = mq / (1 - b1 ** t)
                v_hat = vq / (1 - b2 ** t)
                q -= lr * m_hat / (np.sqrt(v_hat) + eps)

        model = SingleLayerNN(W, b, beta, float(beta0[0]), task)
        epoch_loss = _loss(model, X, y)
        if not np.isfinite(epoch_loss):
            raise NonFiniteError(f"training loss diverged at epoch {epoch + 1}")

    return SingleLayerNN(W, b, beta, float(beta0[0]), task)


def _fast_least_squares(Z: np.ndarray, y: np.ndarray, ridge: float):
    """Normal-equations solve for the linearization loop.

    The Gram matrix gets a relative jitter floor so near-singular
    linearizations (nearly dead neurons) cannot blow the solve up; exact
    failures fall back to the minimum-norm lstsq path.  Returns
    ``(theta, objective)`` with the same objective convention as
    ``solve_least_squares``.
    """
    G = Z.T @ Z
    scale = float(np.trace(G)) / G.shape[0]
    lam = max(ridge, 1e-9 * scale)
    G[np.diag_indices_from(G)] += lam
    c = Z.T @ y
    try:
        theta = np.linalg.solve(G, c)
        if not np.all(np.isfinite(theta)):
            raise np.linalg.LinAlgError
    except np.linalg.LinAlgError:
        fit = solve_least_squares(Z, y, ridge)
        return fit.coefficients, fit.objective
    resid = y - Z @ theta
    return theta, float(resid @ resid + ridge * (theta @ theta))


def lla_features(X: np.ndarray, W: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Design matrix [1 | z1 | z2 | z3] for the linearized least squares.

    z1 (N x K) are the ReLU activations, z2 (N x K) the activity
    indicators and z3 (N x K*p) the inputs gated by those indicators.
    """
    n, p = X.shape
    k = W.shape[0]
    pre = X @ W.T + b
    active = pre > 0
    z1 = np.where(active, pre, 0.0)
    z2 = active.astype(float)
    z3 = (X[:, None, :] * active[:, :, None]).reshape(n, k * p)
    return np.hstack([np.ones((n, 1)), z1, z2, z3])


def apply_taylor_updates(W, b, beta_hat, gamma_hat, eta_hat, epsilon: float):
    """One linearization step: move (w_j, b_j) only when |beta_hat_j| >= epsilon."""
    W = W.copy()
    b = b.copy()
    moved = np.abs(beta_hat) >= epsilon
    for j in np.flatnonzero(moved):
        b[j] += gamma_hat[j] / beta_hat[j]
        W[j] += eta_hat[j] / beta_hat[j]
    return W, b, moved


def _split_lla_coefficients(theta: np.ndarray, k: int, p: int):
    beta0 = float(theta[0])
    beta_hat = theta[1:1 + k]
    gamma_hat = theta[1 + k:1 + 2 * k]
    eta_hat = theta[1 + 2 * k:].reshape(k, p)
    return beta0, beta_hat, gamma_hat, eta_hat


def train_lla(X, y, config: TrainConfig, task: str | None = None) -> SingleLayerNN:
    """Iterative linearized least squares for the ReLU network.

    Regression solves the plain (optionally ridged) least-squares problem
    each step; classification wraps every step in IRLS working responses
    and weights.  Stops when the max relative parameter change falls
    below 1e-6 or the iteration cap is reached, then refits the output
    layer on the final activations.
    """
    if config.optimizer != "lla":
        raise ValueError("config.optimizer must be 'lla'")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatchError("X and y row counts differ")
    task = _resolve_task(y, task)

    n, p = X.shape
    k = config.hidden_units

    ridge = config.lla_ridge
    if task == CLASSIFICATION:
        ridge = max(ridge, 1e-8)

    def step(W, b, beta, beta0):
        """One linearized least-squares update; returns the new state and
        the step's regression objective (tracks the updated parameters as
        long as no activation indicator flips)."""
        Z = lla_features(X, W, b)
        try:
            if task == CLASSIFICATION:
                z_lin = beta0 + np.maximum(X @ W.T + b, 0.0) @ beta
                prob = sigmoid(z_lin)
                wgt = np.clip(prob * (1 - prob), 1e-6, None)
                work = z_lin + (y - prob) / wgt
                sw = np.sqrt(wgt)
                theta, objective = _fast_least_squares(Z * sw[:, None], work * sw, ridge)
            else:
                theta, objective = _fast_least_squares(Z, y, ridge)
        except NonFiniteError:
            raise SingularSystemError(
                "linearized system unsolvable; raise lla_ridge") from None
        if not np.all(np.isfinite(theta)):
            raise SingularSystemError(
                "linearized solve returned non-finite values; raise lla_ridge")
        new_beta0, beta_hat, gamma_hat, eta_hat = _split_lla_coefficients(theta, k, p)
        W_new, b_new, _ = apply_taylor_updates(W, b, beta_hat, gamma_hat, eta_hat,
                                               config.lla_epsilon)
        return W_new, b_new, beta_hat, new_beta0, objective

    # Warm-up phase: several seeded inits, a few steps each, keep the best.
    best_start = None
    for r in range(max(1, config.restarts)):
        seed_r = config.seed if r == 0 else _derive_seed(config.seed, r)
        model = _init_network(X, y, replace(config, seed=seed_r), task)
        W, b = model.hidden_weights, model.hidden_biases
        beta, beta0 = model.output_coefficients, model.output_intercept
        obj = np.inf
        for _ in range(config.restart_iters if config.restarts > 1 else 0):
            W, b, beta, beta0, obj = step(W, b, beta, beta0)
        if best_start is None or obj < best_start[0]:
            best_start = (obj, W, b, beta, beta0)
    _, W, b, beta, beta0 = best_start

    best_obj = np.inf
    best_params = (W, b)
    stall = 0
    max_iter = config.resolved_epochs()
    for _ in range(max_iter):
        W_new, b_new, beta, beta0, obj = step(W, b, beta, beta0)

        if obj < best_obj * (1.0 - LLA_PLATEAU_RTOL):
            stall = 0
        else:
            stall += 1
        if obj < best_obj:
            best_obj = obj
            best_params = (W_new, b_new)

        delta_w = np.abs(W_new - W) / (1.0 + np.abs(W))
        delta_b = np.abs(b_new - b) / (1.0 + np.abs(b))
        W, b = W_new, b_new
        if max(delta_w.max(initial=0.0), delta_b.max(initial=0.0)) < LLA_PARAM_TOL:
            best_params = (W, b)
            break
        if stall >= LLA_PLATEAU_PATIENCE:
            break

    # Final output layer on the best activations seen.
    W, b = best_params
    act = np.maximum(X @ W.T + b, 0.0)
    if task == CLASSIFICATION:
        out = logistic_fit(act, y, ridge=max(config.lla_ridge, 1e-8))
        return SingleLayerNN(W, b, out.coefficients, out.intercept, task)
    design = np.hstack([np.ones((n, 1)), act])
    out = solve_least_squares(design, y, ridge=0.0)
    return SingleLayerNN(W, b, out.coefficients[1:], out.coefficients[0], task)


def train(X, y, config: TrainConfig, task: str | None = None) -> SingleLayerNN:
    """Dispatch to the configured optimizer."""
    if config.optimizer == "adam":
        return train_adam(X, y, config, task)
    if config.optimizer == "lla":
        return train_lla(X, y, config, task)
    raise ValueError(f"unknown optimizer {config.optimizer!r}")
