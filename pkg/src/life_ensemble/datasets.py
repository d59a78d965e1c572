"""Simulation generators, tabular ingestion, and evaluation metrics.

The three synthetic generators (additive, additive-index and
multiple-index response surfaces) use fixed coefficient sets over six
i.i.d. predictors and return the noiseless/linked signal alongside the
sampled data so oracle metrics can be computed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
import pandas as pd

from .core_math import sigmoid
from .errors import (
    DegenerateColumnError,
    DimensionMismatchError,
    MissingTargetError,
    ParseError,
)

CONTINUOUS = "continuous"
DUMMY = "dummy"


@dataclass
class Scaler:
    """Column-wise affine map x -> (x - mean) / std; dummies pass through."""

    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        self.means = np.asarray(self.means, dtype=float).ravel()
        self.stds = np.asarray(self.stds, dtype=float).ravel()
        if self.means.shape != self.stds.shape:
            raise DimensionMismatchError("means and stds differ in length")

    @classmethod
    def identity(cls, p: int) -> "Scaler":
        return cls(np.zeros(p), np.ones(p))

    @classmethod
    def fit(cls, X: np.ndarray, continuous_mask=None) -> "Scaler":
        X = np.asarray(X, dtype=float)
        p = X.shape[1]
        means = np.zeros(p)
        stds = np.ones(p)
        mask = np.ones(p, dtype=bool) if continuous_mask is None else np.asarray(continuous_mask)
        for j in np.flatnonzero(mask):
            sd = float(X[:, j].std())
            if sd == 0.0:
                raise DegenerateColumnError(f"column {j} has zero variance")
            means[j] = float(X[:, j].mean())
            stds[j] = sd
        return cls(means, stds)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (X - self.means) / self.stds

    def inverse_transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return X * self.stds + self.means

    def is_identity(self) -> bool:
        return bool(np.all(self.means == 0.0) and np.all(self.stds == 1.0))

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "stds": self.stds.tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "Scaler":
        return cls(np.asarray(doc["means"]), np.asarray(doc["stds"]))


@dataclass
class Dataset:
    """Tabular data plus the bookkeeping needed for honest preprocessing."""

    X: np.ndarray
    y: np.ndarray
    names: list = field(default_factory=list)
    kinds: list = field(default_factory=list)
    scaler: Scaler | None = None
    signal: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        self.y = np.asarray(self.y, dtype=float).ravel()
        if self.X.shape[0] != self.y.shape[0]:
            raise DimensionMismatchError("X and y row counts differ")
        if not self.names:
            self.names = [f"x{j + 1}" for j in range(self.X.shape[1])]
        if not self.kinds:
            self.kinds = [CONTINUOUS] * self.X.shape[1]

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def continuous_mask(self) -> np.ndarray:
        return np.array([k == CONTINUOUS for k in self.kinds])

    def to_raw(self) -> "Dataset":
        """Undo any stored standardization."""
        if self.scaler is None:
            return self
        X_raw = self.scaler.inverse_transform(self.X)
        return replace(self, X=X_raw, scaler=None)


# Coefficient sets for the three simulated response surfaces.
GAM_BETA = (1.5, np.sqrt(5.0), 2.0, 4.0 * np.exp(-1.5 / 7.0), 4.0 * np.log(1.5), -4.0)
AIM_BETA = (3.0, -2.5, 2.0, -1.5, 1.5, -1.0)
MIM_BETA = (0.03, -0.025, 1.0, -3.0, 1.5, -2.0)


def _gam_regression(X: np.ndarray) -> np.ndarray:
    b = GAM_BETA
    return (b[0] * X[:, 0]
            + b[1] * np.sqrt(np.abs(X[:, 1]))
            + b[2] * np.abs(X[:, 2])
            + b[3] * np.exp(X[:, 3])
            + b[4] * np.log(np.abs(X[:, 4]))
            + b[5] * np.maximum(1.0, X[:, 5]))


def _aim_regression(X: np.ndarray) -> np.ndarray:
    b = AIM_BETA
    idx1 = b[0] * X[:, 0] + b[1] * X[:, 1] + b[2] * X[:, 2] + b[3] * X[:, 3]
    idx2 = b[2] * X[:, 2] + b[3] * X[:, 3] + b[4] * X[:, 4] + b[5] * X[:, 5]
    idx3 = b[4] * X[:, 4] + b[5] * X[:, 5]
    return 2.0 * np.log(np.abs(idx1)) + np.exp(idx2 / 9.0) + np.maximum(0.0, idx3)


def _mim_regression(X: np.ndarray) -> np.ndarray:
    b = MIM_BETA
    return (np.exp(b[0] * X[:, 0] + b[1] * X[:, 1]) * b[2] * X[:, 2]
            + b[3] * X[:, 3] / (1.0 + b[4] * np.abs(X[:, 4]))
            + np.maximum(2.0, b[5] * X[:, 5]))


def _gam_classification(X: np.ndarray) -> np.ndarray:
    return (1.5 * X[:, 0]
            + 4.0 * np.sqrt(np.abs(-2.5 * X[:, 1]))
            + 2.0 * np.abs(X[:, 2])
            + 4.0 * np.exp(-(3.0 / 14.0) * X[:, 3])
            + 4.0 * np.log(1.5 * np.abs(X[:, 4]))
            - 4.0 * np.maximum(1.0, X[:, 5]))


def _aim_classification(X: np.ndarray) -> np.ndarray:
    idx1 = 3.0 * X[:, 0] - 2.5 * X[:, 1] + 2.0 * X[:, 2] - 1.5 * X[:, 3]
    idx2 = (-1.5 * X[:, 3] + 1.5 * X[:, 4] - X[:, 5]) / 11.0
    return np.log(np.abs(idx1)) + np.exp(idx2)


def _mim_classification(X: np.ndarray) -> np.ndarray:
    return (np.exp(0.03 * X[:, 0] - 0.025 * X[:, 1]) * X[:, 2]
            - 3.0 * X[:, 3] / (1.0 + 1.5 * np.abs(X[:, 4]))
            + 2.0 * np.maximum(1.0, X[:, 5]))


_FORMS = {
    ("gam", "regression"): _gam_regression,
    ("aim", "regression"): _aim_regression,
    ("mim", "regression"): _mim_regression,
    ("gam", "classification"): _gam_classification,
    ("aim", "classification"): _aim_classification,
    ("mim", "classification"): _mim_classification,
}

N_SIM_PREDICTORS = 6


@dataclass
class SimSpec:
    form: str = "gam"
    task: str = "regression"
    n: int = 20_000
    predictor_dist: str = "normal"
    seed: int = 0

    def to_dict(self) -> dict:
        return {"form": self.form, "task": self.task, "n": self.n,
                "predictor_dist": self.predictor_dist, "seed": self.seed}


def generate(spec: SimSpec):
    """Draw a synthetic dataset.

    Returns ``(dataset, signal)``.  For regression the signal is the
    noiseless surface and ``y = signal + N(0,1)`` noise.  For
    classification the surface plus N(0,1) noise forms the logit, labels
    are Bernoulli draws, and the signal is the per-row true probability.
    """
    if (spec.form, spec.task) not in _FORMS:
        raise ValueError(f"unknown form/task combination {spec.form!r}/{spec.task!r}")
    if spec.n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(spec.seed)
    if spec.predictor_dist == "normal":
        X = rng.normal(size=(spec.n, N_SIM_PREDICTORS))
    elif spec.predictor_dist == "laplace":
        X = rng.laplace(scale=1.0, size=(spec.n, N_SIM_PREDICTORS))
    else:
        raise ValueError(f"unknown predictor distribution {spec.predictor_dist!r}")

    surface = _FORMS[(spec.form, spec.task)](X)
    noise = rng.normal(size=spec.n)
    if spec.task == "regression":
        y = surface + noise
        signal = surface
    else:
        prob = sigmoid(surface + noise)
        y = (rng.uniform(size=spec.n) < prob).astype(float)
        signal = prob

    ds = Dataset(X=X, y=y, signal=signal)
    return ds, signal


def split(dataset: Dataset, fraction: float, seed: int):
    """Seeded shuffle split; the scaler is fit on train only.

    Continuous columns of the returned train split have mean 0 / std 1;
    the test split is transformed with the train scaler.
    """
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    raw = dataset.to_raw()
    n = raw.n_rows
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = int(round(fraction * n))
    tr, te = order[:n_train], order[n_train:]

    scaler = Scaler.fit(raw.X[tr], raw.continuous_mask)
    train = replace(raw, X=scaler.transform(raw.X[tr]), y=raw.y[tr], scaler=scaler,
                    signal=None if raw.signal is None else raw.signal[tr])
    test = replace(raw, X=scaler.transform(raw.X[te]), y=raw.y[te], scaler=scaler,
                   signal=None if raw.signal is None else raw.signal[te])
    return train, test


def load_csv(path, target: str, dummy_encode: bool = True,
             standardize: bool = True) -> Dataset:
    """Read a CSV into a Dataset.

    Categorical columns become one-hot dummies (first level dropped);
    continuous columns are standardized when ``standardize`` is set, with
    the scaler stored on the dataset.
    """
    try:
        frame = pd.read_csv(path)
    except FileNotFoundError:
        raise
    except Exception as exc:  # malformed content
        raise ParseError(f"could not parse {path}: {exc}") from exc
    if target not in frame.columns:
        raise MissingTargetError(f"target column {target!r} not found in {path}")

    y = frame[target].to_numpy(dtype=float)
    feats = frame.drop(columns=[target])

    columns = []
    names = []
    kinds = []
    for col in feats.columns:
        series = feats[col]
        if series.dtype == object or isinstance(series.dtype, pd.CategoricalDtype):
            if not dummy_encode:
                raise ParseError(f"column {col!r} is non-numeric and dummy encoding is off")
            dummies = pd.get_dummies(series, prefix=col, drop_first=True)
            for dcol in dummies.columns:
                columns.append(dummies[dcol].to_numpy(dtype=float))
                names.append(str(dcol))
                kinds.append(DUMMY)
        else:
            vals = series.to_numpy(dtype=float)
            if float(vals.std()) == 0.0:
                raise DegenerateColumnError(f"column {col!r} has zero variance")
            columns.append(vals)
            names.append(str(col))
            kinds.append(CONTINUOUS)

    X = np.column_stack(columns) if columns else np.empty((len(frame), 0))
    ds = Dataset(X=X, y=y, names=names, kinds=kinds)
    if standardize and X.shape[1] > 0:
        scaler = Scaler.fit(X, ds.continuous_mask)
        ds = replace(ds, X=scaler.transform(X), scaler=scaler)
    return ds


def save_csv(dataset: Dataset, path, sidecar: dict | None = None) -> None:
    """Write a dataset (original scale) as CSV, optionally with a JSON sidecar."""
    raw = dataset.to_raw()
    frame = pd.DataFrame(raw.X, columns=raw.names)
    frame["y"] = raw.y
    if raw.signal is not None:
        frame["signal"] = raw.signal
    frame.to_csv(path, index=False)
    if sidecar is not None:
        with open(str(path) + ".json", "w") as fh:
            json.dump(sidecar, fh, indent=2, sort_keys=True)


# -- metrics ---------------------------------------------------------------

def rmse(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    return float(np.sqrt(np.mean((y_true - y_pred) ** 2)))


def r2_score(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    ss_res = float(np.sum((y_true - y_pred) ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0 if ss_res > 0 else 1.0
    return 1.0 - ss_res / ss_tot


def log_loss(y_true, prob) -> float:
    y_true = np.asarray(y_true, dtype=float).ravel()
    prob = np.clip(np.asarray(prob, dtype=float).ravel(), 1e-12, 1 - 1e-12)
    return float(-np.mean(y_true * np.log(prob) + (1 - y_true) * np.log(1 - prob)))


def auc_score(y_true, score) -> float:
    """Area under the ROC curve by the rank-sum formulation (ties averaged)."""
    y_true = np.asarray(y_true, dtype=float).ravel()
    score = np.asarray(score, dtype=float).ravel()
    n_pos = int((y_true == 1).sum())
    n_neg = int((y_true == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = pd.Series(score).rank(method="average").to_numpy()
    rank_sum = float(ranks[y_true == 1].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)
