"""Post-hoc interpretation of a flattened single-hidden-layer ReLU net.

A ReLU network is exactly linear on each activation region (the set of
inputs sharing one on/off pattern across all neurons), so the model can
be read as a varying-coefficient model: per observation, the slope of
variable m is the sum of beta_k * w_km over the active neurons.  On top
of that view sit the neuron/variable importance measures, the two-stage
main/interaction effect screen, and accumulated-local-effect curves.

All quantities are computed on the model's input scale (standardized
inputs, log-odds output for classification); only the ALE grid is mapped
back to original units when a scaler is supplied.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core_math import kernel_smooth, weighted_std
from .datasets import Scaler
from .errors import DegenerateInputError, DegenerateModelError, DimensionMismatchError
from .nn import SingleLayerNN, forward_linear, hidden_activations

DEFAULT_REGION_THRESHOLD = 3
EFFECT_GRID_SIZE = 100
ALE_BINS = 50


@dataclass
class LocalRegion:
    """One homogeneous activation region.

    slope = sum of beta_k * w_k over active neurons; intercept likewise
    collects beta0 + beta_k * b_k, so slope @ x + intercept reproduces the
    model's linear output exactly for every x in the region.
    """

    pattern: np.ndarray
    count: int
    slope: np.ndarray
    intercept: float

    def pattern_key(self) -> str:
        return "".join("1" if a else "0" for a in self.pattern)


@dataclass
class RegionExtraction:
    regions: list = field(default_factory=list)   # count > threshold
    overflow: list = field(default_factory=list)  # the small ones


@dataclass
class VaryingCoefficients:
    """Per-observation slopes (N x p) and intercepts of the local view."""

    alpha: np.ndarray
    intercepts: np.ndarray


@dataclass
class EffectCurve:
    grid: np.ndarray
    values: np.ndarray
    kind: str                      # "main" | "interaction" | "ale"
    variables: tuple
    strength: float


def _model_inputs(model: SingleLayerNN, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_inputs:
        raise DimensionMismatchError(
            f"X has {X.shape[1]} columns, model expects {model.n_inputs}")
    return X


def neuron_importance(model: SingleLayerNN, X) -> np.ndarray:
    """std(beta_k * act_k) / std of the linear model output, per neuron."""
    X = _model_inputs(model, X)
    act = hidden_activations(model, X)
    out_std = float(forward_linear(model, X).std())
    if out_std == 0.0:
        raise DegenerateModelError("model output is constant on X")
    return (act * model.output_coefficients).std(axis=0) / out_std


def variable_contribution(model: SingleLayerNN, X) -> np.ndarray:
    """K x p heatmap matrix: w_km * beta_k * std(act_k) / std(output)."""
    X = _model_inputs(model, X)
    act = hidden_activations(model, X)
    out_std = float(forward_linear(model, X).std())
    if out_std == 0.0:
        raise DegenerateModelError("model output is constant on X")
    scale = model.output_coefficients * act.std(axis=0) / out_std
    return model.hidden_weights * scale[:, None]


def _activation_patterns(model: SingleLayerNN, X) -> np.ndarray:
    pre = X @ model.hidden_weights.T + model.hidden_biases
    return pre > 0


def extract_local_regions(model: SingleLayerNN, X,
                          threshold: int = DEFAULT_REGION_THRESHOLD) -> RegionExtraction:
    """Group observations by exact activation pattern.

    Regions with more than ``threshold`` observations are materialized in
    ``regions``; the rest land in ``overflow``.  Every observation belongs
    to exactly one pattern.
    """
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    X = _model_inputs(model, X)
    active = _activation_patterns(model, X)
    patterns, counts = np.unique(active, axis=0, return_counts=True)

    beta = model.output_coefficients
    out = RegionExtraction()
    for pattern, count in zip(patterns, counts):
        gated = beta * pattern
        slope = gated @ model.hidden_weights
        intercept = model.output_intercept + float(gated @ model.hidden_biases)
        region = LocalRegion(pattern=pattern.copy(), count=int(count),
                             slope=slope, intercept=intercept)
        (out.regions if count > threshold else out.overflow).append(region)
    out.regions.sort(key=lambda r: -r.count)
    out.overflow.sort(key=lambda r: -r.count)
    return out


def varying_coefficients(model: SingleLayerNN, X) -> VaryingCoefficients:
    """Per-observation local slopes; no size filtering.

    For classification these are slopes of the predicted log-odds.
    """
    X = _model_inputs(model, X)
    active = _activation_patterns(model, X)
    gated = active * model.output_coefficients
    alpha = gated @ model.hidden_weights
    intercepts = model.output_intercept + gated @ model.hidden_biases
    return VaryingCoefficients(alpha=alpha, intercepts=intercepts)


def density_weights(x: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Normalized histogram mass of x around each grid point."""
    if grid.size == 1:
        return np.ones(1)
    mids = 0.5 * (grid[1:] + grid[:-1])
    edges = np.concatenate([[-np.inf], mids, [np.inf]])
    counts, _ = np.histogram(x, bins=edges)
    total = counts.sum()
    return counts / total if total > 0 else np.full(grid.size, 1.0 / grid.size)


def main_effect_curve(vc: VaryingCoefficients, X, m: int,
                      grid_size: int = EFFECT_GRID_SIZE,
                      bandwidth="auto") -> EffectCurve:
    """Smooth the slope of variable m against the variable itself."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x = X[:, m]
    if np.ptp(x) == 0:
        raise DegenerateInputError(f"variable {m} is constant")
    grid = np.linspace(x.min(), x.max(), grid_size)
    values = kernel_smooth(x, vc.alpha[:, m], grid, bandwidth=bandwidth)
    weights = density_weights(x, grid)
    return EffectCurve(grid=grid, values=values, kind="main", variables=(m,),
                       strength=weighted_std(values, weights))


def interaction_curve(vc: VaryingCoefficients, X, m: int, k: int,
                      grid_size: int = EFFECT_GRID_SIZE,
                      bandwidth="auto") -> EffectCurve:
    """Smooth the main-effect-removed slope of variable m against x_k."""
    if m == k:
        raise ValueError("interaction needs two distinct variables")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    main = main_effect_curve(vc, X, m, grid_size=grid_size, bandwidth=bandwidth)
    residual = vc.alpha[:, m] - np.interp(X[:, m], main.grid, main.values)

    xk = X[:, k]
    if np.ptp(xk) == 0:
        raise DegenerateInputError(f"variable {k} is constant")
    grid = np.linspace(xk.min(), xk.max(), grid_size)
    values = kernel_smooth(xk, residual, grid, bandwidth=bandwidth)
    weights = density_weights(xk, grid)
    return EffectCurve(grid=grid, values=values, kind="interaction", variables=(m, k),
                       strength=weighted_std(values, weights))


def interaction_matrix(vc: VaryingCoefficients, X,
                       grid_size: int = EFFECT_GRID_SIZE,
                       bandwidth="auto") -> np.ndarray:
    """p x p matrix of interaction strengths; the diagonal is forced to 0.

    Entry (m, k) measures how much structure x_k leaves in the slope of
    x_m after its own main effect is removed.  Not symmetric by
    construction.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    p = X.shape[1]
    if p < 2:
        raise DimensionMismatchError("interaction screen needs at least 2 variables")
    out = np.zeros((p, p))
    for m in range(p):
        for k in range(p):
            if m == k:
                continue
            out[m, k] = interaction_curve(vc, X, m, k, grid_size=grid_size,
                                          bandwidth=bandwidth).strength
    return out


def ale_main_effect(vc: VaryingCoefficients, X, m: int, bins: int = ALE_BINS,
                    bandwidth="auto", scaler: Scaler | None = None) -> EffectCurve:
    """Accumulated local effect of variable m.

    Integrates the smoothed conditional slope from min(x_m) by the
    midpoint rule over equal-width bins, then centers the curve by its
    density-weighted mean.  With a scaler the grid is reported in
    original (de-standardized) units; the values are unchanged because
    they already live on the response scale.
    """
    if bins < 2:
        raise ValueError("need at least 2 bins")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    x = X[:, m]
    if np.ptp(x) == 0:
        raise DegenerateInputError(f"variable {m} is constant")

    lo, hi = float(x.min()), float(x.max())
    width = (hi - lo) / bins
    mids = lo + (np.arange(bins) + 0.5) * width
    slope = kernel_smooth(x, vc.alpha[:, m], mids, bandwidth=bandwidth)

    # Midpoint-rule integral from lo to each midpoint.
    ale = width * np.concatenate([[0.0], np.cumsum(slope[:-1])]) + 0.5 * width * slope
    weights = density_weights(x, mids)
    ale = ale - float(weights @ ale)

    grid = mids if scaler is None else scaler.means[m] + scaler.stds[m] * mids
    return EffectCurve(grid=grid, values=ale, kind="ale", variables=(m,),
                       strength=weighted_std(ale, weights))
