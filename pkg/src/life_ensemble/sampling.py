"""Overlapping training subsets from neuron linear projections.

A neuron (w, b) selects the rows with b + x.w strictly above the cutoff
cp.  Subsets whose size ratio falls outside (l, u) are dropped.  Random
projection and bootstrap subsets are provided as the two ablation
schemes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError

NN_PROJECTION = "nn_projection"
RANDOM_PROJECTION = "random_projection"
BOOTSTRAP = "bootstrap"
SCHEMES = (NN_PROJECTION, RANDOM_PROJECTION, BOOTSTRAP)


@dataclass
class SamplingConfig:
    scheme: str = NN_PROJECTION
    cp: float = 0.0
    lower: float = 0.1
    upper: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown sampling scheme {self.scheme!r}")
        if not (0.0 < self.lower < self.upper <= 1.0):
            raise ValueError("need 0 < lower < upper <= 1")


@dataclass
class SubsetSpec:
    """A projection node plus the rows it selects."""

    w: np.ndarray
    b: float
    cp: float
    indices: np.ndarray
    ratio: float

    def __post_init__(self):
        self.w = np.asarray(self.w, dtype=float).ravel()
        self.indices = np.asarray(self.indices, dtype=int)


def project_subset(w, b: float, cp: float, X) -> SubsetSpec:
    """Rows with b + x.w > cp (strict), in sorted order."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    w = np.asarray(w, dtype=float).ravel()
    if w.shape[0] != X.shape[1]:
        raise DimensionMismatchError(
            f"projection has {w.shape[0]} entries but X has {X.shape[1]} columns")
    proj = b + X @ w
    indices = np.flatnonzero(proj > cp)
    return SubsetSpec(w=w, b=float(b), cp=float(cp), indices=indices,
                      ratio=indices.size / X.shape[0])


def filter_by_size(spec: SubsetSpec, lower: float, upper: float) -> bool:
    """Keep iff lower < ratio < upper, both strict."""
    if not (0.0 < lower < upper <= 1.0):
        raise ValueError("need 0 < lower < upper <= 1")
    return lower < spec.ratio < upper


def random_projection_subsets(X, count: int, config: SamplingConfig) -> list:
    """Subsets from i.i.d. standard-normal projections (w, b)."""
    if count < 0:
        raise ValueError("count must be >= 0")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    rng = np.random.default_rng((config.seed, 0x5A11))
    specs = []
    for _ in range(count):
        w = rng.normal(size=X.shape[1])
        b = float(rng.normal())
        specs.append(project_subset(w, b, config.cp, X))
    return specs


def bootstrap_subsets(n_rows: int, count: int, seed: int) -> list:
    """``count`` index multisets of size ``n_rows``, drawn with replacement."""
    if count < 0:
        raise ValueError("count must be >= 0")
    rng = np.random.default_rng((seed, 0xB007))
    return [rng.integers(0, n_rows, size=n_rows) for _ in range(count)]


def coverage_fraction(n_rows: int, kept_specs) -> float:
    """Fraction of the training rows covered by at least one kept subset."""
    if not kept_specs:
        return 0.0
    covered = np.zeros(n_rows, dtype=bool)
    for spec in kept_specs:
        covered[spec.indices] = True
    return float(covered.mean())
