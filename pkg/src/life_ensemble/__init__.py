"""Projection-sampled ensembles of narrow ReLU networks, flattened into
one wide interpretable single-hidden-layer model."""

from .core_math import (
    FitResult,
    elastic_net_fit,
    kernel_smooth,
    logistic_fit,
    solve_least_squares,
    weighted_std,
)
from .datasets import Dataset, Scaler, SimSpec, generate, load_csv, split
from .diagnostics import (
    DecompositionReport,
    StackingModel,
    accuracy_diversity_sweep,
    ce_decomposition_logodds,
    ce_decomposition_probability,
    mse_decomposition,
    stacking_fit,
)
from .interpret import (
    EffectCurve,
    LocalRegion,
    VaryingCoefficients,
    ale_main_effect,
    extract_local_regions,
    interaction_curve,
    interaction_matrix,
    main_effect_curve,
    neuron_importance,
    variable_contribution,
    varying_coefficients,
)
from .nn import SingleLayerNN, TrainConfig, forward, hidden_activations, train_adam, train_lla
from .pipeline import (
    AggregationConfig,
    IterationTrace,
    LifeConfig,
    LifeModel,
    extract_features,
    fit,
)
from .pruning import SelectionReport, base_learner_selection
from .sampling import (
    SamplingConfig,
    SubsetSpec,
    bootstrap_subsets,
    filter_by_size,
    project_subset,
    random_projection_subsets,
)

__version__ = "0.1.0"
