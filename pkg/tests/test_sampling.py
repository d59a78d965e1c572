import numpy as np
import pytest

from life_ensemble.errors import DimensionMismatchError
from life_ensemble.sampling import (
    SamplingConfig,
    SubsetSpec,
    bootstrap_subsets,
    coverage_fraction,
    filter_by_size,
    project_subset,
    random_projection_subsets,
)


class TestProjectSubset:
    def test_sign_test(self):
        X = np.array([[1.0, 5.0], [-1.0, 2.0]])
        spec = project_subset([1.0, 0.0], 0.0, 0.0, X)
        assert spec.indices.tolist() == [0]
        assert spec.ratio == 0.5

    def test_vacuous_cut_selects_all(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 3))
        w = rng.normal(size=3)
        cp = float((X @ w).min()) - 10.0
        spec = project_subset(w, 0.0, cp, X)
        assert spec.ratio == 1.0
        assert spec.indices.size == 30

    def test_symmetric_ratio_near_half(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(1000, 4))
        spec = project_subset([1.0, 0.0, 0.0, 0.0], 0.0, 0.0, X)
        assert abs(spec.ratio - 0.5) < 0.05

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            project_subset([1.0], 0.0, 0.0, np.zeros((5, 2)))

    def test_monotone_in_cutoff(self):
        rng = np.random.default_rng(2)
        X = rng.normal(size=(500, 3))
        w = rng.normal(size=3)
        prev = None
        for cp in (-1.0, -0.2, 0.0, 0.4, 1.3):
            cur = set(project_subset(w, 0.1, cp, X).indices.tolist())
            if prev is not None:
                assert cur <= prev
            prev = cur


class TestFilterBySize:
    def test_interior_kept(self):
        spec = SubsetSpec(w=[1.0], b=0.0, cp=0.0, indices=np.arange(50), ratio=0.5)
        assert filter_by_size(spec, 0.1, 0.9)

    def test_extremes_dropped(self):
        small = SubsetSpec(w=[1.0], b=0.0, cp=0.0, indices=np.arange(5), ratio=0.05)
        big = SubsetSpec(w=[1.0], b=0.0, cp=0.0, indices=np.arange(95), ratio=0.95)
        assert not filter_by_size(small, 0.1, 0.9)
        assert not filter_by_size(big, 0.1, 0.9)

    def test_boundary_is_strict(self):
        spec = SubsetSpec(w=[1.0], b=0.0, cp=0.0, indices=np.arange(10), ratio=0.1)
        assert not filter_by_size(spec, 0.1, 0.9)
        spec = SubsetSpec(w=[1.0], b=0.0, cp=0.0, indices=np.arange(90), ratio=0.9)
        assert not filter_by_size(spec, 0.1, 0.9)


class TestRandomProjection:
    def test_deterministic_per_seed(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(200, 3))
        cfg = SamplingConfig(scheme="random_projection", seed=7)
        a = random_projection_subsets(X, 5, cfg)
        b = random_projection_subsets(X, 5, cfg)
        for sa, sb in zip(a, b):
            assert np.array_equal(sa.indices, sb.indices)

    def test_zero_count(self):
        assert random_projection_subsets(np.zeros((10, 2)), 0, SamplingConfig()) == []

    def test_mean_ratio_moderate(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(10_000, 5))
        specs = random_projection_subsets(X, 20, SamplingConfig(cp=0.0, seed=1))
        mean_ratio = np.mean([s.ratio for s in specs])
        assert 0.3 < mean_ratio < 0.7


class TestBootstrap:
    def test_single_row(self):
        draws = bootstrap_subsets(1, 3, seed=0)
        for d in draws:
            assert d.tolist() == [0]

    def test_unique_fraction_632(self):
        draws = bootstrap_subsets(10_000, 100, seed=5)
        frac = np.mean([np.unique(d).size / 10_000 for d in draws])
        assert frac == pytest.approx(1 - np.exp(-1), abs=0.01)

    def test_deterministic(self):
        a = bootstrap_subsets(50, 4, seed=9)
        b = bootstrap_subsets(50, 4, seed=9)
        assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_coverage_fraction():
    s1 = SubsetSpec(w=[1.0], b=0.0, cp=0.0, indices=np.array([0, 1, 2]), ratio=0.3)
    s2 = SubsetSpec(w=[1.0], b=0.0, cp=0.0, indices=np.array([2, 3]), ratio=0.2)
    assert coverage_fraction(10, [s1, s2]) == pytest.approx(0.4)
    assert coverage_fraction(10, []) == 0.0
