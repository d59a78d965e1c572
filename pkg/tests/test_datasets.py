import math

import numpy as np
import pytest

from life_ensemble.datasets import (
    AIM_BETA,
    GAM_BETA,
    MIM_BETA,
    Dataset,
    Scaler,
    SimSpec,
    auc_score,
    generate,
    load_csv,
    log_loss,
    r2_score,
    rmse,
    save_csv,
    split,
    _aim_regression,
    _gam_regression,
    _mim_regression,
    _gam_classification,
    _aim_classification,
    _mim_classification,
)
from life_ensemble.errors import DegenerateColumnError, MissingTargetError


def scalar_gam(x):
    b = GAM_BETA
    return (b[0] * x[0] + b[1] * math.sqrt(abs(x[1])) + b[2] * abs(x[2])
            + b[3] * math.exp(x[3]) + b[4] * math.log(abs(x[4]))
            + b[5] * max(1.0, x[5]))


def scalar_aim(x):
    b = AIM_BETA
    i1 = b[0] * x[0] + b[1] * x[1] + b[2] * x[2] + b[3] * x[3]
    i2 = b[2] * x[2] + b[3] * x[3] + b[4] * x[4] + b[5] * x[5]
    i3 = b[4] * x[4] + b[5] * x[5]
    return 2.0 * math.log(abs(i1)) + math.exp(i2 / 9.0) + max(0.0, i3)


def scalar_mim(x):
    b = MIM_BETA
    return (math.exp(b[0] * x[0] + b[1] * x[1]) * b[2] * x[2]
            + b[3] * x[3] / (1.0 + b[4] * abs(x[4]))
            + max(2.0, b[5] * x[5]))


def scalar_gam_cls(x):
    return (1.5 * x[0] + 4.0 * math.sqrt(abs(-2.5 * x[1])) + 2.0 * abs(x[2])
            + 4.0 * math.exp(-(3.0 / 14.0) * x[3]) + 4.0 * math.log(1.5 * abs(x[4]))
            - 4.0 * max(1.0, x[5]))


def scalar_aim_cls(x):
    i1 = 3.0 * x[0] - 2.5 * x[1] + 2.0 * x[2] - 1.5 * x[3]
    i2 = (-1.5 * x[3] + 1.5 * x[4] - x[5]) / 11.0
    return math.log(abs(i1)) + math.exp(i2)


def scalar_mim_cls(x):
    return (math.exp(0.03 * x[0] - 0.025 * x[1]) * x[2]
            - 3.0 * x[3] / (1.0 + 1.5 * abs(x[4]))
            + 2.0 * max(1.0, x[5]))


class TestGenerators:
    def test_mim_signal_at_origin(self):
        # exp(0)*1*0 + 0/(1+0) + max(2, 0) = 2
        assert _mim_regression(np.zeros((1, 6)))[0] == pytest.approx(2.0)

    @pytest.mark.parametrize("vec,scalar", [
        (_gam_regression, scalar_gam),
        (_aim_regression, scalar_aim),
        (_mim_regression, scalar_mim),
        (_gam_classification, scalar_gam_cls),
        (_aim_classification, scalar_aim_cls),
        (_mim_classification, scalar_mim_cls),
    ])
    def test_vectorized_matches_scalar_reimplementation(self, vec, scalar):
        rng = np.random.default_rng(42)
        X = rng.normal(size=(100, 6))
        got = vec(X)
        want = np.array([scalar(row) for row in X])
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)

    def test_gam_oracle_rmse_is_noise_scale(self):
        ds, signal = generate(SimSpec(form="gam", task="regression", n=20_000, seed=11))
        assert rmse(ds.y, signal) == pytest.approx(1.000, abs=0.02)

    def test_fixed_seed_bit_identical(self):
        a, sig_a = generate(SimSpec(form="mim", n=500, seed=3))
        b, sig_b = generate(SimSpec(form="mim", n=500, seed=3))
        assert np.array_equal(a.X, b.X) and np.array_equal(a.y, b.y)
        assert np.array_equal(sig_a, sig_b)

    def test_laplace_predictors(self):
        ds, _ = generate(SimSpec(form="gam", n=50_000, predictor_dist="laplace", seed=5))
        # unit-scale Laplace has variance 2
        assert ds.X.var(axis=0) == pytest.approx(np.full(6, 2.0), rel=0.05)

    def test_classification_label_frequency_matches_probabilities(self):
        ds, prob = generate(SimSpec(form="mim", task="classification", n=20_000, seed=7))
        se = float(np.sqrt(np.mean(prob * (1 - prob)) / prob.size))
        assert abs(ds.y.mean() - prob.mean()) < 3 * se


class TestSplit:
    def test_sizes_80_20(self):
        ds, _ = generate(SimSpec(n=100, seed=1))
        tr, te = split(ds, 0.8, seed=0)
        assert tr.n_rows == 80 and te.n_rows == 20

    def test_same_seed_same_partition(self):
        ds, _ = generate(SimSpec(n=200, seed=1))
        a_tr, a_te = split(ds, 0.8, seed=9)
        b_tr, b_te = split(ds, 0.8, seed=9)
        assert np.array_equal(a_tr.X, b_tr.X) and np.array_equal(a_te.y, b_te.y)

    def test_train_standardized_test_uses_train_scaler(self):
        ds, _ = generate(SimSpec(n=2000, seed=2))
        tr, te = split(ds, 0.8, seed=1)
        assert np.max(np.abs(tr.X.mean(axis=0))) < 1e-10
        assert np.max(np.abs(tr.X.std(axis=0) - 1)) < 1e-10
        # test split standardized with the train scaler, so generally off 0/1
        assert np.max(np.abs(te.X.mean(axis=0))) > 1e-10
        # round trip back to the raw draw
        raw = ds.X
        back = np.vstack([tr.scaler.inverse_transform(tr.X), te.scaler.inverse_transform(te.X)])
        assert np.allclose(np.sort(back[:, 0]), np.sort(raw[:, 0]), atol=1e-10)

    def test_signal_carried_through(self):
        ds, signal = generate(SimSpec(n=100, seed=4))
        tr, te = split(ds, 0.8, seed=0)
        assert tr.signal.size == 80 and te.signal.size == 20
        assert set(np.round(np.concatenate([tr.signal, te.signal]), 12)) == set(np.round(signal, 12))


class TestCsv(object):
    def test_dummy_encoding_drops_first_level(self, tmp_path):
        path = tmp_path / "toy.csv"
        path.write_text("color,size,y\nred,1.0,0.5\ngreen,2.0,1.5\nblue,3.0,2.5\nred,4.0,3.5\n")
        ds = load_csv(path, target="y")
        dummy_cols = [n for n, k in zip(ds.names, ds.kinds) if k == "dummy"]
        assert len(dummy_cols) == 2  # 3 levels -> 2 dummies

    def test_standardize_round_trip(self, tmp_path):
        path = tmp_path / "num.csv"
        rng = np.random.default_rng(0)
        vals = rng.normal(size=(50, 2)) * 3 + 1
        lines = ["a,b,y"] + [f"{a},{b},{a+b}" for a, b in vals]
        path.write_text("\n".join(lines) + "\n")
        ds = load_csv(path, target="y")
        back = ds.scaler.inverse_transform(ds.X)
        np.testing.assert_allclose(back, vals, atol=1e-10)

    def test_constant_column_rejected(self, tmp_path):
        path = tmp_path / "const.csv"
        path.write_text("a,b,y\n1.0,2.0,0.1\n1.0,3.0,0.2\n1.0,4.0,0.3\n")
        with pytest.raises(DegenerateColumnError):
            load_csv(path, target="y")

    def test_missing_target(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("a,y\n1,2\n")
        with pytest.raises(MissingTargetError):
            load_csv(path, target="z")

    def test_save_load_round_trip(self, tmp_path):
        ds, _ = generate(SimSpec(n=50, seed=8))
        out = tmp_path / "sim.csv"
        save_csv(ds, out, sidecar={"n": 50})
        loaded = load_csv(out, target="y", standardize=False)
        # the saved file also carries the oracle signal column
        sig_idx = loaded.names.index("signal")
        keep = [j for j in range(len(loaded.names)) if j != sig_idx]
        np.testing.assert_allclose(loaded.X[:, keep], ds.X, atol=1e-8)
        assert (tmp_path / "sim.csv.json").exists()


class TestMetrics:
    def test_rmse_r2(self):
        y = np.array([1.0, 2.0, 3.0])
        assert rmse(y, y) == 0.0
        assert r2_score(y, y) == 1.0
        assert r2_score(y, np.full(3, y.mean())) == pytest.approx(0.0)

    def test_log_loss_hand_value(self):
        assert log_loss([1.0], [0.5]) == pytest.approx(math.log(2.0))

    def test_auc_perfect_and_random(self):
        y = np.array([0, 0, 1, 1], dtype=float)
        assert auc_score(y, np.array([0.1, 0.2, 0.8, 0.9])) == 1.0
        assert auc_score(y, np.array([0.9, 0.8, 0.2, 0.1])) == 0.0
        assert auc_score(y, np.array([0.5, 0.5, 0.5, 0.5])) == 0.5

    def test_auc_matches_pair_counting(self):
        rng = np.random.default_rng(12)
        y = (rng.uniform(size=200) < 0.4).astype(float)
        s = rng.normal(size=200)
        pos, neg = s[y == 1], s[y == 0]
        pairs = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
        assert auc_score(y, s) == pytest.approx(pairs / (pos.size * neg.size))


class TestScaler:
    def test_identity(self):
        s = Scaler.identity(3)
        X = np.arange(6.0).reshape(2, 3)
        assert np.array_equal(s.transform(X), X)
        assert s.is_identity()

    def test_dummy_columns_untouched(self):
        X = np.array([[0.0, 10.0], [1.0, 20.0], [0.0, 30.0], [1.0, 40.0]])
        s = Scaler.fit(X, continuous_mask=[False, True])
        Z = s.transform(X)
        assert np.array_equal(Z[:, 0], X[:, 0])
        assert abs(Z[:, 1].mean()) < 1e-12
