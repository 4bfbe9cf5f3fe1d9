"""Tests for CSV ingestion, normalization, partitioning and synthetic data."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fi_fuse.data import (
    Dataset,
    bootstrap,
    bootstrap_splits,
    drop_correlated,
    drop_outlier_rows,
    holdout_split,
    iris_csv_path,
    kfold,
    load_csv,
    load_iris,
    normalize,
    synthetic_data,
)
from fi_fuse.errors import (
    BadFoldCount,
    BadShape,
    EmptyDataset,
    MissingTarget,
    NonNumericFeature,
)
from fi_fuse.models import ModelSpec, evaluate, train


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


class TestLoadCsv:
    def test_iris_shape(self):
        ds = load_csv(iris_csv_path(), "species")
        assert (ds.n, ds.d, ds.n_classes) == (150, 4, 3)
        assert np.bincount(ds.y).tolist() == [50, 50, 50]
        assert ds.feature_names[2] == "petal length (cm)"

    def test_single_row(self, tmp_path):
        ds = load_csv(write(tmp_path, "a,b,t\n1.5,2,yes\n"), "t")
        assert ds.n == 1 and ds.d == 2
        np.testing.assert_array_equal(ds.X, [[1.5, 2.0]])

    def test_blank_cell_is_median_imputed(self, tmp_path):
        text = "a,b,t\n1,10,x\n3,,y\n2,40,x\n8,20,y\n5,30,x\n"
        ds = load_csv(write(tmp_path, text), "t")
        # remaining b values 10, 40, 20, 30 -> median 25
        assert ds.X[1, 1] == 25.0
        np.testing.assert_array_equal(ds.X[:, 0], [1, 3, 2, 8, 5])

    def test_missing_target_rows_dropped(self, tmp_path):
        ds = load_csv(write(tmp_path, "a,t\n1,x\n2,\n3,y\n"), "t")
        np.testing.assert_array_equal(ds.X[:, 0], [1, 3])

    def test_first_appearance_label_order(self, tmp_path):
        ds = load_csv(write(tmp_path, "a,t\n1,zeta\n2,alpha\n3,zeta\n"), "t")
        assert ds.class_names == ["zeta", "alpha"]
        np.testing.assert_array_equal(ds.y, [0, 1, 0])

    def test_target_column_may_be_anywhere(self, tmp_path):
        ds = load_csv(write(tmp_path, "t,a,b\nx,1,2\ny,3,4\n"), "t")
        assert ds.feature_names == ["a", "b"]

    def test_errors(self, tmp_path):
        with pytest.raises(MissingTarget):
            load_csv(write(tmp_path, "a,b\n1,2\n"), "t")
        with pytest.raises(NonNumericFeature):
            load_csv(write(tmp_path, "a,t\nred,x\n"), "t")
        with pytest.raises(EmptyDataset):
            load_csv(write(tmp_path, "a,t\n1,\n"), "t")
        with pytest.raises(EmptyDataset):
            load_csv(write(tmp_path, ""), "t")

    def test_dataset_is_immutable(self):
        ds = load_iris()
        with pytest.raises(ValueError):
            ds.X[0, 0] = 1.0


class TestNormalize:
    def test_linear_and_constant_columns(self):
        ds = Dataset(["a", "b"], [[2, 5], [4, 5], [6, 5]], [0, 1, 0], ["p", "q"])
        out = normalize(ds)
        np.testing.assert_array_equal(out.X[:, 0], [0, 0.5, 1])
        np.testing.assert_array_equal(out.X[:, 1], [0, 0, 0])
        assert out.feature_names == ds.feature_names
        np.testing.assert_array_equal(out.y, ds.y)

    def test_iris_sepal_length(self):
        raw = load_iris()
        col = raw.X[:, 0]
        assert (col.min(), col.max()) == (4.3, 7.9)
        row = int(np.flatnonzero(col == 6.1)[0])
        assert normalize(raw).X[row, 0] == pytest.approx((6.1 - 4.3) / 3.6, abs=1e-12)
        assert normalize(raw).X[row, 0] == pytest.approx(0.5, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 5)),
                  elements=st.floats(-1e6, 1e6, allow_nan=False)))
    def test_bounds_and_idempotence(self, X):
        ds = Dataset([f"f{j}" for j in range(X.shape[1])], X, np.zeros(X.shape[0], int), ["c"])
        once = normalize(ds)
        assert once.X.min() >= 0.0 and once.X.max() <= 1.0
        np.testing.assert_array_equal(normalize(once).X, once.X)


class TestPreprocessing:
    def test_drop_correlated_keeps_first(self):
        rng = np.random.default_rng(0)
        a = rng.standard_normal(50)
        X = np.column_stack([a, 2 * a + 1e-3 * rng.standard_normal(50), rng.standard_normal(50)])
        ds = Dataset(["a", "a2", "b"], X, np.arange(50) % 2, ["p", "q"])
        out, dropped = drop_correlated(ds, 0.95)
        assert dropped == ["a2"]
        assert out.feature_names == ["a", "b"]

    def test_drop_outlier_rows(self):
        X = np.vstack([np.zeros((20, 1)) + np.linspace(-1, 1, 20)[:, None], [[50.0]]])
        ds = Dataset(["a"], X, np.arange(21) % 2, ["p", "q"])
        out, removed = drop_outlier_rows(ds, 3.0)
        assert removed == 1 and out.n == 20


class TestKfold:
    def test_exact_division(self):
        plan = kfold(6, 3, seed=1)
        assert [len(f) for f in plan.folds()] == [2, 2, 2]

    def test_remainder(self):
        plan = kfold(7, 3, seed=1)
        assert sorted(len(f) for f in plan.folds()) == [2, 2, 3]

    def test_deterministic(self):
        np.testing.assert_array_equal(kfold(20, 4, 9).assignments, kfold(20, 4, 9).assignments)

    def test_bad_counts(self):
        with pytest.raises(BadFoldCount):
            kfold(5, 1, 0)
        with pytest.raises(BadFoldCount):
            kfold(5, 6, 0)

    def test_splits_disjoint(self):
        for sp in kfold(30, 5, 2).splits():
            assert np.intersect1d(sp.train, sp.evaluate).size == 0
            assert sp.train.size + sp.evaluate.size == 30

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 200).flatmap(lambda n: st.tuples(st.just(n), st.integers(2, n))),
           st.integers(0, 2**32 - 1))
    def test_partition(self, nk, seed):
        n, k = nk
        folds = kfold(n, k, seed).folds()
        np.testing.assert_array_equal(np.sort(np.concatenate(folds)), np.arange(n))
        sizes = [len(f) for f in folds]
        assert max(sizes) - min(sizes) <= 1


class TestBootstrap:
    def test_single_row(self):
        np.testing.assert_array_equal(bootstrap(1, 5).indices, [0])

    def test_distinct_fraction(self):
        frac = [np.unique(bootstrap(1000, s).indices).size / 1000 for s in range(100)]
        assert np.mean(frac) == pytest.approx(1 - np.exp(-1), abs=0.04)
        assert all(abs(f - 0.632) < 0.04 for f in frac)

    def test_deterministic_and_in_range(self):
        a, b = bootstrap(50, 3).indices, bootstrap(50, 3).indices
        np.testing.assert_array_equal(a, b)
        assert a.size == 50 and a.min() >= 0 and a.max() < 50

    def test_out_of_bag_splits(self):
        for sp in bootstrap_splits(40, 5, seed=0):
            assert sp.train.size == 40
            assert np.intersect1d(sp.train, sp.evaluate).size == 0
            assert sp.evaluate.size > 0

    def test_holdout(self):
        sp = holdout_split(150, 0.2, 0)
        assert sp.evaluate.size == 30 and sp.train.size == 120
        np.testing.assert_array_equal(np.union1d(sp.train, sp.evaluate), np.arange(150))


class TestSyntheticData:
    def test_noise_columns(self):
        ds, inf = synthetic_data(2000, 4, 2, 3, seed=0)
        noise = [j for j in range(4) if j not in inf]
        assert len(inf) == 2 and len(noise) == 2
        for j in noise:
            # class-conditional means of a noise column agree within sampling error
            means = [ds.X[ds.y == c, j].mean() for c in range(3)]
            assert np.ptp(means) < 0.2

    def test_learnable(self):
        ds, _ = synthetic_data(500, 5, 5, 2, seed=3)
        ds = normalize(ds)
        m = train(ModelSpec("lr", {"lr": 0.1, "epochs": 500}), ds.X, ds.y, seed=0)
        acc, _ = evaluate(m, ds.X, ds.y)
        assert acc > 1 / 2 + 0.15

    def test_deterministic(self):
        a, ia = synthetic_data(100, 6, 3, 3, seed=11)
        b, ib = synthetic_data(100, 6, 3, 3, seed=11)
        np.testing.assert_array_equal(a.X, b.X)
        np.testing.assert_array_equal(a.y, b.y)
        assert ia == ib

    def test_bad_shape(self):
        with pytest.raises(BadShape):
            synthetic_data(100, 3, 4, 2, 0)
        with pytest.raises(BadShape):
            synthetic_data(100, 3, 2, 1, 0)
