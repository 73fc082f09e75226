import numpy as np
import pytest
from sklearn.base import clone

from fieldloom import CoordinateNormalizer, FieldClassifier, roc_auc

from _synth import two_bump_data


def small_fit_data(seed=0, n=600):
    X, y = two_bump_data(seed, n=n)
    # ensure raw (unnormalized) coordinates exercise the internal scaler
    return X * 30.0 + 15.0, y


class TestFieldClassifier:
    def test_fit_predict_shapes(self):
        X, y = small_fit_data()
        clf = FieldClassifier(kind="sine", width=16, depth=2, batch_size=128,
                              max_epochs=3, seed=0)
        clf.fit(X, y)
        proba = clf.predict_proba(X[:10])
        assert proba.shape == (10, 2)
        assert np.allclose(proba.sum(axis=1), 1.0)
        assert np.all((proba >= 0) & (proba <= 1))
        preds = clf.predict(X[:10])
        assert set(np.unique(preds)) <= {0, 1}
        assert np.array_equal(preds, (proba[:, 1] >= 0.5).astype(int))

    def test_internal_normalizer_fitted_on_training_domain(self):
        X, y = small_fit_data(seed=1)
        clf = FieldClassifier(width=8, depth=1, batch_size=256, max_epochs=2,
                              seed=1).fit(X, y)
        assert clf.norm_.lows == tuple(X.min(axis=0))
        assert clf.norm_.highs == tuple(X.max(axis=0))

    def test_determinism(self):
        X, y = small_fit_data(seed=2)
        a = FieldClassifier(width=8, depth=1, batch_size=256, max_epochs=2,
                            seed=3).fit(X, y)
        b = FieldClassifier(width=8, depth=1, batch_size=256, max_epochs=2,
                            seed=3).fit(X, y)
        assert np.array_equal(a.model_.params, b.model_.params)

    def test_get_params_and_clone(self):
        clf = FieldClassifier(kind="fourier", n_fourier=8, width=16, seed=5)
        params = clf.get_params()
        assert params["kind"] == "fourier" and params["n_fourier"] == 8
        cl = clone(clf)
        assert cl.get_params() == params

    def test_set_params(self):
        clf = FieldClassifier()
        clf.set_params(kind="rbf", n_centers=10)
        assert clf.kind == "rbf" and clf.n_centers == 10

    def test_learns_two_bumps(self):
        X, y = two_bump_data(7, n=4000)
        clf = FieldClassifier(kind="sine", width=32, depth=2, batch_size=256,
                              max_epochs=8, patience=8, normalize=False,
                              seed=7).fit(X, y)
        p = clf.predict_proba(X)[:, 1]
        assert roc_auc(p, y) > 0.9

    def test_decision_function_is_logit(self):
        X, y = small_fit_data(seed=4)
        clf = FieldClassifier(width=8, depth=1, batch_size=256, max_epochs=2,
                              seed=0).fit(X, y)
        z = clf.decision_function(X[:5])
        p = clf.predict_proba(X[:5])[:, 1]
        assert np.allclose(1 / (1 + np.exp(-z)), p)

    def test_invalid_labels(self):
        X, _ = small_fit_data()
        with pytest.raises(ValueError):
            FieldClassifier().fit(X, np.full(len(X), 2))

    def test_trace_records_epochs(self):
        X, y = small_fit_data(seed=5)
        clf = FieldClassifier(width=8, depth=1, batch_size=256, max_epochs=4,
                              seed=2).fit(X, y)
        assert 1 <= len(clf.trace_.val_losses) <= 4
        assert clf.trace_.stop_reason in ("max_epochs", "early_stop")


class TestCoordinateNormalizer:
    def test_transform_range(self):
        X = np.random.default_rng(0).uniform(10, 50, (100, 2))
        tr = CoordinateNormalizer().fit(X)
        U = tr.transform(X)
        assert U.min() == pytest.approx(-1.0)
        assert U.max() == pytest.approx(1.0)

    def test_inverse_roundtrip(self):
        X = np.random.default_rng(1).uniform(-30, 60, (50, 3))
        tr = CoordinateNormalizer().fit(X)
        back = tr.inverse_transform(tr.transform(X))
        assert np.allclose(back, X, rtol=1e-12)

    def test_fit_transform(self):
        X = np.array([[2.0, 0.0], [4.0, 1.0], [6.0, 2.0]])
        U = CoordinateNormalizer().fit_transform(X)
        assert np.allclose(U[:, 0], [-1, 0, 1])

    def test_sklearn_clone(self):
        tr = CoordinateNormalizer()
        assert clone(tr).get_params() == tr.get_params()
