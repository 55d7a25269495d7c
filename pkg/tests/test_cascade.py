import numpy as np
import pytest

from clonedetect import cascade as cascade_mod
from clonedetect.base_learners import LearnerError, LogisticModel
from clonedetect.cascade import (
    CascadeConfig,
    CascadeLevel,
    CascadeModel,
    LearnerSpec,
    cascade_learners,
    labels_from_proba,
    predict_cascade,
    stratified_folds,
    stratified_split,
    train_cascade,
)


def _noisy(seed, n=120, d=5):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, d))
    y = ((X[:, 0] + X[:, 1] + 0.4 * rng.standard_normal(n)) > 1.0).astype(int)
    return X, y


def _separable(seed, n=80, d=4):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, d))
    X[: n // 2, 0] = rng.uniform(0, 0.3, n // 2)
    X[n // 2:, 0] = rng.uniform(0.7, 1, n - n // 2)
    return X, (X[:, 0] > 0.5).astype(int)


def _small_config(**kw):
    kw.setdefault("learner_set", cascade_learners("default", seed=1, n_trees=8))
    return CascadeConfig(**kw)


def test_default_learner_set():
    kinds = [s.kind for s in cascade_learners()]
    assert kinds == ["random_forest", "random_forest", "extra_trees", "logistic"]
    assert len({s.seed for s in cascade_learners()}) == 4
    assert CascadeConfig().folds == 5
    for name, kind in (("rf", "random_forest"), ("ert", "extra_trees"), ("lr", "logistic")):
        assert [s.kind for s in cascade_learners(name)] == [kind] * 4
    with pytest.raises(ValueError):
        cascade_learners("svm")


def test_config_validation():
    with pytest.raises(ValueError):
        CascadeConfig(folds=1)
    with pytest.raises(ValueError):
        CascadeConfig(learner_set=())


def _input_widths(monkeypatch, X, y, config):
    widths = {}
    real = cascade_mod.make_learner

    def spy(spec, Xs, ys, fold, level):
        widths.setdefault(level, set()).add(Xs.shape[1])
        return real(spec, Xs, ys, fold, level)

    monkeypatch.setattr(cascade_mod, "make_learner", spy)
    model = train_cascade(X, y, config)
    return model, widths


def test_augmented_dimension(monkeypatch):
    X, y = _noisy(0)
    model, widths = _input_widths(monkeypatch, X, y, _small_config(max_levels=2, improvement_tolerance=-1.0))
    d = X.shape[1]
    # two classes times four learners
    assert widths == {0: {d}, 1: {d + 8}}
    assert all(lv.input_dim == d + 8 * (i > 0) for i, lv in enumerate(model.levels))


def test_dimensional_recurrence_any_learner_count(monkeypatch):
    X, y = _noisy(1)
    specs = (LearnerSpec("extra_trees", 0, 4), LearnerSpec("logistic", 1))
    config = CascadeConfig(specs, folds=3, max_levels=3, improvement_tolerance=-1.0)
    _, widths = _input_widths(monkeypatch, X, y, config)
    assert widths == {0: {5}, 1: {9}, 2: {9}}


def test_max_levels_cap():
    X, y = _noisy(2)
    model = train_cascade(X, y, _small_config(max_levels=1))
    assert model.stop_level == 1 == len(model.validation_history)
    model = train_cascade(X, y, _small_config(max_levels=3, improvement_tolerance=-1.0))
    assert model.stop_level <= 3


@pytest.mark.parametrize("seed", range(4))
def test_best_level_retained(seed):
    X, y = _noisy(seed, n=150)
    model = train_cascade(X, y, _small_config(max_levels=6, improvement_tolerance=0.0, seed=seed))
    hist = model.validation_history
    assert 1 <= model.stop_level == len(model.levels) == len(hist) <= 6
    assert hist[-1] == max(hist)
    assert all(np.isfinite(hist))


@pytest.mark.parametrize(
    "script, kept",
    [
        # level 3 gains less than the tolerance: growth halts, yet it is the best level
        ([0.70, 0.80, 0.8005, 0.95], [0.70, 0.80, 0.8005]),
        # level 3 is worse: growth halts and the model falls back to level 2
        ([0.70, 0.80, 0.79, 0.95], [0.70, 0.80]),
        ([0.90, 0.90, 0.99], [0.90]),
    ],
)
def test_stopping_rule(monkeypatch, script, kept):
    # feed a scripted validation-accuracy sequence to the stopping rule
    it = iter(script)
    monkeypatch.setattr(cascade_mod, "_accuracy", lambda proba, y: next(it))
    X, y = _noisy(3)
    model = train_cascade(X, y, _small_config(max_levels=10))
    assert model.validation_history == kept
    assert model.stop_level == len(kept)


def test_separable_data():
    X, y = _separable(0)
    model = train_cascade(X, y, _small_config())
    assert model.validation_history[-1] == 1.0
    assert model.stop_level <= 2
    _, labels = predict_cascade(model, X)
    assert np.array_equal(labels, y)


def test_out_of_fold_discipline(monkeypatch):
    X, y = _noisy(5, n=60, d=3)
    d = X.shape[1]
    key = lambda row: tuple(np.round(row[:d], 12))  # noqa: E731  original features identify a row
    trained = []  # (level, learner seed, rows seen, model)
    violations = []
    real = cascade_mod.make_learner

    def spy(spec, Xs, ys, fold, level):
        model = real(spec, Xs, ys, fold, level)
        seen = {key(r) for r in Xs}
        trained.append((level, spec.seed, seen, model, Xs.copy()))
        inner = model.predict_proba

        class Wrapped:
            def predict_proba(self, Q):
                if any(key(r) in seen for r in Q):
                    violations.append((level, spec.seed, fold))
                return inner(Q)

            def __getattr__(self, name):
                return getattr(model, name)

        return Wrapped()

    monkeypatch.setattr(cascade_mod, "make_learner", spy)
    config = _small_config(max_levels=2, improvement_tolerance=-1.0, folds=4)
    train_cascade(X, y, config)
    assert violations == []
    assert {t[0] for t in trained} == {0, 1}

    # every augmented entry at level 2 is the prediction of the level-1 fold model that excluded the row
    level1 = [t for t in trained if t[0] == 0]
    level2_inputs = [t[4] for t in trained if t[0] == 1]
    seeds = [s.seed for s in config.learner_set]
    for Xs in level2_inputs:
        for row in Xs:
            for li, seed in enumerate(seeds):
                owners = [m for lvl, s, seen, m, _ in level1 if s == seed and key(row) not in seen]
                assert len(owners) == 1
                expected = owners[0].predict_proba(row[None, :d])[0]
                assert np.allclose(row[d + 2 * li: d + 2 * li + 2], expected, rtol=0, atol=1e-12)


def test_prediction_contract():
    X, y = _noisy(6)
    model = train_cascade(X, y, _small_config(max_levels=3, improvement_tolerance=-1.0))
    P, labels = predict_cascade(model, X[:30])
    assert np.allclose(P.sum(axis=1), 1.0, atol=1e-9, rtol=0)
    assert np.array_equal(labels, (P[:, 1] > P[:, 0]).astype(int))
    with pytest.raises(LearnerError):
        predict_cascade(model, X[:, :-1])


def test_tie_goes_to_class_zero():
    assert labels_from_proba(np.array([[0.5, 0.5], [0.4, 0.6]])).tolist() == [0, 1]
    half = LogisticModel(np.zeros(2), 0.0)
    lv = CascadeLevel([LearnerSpec("logistic")] * 4, [[half] * 2 for _ in range(4)], 2)
    model = CascadeModel([lv], 2, [0.5])
    P, labels = predict_cascade(model, np.ones((3, 2)))
    assert np.array_equal(P, np.full((3, 2), 0.5)) and labels.tolist() == [0, 0, 0]


@pytest.mark.parametrize("name", ["rf", "ert", "lr"])
def test_variant_configurations(name):
    X, y = _noisy(7)
    config = CascadeConfig(cascade_learners(name, seed=2, n_trees=6), max_levels=2)
    model = train_cascade(X, y, config)
    P, _ = predict_cascade(model, X)
    assert P.shape == (len(X), 2)


def test_errors():
    X, y = _noisy(8, n=40)
    with pytest.raises(LearnerError, match="degenerate"):
        train_cascade(X, np.zeros(40, dtype=int), _small_config())
    with pytest.raises(LearnerError):
        train_cascade(X[:4], y[:4], _small_config())


def test_deterministic_and_round_trip():
    X, y = _noisy(9)
    a = train_cascade(X, y, _small_config(seed=4, max_levels=2, improvement_tolerance=-1.0))
    b = train_cascade(X, y, _small_config(seed=4, max_levels=2, improvement_tolerance=-1.0))
    assert np.array_equal(predict_cascade(a, X)[0], predict_cascade(b, X)[0])
    again = CascadeModel.from_dict(a.to_dict())
    assert np.array_equal(predict_cascade(a, X)[0], predict_cascade(again, X)[0])
    assert again.validation_history == a.validation_history


def test_stratified_helpers():
    y = np.array([0] * 50 + [1] * 10)
    rng = np.random.default_rng(0)
    keep, held = stratified_split(y, 0.2, rng)
    assert len(set(keep) | set(held)) == 60 and not set(keep) & set(held)
    assert y[held].sum() == 2 and (y[held] == 0).sum() == 10
    folds = stratified_folds(y, 5, rng)
    for f in range(5):
        assert y[folds == f].sum() == 2
