import dataclasses
import gzip
import json

import numpy as np
import pytest

from clonedetect import pipeline as pl
from clonedetect.account_views import Node2VecConfig
from clonedetect.cascade import predict_cascade
from clonedetect.dataset import Dataset
from clonedetect.pipeline import (
    BundleError,
    PipelineConfig,
    PipelineError,
    Prediction,
    evaluate,
    evaluate_holdout,
    fit,
    load_bundle,
    predict_pipeline,
    prepare,
    report_from_counts,
    save_bundle,
)
from conftest import make_account

FAST = PipelineConfig(latent_dim=8, n_trees=8, max_levels=3, embedding_dim=32,
                      node2vec=Node2VecConfig(dimension=16, walks_per_node=4, epochs=2), seed=7)


@pytest.fixture(scope="module")
def prepared(small_dataset):
    return prepare(small_dataset, FAST)


@pytest.fixture(scope="module")
def bundle(prepared):
    return fit(prepared)


def test_structure(bundle, prepared):
    assert bundle.cascade.stop_level >= 1
    assert all(np.isfinite(bundle.cascade.validation_history))
    assert prepared.X.shape == (len(prepared.pairs), 10 + 2 * FAST.latent_dim)
    assert bundle.cascade.input_dim == 10 + 2 * FAST.latent_dim


def test_default_dimensions():
    cfg = PipelineConfig()
    assert (cfg.delta, cfg.wgcca_weights, cfg.latent_dim, cfg.folds) == (0.8, (0.25, 0.5, 0.5, 0.25), 64, 5)
    assert (cfg.test_fraction, cfg.n_trees) == (0.2, 50)


@pytest.mark.parametrize("ablation, width", [("gc", 2), ("account", 10), ("wgcca", 16), ("full", 26)])
def test_ablation_dimensions(small_dataset, ablation, width):
    prep = prepare(small_dataset, dataclasses.replace(FAST, ablation=ablation))
    assert prep.X.shape[1] == width
    assert (prep.embeddings is None) == (ablation in ("gc", "account"))


def test_gc_ablation_uses_edge_scores(small_dataset):
    prep = prepare(small_dataset, dataclasses.replace(FAST, ablation="gc"))
    assert prep.X.min() >= 0 and prep.X.max() <= 1
    assert np.all(prep.X.max(axis=1) >= FAST.delta)


def test_labels_and_split(prepared, small_dataset, bundle):
    truth = small_dataset.label_pairs()
    assert prepared.y.tolist() == [int(p in truth) for p in prepared.pairs]
    assert not set(bundle.train_pairs) & set(bundle.test_pairs)
    assert len(bundle.train_pairs) + len(bundle.test_pairs) == len(prepared.pairs)
    # stratified: the held-out share of positives is close to 20%
    pos_test = prepared.y[prepared.test_idx].sum()
    assert abs(pos_test - 0.2 * prepared.y.sum()) <= 1


def test_split_hygiene(prepared, monkeypatch):
    seen = []
    real = pl.train_cascade

    def spy(X, y, config):
        seen.append(X.copy())
        return real(X, y, config)

    monkeypatch.setattr(pl, "train_cascade", spy)
    b = fit(prepared)
    test_rows = b.scaler.apply(prepared.X[prepared.test_idx])
    trained = {r.tobytes() for r in seen[0]}
    assert len(seen[0]) == len(prepared.train_idx)
    assert not any(r.tobytes() in trained for r in test_rows)


def test_replay_matches_training_time(bundle, prepared, small_dataset):
    preds = predict_pipeline(bundle, small_dataset)
    assert [p.pair for p in preds] == prepared.pairs
    direct, _ = predict_cascade(bundle.cascade, bundle.scaler.apply(prepared.X))
    assert np.array_equal([p.clone_probability for p in preds], direct[:, 1])
    assert all(p.label == int(p.clone_probability > 0.5) for p in preds)


def test_no_candidate_pairs(bundle):
    ds = Dataset([make_account("a", "qwerty", "Alpha"), make_account("b", "zxcvbn", "Omega")])
    assert predict_pipeline(bundle, ds) == []


def test_identical_clone_scores_high(bundle, small_dataset):
    victim = small_dataset.accounts[0]
    copy = dataclasses.replace(victim, id="zz-copy")
    ds = Dataset(small_dataset.accounts + [copy], small_dataset.edges, set(), small_dataset.reference_date)
    preds = {p.pair: p for p in predict_pipeline(bundle, ds)}
    key = tuple(sorted((victim.id, copy.id)))
    assert preds[key].clone_probability > 0.5


def test_deterministic(small_dataset, bundle):
    again = fit(prepare(small_dataset, FAST))
    a = predict_pipeline(bundle, small_dataset)
    b = predict_pipeline(again, small_dataset)
    assert a == b


def test_no_labels_recovered():
    accts = [make_account("a", "qwerty", "Alpha"), make_account("b", "zxcvbn", "Omega"),
             make_account("c", "jdoe", "J Doe"), make_account("d", "jdoe1", "J Doe")]
    ds = Dataset(accts, labels={("a", "b")})
    with pytest.raises(PipelineError, match="graph recovered no labeled pairs; lower delta"):
        prepare(ds, FAST)


def test_evaluate_examples():
    r = report_from_counts(1, 0, 0)
    assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)
    r = report_from_counts(0, 0, 1)
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)
    r = report_from_counts(3, 1, 2)
    assert r.precision == 0.75 and r.recall == 0.6
    assert r.f1 == pytest.approx(2 * 0.75 * 0.6 / 1.35) and f"{r.f1:.4f}" == "0.6667"


def test_evaluate_counts():
    truth = {("a", "b"), ("c", "d"), ("e", "f")}
    preds = [
        Prediction(("a", "b"), 0.9, 1),  # tp
        Prediction(("b", "c"), 0.8, 1),  # fp
        Prediction(("c", "d"), 0.2, 0),  # fn
        Prediction(("x", "y"), 0.1, 0),  # tn
    ]
    r = evaluate(preds, truth)
    # ("e", "f") was never proposed and also counts as a miss
    assert (r.tp, r.fp, r.fn, r.tn) == (1, 1, 2, 1)
    assert evaluate([(("b", "a"), 0.7, 1)], {("a", "b")}).tp == 1
    assert "0.5000" in report_from_counts(1, 1, 1).format()


def test_holdout_report(bundle, small_dataset):
    r = evaluate_holdout(bundle, small_dataset)
    assert r.tp + r.fp + r.fn + r.tn == len(bundle.test_pairs)
    assert 0 <= r.f1 <= 1


@pytest.mark.parametrize("name", ["bundle.json", "bundle.json.gz"])
def test_bundle_round_trip(bundle, small_dataset, tmp_path, name):
    path = tmp_path / name
    save_bundle(bundle, path)
    loaded = load_bundle(path)
    assert predict_pipeline(loaded, small_dataset) == predict_pipeline(bundle, small_dataset)
    assert evaluate_holdout(loaded, small_dataset) == evaluate_holdout(bundle, small_dataset)
    assert loaded.config == bundle.config


def test_bundle_corruption(bundle, tmp_path):
    path = tmp_path / "b.json"
    save_bundle(bundle, path)
    raw = path.read_bytes()

    path.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(BundleError, match="truncated"):
        load_bundle(path)

    flipped = bytearray(raw)
    flipped[-10] ^= 0x01
    path.write_bytes(bytes(flipped))
    with pytest.raises(BundleError, match="corrupted"):
        load_bundle(path)

    path.write_bytes(b"\x00\xff garbage")
    with pytest.raises(BundleError):
        load_bundle(path)

    header, payload = raw.split(b"\n", 1)
    h = json.loads(header)
    h["version"] = 99
    path.write_bytes(json.dumps(h).encode() + b"\n" + payload)
    with pytest.raises(BundleError, match="unsupported version"):
        load_bundle(path)

    with pytest.raises(BundleError):
        load_bundle(tmp_path / "missing.json")

    gz = tmp_path / "b.json.gz"
    save_bundle(bundle, gz)
    gz.write_bytes(gz.read_bytes()[:200])
    with pytest.raises(BundleError):
        load_bundle(gz)


def test_payload_version_checked(bundle):
    d = bundle.to_dict()
    d["format_version"] = 2
    with pytest.raises(BundleError, match="unsupported version"):
        pl.ModelBundle.from_dict(d)


def test_external_post_vectors(small_dataset):
    rng = np.random.default_rng(0)
    vectors = {a.id: rng.standard_normal(6) for a in small_dataset.accounts}
    cfg = dataclasses.replace(FAST, max_levels=1)
    b = fit(prepare(small_dataset, cfg, post_vectors=vectors))
    assert b.embeddings.post_source == {"kind": "external", "dimension": 6}
    # known accounts reuse their fitted rows, so the file is only needed for new ones
    assert predict_pipeline(b, small_dataset) == predict_pipeline(b, small_dataset, vectors)
    newcomer = dataclasses.replace(small_dataset.accounts[0], id="zz-new")
    ds = Dataset(small_dataset.accounts + [newcomer], small_dataset.edges, set(), small_dataset.reference_date)
    with pytest.raises(PipelineError, match="external post-embedding"):
        predict_pipeline(b, ds)
    assert predict_pipeline(b, ds, vectors)
