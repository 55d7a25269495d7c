"""End-to-end training, prediction, evaluation and model bundles."""

from __future__ import annotations

import dataclasses
import gzip
import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .account_views import (
    HashedTextEmbedder,
    Node2VecConfig,
    build_views,
    min_max_apply,
    post_view,
    profile_attribute_vector,
)
from .base_learners import predict_proba_forest, train_forest
from .candidate_graph import GraphConfig, build_candidate_graph, candidate_pairs
from .cascade import CascadeConfig, CascadeModel, cascade_learners, predict_cascade, stratified_split, train_cascade
from .dataset import Dataset, pair_key
from .pair_features import FEATURE_NAMES, DescriptionIndex, extract_pair_features
from .text_similarity import TfidfModel, normalize_text, tfidf_fit
from .wgcca import DEFAULT_WEIGHTS, VIEW_ORDER, ViewProjection, wgcca_fit, wgcca_project

log = logging.getLogger(__name__)

FORMAT = "clonedetect-bundle"
FORMAT_VERSION = 1
ABLATIONS = ("full", "gc", "account", "wgcca")
N_PAIR_FEATURES = len(FEATURE_NAMES)
# indices of the unbounded difference features within the pair block
_DIFF_COLUMNS = tuple(range(5, N_PAIR_FEATURES))


class BundleError(ValueError):
    pass


class PipelineError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    delta: float = 0.8
    wgcca_weights: tuple = DEFAULT_WEIGHTS
    latent_dim: int = 64
    ridge: Optional[float] = None
    folds: int = 5
    ablation: str = "full"
    cascade: str = "default"
    n_trees: int = 50
    max_levels: int = 20
    seed: int = 0
    test_fraction: float = 0.2
    embedding_dim: int = 256
    node2vec: Node2VecConfig = field(default_factory=Node2VecConfig)

    def __post_init__(self):
        if self.ablation not in ABLATIONS:
            raise ValueError(f"unknown ablation {self.ablation!r}; choose from {ABLATIONS}")
        if len(self.wgcca_weights) != len(VIEW_ORDER):
            raise ValueError(f"expected {len(VIEW_ORDER)} wGCCA weights")

    @property
    def uses_views(self) -> bool:
        return self.ablation in ("full", "wgcca")

    def cascade_config(self) -> CascadeConfig:
        return CascadeConfig(
            learner_set=cascade_learners(self.cascade, self.seed, self.n_trees),
            folds=self.folds,
            max_levels=self.max_levels,
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["wgcca_weights"] = list(self.wgcca_weights)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        d["wgcca_weights"] = tuple(d["wgcca_weights"])
        d["node2vec"] = Node2VecConfig(**d["node2vec"])
        return cls(**d)


# --------------------------------------------------------------------------
# featurization


@dataclass
class EmbeddingState:
    """Everything needed to embed an account, seen at fit time or not."""

    weights: tuple
    projection: ViewProjection
    rows: Dict[str, np.ndarray]
    node_vectors: Dict[str, Dict[str, np.ndarray]]
    profile_lo: np.ndarray
    profile_hi: np.ndarray
    post_source: dict

    def to_dict(self) -> dict:
        ids = sorted(self.rows)
        return {
            "weights": list(self.weights),
            "projection": self.projection.to_dict(),
            "ids": ids,
            "G": [self.rows[i].tolist() for i in ids],
            "node_vectors": {
                kind: {"ids": sorted(vecs), "vectors": [vecs[i].tolist() for i in sorted(vecs)]}
                for kind, vecs in self.node_vectors.items()
            },
            "profile_lo": self.profile_lo.tolist(),
            "profile_hi": self.profile_hi.tolist(),
            "post_source": self.post_source,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EmbeddingState":
        rows = {i: np.asarray(g, dtype=float) for i, g in zip(d["ids"], d["G"])}
        node_vectors = {
            kind: {i: np.asarray(v, dtype=float) for i, v in zip(nv["ids"], nv["vectors"])}
            for kind, nv in d["node_vectors"].items()
        }
        return cls(
            tuple(d["weights"]),
            ViewProjection.from_dict(d["projection"]),
            rows,
            node_vectors,
            np.asarray(d["profile_lo"], dtype=float),
            np.asarray(d["profile_hi"], dtype=float),
            d["post_source"],
        )

    def embed(self, accounts: Sequence, reference_date, post_vectors=None) -> Dict[str, np.ndarray]:
        """Fit-time rows for known ids, inductive projections for the rest."""
        out = {}
        unknown = [a for a in accounts if a.id not in self.rows]
        for a in accounts:
            if a.id in self.rows:
                out[a.id] = self.rows[a.id]
        if not unknown:
            return out
        if self.post_source["kind"] == "external":
            if post_vectors is None:
                raise PipelineError("this bundle needs the external post-embedding file")
            dim = self.post_source["dimension"]
            post = np.array([post_vectors.get(a.id, np.zeros(dim)) for a in unknown])
        else:
            emb = HashedTextEmbedder(self.post_source["dimension"], self.post_source["seed"])
            post = np.array([post_view(emb, a.posts) for a in unknown])
        views = [post]
        for kind in ("follower", "friend"):
            vecs = self.node_vectors[kind]
            dim = self.projection.U[VIEW_ORDER.index(kind)].shape[0]
            views.append(np.array([vecs.get(a.id, np.zeros(dim)) for a in unknown]))
        raw = np.array([profile_attribute_vector(a, reference_date).as_array() for a in unknown])
        views.append(min_max_apply(raw, self.profile_lo, self.profile_hi))
        proj = wgcca_project(self.projection, self.weights, views)
        for a, row in zip(unknown, proj):
            out[a.id] = row
        return out


def fit_embeddings(dataset: Dataset, config: PipelineConfig, post_vectors=None) -> EmbeddingState:
    embedder = HashedTextEmbedder(config.embedding_dim, config.seed)
    views = build_views(
        dataset.accounts,
        dataset.edges,
        dataset.reference_date,
        embedder=embedder,
        post_vectors=post_vectors,
        node2vec=dataclasses.replace(config.node2vec, seed=config.node2vec.seed + config.seed),
    )
    mats = [views[name] for name in VIEW_ORDER]
    shared, projection = wgcca_fit(mats, config.wgcca_weights, config.latent_dim, config.ridge)
    if post_vectors is not None:
        post_source = {"kind": "external", "dimension": int(mats[0].shape[1])}
    else:
        post_source = {"kind": "hashed", "dimension": config.embedding_dim, "seed": config.seed}
    state = views["state"]
    return EmbeddingState(
        tuple(config.wgcca_weights),
        projection,
        {a.id: shared.G[i] for i, a in enumerate(dataset.accounts)},
        state["node_vectors"],
        state["profile_lo"],
        state["profile_hi"],
        post_source,
    )


def fit_tfidf(dataset: Dataset) -> TfidfModel:
    return tfidf_fit([normalize_text(a.description) for a in dataset.accounts])


def pair_matrix(dataset: Dataset, graph, pairs, tfidf: TfidfModel, embeddings: Optional[Dict[str, np.ndarray]],
                ablation: str) -> np.ndarray:
    """Unscaled classifier inputs, one row per pair."""
    if ablation == "gc":
        return np.array([graph.edge_scores[p] for p in pairs], dtype=float).reshape(len(pairs), 2)
    by_id = dataset.by_id()
    blocks = []
    if ablation in ("full", "account"):
        index = DescriptionIndex(tfidf)
        F = [extract_pair_features(by_id[a], by_id[b], index, dataset.reference_date).as_array() for a, b in pairs]
        blocks.append(np.array(F).reshape(len(pairs), N_PAIR_FEATURES))
    if ablation in ("full", "wgcca"):
        k = len(next(iter(embeddings.values())))
        E = [np.concatenate([embeddings[a], embeddings[b]]) for a, b in pairs]
        blocks.append(np.array(E).reshape(len(pairs), 2 * k))
    return np.hstack(blocks)


def scaled_columns(ablation: str, width: int) -> np.ndarray:
    if ablation == "gc":
        return np.zeros(0, dtype=np.int64)
    if ablation == "account":
        return np.array(_DIFF_COLUMNS, dtype=np.int64)
    if ablation == "wgcca":
        return np.arange(width, dtype=np.int64)
    return np.concatenate([np.array(_DIFF_COLUMNS), np.arange(N_PAIR_FEATURES, width)]).astype(np.int64)


@dataclass
class Scaler:
    columns: np.ndarray
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray, columns: np.ndarray) -> "Scaler":
        sub = X[:, columns]
        return cls(columns, sub.min(axis=0), sub.max(axis=0))

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = X.copy()
        if self.columns.size:
            X[:, self.columns] = min_max_apply(X[:, self.columns], self.lo, self.hi)
        return X

    def to_dict(self) -> dict:
        return {"columns": self.columns.tolist(), "lo": self.lo.tolist(), "hi": self.hi.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.asarray(d["columns"], dtype=np.int64), np.asarray(d["lo"], dtype=float),
                   np.asarray(d["hi"], dtype=float))


# --------------------------------------------------------------------------
# training


@dataclass
class PreparedData:
    """Featurized candidate pairs plus the fitted unsupervised state."""

    config: PipelineConfig
    pairs: list
    X: np.ndarray
    y: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    tfidf: TfidfModel
    embeddings: Optional[EmbeddingState]
    labeled_pairs: int
    recovered_pairs: int


def prepare(dataset: Dataset, config: PipelineConfig = PipelineConfig(), post_vectors=None) -> PreparedData:
    if not dataset.labels:
        raise PipelineError("training requires labeled clone/victim pairs")
    graph = build_candidate_graph(dataset.accounts, GraphConfig(config.delta))
    pairs = candidate_pairs(graph)
    truth = dataset.label_pairs()
    y = np.array([p in truth for p in pairs], dtype=np.int64)
    log.info("candidate graph: %d pairs, %d labeled recovered of %d", len(pairs), int(y.sum()), len(truth))
    if y.sum() == 0:
        raise PipelineError("graph recovered no labeled pairs; lower delta")
    if y.sum() == len(pairs):
        raise PipelineError("every candidate pair is labeled; no negatives to learn from")
    tfidf = fit_tfidf(dataset)
    state = fit_embeddings(dataset, config, post_vectors) if config.uses_views else None
    X = pair_matrix(dataset, graph, pairs, tfidf, state.rows if state else None, config.ablation)
    rng = np.random.default_rng([config.seed & 0xFFFFFFFF, 80])
    train_idx, test_idx = stratified_split(y, config.test_fraction, rng)
    return PreparedData(config, pairs, X, y, train_idx, test_idx, tfidf, state, len(truth), int(y.sum()))


@dataclass
class ModelBundle:
    config: PipelineConfig
    tfidf: TfidfModel
    embeddings: Optional[EmbeddingState]
    scaler: Scaler
    cascade: CascadeModel
    train_pairs: list
    test_pairs: list
    format_version: int = FORMAT_VERSION

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "config": self.config.to_dict(),
            "tfidf": self.tfidf.to_dict(),
            "embeddings": self.embeddings.to_dict() if self.embeddings else None,
            "scaler": self.scaler.to_dict(),
            "cascade": self.cascade.to_dict(),
            "split": {"train": [list(p) for p in self.train_pairs], "test": [list(p) for p in self.test_pairs]},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelBundle":
        if d.get("format_version") != FORMAT_VERSION:
            raise BundleError(f"unsupported version {d.get('format_version')!r}")
        config = PipelineConfig.from_dict(d["config"])
        cascade = CascadeModel.from_dict(d["cascade"])
        cascade.config = config.cascade_config()
        return cls(
            config,
            TfidfModel.from_dict(d["tfidf"]),
            EmbeddingState.from_dict(d["embeddings"]) if d["embeddings"] else None,
            Scaler.from_dict(d["scaler"]),
            cascade,
            [tuple(p) for p in d["split"]["train"]],
            [tuple(p) for p in d["split"]["test"]],
        )


def fit(prepared: PreparedData, config: Optional[PipelineConfig] = None) -> ModelBundle:
    """Scale and train the cascade on the training split of ``prepared``.

    ``config`` may override cascade settings (learner set, folds, seed)
    while reusing the same featurized pairs.
    """
    config = config or prepared.config
    X_train = prepared.X[prepared.train_idx]
    scaler = Scaler.fit(X_train, scaled_columns(config.ablation, prepared.X.shape[1]))
    cascade = train_cascade(scaler.apply(X_train), prepared.y[prepared.train_idx], config.cascade_config())
    return ModelBundle(
        config,
        prepared.tfidf,
        prepared.embeddings,
        scaler,
        cascade,
        [prepared.pairs[i] for i in prepared.train_idx],
        [prepared.pairs[i] for i in prepared.test_idx],
    )


def train_pipeline(dataset: Dataset, config: PipelineConfig = PipelineConfig(), post_vectors=None) -> ModelBundle:
    return fit(prepare(dataset, config, post_vectors))


def baseline_forest_predictions(prepared: PreparedData, seed: int = 0, n_trees: int = 50) -> np.ndarray:
    """Held-out probabilities of a single random forest on the same inputs."""
    X_train = prepared.X[prepared.train_idx]
    scaler = Scaler.fit(X_train, scaled_columns(prepared.config.ablation, prepared.X.shape[1]))
    model = train_forest(scaler.apply(X_train), prepared.y[prepared.train_idx], "random_forest", n_trees, seed)
    return predict_proba_forest(model, scaler.apply(prepared.X[prepared.test_idx]))


# --------------------------------------------------------------------------
# prediction and evaluation


@dataclass(frozen=True)
class Prediction:
    pair: tuple
    clone_probability: float
    label: int


def predict_pipeline(bundle: ModelBundle, dataset: Dataset, post_vectors=None) -> List[Prediction]:
    if bundle.format_version != FORMAT_VERSION:
        raise BundleError(f"unsupported version {bundle.format_version!r}")
    config = bundle.config
    graph = build_candidate_graph(dataset.accounts, GraphConfig(config.delta))
    pairs = candidate_pairs(graph)
    if not pairs:
        return []
    embeddings = None
    if config.uses_views:
        involved = {x for p in pairs for x in p}
        accounts = [a for a in dataset.accounts if a.id in involved]
        embeddings = bundle.embeddings.embed(accounts, dataset.reference_date, post_vectors)
    X = pair_matrix(dataset, graph, pairs, bundle.tfidf, embeddings, config.ablation)
    proba, labels = predict_cascade(bundle.cascade, bundle.scaler.apply(X))
    return [Prediction(p, float(pr[1]), int(lb)) for p, pr, lb in zip(pairs, proba, labels)]


@dataclass(frozen=True)
class EvaluationReport:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int
    tn: int

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def format(self) -> str:
        return (f"precision {self.precision:.4f}  recall {self.recall:.4f}  f1 {self.f1:.4f}  "
                f"tp {self.tp}  fp {self.fp}  fn {self.fn}  tn {self.tn}")


def report_from_counts(tp: int, fp: int, fn: int, tn: int = 0) -> EvaluationReport:
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvaluationReport(precision, recall, f1, tp, fp, fn, tn)


def evaluate(predictions: Sequence, truth_labels) -> EvaluationReport:
    """Score predicted pairs against true clone/victim pairs.

    ``predictions`` holds :class:`Prediction` records or ``(pair, prob, label)``
    tuples.  True pairs that were never predicted count as misses.
    """
    truth = {pair_key(a, b) for a, b in truth_labels}
    tp = fp = tn = 0
    hit = set()
    for rec in predictions:
        pair, _, label = (rec.pair, rec.clone_probability, rec.label) if isinstance(rec, Prediction) else rec
        key = pair_key(*pair)
        if label == 1:
            if key in truth:
                tp += 1
                hit.add(key)
            else:
                fp += 1
        elif key not in truth:
            tn += 1
    return report_from_counts(tp, fp, len(truth - hit), tn)


def evaluate_holdout(bundle: ModelBundle, dataset: Dataset, predictions=None) -> EvaluationReport:
    """Metrics on the bundle's held-out pairs."""
    if predictions is None:
        predictions = predict_pipeline(bundle, dataset)
    test = set(bundle.test_pairs)
    held = [p for p in predictions if p.pair in test]
    truth = dataset.label_pairs() & test
    return evaluate(held, truth)


# --------------------------------------------------------------------------
# persistence


def _open(path, mode):
    if str(path).endswith(".gz"):
        return gzip.open(path, mode)
    return open(path, mode)


def save_bundle(bundle: ModelBundle, path) -> None:
    """Write a header line (format, version, checksum) then the JSON payload."""
    payload = json.dumps(bundle.to_dict(), separators=(",", ":")).encode("utf-8")
    header = {
        "format": FORMAT,
        "version": bundle.format_version,
        "sha256": hashlib.sha256(payload).hexdigest(),
        "length": len(payload),
    }
    with _open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        fh.write(payload)


def load_bundle(path) -> ModelBundle:
    try:
        with _open(path, "rb") as fh:
            header_line = fh.readline()
            payload = fh.read()
    except (OSError, EOFError) as exc:
        raise BundleError(f"cannot read bundle: {exc}") from None
    try:
        header = json.loads(header_line)
    except (json.JSONDecodeError, UnicodeDecodeError):
        raise BundleError("corrupted bundle header") from None
    if not isinstance(header, dict) or header.get("format") != FORMAT:
        raise BundleError("not a model bundle")
    if header.get("version") != FORMAT_VERSION:
        raise BundleError(f"unsupported version {header.get('version')!r}")
    if len(payload) != header.get("length"):
        raise BundleError("truncated bundle")
    if hashlib.sha256(payload).hexdigest() != header.get("sha256"):
        raise BundleError("corrupted bundle: checksum mismatch")
    try:
        data = json.loads(payload)
        return ModelBundle.from_dict(data)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise BundleError(f"corrupted bundle: {exc}") from None
