"""Per-account views: posts, follower/friend networks and profile attributes."""

from __future__ import annotations

import datetime as dt
import hashlib
import re
from dataclasses import astuple, dataclass
from functools import lru_cache
from typing import Dict, Mapping, Protocol, Sequence

import numpy as np
from numba import njit

from .pair_features import months_between

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


# --------------------------------------------------------------------------
# post view


class TextEmbedder(Protocol):
    dimension: int

    def embed(self, text: str) -> np.ndarray: ...


@lru_cache(maxsize=200_000)
def _hash_slot(token: str, dimension: int, seed: int) -> tuple:
    digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8, key=seed.to_bytes(8, "little", signed=True)).digest()
    h = int.from_bytes(digest, "little")
    return h % dimension, 1.0 if (h >> 63) & 1 == 0 else -1.0


def hashed_text_embed(text: str, dimension: int = 256, seed: int = 0) -> np.ndarray:
    """Signed feature hashing of unigrams and bigrams, L2-normalized."""
    if dimension < 1:
        raise ValueError("dimension must be positive")
    vec = np.zeros(dimension)
    tokens = _TOKEN_RE.findall(text.lower())
    grams = tokens + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    for g in grams:
        idx, sign = _hash_slot(g, dimension, seed)
        vec[idx] += sign
    norm = np.linalg.norm(vec)
    if norm > 0:
        vec /= norm
    return vec


@dataclass(frozen=True)
class HashedTextEmbedder:
    dimension: int = 256
    seed: int = 0

    def embed(self, text: str) -> np.ndarray:
        return hashed_text_embed(text, self.dimension, self.seed)


def post_view(embedder: TextEmbedder, posts: Sequence[str]) -> np.ndarray:
    if not posts:
        return np.zeros(embedder.dimension)
    return np.mean([embedder.embed(p) for p in posts], axis=0)


def load_post_embeddings(path) -> tuple:
    """Read ``id <TAB> v1 <TAB> ... <TAB> vd`` records.

    Returns ``(vectors, dimension)``; every record must carry the same
    number of values.
    """
    vectors: Dict[str, np.ndarray] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            try:
                values = np.array([float(x) for x in parts[1:]])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric embedding value") from None
            if len(values) == 0 or not np.all(np.isfinite(values)):
                raise ValueError(f"{path}:{lineno}: empty or non-finite embedding")
            if dim is None:
                dim = len(values)
            elif len(values) != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, found {len(values)}")
            if parts[0] in vectors:
                raise ValueError(f"{path}:{lineno}: duplicate account id {parts[0]!r}")
            vectors[parts[0]] = values
    if dim is None:
        raise ValueError(f"{path}: no embeddings")
    return vectors, dim


# --------------------------------------------------------------------------
# network views


@dataclass
class InteractionGraph:
    kind: str
    nodes: list
    adjacency: Dict[str, list]

    def neighbors(self, node: str) -> list:
        return self.adjacency[node]

    def edge_count(self) -> int:
        return sum(len(v) for v in self.adjacency.values()) // 2


def build_interaction_graph(edges, kind: str, nodes: Sequence[str]) -> InteractionGraph:
    known = set(nodes)
    adj = {n: set() for n in nodes}
    for a, b, k in edges:
        for x in (a, b):
            if x not in known:
                raise ValueError(f"unknown account id {x!r}")
        if k != kind or a == b:
            continue
        adj[a].add(b)
        adj[b].add(a)
    return InteractionGraph(kind, sorted(nodes), {n: sorted(v) for n, v in adj.items()})


@dataclass(frozen=True)
class Node2VecConfig:
    return_p: float = 0.5
    in_out_q: float = 2.0
    walks_per_node: int = 10
    walk_length: int = 15
    dimension: int = 128
    window: int = 5
    negative_samples: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    min_learning_rate: float = 0.0001
    seed: int = 0

    def __post_init__(self):
        for name in ("return_p", "in_out_q", "learning_rate"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        for name in ("walks_per_node", "walk_length", "dimension", "window", "negative_samples", "epochs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")


def _node_seed(seed: int, node: str) -> int:
    return int.from_bytes(hashlib.sha256(node.encode("utf-8")).digest()[:8], "little") ^ (seed & 0xFFFFFFFFFFFFFFFF)


def transition_probabilities(graph: InteractionGraph, prev, cur: str, p: float, q: float):
    """Next-step distribution from ``cur`` having arrived from ``prev``.

    Returns ``(candidates, probabilities)``.  With ``prev`` None the step is
    uniform over neighbors.
    """
    nbrs = graph.adjacency[cur]
    if not nbrs:
        return [], np.zeros(0)
    if prev is None:
        w = np.ones(len(nbrs))
    else:
        prev_nbrs = set(graph.adjacency[prev])
        w = np.array([1.0 / p if x == prev else (1.0 if x in prev_nbrs else 1.0 / q) for x in nbrs])
    return nbrs, w / w.sum()


def node2vec_walks(graph: InteractionGraph, config: Node2VecConfig = Node2VecConfig()) -> list:
    if not graph.nodes:
        raise ValueError("graph has no nodes")
    walks = []
    for start in graph.nodes:
        rng = np.random.default_rng(_node_seed(config.seed, start))
        for _ in range(config.walks_per_node):
            walk = [start]
            prev = None
            while len(walk) < config.walk_length:
                cur = walk[-1]
                nbrs, probs = transition_probabilities(graph, prev, cur, config.return_p, config.in_out_q)
                if not nbrs:
                    break
                idx = int(np.searchsorted(np.cumsum(probs), rng.random(), side="right"))
                walk.append(nbrs[min(idx, len(nbrs) - 1)])
                prev = cur
            walks.append(walk)
    return walks


@njit(cache=True, fastmath=True)
def _sgns(corpus, offsets, n_nodes, dim, window, negative, epochs, lr0, lr_min, cum_table, seed):
    np.random.seed(seed)
    emb = (np.random.random((n_nodes, dim)) - 0.5) / dim
    ctx = np.zeros((n_nodes, dim))
    n_walks = offsets.shape[0] - 1
    total = 0
    for w in range(n_walks):
        L = offsets[w + 1] - offsets[w]
        for i in range(L):
            lo = max(0, i - window)
            hi = min(L, i + window + 1)
            total += hi - lo - 1
    total *= epochs
    # expected pair count under the shrunk window, used only for the lr schedule
    total = max(1, total * (window + 1) // (2 * window))
    losses = np.zeros(epochs)
    grad = np.zeros(dim)
    done = 0
    table_top = cum_table[-1]
    for ep in range(epochs):
        ep_loss = 0.0
        ep_pairs = 0
        for w in range(n_walks):
            start = offsets[w]
            L = offsets[w + 1] - start
            for i in range(L):
                center = corpus[start + i]
                radius = 1 + int(np.random.random() * window)
                lo = max(0, i - radius)
                hi = min(L, i + radius + 1)
                for j in range(lo, hi):
                    if j == i:
                        continue
                    lr = lr0 - (lr0 - lr_min) * min(done, total) / total
                    done += 1
                    target = corpus[start + j]
                    e = emb[center]
                    grad[:] = 0.0
                    for s in range(negative + 1):
                        if s == 0:
                            node = target
                            label = 1.0
                        else:
                            node = np.searchsorted(cum_table, np.random.random() * table_top, side="right")
                            if node >= n_nodes:
                                node = n_nodes - 1
                            if node == target:
                                continue
                            label = 0.0
                        c = ctx[node]
                        dot = 0.0
                        for k in range(dim):
                            dot += e[k] * c[k]
                        dot = min(30.0, max(-30.0, dot))
                        sig = 1.0 / (1.0 + np.exp(-dot))
                        if label == 1.0:
                            ep_loss -= np.log(sig + 1e-12)
                        else:
                            ep_loss -= np.log(1.0 - sig + 1e-12)
                        g = (label - sig) * lr
                        for k in range(dim):
                            grad[k] += g * c[k]
                            c[k] += g * e[k]
                    for k in range(dim):
                        e[k] += grad[k]
                    ep_pairs += 1
        losses[ep] = ep_loss / max(ep_pairs, 1)
    return emb, losses


def skipgram_train(walks: Sequence[Sequence[str]], config: Node2VecConfig = Node2VecConfig(), nodes=None, return_losses=False):
    """Skip-gram with negative sampling over walk windows.

    ``nodes`` lists every node that must receive a vector; those that never
    appear in a walk get zeros.
    """
    if not walks:
        raise ValueError("no walks to train on")
    vocab = sorted({n for walk in walks for n in walk})
    index = {n: i for i, n in enumerate(vocab)}
    corpus = np.array([index[n] for walk in walks for n in walk], dtype=np.int64)
    offsets = np.zeros(len(walks) + 1, dtype=np.int64)
    offsets[1:] = np.cumsum([len(w) for w in walks])
    counts = np.bincount(corpus, minlength=len(vocab)).astype(float)
    cum_table = np.cumsum(counts**0.75)
    emb, losses = _sgns(
        corpus,
        offsets,
        len(vocab),
        config.dimension,
        config.window,
        config.negative_samples,
        config.epochs,
        config.learning_rate,
        config.min_learning_rate,
        cum_table,
        config.seed & 0xFFFFFFFF,
    )
    all_nodes = vocab if nodes is None else nodes
    out = {}
    for n in all_nodes:
        i = index.get(n)
        out[n] = emb[i].copy() if i is not None else np.zeros(config.dimension)
    if return_losses:
        return out, losses
    return out


def network_view(graph: InteractionGraph, config: Node2VecConfig = Node2VecConfig()) -> Dict[str, np.ndarray]:
    """node2vec vectors for every node; nodes without edges get zeros."""
    connected = [n for n in graph.nodes if graph.adjacency[n]]
    if not connected:
        return {n: np.zeros(config.dimension) for n in graph.nodes}
    sub = InteractionGraph(graph.kind, connected, {n: graph.adjacency[n] for n in connected})
    walks = node2vec_walks(sub, config)
    return skipgram_train(walks, config, nodes=graph.nodes)


# --------------------------------------------------------------------------
# profile attribute view

PROFILE_FIELDS = (
    "friend_count",
    "follower_count",
    "favorite_count",
    "tweet_count",
    "list_count",
    "account_age_months",
    "has_profile_background",
    "uses_default_profile_image",
    "has_description",
    "has_url",
    "screen_name_length",
    "description_length",
)


@dataclass(frozen=True)
class ProfileAttributeVector:
    friend_count: float
    follower_count: float
    favorite_count: float
    tweet_count: float
    list_count: float
    account_age_months: float
    has_profile_background: float
    uses_default_profile_image: float
    has_description: float
    has_url: float
    screen_name_length: float
    description_length: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


def profile_attribute_vector(account, reference_date: dt.date) -> ProfileAttributeVector:
    if account.registered_on > reference_date:
        raise ValueError(f"account {account.id!r} registered after the reference date")
    return ProfileAttributeVector(
        friend_count=float(account.friends_count),
        follower_count=float(account.followers_count),
        favorite_count=float(account.favorites_count),
        tweet_count=float(account.tweet_count),
        list_count=float(account.list_count),
        account_age_months=float(months_between(account.registered_on, reference_date)),
        has_profile_background=float(account.has_profile_background),
        uses_default_profile_image=float(account.uses_default_profile_image),
        has_description=float(len(account.description) > 0),
        has_url=float(account.has_url),
        screen_name_length=float(len(account.screen_name)),
        description_length=float(len(account.description)),
    )


def min_max_fit(X: np.ndarray) -> tuple:
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    return lo, hi


def min_max_apply(X: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = np.where(hi > lo, hi - lo, 1.0)
    return np.clip((X - lo) / span, 0.0, 1.0)


def build_views(accounts, edges, reference_date, embedder=None, post_vectors: Mapping = None,
                node2vec: Node2VecConfig = Node2VecConfig()) -> dict:
    """Assemble the four view matrices (rows follow ``accounts``).

    Returns ``{"post", "follower", "friend", "profile"}`` matrices plus the
    raw node vectors and profile scaling bounds under ``"state"``.
    """
    ids = [a.id for a in accounts]
    if post_vectors is not None:
        dim = len(next(iter(post_vectors.values())))
        post = np.array([post_vectors.get(i, np.zeros(dim)) for i in ids])
    else:
        embedder = embedder or HashedTextEmbedder()
        post = np.array([post_view(embedder, a.posts) for a in accounts])
    views = {"post": post}
    node_vectors = {}
    for kind in ("follower", "friend"):
        g = build_interaction_graph(edges, kind, ids)
        vecs = network_view(g, node2vec)
        node_vectors[kind] = vecs
        views[kind] = np.array([vecs[i] for i in ids])
    raw = np.array([profile_attribute_vector(a, reference_date).as_array() for a in accounts])
    lo, hi = min_max_fit(raw)
    views["profile"] = min_max_apply(raw, lo, hi)
    views["state"] = {"node_vectors": node_vectors, "profile_lo": lo, "profile_hi": hi}
    return views
