"""String and text similarity primitives.

Jaro and Jaro-Winkler for short name-like strings, and TF-IDF weighted
cosine similarity for free-text descriptions.
"""

from __future__ import annotations

import math
import re
import string
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

_PUNCT_RE = re.compile("[%s]" % re.escape(string.punctuation + "“”‘’…–—"))


@lru_cache(maxsize=1)
def stop_words() -> frozenset:
    """The bundled English stop-word list."""
    text = resources.files("clonedetect.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip() for w in text.splitlines() if w.strip())


def normalize_text(text: str) -> str:
    """Lowercase, strip punctuation and drop stop words."""
    words = _PUNCT_RE.sub(" ", text.lower()).split()
    sw = stop_words()
    return " ".join(w for w in words if w not in sw)


@dataclass(frozen=True)
class JaroWinklerParams:
    prefix_scale: float = 0.1
    max_prefix_len: int = 4

    def __post_init__(self):
        if not 0.0 <= self.prefix_scale <= 0.25:
            raise ValueError("prefix_scale must lie in [0, 0.25]")
        if self.max_prefix_len < 1:
            raise ValueError("max_prefix_len must be positive")
        if self.prefix_scale * self.max_prefix_len > 1.0:
            raise ValueError("prefix_scale * max_prefix_len must not exceed 1")


DEFAULT_JW = JaroWinklerParams()


def jaro(s1: str, s2: str) -> float:
    n1, n2 = len(s1), len(s2)
    if n1 == 0 and n2 == 0:
        return 1.0
    if n1 == 0 or n2 == 0:
        return 0.0
    window = max(0, max(n1, n2) // 2 - 1)
    matched2 = [False] * n2
    order1 = []
    for i, c in enumerate(s1):
        lo = max(0, i - window)
        hi = min(n2, i + window + 1)
        for j in range(lo, hi):
            if not matched2[j] and s2[j] == c:
                matched2[j] = True
                order1.append(c)
                break
    m = len(order1)
    if m == 0:
        return 0.0
    order2 = [s2[j] for j in range(n2) if matched2[j]]
    transpositions = sum(a != b for a, b in zip(order1, order2))
    return jaro_from_counts(m, transpositions, n1, n2)


def jaro_from_counts(m: int, transpositions: int, n1: int, n2: int) -> float:
    # (m/n1 + m/n2 + (m - t)/m) / 3 over a common integer denominator, so the
    # result is the correctly rounded value of the exact ratio; the compiled
    # graph kernel uses the same expression
    num = 2 * m * m * (n1 + n2) + (2 * m - transpositions) * n1 * n2
    return num / (6 * n1 * n2 * m)


def common_prefix_len(s1: str, s2: str, cap: int) -> int:
    n = 0
    for a, b in zip(s1, s2):
        if a != b or n >= cap:
            break
        n += 1
    return n


def jaro_winkler(s1: str, s2: str, params: JaroWinklerParams = DEFAULT_JW) -> float:
    j = jaro(s1, s2)
    ell = common_prefix_len(s1, s2, params.max_prefix_len)
    return j + ell * params.prefix_scale * (1.0 - j)


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: Mapping[str, int]
    idf: np.ndarray
    document_count: int

    def to_dict(self) -> dict:
        terms = sorted(self.vocabulary, key=self.vocabulary.__getitem__)
        return {"terms": terms, "idf": self.idf.tolist(), "document_count": self.document_count}

    @classmethod
    def from_dict(cls, d: dict) -> "TfidfModel":
        vocab = {t: i for i, t in enumerate(d["terms"])}
        return cls(vocab, np.asarray(d["idf"], dtype=float), int(d["document_count"]))


def tfidf_fit(corpus: Sequence[str]) -> TfidfModel:
    """Fit vocabulary and smoothed idf, ``ln((1+N)/(1+df)) + 1``."""
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    df: Counter = Counter()
    for doc in corpus:
        df.update(set(doc.split()))
    terms = sorted(df)
    vocab = {t: i for i, t in enumerate(terms)}
    n = len(corpus)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms], dtype=float)
    return TfidfModel(vocab, idf, n)


def tfidf_vector(model: TfidfModel, text: str) -> np.ndarray:
    vec = np.zeros(len(model.vocabulary))
    for term, count in Counter(text.split()).items():
        idx = model.vocabulary.get(term)
        if idx is not None:
            vec[idx] = count * model.idf[idx]
    return vec


def cosine(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    if np.array_equal(a, b):
        return 1.0
    return min(1.0, max(0.0, float(a @ b) / (na * nb)))
