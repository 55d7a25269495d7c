"""The ten-entry similarity/difference representation of an account pair."""

from __future__ import annotations

import datetime as dt
from dataclasses import astuple, dataclass, fields
from typing import Optional

import numpy as np

from .candidate_graph import name_similarity
from .text_similarity import TfidfModel, cosine, normalize_text, tfidf_vector

FEATURE_NAMES = (
    "username_sim",
    "screen_name_sim",
    "location_sim",
    "description_sim",
    "followers_ratio",
    "followers_diff",
    "friends_diff",
    "tweets_diff",
    "favorites_diff",
    "account_age_diff_months",
)
# entries already confined to [0, 1]; the rest are raw absolute differences
BOUNDED = FEATURE_NAMES[:5]


@dataclass(frozen=True)
class PairFeatureVector:
    username_sim: float
    screen_name_sim: float
    location_sim: float
    description_sim: float
    followers_ratio: float
    followers_diff: float
    friends_diff: float
    tweets_diff: float
    favorites_diff: float
    account_age_diff_months: float

    def as_array(self) -> np.ndarray:
        return np.array(astuple(self), dtype=float)


assert tuple(f.name for f in fields(PairFeatureVector)) == FEATURE_NAMES


def followers_ratio(f1: int, f2: int) -> float:
    if f1 < 0 or f2 < 0:
        raise ValueError("follower counts must be non-negative")
    hi = max(f1, f2)
    if hi == 0:
        return 1.0
    return min(f1, f2) / hi


def months_between(start: dt.date, end: dt.date) -> int:
    """Whole calendar months elapsed from ``start`` to ``end``."""
    months = (end.year - start.year) * 12 + (end.month - start.month)
    if end.day < start.day:
        months -= 1
    return months


def _age_months(account, reference_date: Optional[dt.date]) -> int:
    ref = reference_date or account.registered_on
    return months_between(account.registered_on, ref)


class DescriptionIndex:
    """Caches per-account TF-IDF vectors of normalized descriptions."""

    def __init__(self, tfidf: TfidfModel):
        self.tfidf = tfidf
        self._cache = {}

    def vector(self, text: str) -> np.ndarray:
        vec = self._cache.get(text)
        if vec is None:
            vec = tfidf_vector(self.tfidf, normalize_text(text))
            self._cache[text] = vec
        return vec

    def similarity(self, a: str, b: str) -> float:
        if not a.strip() or not b.strip():
            return 0.0
        return cosine(self.vector(a), self.vector(b))


def location_similarity(a: str, b: str) -> float:
    return name_similarity(a, b)


def extract_pair_features(a, b, tfidf, reference_date: Optional[dt.date] = None) -> PairFeatureVector:
    """Features of an unordered account pair.

    ``tfidf`` may be a fitted :class:`TfidfModel` or a :class:`DescriptionIndex`
    wrapping one.  Account ages are counted to ``reference_date``; only their
    difference enters the vector.
    """
    index = tfidf if isinstance(tfidf, DescriptionIndex) else DescriptionIndex(tfidf)
    if reference_date is None:
        reference_date = max(a.registered_on, b.registered_on)
    return PairFeatureVector(
        username_sim=name_similarity(a.username, b.username),
        screen_name_sim=name_similarity(a.screen_name, b.screen_name),
        location_sim=location_similarity(a.location, b.location),
        description_sim=index.similarity(a.description, b.description),
        followers_ratio=followers_ratio(a.followers_count, b.followers_count),
        followers_diff=float(abs(a.followers_count - b.followers_count)),
        friends_diff=float(abs(a.friends_count - b.friends_count)),
        tweets_diff=float(abs(a.tweet_count - b.tweet_count)),
        favorites_diff=float(abs(a.favorites_count - b.favorites_count)),
        account_age_diff_months=float(abs(_age_months(a, reference_date) - _age_months(b, reference_date))),
    )


def write_feature_dump(rows, path) -> None:
    """``rows`` yields ``((id_a, id_b), PairFeatureVector)``."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(("id_a", "id_b") + FEATURE_NAMES) + "\n")
        for (ia, ib), vec in rows:
            fh.write("\t".join([ia, ib] + [f"{v:.4f}" for v in astuple(vec)]) + "\n")
