import math
import random
import string

import numpy as np
import pytest
from hypothesis import given, strategies as st

from clonedetect.text_similarity import (
    JaroWinklerParams,
    cosine,
    jaro,
    jaro_winkler,
    normalize_text,
    stop_words,
    tfidf_fit,
    tfidf_vector,
)
from oracles import jaro_oracle, jaro_winkler_oracle

short = st.text(alphabet="abcd", max_size=12)


def test_normalize_examples():
    assert normalize_text("Hello, World!") == "hello world"
    assert normalize_text("") == ""


def test_normalize_drops_bundled_stop_words():
    words = stop_words()
    assert {"the", "of"} <= words
    assert not {"ceo", "acme"} & words
    assert normalize_text("The CEO of ACME.") == "ceo acme"


@given(st.text(max_size=60))
def test_normalize_idempotent(text):
    once = normalize_text(text)
    assert normalize_text(once) == once


def test_jaro_examples():
    assert jaro("abc", "abc") == 1.0
    assert jaro("abc", "xyz") == 0.0
    # m = 6, t = 1:  (1 + 1 + 5/6) / 3 = 17/18
    assert jaro("MARTHA", "MARHTA") == 17 / 18


def test_jaro_empty_cases():
    assert jaro("", "") == 1.0
    assert jaro("", "abc") == 0.0
    assert jaro("abc", "") == 0.0


def test_jaro_winkler_examples():
    assert jaro_winkler("abc", "abc") == 1.0
    assert jaro_winkler("abc", "xyz") == 0.0
    # prefix "MAR": 17/18 + 3 * 0.1 * (1/18) = 173/180
    assert jaro_winkler("MARTHA", "MARHTA") == pytest.approx(173 / 180, abs=1e-15)


def test_jaro_winkler_params_validated():
    JaroWinklerParams(0.25, 4)
    with pytest.raises(ValueError):
        JaroWinklerParams(0.3, 4)
    with pytest.raises(ValueError):
        JaroWinklerParams(0.2, 6)
    with pytest.raises(ValueError):
        JaroWinklerParams(0.1, 0)


def test_prefix_cap_respected():
    p = JaroWinklerParams(0.1, 2)
    j = jaro("abcdxy", "abcdyx")
    assert jaro_winkler("abcdxy", "abcdyx", p) == pytest.approx(j + 2 * 0.1 * (1 - j))


@given(short, short)
def test_jaro_matches_oracle(a, b):
    assert jaro(a, b) == pytest.approx(float(jaro_oracle(a, b)), abs=1e-12)
    assert jaro_winkler(a, b) == pytest.approx(float(jaro_winkler_oracle(a, b)), abs=1e-12)


@given(st.text(max_size=15), st.text(max_size=15))
def test_symmetry_and_bounds(a, b):
    for f in (jaro, jaro_winkler):
        v = f(a, b)
        assert v == f(b, a)
        assert 0.0 <= v <= 1.0


@given(short, short)
def test_winkler_boost(a, b):
    j, jw = jaro(a, b), jaro_winkler(a, b)
    assert jw >= j
    no_prefix = not a or not b or a[0] != b[0]
    assert (jw == j) == (no_prefix or j == 1.0)


def test_tfidf_examples():
    m = tfidf_fit(["a b", "a c"])
    assert set(m.vocabulary) == {"a", "b", "c"}
    assert m.document_count == 2
    assert sorted(m.vocabulary.values()) == [0, 1, 2]
    single = tfidf_fit(["a"])
    assert single.idf[single.vocabulary["a"]] == 1.0
    assert list(tfidf_fit(["x x x"]).vocabulary) == ["x"]


def test_tfidf_smoothed_idf():
    corpus = ["a b", "a c", "c d e", ""]
    m = tfidf_fit(corpus)
    docs = [set(d.split()) for d in corpus]
    for term, i in m.vocabulary.items():
        df = sum(term in d for d in docs)
        assert m.idf[i] == pytest.approx(math.log((1 + 4) / (1 + df)) + 1, abs=1e-15)


def test_tfidf_empty_corpus():
    with pytest.raises(ValueError, match="empty corpus"):
        tfidf_fit([])


def test_tfidf_vector_examples():
    m = tfidf_fit(["a b", "a c"])
    v = tfidf_vector(m, "a b")
    assert set(np.flatnonzero(v)) == {m.vocabulary["a"], m.vocabulary["b"]}
    v = tfidf_vector(m, "b b")
    assert v[m.vocabulary["b"]] == 2 * m.idf[m.vocabulary["b"]]
    assert v[m.vocabulary["a"]] == 0
    assert not tfidf_vector(m, "zzz qqq").any()


def test_cosine_examples():
    assert cosine([1.0, 2.0], [1.0, 2.0]) == pytest.approx(1.0)
    assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert cosine([1.0, 2.0], [2.0, 1.0]) == pytest.approx(0.8, abs=1e-15)
    assert cosine([0.0, 0.0], [1.0, 1.0]) == 0.0
    with pytest.raises(ValueError):
        cosine([1.0], [1.0, 2.0])


nonneg = st.lists(st.floats(0, 1e6, allow_nan=False), min_size=3, max_size=3)


@given(nonneg, nonneg, st.floats(1e-3, 1e3))
def test_cosine_properties(a, b, c):
    a, b = np.array(a), np.array(b)
    if np.linalg.norm(a) > 1e-100:
        assert cosine(a, a) == pytest.approx(1.0, abs=1e-12)
    assert cosine(c * a, b) == pytest.approx(cosine(a, b), abs=1e-12)
    assert 0.0 <= cosine(a, b) <= 1.0


def test_tfidf_model_round_trip():
    m = tfidf_fit(["alpha beta", "beta gamma gamma"])
    again = type(m).from_dict(m.to_dict())
    assert again.vocabulary == m.vocabulary
    assert np.array_equal(again.idf, m.idf)


def test_unicode_and_punctuation():
    rng = random.Random(0)
    for _ in range(50):
        s = "".join(rng.choice(string.printable + "éü—“”") for _ in range(30))
        out = normalize_text(s)
        assert out == out.lower()
        assert not any(ch in string.punctuation for ch in out)
