import random

import pytest
from hypothesis import given, strategies as st

from clonedetect.candidate_graph import (
    GraphConfig,
    CandidateGraph,
    build_candidate_graph,
    candidate_pairs,
    name_similarity,
    write_edge_list,
)
from conftest import make_account
from oracles import graph_oracle, jaro_winkler_oracle


def test_identical_usernames_connect():
    g = build_candidate_graph([make_account("a", "jdoe", "X"), make_account("b", "jdoe", "Y")])
    assert g.edges == {("a", "b")}
    assert g.edge_scores[("a", "b")][0] == 1.0


def test_dissimilar_names_do_not_connect():
    # oracle values for the hand check
    assert float(jaro_winkler_oracle("john_smith", "zq9w_kapl")) < 0.8
    assert float(jaro_winkler_oracle("john smith", "zq9w kapl")) < 0.8
    accts = [make_account("a", "john_smith", "John Smith"), make_account("b", "zq9w_kapl", "Zq9w Kapl")]
    assert build_candidate_graph(accts, GraphConfig(0.8)).edges == set()


def test_screen_name_alone_is_enough():
    assert float(jaro_winkler_oracle("alice lee", "alice leee")) >= 0.8
    accts = [make_account("a", "qqq111", "Alice Lee"), make_account("b", "zzz999", "Alice Leee")]
    g = build_candidate_graph(accts, GraphConfig(0.8))
    assert g.edges == {("a", "b")}
    su, ss = g.edge_scores[("a", "b")]
    assert su < 0.8 <= ss


def test_case_and_whitespace_ignored_and_empty_scores_zero():
    assert name_similarity("  JDoe ", "jdoe") == 1.0
    assert name_similarity("", "") == 0.0
    accts = [make_account("a", "", ""), make_account("b", "", "")]
    assert build_candidate_graph(accts).edges == set()


def test_duplicate_ids_rejected():
    with pytest.raises(ValueError, match="x"):
        build_candidate_graph([make_account("x"), make_account("x"), make_account("y")])


def test_delta_validated():
    with pytest.raises(ValueError):
        GraphConfig(0.0)
    with pytest.raises(ValueError):
        GraphConfig(1.5)
    GraphConfig(1.0)


def test_candidate_pairs_ordering():
    assert candidate_pairs(CandidateGraph(nodes=set())) == []
    assert candidate_pairs(CandidateGraph({"a", "b"}, {("b", "a")})) == [("a", "b")]
    assert candidate_pairs(CandidateGraph({"a", "b", "c"}, {("c", "a"), ("b", "a")})) == [("a", "b"), ("a", "c")]


def _random_accounts(seed, n, alphabet="abcde", max_len=7):
    rng = random.Random(seed)

    def word():
        return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, max_len)))

    return [make_account(f"u{i:03d}", word(), word().upper()) for i in range(n)]


@pytest.mark.parametrize("seed", range(5))
def test_matches_all_pairs_oracle(seed):
    accts = _random_accounts(seed, 40)
    for delta in (0.5, 0.7, 0.85):
        g = build_candidate_graph(accts, GraphConfig(delta))
        assert g.edges == graph_oracle(accts, delta)
        for (a, b), (su, ss) in g.edge_scores.items():
            assert max(su, ss) >= delta
            assert a < b


@given(st.integers(0, 10_000), st.floats(0.3, 1.0), st.floats(0.3, 1.0))
def test_monotone_in_delta(seed, d1, d2):
    lo, hi = sorted((d1, d2))
    accts = _random_accounts(seed, 25)
    assert build_candidate_graph(accts, GraphConfig(hi)).edges <= build_candidate_graph(accts, GraphConfig(lo)).edges


@given(st.integers(0, 10_000), st.randoms(use_true_random=False))
def test_permutation_invariant(seed, rnd):
    accts = _random_accounts(seed, 25)
    shuffled = list(accts)
    rnd.shuffle(shuffled)
    a = build_candidate_graph(accts, GraphConfig(0.7))
    b = build_candidate_graph(shuffled, GraphConfig(0.7))
    assert a.edges == b.edges
    assert a.edge_scores == b.edge_scores


def test_bucketing_finds_subset():
    accts = _random_accounts(3, 60)
    full = build_candidate_graph(accts, GraphConfig(0.7))
    bucketed = build_candidate_graph(accts, GraphConfig(0.7, bucketing=True))
    assert bucketed.edges <= full.edges


def test_edge_list_export(tmp_path):
    accts = [make_account("b", "jdoe", "J"), make_account("a", "jdoe1", "K"), make_account("c", "zzz", "Q")]
    g = build_candidate_graph(accts)
    path = tmp_path / "edges.tsv"
    write_edge_list(g, path)
    rows = [line.split("\t") for line in path.read_text().splitlines()]
    assert [r[:2] for r in rows] == [["a", "b"]]
    assert rows[0][2] == f"{g.edge_scores[('a', 'b')][0]:.4f}"
