"""Candidate graph over accounts with look-alike names.

Two accounts are joined when the Jaro-Winkler similarity of their
usernames or of their screen names reaches ``delta``.  The all-pairs scan
runs in a compiled kernel that reproduces :func:`jaro_winkler` bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .text_similarity import DEFAULT_JW, JaroWinklerParams, jaro_winkler


@dataclass(frozen=True)
class GraphConfig:
    delta: float = 0.8
    jw_params: JaroWinklerParams = DEFAULT_JW
    bucketing: bool = False

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must lie in (0, 1]")


@dataclass
class CandidateGraph:
    nodes: set
    edges: set = field(default_factory=set)
    edge_scores: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.edges)


def clean_name(name: str) -> str:
    return name.strip().lower()


def name_similarity(a: str, b: str, params: JaroWinklerParams = DEFAULT_JW) -> float:
    """Jaro-Winkler on trimmed, lowercased names; an absent name scores 0."""
    a, b = clean_name(a), clean_name(b)
    if not a or not b:
        return 0.0
    return jaro_winkler(a, b, params)


def _encode(names: Sequence[str]):
    width = max([len(s) for s in names] + [1])
    codes = np.full((len(names), width), -1, dtype=np.int32)
    lengths = np.zeros(len(names), dtype=np.int64)
    for i, s in enumerate(names):
        lengths[i] = len(s)
        if s:
            codes[i, : len(s)] = [ord(c) for c in s]
    return codes, lengths


@njit(cache=True)
def _jw_kernel(c1, n1, c2, n2, p, cap, matched1, matched2):
    if n1 == 0 or n2 == 0:
        return 0.0
    window = max(n1, n2) // 2 - 1
    if window < 0:
        window = 0
    for j in range(n2):
        matched2[j] = False
    m = 0
    for i in range(n1):
        matched1[i] = False
        lo = max(0, i - window)
        hi = min(n2, i + window + 1)
        for j in range(lo, hi):
            if not matched2[j] and c2[j] == c1[i]:
                matched2[j] = True
                matched1[i] = True
                m += 1
                break
    if m == 0:
        return 0.0
    trans = 0
    k = 0
    for i in range(n1):
        if matched1[i]:
            while not matched2[k]:
                k += 1
            if c2[k] != c1[i]:
                trans += 1
            k += 1
    num = 2 * m * m * (n1 + n2) + (2 * m - trans) * n1 * n2
    jr = num / (6 * n1 * n2 * m)
    ell = 0
    for i in range(min(n1, n2)):
        if c1[i] != c2[i] or ell >= cap:
            break
        ell += 1
    return jr + ell * p * (1.0 - jr)


@njit(cache=True)
def _all_pairs(uc, ul, sc, sl, delta, p, cap, bucketing):
    n = uc.shape[0]
    width = max(uc.shape[1], sc.shape[1])
    matched1 = np.zeros(width, dtype=np.bool_)
    matched2 = np.zeros(width, dtype=np.bool_)
    out_i = []
    out_j = []
    out_u = []
    out_s = []
    for i in range(n):
        for j in range(i + 1, n):
            if bucketing:
                same_u = ul[i] > 0 and ul[j] > 0 and uc[i, 0] == uc[j, 0]
                same_s = sl[i] > 0 and sl[j] > 0 and sc[i, 0] == sc[j, 0]
                if not (same_u or same_s):
                    continue
            su = _jw_kernel(uc[i], ul[i], uc[j], ul[j], p, cap, matched1, matched2)
            ss = _jw_kernel(sc[i], sl[i], sc[j], sl[j], p, cap, matched1, matched2)
            if su >= delta or ss >= delta:
                out_i.append(i)
                out_j.append(j)
                out_u.append(su)
                out_s.append(ss)
    return out_i, out_j, out_u, out_s


def build_candidate_graph(accounts: Sequence, config: GraphConfig = GraphConfig()) -> CandidateGraph:
    ids = [a.id for a in accounts]
    if len(set(ids)) != len(ids):
        seen, dups = set(), set()
        for x in ids:
            (dups if x in seen else seen).add(x)
        raise ValueError(f"duplicate account ids: {sorted(dups)}")
    graph = CandidateGraph(nodes=set(ids))
    if len(ids) < 2:
        return graph
    uc, ul = _encode([clean_name(a.username) for a in accounts])
    sc, sl = _encode([clean_name(a.screen_name) for a in accounts])
    jw = config.jw_params
    oi, oj, ou, os_ = _all_pairs(
        uc, ul, sc, sl, float(config.delta), float(jw.prefix_scale), int(jw.max_prefix_len), bool(config.bucketing)
    )
    for i, j, su, ss in zip(oi, oj, ou, os_):
        a, b = ids[i], ids[j]
        key = (a, b) if a <= b else (b, a)
        graph.edges.add(key)
        graph.edge_scores[key] = (float(su), float(ss))
    return graph


def candidate_pairs(graph: CandidateGraph) -> list:
    return sorted((a, b) if a <= b else (b, a) for a, b in graph.edges)


def write_edge_list(graph: CandidateGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a, b in candidate_pairs(graph):
            u, s = graph.edge_scores[(a, b)]
            fh.write(f"{a}\t{b}\t{u:.4f}\t{s:.4f}\n")
