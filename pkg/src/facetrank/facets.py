"""Facet-value pair enumeration, corpus statistics and candidate pools."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

from .corpus import CorpusStats, Document, QueryTopic, tokenize

DEFAULT_POOL_SIZE = 100


@dataclass(frozen=True)
class FacetValuePair:
    facet: str
    value: str
    value_tokens: tuple[str, ...]
    num_docs: int
    idf: float
    doc_ids: frozenset[str] = field(default=frozenset(), repr=False, compare=False)

    @property
    def key(self) -> tuple[str, str]:
        return (self.facet, self.value)


@dataclass(frozen=True)
class FacetStats:
    facet: str
    num_values: int
    num_occurrences: int


@dataclass
class CandidatePool:
    qid: str
    candidates: list[FacetValuePair]
    scores: list[float]
    pool_size: int


def fvp_idf(fvp: FacetValuePair, num_docs_in_corpus: int) -> float:
    return math.log(num_docs_in_corpus / fvp.num_docs)


def enumerate_fvps(corpus: list[Document]) -> tuple[list[FacetValuePair], dict[str, FacetStats]]:
    """One entry per distinct (facet, value), sorted by (facet, value)."""
    members: dict[tuple[str, str], set[str]] = defaultdict(set)
    for doc in corpus:
        for name, values in doc.facets:
            for value in values:
                members[(name, value.strip())].add(doc.id)
    n = len(corpus)
    fvps = []
    for facet, value in sorted(members):
        docs = members[(facet, value)]
        fvps.append(FacetValuePair(
            facet=facet,
            value=value,
            value_tokens=tuple(tokenize(value)),
            num_docs=len(docs),
            idf=math.log(n / len(docs)),
            doc_ids=frozenset(docs),
        ))
    values_per_facet: dict[str, int] = defaultdict(int)
    occurrences: dict[str, int] = defaultdict(int)
    for fvp in fvps:
        values_per_facet[fvp.facet] += 1
        occurrences[fvp.facet] += fvp.num_docs
    stats = {f: FacetStats(f, values_per_facet[f], occurrences[f]) for f in sorted(values_per_facet)}
    return fvps, stats


def value_avgdl(fvps: list[FacetValuePair]) -> float:
    """Mean token length of FVP values, the BM25 normalizer for QV.BM25."""
    if not fvps:
        return 0.0
    return math.fsum(len(f.value_tokens) for f in fvps) / len(fvps)


def generate_candidates(query: QueryTopic, fvps: list[FacetValuePair], stats: CorpusStats,
                        k: int = DEFAULT_POOL_SIZE, avgdl: float | None = None) -> CandidatePool:
    """Top-``k`` FVPs by QV.BM25 against the query title.

    Ties go to the smaller (facet, value); zero-scoring FVPs only backfill
    a pool that would otherwise hold fewer than ``k`` entries.
    """
    from .features import qv_bm25

    if not fvps:
        raise ValueError("no facet-value pairs to rank")
    if avgdl is None:
        avgdl = value_avgdl(fvps)
    q_tokens = tokenize(query.title)
    q_set = set(q_tokens)
    scored = []
    for fvp in fvps:
        s = qv_bm25(q_tokens, fvp.value_tokens, stats, avgdl) if q_set.intersection(fvp.value_tokens) else 0.0
        scored.append((-s, fvp.facet, fvp.value, fvp))
    scored.sort(key=lambda e: e[:3])
    top = scored[:k]
    return CandidatePool(
        qid=query.qid,
        candidates=[e[3] for e in top],
        scores=[-e[0] + 0.0 for e in top],
        pool_size=k,
    )
