"""The query/facet/value/FVP feature set used to rank facet-value pairs."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, fields
from typing import TYPE_CHECKING

from .corpus import CorpusStats, QueryTopic, idf, tokenize
from .retrieval import RankedDocList, bm25_idf, bm25_term_weight

if TYPE_CHECKING:
    from .facets import FacetStats, FacetValuePair

QP_CUTOFFS = (10, 100, 1000, None)

BASELINE_FEATURES = (
    "QV.TFIDF", "QV.SIDF", "QP.DF10", "QP.DFIDF10", "QP.DFAll", "QP.DFIDFAll",
    "QV.CosSim", "QV.BM25", "QP.DF1000", "QP.DFIDF1000", "QP.DFIDF100", "QP.DF100",
)


@dataclass(frozen=True)
class FeatureVector:
    q_length: int
    q_avg_idf: float
    f_type: tuple[int, ...]
    f_num_values: int
    f_num_occrs: int
    v_length: int
    v_avg_idf: float
    p_num_docs: int
    p_idf: float
    qf_tfidf: float
    qv_tfidf: float
    qv_bm25: float
    qv_sidf: float
    qv_cossim: float
    qp_df10: float
    qp_dfidf10: float
    qp_df100: float
    qp_dfidf100: float
    qp_df1000: float
    qp_dfidf1000: float
    qp_dfall: float
    qp_dfidfall: float

    def values(self) -> list[float]:
        out: list[float] = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "f_type":
                out.extend(float(x) for x in v)
            else:
                out.append(float(v))
        return out


_SCALAR_NAMES = {
    "q_length": "Q.Length", "q_avg_idf": "Q.AvgIDF", "f_num_values": "F.NumValues",
    "f_num_occrs": "F.NumOccrs", "v_length": "V.Length", "v_avg_idf": "V.AvgIDF",
    "p_num_docs": "P.NumDocs", "p_idf": "P.IDF", "qf_tfidf": "QF.TFIDF",
    "qv_tfidf": "QV.TFIDF", "qv_bm25": "QV.BM25", "qv_sidf": "QV.SIDF", "qv_cossim": "QV.CosSim",
    "qp_df10": "QP.DF10", "qp_dfidf10": "QP.DFIDF10", "qp_df100": "QP.DF100",
    "qp_dfidf100": "QP.DFIDF100", "qp_df1000": "QP.DF1000", "qp_dfidf1000": "QP.DFIDF1000",
    "qp_dfall": "QP.DFAll", "qp_dfidfall": "QP.DFIDFAll",
}


def feature_names(facet_layout: list[str]) -> list[str]:
    """Column names matching ``FeatureVector.values()`` for a one-hot layout."""
    names = []
    for f in fields(FeatureVector):
        if f.name == "f_type":
            names.extend(f"F.Type={facet}" for facet in facet_layout)
        else:
            names.append(_SCALAR_NAMES[f.name])
    return names


def _avg_idf(tokens, stats: CorpusStats) -> float:
    if not tokens:
        return 0.0
    return math.fsum(idf(t, stats) for t in tokens) / len(tokens)


def query_features(title_tokens: list[str], stats: CorpusStats) -> tuple[int, float]:
    return len(title_tokens), _avg_idf(title_tokens, stats)


def qv_bm25(title_tokens, value_tokens, stats: CorpusStats, value_avgdl: float) -> float:
    """BM25 of the query against a value treated as a one-field document."""
    tf = Counter(value_tokens)
    dl = len(value_tokens)
    score = 0.0
    for t in title_tokens:
        if tf[t]:
            w = bm25_idf(stats.doc_freq.get(t, 0), stats.num_docs)
            score += w * bm25_term_weight(tf[t], dl, value_avgdl)
    return score


def _tfidf_sum(title_tokens, target_tokens, stats: CorpusStats) -> float:
    tf = Counter(target_tokens)
    return math.fsum(tf[t] * idf(t, stats) for t in title_tokens if tf[t])


def qv_scores(title_tokens, fvp: FacetValuePair, stats: CorpusStats,
              value_avgdl: float) -> tuple[float, float, float, float]:
    """(QV.TFIDF, QV.BM25, QV.SIDF, QV.CosSim) between query and value."""
    value_tokens = fvp.value_tokens
    overlap = set(title_tokens).intersection(value_tokens)
    if not overlap:
        return 0.0, 0.0, 0.0, 0.0
    tfidf = _tfidf_sum(title_tokens, value_tokens, stats)
    bm25 = qv_bm25(title_tokens, value_tokens, stats, value_avgdl)
    sidf = math.fsum(idf(t, stats) for t in sorted(overlap))
    q_vec = {t: c * idf(t, stats) for t, c in Counter(title_tokens).items()}
    v_vec = {t: c * idf(t, stats) for t, c in Counter(value_tokens).items()}
    dot = math.fsum(q_vec[t] * v_vec[t] for t in overlap)
    q_norm = math.sqrt(math.fsum(w * w for w in q_vec.values()))
    v_norm = math.sqrt(math.fsum(w * w for w in v_vec.values()))
    cos = dot / (q_norm * v_norm) if q_norm > 0 and v_norm > 0 else 0.0
    return tfidf, bm25, sidf, min(1.0, max(0.0, cos))


def qf_tfidf(title_tokens, facet_name: str, stats: CorpusStats) -> float:
    return _tfidf_sum(title_tokens, tokenize(facet_name), stats)


def rank_positions(ranked: RankedDocList) -> dict[str, int]:
    return {doc_id: i for i, (doc_id, _) in enumerate(ranked.entries)}


def qp_features(ranked: RankedDocList, fvp: FacetValuePair, positions: dict[str, int] | None = None,
                ) -> tuple[float, ...]:
    """(DF10, DFIDF10, DF100, DFIDF100, DF1000, DFIDF1000, DFAll, DFIDFAll).

    ``ranked`` must be the untruncated retrieval result for the query;
    document membership comes from ``fvp.doc_ids``.
    """
    if positions is None:
        positions = rank_positions(ranked)
    if len(fvp.doc_ids) <= len(positions):
        hits = [positions[d] for d in fvp.doc_ids if d in positions]
    else:
        hits = [positions[d] for d in positions if d in fvp.doc_ids]
    out = []
    for cutoff in QP_CUTOFFS:
        df = float(len(hits) if cutoff is None else sum(1 for h in hits if h < cutoff))
        out.extend((df, df * fvp.idf))
    return tuple(out)


@dataclass
class FeatureContext:
    stats: CorpusStats
    facet_stats: dict[str, FacetStats]
    ranked: RankedDocList
    facet_layout: list[str]
    value_avgdl: float
    positions: dict[str, int] | None = None

    def __post_init__(self):
        if self.positions is None:
            self.positions = rank_positions(self.ranked)


def extract_vector(query: QueryTopic, fvp: FacetValuePair, context: FeatureContext) -> FeatureVector:
    if fvp.facet not in context.facet_layout:
        raise KeyError(f"facet {fvp.facet!r} is not part of the one-hot layout")
    stats = context.stats
    q_tokens = tokenize(query.title)
    q_len, q_avg = query_features(q_tokens, stats)
    fs = context.facet_stats[fvp.facet]
    tfidf, bm25, sidf, cos = qv_scores(q_tokens, fvp, stats, context.value_avgdl)
    qp = qp_features(context.ranked, fvp, context.positions)
    return FeatureVector(
        q_length=q_len,
        q_avg_idf=q_avg,
        f_type=tuple(int(f == fvp.facet) for f in context.facet_layout),
        f_num_values=fs.num_values,
        f_num_occrs=fs.num_occurrences,
        v_length=len(fvp.value_tokens),
        v_avg_idf=_avg_idf(fvp.value_tokens, stats),
        p_num_docs=fvp.num_docs,
        p_idf=fvp.idf,
        qf_tfidf=qf_tfidf(q_tokens, fvp.facet, stats),
        qv_tfidf=tfidf,
        qv_bm25=bm25,
        qv_sidf=sidf,
        qv_cossim=cos,
        qp_df10=qp[0], qp_dfidf10=qp[1],
        qp_df100=qp[2], qp_dfidf100=qp[3],
        qp_df1000=qp[4], qp_dfidf1000=qp[5],
        qp_dfall=qp[6], qp_dfidfall=qp[7],
    )
