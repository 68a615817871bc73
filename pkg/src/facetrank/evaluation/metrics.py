"""Per-query ranking metrics: AP, R-Prec, P@5 and P@R=1."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

import numpy as np

Qrels = dict  # (qid, facet, value) -> relevance in {0, 1}


@dataclass
class Metrics:
    map_: float
    r_prec: float
    p_at_5: float
    p_at_r1: float
    per_query_ap: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "map": self.map_,
            "r_prec": self.r_prec,
            "p5": self.p_at_5,
            "p_r1": self.p_at_r1,
            "per_query": dict(sorted(self.per_query_ap.items())),
        }


def _relevant_ranks(ranking: Sequence[Hashable], relevant: set) -> list[int]:
    seen = set()
    ranks = []
    for rank, item in enumerate(ranking, start=1):
        if item in relevant and item not in seen:
            seen.add(item)
            ranks.append(rank)
    return ranks


def average_precision(ranking: Sequence[Hashable], relevant: Iterable[Hashable]) -> float:
    relevant = set(relevant)
    if not relevant:
        raise ValueError("average precision is undefined without relevant items")
    ranks = _relevant_ranks(ranking, relevant)
    return math.fsum((i + 1) / r for i, r in enumerate(ranks)) / len(relevant)


def query_metrics(ranking: Sequence[Hashable], relevant: Iterable[Hashable]) -> tuple[float, float, float, float]:
    """(AP, R-Prec, P@5, P@R=1) for one query.

    P@5 always divides by 5. P@R=1 is the precision at the rank of the last
    relevant item found in the ranking, 0 when none is found.
    """
    relevant = set(relevant)
    ap = average_precision(ranking, relevant)
    ranks = _relevant_ranks(ranking, relevant)
    n_rel = len(relevant)
    r_prec = sum(1 for r in ranks if r <= n_rel) / n_rel
    p5 = sum(1 for r in ranks if r <= 5) / 5.0
    p_r1 = len(ranks) / ranks[-1] if ranks else 0.0
    return ap, r_prec, p5, p_r1


def relevant_sets(qrels: Qrels) -> dict[str, set[tuple[str, str]]]:
    """Relevant (facet, value) keys per query; queries without any are omitted."""
    out: dict[str, set[tuple[str, str]]] = {}
    for (qid, facet, value), rel in qrels.items():
        if rel > 0:
            out.setdefault(qid, set()).add((facet, value))
    return out


def evaluate_rankings(rankings: dict[str, Sequence[tuple[str, str]]], qrels: Qrels,
                      qids: Iterable[str] | None = None) -> Metrics:
    """Average the four metrics over queries that have a relevant item.

    ``qids`` restricts evaluation to a subset; a query absent from
    ``rankings`` is scored as an empty ranking.
    """
    rel = relevant_sets(qrels)
    targets = sorted(rel) if qids is None else sorted(q for q in qids if q in rel)
    if not targets:
        raise ValueError("no query with relevant items to evaluate")
    rows = {q: query_metrics(rankings.get(q, []), rel[q]) for q in targets}
    cols = list(zip(*rows.values()))
    return Metrics(
        map_=math.fsum(cols[0]) / len(targets),
        r_prec=math.fsum(cols[1]) / len(targets),
        p_at_5=math.fsum(cols[2]) / len(targets),
        p_at_r1=math.fsum(cols[3]) / len(targets),
        per_query_ap={q: r[0] for q, r in rows.items()},
    )


def mean_average_precision_scores(scores: np.ndarray, labels: np.ndarray,
                                  groups: list[tuple[np.ndarray, int]]) -> float:
    """MAP from raw scores; each group lists its rows in tie-break order."""
    total = 0.0
    for rows, n_rel in groups:
        order = rows[np.argsort(-scores[rows], kind="stable")]
        hits = labels[order] > 0
        if hits.any():
            ranks = np.flatnonzero(hits) + 1.0
            total += float(np.sum(np.arange(1, len(ranks) + 1) / ranks)) / n_rel
    return total / len(groups)
