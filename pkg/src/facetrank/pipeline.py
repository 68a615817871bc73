"""Glue between index, candidate pools, features and cross-validation."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CorpusStats, Document, QueryTopic, compute_stats, parse_documents, tokenize
from .evaluation.crossval import QueryInstances
from .evaluation.metrics import Qrels
from .facets import (DEFAULT_POOL_SIZE, CandidatePool, FacetStats, FacetValuePair, enumerate_fvps,
                     generate_candidates, value_avgdl)
from .features import FeatureContext, FeatureVector, extract_vector, feature_names
from .fileio import atomic_output
from .retrieval import InvertedIndex, build_index, load_index, retrieve, save_index

DOCS = "docs.jsonl"


@dataclass
class Workspace:
    """Everything derived from one corpus; read-only once built."""

    docs: list[Document]
    stats: CorpusStats
    index: InvertedIndex
    fvps: list[FacetValuePair]
    facet_stats: dict[str, FacetStats]
    value_avgdl: float

    @classmethod
    def from_documents(cls, docs: list[Document], index: InvertedIndex | None = None) -> Workspace:
        fvps, facet_stats = enumerate_fvps(docs)
        return cls(
            docs=docs,
            stats=compute_stats(docs),
            index=index if index is not None else build_index(docs),
            fvps=fvps,
            facet_stats=facet_stats,
            value_avgdl=value_avgdl(fvps),
        )

    @classmethod
    def load(cls, directory) -> Workspace:
        directory = Path(directory)
        return cls.from_documents(parse_documents(directory / DOCS), load_index(directory))

    def save(self, directory) -> None:
        directory = Path(directory)
        save_index(self.index, directory)
        with atomic_output(directory / DOCS) as handle:
            for doc in self.docs:
                handle.write(json.dumps(doc.to_json(), ensure_ascii=False) + "\n")

    @property
    def facet_layout(self) -> list[str]:
        return sorted(self.facet_stats)

    def feature_names(self) -> list[str]:
        return feature_names(self.facet_layout)

    def fvp_lookup(self) -> dict[tuple[str, str], FacetValuePair]:
        return {f.key: f for f in self.fvps}


def candidate_pools(topics: list[QueryTopic], ws: Workspace, k: int = DEFAULT_POOL_SIZE) -> list[CandidatePool]:
    return [generate_candidates(t, ws.fvps, ws.stats, k, ws.value_avgdl) for t in topics]


def pools_from_keys(keys_by_qid: dict[str, list[tuple[str, str]]], ws: Workspace) -> dict[str, list[FacetValuePair]]:
    lookup = ws.fvp_lookup()
    out = {}
    for qid, keys in keys_by_qid.items():
        missing = [k for k in keys if k not in lookup]
        if missing:
            raise ValueError(f"candidate {missing[0]} for {qid!r} is not a facet-value pair of the corpus")
        out[qid] = [lookup[k] for k in keys]
    return out


def extract_query(topic: QueryTopic, candidates: list[FacetValuePair], ws: Workspace) -> list[FeatureVector]:
    ranked = retrieve(tokenize(topic.title), ws.index, qid=topic.qid)
    ctx = FeatureContext(ws.stats, ws.facet_stats, ranked, ws.facet_layout, ws.value_avgdl)
    return [extract_vector(topic, fvp, ctx) for fvp in candidates]


def extract_instances(topics: list[QueryTopic], pools: dict[str, list[FacetValuePair]],
                      ws: Workspace) -> list[QueryInstances]:
    out = []
    for topic in topics:
        cands = pools.get(topic.qid, [])
        if not cands:
            continue
        vectors = extract_query(topic, cands, ws)
        out.append(QueryInstances(
            qid=topic.qid,
            keys=[c.key for c in cands],
            X=np.array([v.values() for v in vectors], dtype=np.float64),
        ))
    return out


def feature_rows(instances: list[QueryInstances], qrels: Qrels):
    for inst in instances:
        for key, row in zip(inst.keys, inst.X):
            yield inst.qid, key[0], key[1], qrels.get((inst.qid, *key), 0), row.tolist()


def instances_from_rows(rows) -> tuple[list[QueryInstances], Qrels]:
    """Regroup feature-file rows by query (first-seen order); labels become qrels."""
    grouped: dict[str, tuple[list, list]] = {}
    qrels = {}
    for qid, facet, value, label, values in rows:
        keys, xs = grouped.setdefault(qid, ([], []))
        keys.append((facet, value))
        xs.append(values)
        qrels[(qid, facet, value)] = int(label)
    insts = [QueryInstances(q, keys, np.array(xs, dtype=np.float64)) for q, (keys, xs) in grouped.items()]
    return insts, qrels
