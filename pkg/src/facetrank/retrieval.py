"""Inverted index and BM25 document retrieval."""

from __future__ import annotations

import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import Document, plain_text, tokenize
from .fileio import atomic_output, atomic_write_text

K1 = 1.2
B = 0.75

MANIFEST = "manifest.json"
POSTINGS = "postings.txt"


@dataclass
class InvertedIndex:
    postings: dict[str, list[tuple[str, int]]] = field(default_factory=dict)
    doc_len: dict[str, int] = field(default_factory=dict)
    num_docs: int = 0
    avg_doc_len: float = 0.0

    def doc_freq(self, term: str) -> int:
        return len(self.postings.get(term, ()))


@dataclass
class RankedDocList:
    qid: str
    entries: list[tuple[str, float]]

    def doc_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.entries]


def bm25_idf(df: int, num_docs: int) -> float:
    # ln(1 + ...) keeps the weight non-negative even for df > N/2
    return math.log(1.0 + (num_docs - df + 0.5) / (df + 0.5))


def bm25_term_weight(tf: float, dl: float, avgdl: float, k1: float = K1, b: float = B) -> float:
    """Saturated, length-normalized term frequency component of BM25."""
    if tf <= 0:
        return 0.0
    norm = 1.0 - b + b * (dl / avgdl if avgdl > 0 else 0.0)
    return tf * (k1 + 1.0) / (tf + k1 * norm)


def build_index(corpus: list[Document]) -> InvertedIndex:
    postings: dict[str, list[tuple[str, int]]] = defaultdict(list)
    doc_len = {}
    for doc in sorted(corpus, key=lambda d: d.id):
        counts = Counter(tokenize(plain_text(doc)))
        doc_len[doc.id] = sum(counts.values())
        for term, tf in counts.items():
            postings[term].append((doc.id, tf))
    # restore corpus order for doc_len so persisted manifests follow the input
    doc_len = {doc.id: doc_len[doc.id] for doc in corpus}
    n = len(corpus)
    avg = math.fsum(doc_len.values()) / n if n else 0.0
    return InvertedIndex(dict(postings), doc_len, n, avg)


def _tf(index: InvertedIndex, term: str, doc_id: str) -> int:
    plist = index.postings.get(term)
    if not plist:
        return 0
    lo, hi = 0, len(plist)
    while lo < hi:
        mid = (lo + hi) // 2
        if plist[mid][0] < doc_id:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(plist) and plist[lo][0] == doc_id:
        return plist[lo][1]
    return 0


def bm25_score(query_tokens: list[str], doc: str, index: InvertedIndex) -> float:
    if doc not in index.doc_len:
        raise KeyError(f"unknown document {doc!r}")
    dl = index.doc_len[doc]
    score = 0.0
    for term in query_tokens:
        tf = _tf(index, term, doc)
        if tf:
            w = bm25_idf(index.doc_freq(term), index.num_docs)
            score += w * bm25_term_weight(tf, dl, index.avg_doc_len)
    return score


def retrieve(query_tokens: list[str], index: InvertedIndex, limit: int | None = None,
             qid: str = "") -> RankedDocList:
    """Score every document matching at least one query token.

    ``limit=None`` returns the full ("all retrieved") list.
    """
    scores: dict[str, float] = defaultdict(float)
    avgdl = index.avg_doc_len
    for term in query_tokens:
        plist = index.postings.get(term)
        if not plist:
            continue
        w = bm25_idf(len(plist), index.num_docs)
        for doc_id, tf in plist:
            scores[doc_id] += w * bm25_term_weight(tf, index.doc_len[doc_id], avgdl)
    entries = sorted(((d, s) for d, s in scores.items() if s > 0), key=lambda e: (-e[1], e[0]))
    if limit is not None:
        entries = entries[:limit]
    return RankedDocList(qid, entries)


def save_index(index: InvertedIndex, directory) -> None:
    """Write ``manifest.json`` and ``postings.txt`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for doc_id in index.doc_len:
        if any(c in doc_id for c in "\t\n:,"):
            raise ValueError(f"document id {doc_id!r} cannot be stored in the flat postings format")
    manifest = {
        "num_docs": index.num_docs,
        "avg_doc_len": index.avg_doc_len,
        "doc_len": index.doc_len,
    }
    atomic_write_text(directory / MANIFEST, json.dumps(manifest, ensure_ascii=False) + "\n")
    with atomic_output(directory / POSTINGS) as handle:
        for term in sorted(index.postings):
            entries = ",".join(f"{d}:{tf}" for d, tf in index.postings[term])
            handle.write(f"{term}\t{entries}\n")


def load_index(directory) -> InvertedIndex:
    directory = Path(directory)
    manifest = json.loads((directory / MANIFEST).read_text(encoding="utf-8"))
    postings = {}
    with open(directory / POSTINGS, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                term, raw = line.split("\t")
                plist = []
                for item in raw.split(","):
                    doc_id, tf = item.rsplit(":", 1)
                    plist.append((doc_id, int(tf)))
            except ValueError:
                raise ValueError(f"{directory / POSTINGS}:{lineno}: malformed postings line") from None
            postings[term] = plist
    return InvertedIndex(
        postings=postings,
        doc_len={k: int(v) for k, v in manifest["doc_len"].items()},
        num_docs=int(manifest["num_docs"]),
        avg_doc_len=float(manifest["avg_doc_len"]),
    )
