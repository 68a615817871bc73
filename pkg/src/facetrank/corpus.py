"""Structured documents, tokenization and corpus-level term statistics."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field

_TOKEN_RE = re.compile(r"[^\W_]+")


class CorpusError(ValueError):
    """Raised for malformed corpus or topic files."""


@dataclass(frozen=True)
class Document:
    id: str
    facets: tuple[tuple[str, tuple[str, ...]], ...]
    free_text: str | None = None

    @classmethod
    def create(cls, id, facets, free_text=None):
        """Build a document from ``[(name, [values...]), ...]``.

        Values are trimmed; a facet name repeated in ``facets`` is merged into
        its first occurrence.
        """
        if not isinstance(id, str) or not id:
            raise CorpusError("document id must be a non-empty string")
        merged: dict[str, list[str]] = {}
        for name, values in facets:
            if not isinstance(name, str) or not name.strip():
                raise CorpusError(f"document {id!r}: empty facet name")
            name = name.strip()
            bucket = merged.setdefault(name, [])
            for value in values:
                if not isinstance(value, str) or not value.strip():
                    raise CorpusError(f"document {id!r}: empty value for facet {name!r}")
                value = value.strip()
                if value not in bucket:
                    bucket.append(value)
        return cls(
            id=id,
            facets=tuple((n, tuple(v)) for n, v in merged.items()),
            free_text=free_text,
        )

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "facets": [{"name": n, "values": list(v)} for n, v in self.facets],
        }
        if self.free_text is not None:
            out["text"] = self.free_text
        return out


@dataclass(frozen=True)
class QueryTopic:
    qid: str
    title: str
    description: str | None = None
    narrative: str | None = None


@dataclass
class CorpusStats:
    num_docs: int = 0
    doc_freq: dict[str, int] = field(default_factory=dict)
    total_tokens_per_doc: dict[str, int] = field(default_factory=dict)
    avg_doc_len: float = 0.0


def tokenize(text: str) -> list[str]:
    """Lowercase and split on every non-alphanumeric character."""
    if not text:
        return []
    return _TOKEN_RE.findall(text.lower())


def plain_text(doc: Document) -> str:
    """Markup-free text of a document: facet values in order, then free text."""
    parts = [value for _, values in doc.facets for value in values]
    if doc.free_text:
        parts.append(doc.free_text)
    return " ".join(parts)


def idf(term: str, stats: CorpusStats) -> float:
    """Smoothed inverse document frequency ``ln((N+1)/(df+1))``."""
    df = stats.doc_freq.get(term, 0)
    return math.log((stats.num_docs + 1) / (df + 1))


def compute_stats(docs: list[Document]) -> CorpusStats:
    doc_freq: Counter[str] = Counter()
    lengths: dict[str, int] = {}
    for doc in docs:
        tokens = tokenize(plain_text(doc))
        lengths[doc.id] = len(tokens)
        doc_freq.update(set(tokens))
    n = len(docs)
    avg = math.fsum(lengths.values()) / n if n else 0.0
    return CorpusStats(
        num_docs=n,
        doc_freq=dict(doc_freq),
        total_tokens_per_doc=lengths,
        avg_doc_len=avg,
    )


def _read_jsonl(path):
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{lineno}: expected a JSON object")
            yield lineno, obj


def parse_documents(path) -> list[Document]:
    docs = []
    seen = set()
    for lineno, obj in _read_jsonl(path):
        try:
            facets = [(f["name"], f["values"]) for f in obj.get("facets", [])]
            text = obj.get("text")
            if text is not None and not isinstance(text, str):
                raise CorpusError("'text' must be a string")
            doc = Document.create(obj.get("id"), facets, text)
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"{path}:{lineno}: malformed document ({exc})") from None
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from None
        if doc.id in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate document id {doc.id!r}")
        seen.add(doc.id)
        docs.append(doc)
    return docs


def load_corpus(path) -> tuple[list[Document], CorpusStats]:
    """Read ``corpus.jsonl``; documents keep file order."""
    docs = parse_documents(path)
    return docs, compute_stats(docs)


def write_corpus(docs, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for doc in docs:
            handle.write(json.dumps(doc.to_json(), ensure_ascii=False) + "\n")


def load_topics(path) -> list[QueryTopic]:
    topics = []
    seen = set()
    for lineno, obj in _read_jsonl(path):
        qid, title = obj.get("qid"), obj.get("title")
        if not isinstance(qid, str) or not qid:
            raise CorpusError(f"{path}:{lineno}: missing qid")
        if not isinstance(title, str) or not title.strip():
            raise CorpusError(f"{path}:{lineno}: empty title for {qid!r}")
        if qid in seen:
            raise CorpusError(f"{path}:{lineno}: duplicate qid {qid!r}")
        seen.add(qid)
        topics.append(QueryTopic(qid, title, obj.get("description"), obj.get("narrative")))
    return topics


def topic_to_json(topic: QueryTopic) -> dict:
    out = {"qid": topic.qid, "title": topic.title}
    if topic.description is not None:
        out["description"] = topic.description
    if topic.narrative is not None:
        out["narrative"] = topic.narrative
    return out
