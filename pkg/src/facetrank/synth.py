"""Synthetic structured corpus, title-only topics and FVP judgments.

Each topic plants 2-4 facet-value pairs into a small set of documents and
spells their values out in the title, optionally salted with stray tokens
drawn from other values. Person names come from one shared pool so the
same name shows up under several facets. Planted documents also carry
non-relevant look-alikes: the planted person in a second role, and a
"companion" person who shares the planted person's surname.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import Document, QueryTopic

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "tr", "gr"]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ou"]
_CODAS = ["", "", "n", "r", "l", "s", "th", "x"]


@dataclass(frozen=True)
class FacetSpec:
    name: str
    vocab_size: int
    per_doc: tuple[int, int]
    kind: str = "word"  # word | person | phrase | year
    query_weight: float = 1.0


DEFAULT_SCHEMA = (
    FacetSpec("genre", 24, (1, 3), "word", 3.0),
    FacetSpec("director", 400, (1, 1), "person", 3.0),
    FacetSpec("actor", 1500, (3, 6), "person", 4.0),
    FacetSpec("writer", 600, (1, 2), "person", 0.5),
    FacetSpec("producer", 500, (1, 2), "person", 0.3),
    FacetSpec("country", 40, (1, 1), "word", 1.0),
    FacetSpec("language", 30, (1, 1), "word", 0.7),
    FacetSpec("keyword", 900, (2, 5), "phrase", 0.3),
    FacetSpec("year", 60, (1, 1), "year", 1.0),
)


@dataclass(frozen=True)
class SynthConfig:
    num_docs: int = 5000
    num_queries: int = 30
    schema: tuple[FacetSpec, ...] = DEFAULT_SCHEMA
    relevant_fvps_per_query: tuple[int, int] = (2, 4)
    noise: float = 0.3
    seed: int = 0
    zipf_exponent: float = 1.0
    planted_docs: tuple[int, int] = (4, 25)
    plant_prob: float = 0.6
    text_length: tuple[int, int] = (8, 30)
    shadow_prob: float = 0.6
    first_names: int = 40
    last_names: int = 80

    def __post_init__(self):
        if self.num_queries < 10:
            raise ValueError("need at least 10 queries for cross-validation")
        lo, hi = self.relevant_fvps_per_query
        if not 1 <= lo <= hi:
            raise ValueError("relevant_fvps_per_query must be a range with lower bound >= 1")
        if not 0.0 <= self.noise < 1.0:
            raise ValueError("noise must lie in [0, 1)")
        if self.num_docs < self.planted_docs[1]:
            raise ValueError("corpus smaller than the planted document range")
        if hi > sum(min(s.vocab_size, s.per_doc[1]) for s in self.schema):
            raise ValueError("more relevant FVPs per query than the facet schema supports")


def _word_pool(rng: random.Random, n: int, syllables: tuple[int, int] = (2, 3)) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    while len(out) < n:
        word = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS)
                       for _ in range(rng.randint(*syllables)))
        if word not in seen:
            seen.add(word)
            out.append(word)
    return out


def _zipf_weights(n: int, s: float) -> list[float]:
    return [1.0 / (r ** s) for r in range(1, n + 1)]


@dataclass
class _Vocab:
    values: list[str]
    weights: list[float] = field(default_factory=list)


def _build_vocabularies(cfg: SynthConfig, rng: random.Random):
    firsts = [w.capitalize() for w in _word_pool(rng, cfg.first_names, (1, 2))]
    lasts = [w.capitalize() for w in _word_pool(rng, cfg.last_names, (2, 3))]
    people = sorted({f"{f} {l}" for f in firsts for l in lasts})
    general = _word_pool(rng, 2000)
    vocabs = {}
    for spec in cfg.schema:
        if spec.kind == "person":
            values = rng.sample(people, min(spec.vocab_size, len(people)))
        elif spec.kind == "phrase":
            values = sorted({f"{rng.choice(general)} {rng.choice(general)}" for _ in range(spec.vocab_size)})
            rng.shuffle(values)
        elif spec.kind == "year":
            values = [str(1950 + i) for i in range(spec.vocab_size)]
            rng.shuffle(values)
        else:
            values = [w.capitalize() for w in rng.sample(general, spec.vocab_size)]
        vocabs[spec.name] = _Vocab(values, _zipf_weights(len(values), cfg.zipf_exponent))
    return vocabs, general, people


def _sample_values(rng: random.Random, vocab: _Vocab, k: int) -> list[str]:
    out: list[str] = []
    while len(out) < min(k, len(vocab.values)):
        v = rng.choices(vocab.values, vocab.weights)[0]
        if v not in out:
            out.append(v)
    return out


def generate_synthetic(cfg: SynthConfig):
    """Returns (documents, topics, qrels) deterministically for ``cfg.seed``."""
    rng = random.Random(cfg.seed)
    vocabs, general, people = _build_vocabularies(cfg, rng)
    specs = {s.name: s for s in cfg.schema}
    width = len(str(cfg.num_docs))

    doc_facets: list[dict[str, list[str]]] = []
    texts: list[str] = []
    for _ in range(cfg.num_docs):
        facets = {}
        for spec in cfg.schema:
            facets[spec.name] = _sample_values(rng, vocabs[spec.name], rng.randint(*spec.per_doc))
        doc_facets.append(facets)
        texts.append(" ".join(rng.choice(general) for _ in range(rng.randint(*cfg.text_length))))

    by_last: dict[str, list[str]] = {}
    for p in people:
        by_last.setdefault(p.split()[-1], []).append(p)
    person_facets = [s.name for s in cfg.schema if s.kind == "person"]
    stray_pool = sorted({tok for v in vocabs.values() for value in v.values for tok in value.split()})

    topics, qrels = [], {}
    facet_names = [s.name for s in cfg.schema]
    facet_weights = [s.query_weight for s in cfg.schema]
    qwidth = len(str(cfg.num_queries))
    for qi in range(cfg.num_queries):
        qid = f"q{qi + 1:0{qwidth}d}"
        n_rel = rng.randint(*cfg.relevant_fvps_per_query)
        chosen: list[tuple[str, str]] = []
        while len(chosen) < n_rel:
            facet = rng.choices(facet_names, facet_weights)[0]
            if sum(1 for f, _ in chosen if f == facet) >= specs[facet].per_doc[1]:
                continue
            value = rng.choice(vocabs[facet].values)
            if (facet, value) not in chosen:
                chosen.append((facet, value))
        planted = rng.sample(range(cfg.num_docs), rng.randint(*cfg.planted_docs))
        companions = []
        for facet, value in chosen:
            if specs[facet].kind != "person":
                continue
            kin = [p for p in by_last[value.split()[-1]] if p != value]
            if kin:
                companions.append((rng.choice(person_facets), rng.choice(kin)))
            other_roles = [f for f in person_facets if f != facet and (f, value) not in chosen]
            if other_roles and rng.random() < cfg.shadow_prob:
                # second roles lean toward the crew facets that queries rarely target
                weights = [1.0 / specs[f].query_weight for f in other_roles]
                companions.append((rng.choices(other_roles, weights)[0], value))
        for j, d in enumerate(planted):
            # the first planted document carries every relevant FVP
            for facet, value in chosen:
                if j == 0 or rng.random() < cfg.plant_prob:
                    _plant(doc_facets[d], specs[facet], facet, value, rng)
            for facet, value in companions:
                if rng.random() < cfg.plant_prob:
                    _plant(doc_facets[d], specs[facet], facet, value, rng)
        words = []
        for _, value in rng.sample(chosen, len(chosen)):
            words.append(value)
            if rng.random() < cfg.noise:
                words.append(rng.choice(stray_pool))
        topics.append(QueryTopic(qid, " ".join(words)))
        for facet, value in sorted(chosen):
            qrels[(qid, facet, value)] = 1

    docs = []
    for i, (facets, text) in enumerate(zip(doc_facets, texts)):
        docs.append(Document.create(f"d{i + 1:0{width}d}", [(n, facets[n]) for n in facet_names if facets[n]], text))
    return docs, topics, qrels


def _plant(facets: dict[str, list[str]], spec: FacetSpec, facet: str, value: str, rng: random.Random) -> None:
    values = facets[facet]
    if value in values:
        return
    if len(values) >= spec.per_doc[1]:
        values[rng.randrange(len(values))] = value
    else:
        values.append(value)
