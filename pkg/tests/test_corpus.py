import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from facetrank.corpus import (CorpusError, CorpusStats, Document, compute_stats, idf, load_corpus, load_topics,
                              plain_text, tokenize, write_corpus)


@pytest.mark.parametrize("text, expected", [
    ("Comedy Woody Allen Scarlett Johansson", ["comedy", "woody", "allen", "scarlett", "johansson"]),
    ("", []),
    ("Sci-Fi (1997)", ["sci", "fi", "1997"]),
    ("under_score  tabs\tand--dashes", ["under", "score", "tabs", "and", "dashes"]),
])
def test_tokenize(text, expected):
    assert tokenize(text) == expected


@given(st.text())
def test_tokenize_idempotent_on_joined_output(text):
    tokens = tokenize(text)
    assert tokenize(" ".join(tokens)) == tokens


@pytest.mark.parametrize("facets, text, expected", [
    ([("genre", ["Action", "Sci-Fi"])], None, "Action Sci-Fi"),
    ([], "plot summary", "plot summary"),
    ([("director", ["Woody Allen"])], "a comedy", "Woody Allen a comedy"),
])
def test_plain_text(facets, text, expected):
    assert plain_text(Document.create("d", facets, text)) == expected


def test_idf_examples():
    stats = CorpusStats(num_docs=4, doc_freq={"a": 2, "b": 4})
    assert idf("a", stats) == pytest.approx(0.5108256237659907, abs=1e-12)
    assert idf("unseen", stats) == pytest.approx(1.6094379124341003, abs=1e-12)
    assert idf("b", stats) == 0.0


@given(n=st.integers(1, 10_000), data=st.data())
def test_idf_range_and_monotone(n, data):
    df1 = data.draw(st.integers(0, n))
    df2 = data.draw(st.integers(df1, n))
    stats = CorpusStats(num_docs=n, doc_freq={"x": df1, "y": df2})
    assert 0.0 <= idf("y", stats) <= idf("x", stats) <= math.log(n + 1)
    if df1 < n:
        assert idf("x", stats) > 0


def test_document_validation():
    with pytest.raises(CorpusError):
        Document.create("", [])
    with pytest.raises(CorpusError):
        Document.create("d", [("genre", ["  "])])
    with pytest.raises(CorpusError):
        Document.create("d", [(" ", ["x"])])
    doc = Document.create("d", [("genre", [" Action ", "Action"]), ("genre", ["Drama"])])
    assert doc.facets == (("genre", ("Action", "Drama")),)


def test_stats_invariants(movie_docs, movie_stats):
    assert movie_stats.num_docs == 4
    assert all(0 < df <= 4 for df in movie_stats.doc_freq.values())
    lengths = movie_stats.total_tokens_per_doc
    assert movie_stats.avg_doc_len == pytest.approx(sum(lengths.values()) / 4, abs=1e-12)
    assert movie_stats.doc_freq["comedy"] == 2
    assert movie_stats.doc_freq["woody"] == 2


def _write_lines(path, objs):
    path.write_text("".join(json.dumps(o) + "\n" for o in objs), encoding="utf-8")


def test_load_corpus(tmp_path):
    path = tmp_path / "corpus.jsonl"
    _write_lines(path, [
        {"id": "d1", "facets": [{"name": "genre", "values": ["Action"]}], "text": "x y"},
        {"id": "d2", "facets": [{"name": "genre", "values": ["Drama"]}]},
    ])
    docs, stats = load_corpus(path)
    assert [d.id for d in docs] == ["d1", "d2"]
    assert stats.num_docs == 2
    assert stats.doc_freq["action"] == 1


def test_load_corpus_reports_bad_line(tmp_path):
    path = tmp_path / "corpus.jsonl"
    path.write_text('{"id": "d1", "facets": []}\n[1, 2]\n', encoding="utf-8")
    with pytest.raises(CorpusError, match=":2:"):
        load_corpus(path)
    path.write_text('{"id": "d1"}\nnot json\n', encoding="utf-8")
    with pytest.raises(CorpusError, match=":2:"):
        load_corpus(path)


def test_load_corpus_duplicate_id(tmp_path):
    path = tmp_path / "corpus.jsonl"
    _write_lines(path, [{"id": "d1", "facets": []}, {"id": "d1", "facets": []}])
    with pytest.raises(CorpusError, match="d1"):
        load_corpus(path)


def test_corpus_round_trip(tmp_path, movie_docs):
    path = tmp_path / "c.jsonl"
    write_corpus(movie_docs, path)
    docs, stats = load_corpus(path)
    assert docs == movie_docs
    again = tmp_path / "c2.jsonl"
    write_corpus(docs, again)
    assert load_corpus(again)[1] == stats == compute_stats(movie_docs)


def test_load_topics(tmp_path):
    path = tmp_path / "topics.jsonl"
    _write_lines(path, [{"qid": "q1", "title": "Comedy Woody Allen Scarlett Johansson",
                         "description": "Comedy movies directed by Woody Allen"}])
    (topic,) = load_topics(path)
    assert topic.qid == "q1" and topic.narrative is None
    _write_lines(path, [{"qid": "q1", "title": ""}])
    with pytest.raises(CorpusError):
        load_topics(path)
