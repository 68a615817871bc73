import pytest

from facetrank.corpus import Document, compute_stats


@pytest.fixture
def movie_docs():
    return [
        Document.create("d1", [("genre", ["Comedy", "Romance"]), ("director", ["Woody Allen"]),
                               ("actor", ["Scarlett Johansson", "Woody Allen"])], "a comedy in barcelona"),
        Document.create("d2", [("genre", ["Comedy"]), ("director", ["Woody Allen"]),
                               ("actor", ["Scarlett Johansson"])], "a thriller in london"),
        Document.create("d3", [("genre", ["Action", "Adventure", "Sci-Fi"]), ("director", ["James Cameron"])],
                        "terminator"),
        Document.create("d4", [("genre", ["Drama"]), ("director", ["Steven Spielberg"])], None),
    ]


@pytest.fixture
def movie_stats(movie_docs):
    return compute_stats(movie_docs)
