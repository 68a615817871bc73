import itertools
import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from facetrank.evaluation.metrics import (average_precision, evaluate_rankings, mean_average_precision_scores,
                                          query_metrics)


def definitional_ap(ranking, relevant):
    """(1/R) * sum over ranks k holding a relevant item of P@k."""
    total = 0.0
    for k in range(1, len(ranking) + 1):
        if ranking[k - 1] in relevant:
            total += sum(1 for x in ranking[:k] if x in relevant) / k
    return total / len(relevant)


def test_hand_examples():
    ranking = ["a", "x", "b", "y", "z"]
    assert average_precision(ranking, {"a", "b"}) == pytest.approx((1 + 2 / 3) / 2, abs=1e-12)
    ap, r_prec, p5, p_r1 = query_metrics(ranking, {"a", "b"})
    assert (ap, r_prec, p5, p_r1) == pytest.approx((0.8333333333333334, 0.5, 0.4, 2 / 3), abs=1e-12)


def test_perfect_and_empty_and_short():
    assert query_metrics(list("abcdexyz"), set("abcde")) == (1.0, 1.0, 1.0, 1.0)
    assert query_metrics(["x", "y"], {"a"}) == (0.0, 0.0, 0.0, 0.0)
    assert query_metrics(["a", "x", "y"], {"a"})[2] == pytest.approx(0.2, abs=1e-12)
    with pytest.raises(ValueError):
        average_precision(["a"], set())


def test_p_r1_with_missing_relevant():
    # b never retrieved: ceiling is the last retrieved relevant item
    assert query_metrics(["x", "a", "y"], {"a", "b"})[3] == pytest.approx(0.5)


def test_ap_matches_definition_on_all_permutations():
    rng = random.Random(0)
    for n in range(1, 9):
        items = [f"i{j}" for j in range(n)]
        relevant_sets = [set(rng.sample(items, rng.randint(1, n))) for _ in range(2 if n < 8 else 1)]
        for relevant in relevant_sets:
            for perm in itertools.permutations(items):
                assert average_precision(perm, relevant) == pytest.approx(definitional_ap(perm, relevant), abs=1e-12)


@given(st.permutations(list(range(10))), st.integers(1, 10))
def test_metric_properties(perm, n_rel):
    relevant = set(range(n_rel))
    ranking = list(perm)
    ap, r_prec, p5, p_r1 = query_metrics(ranking, relevant)
    for m in (ap, r_prec, p5, p_r1):
        assert 0.0 <= m <= 1.0
    assert (ap == pytest.approx(1.0)) == (set(ranking[:n_rel]) == relevant)
    last = max(i for i, x in enumerate(ranking) if x in relevant)
    tail = ranking[last + 1:]
    shuffled = ranking[:last + 1] + list(reversed(tail))
    a2, r2, _, pr2 = query_metrics(shuffled, relevant)
    assert (a2, r2, pr2) == (ap, r_prec, p_r1)


def test_evaluate_rankings_single_query_and_exclusion():
    qrels = {("q1", "g", "a"): 1, ("q1", "g", "b"): 0, ("q2", "g", "a"): 0}
    rankings = {"q1": [("g", "b"), ("g", "a")], "q2": [("g", "a")]}
    m = evaluate_rankings(rankings, qrels)
    assert m.per_query_ap == {"q1": 0.5}
    assert m.map_ == 0.5
    with pytest.raises(ValueError):
        evaluate_rankings(rankings, {("q2", "g", "a"): 0})


def test_vectorized_map_matches_reference():
    rng = np.random.default_rng(4)
    scores = rng.normal(size=40).round(1)
    labels = (rng.random(40) < 0.3).astype(float)
    labels[[0, 20]] = 1
    groups = [(np.arange(0, 20), int(labels[:20].sum()) + 1), (np.arange(20, 40), int(labels[20:].sum()))]
    expected = []
    for rows, n_rel in groups:
        order = sorted(rows, key=lambda i: (-scores[i], i))
        relevant = {i for i in rows if labels[i] > 0} | ({"missing"} if n_rel > labels[rows].sum() else set())
        expected.append(definitional_ap(order, relevant))
    assert mean_average_precision_scores(scores, labels, groups) == pytest.approx(np.mean(expected), abs=1e-12)
