import numpy as np
import pytest

from facetrank.evaluation.crossval import (QueryInstances, assign_folds, cross_validate, rank_keys,
                                           split_train_validation)
from facetrank.gbt import GbtConfig


def test_fold_sizes_26_into_10():
    folds = assign_folds([f"q{i:02d}" for i in range(26)], 10, seed=0)
    assert sorted(len(f) for f in folds) == [2] * 4 + [3] * 6
    assert sorted(q for f in folds for q in f) == [f"q{i:02d}" for i in range(26)]


def test_fold_assignment_deterministic():
    qids = [f"q{i}" for i in range(30)]
    assert assign_folds(qids, 10, 7) == assign_folds(list(reversed(qids)), 10, 7)
    assert assign_folds(qids, 10, 7) != assign_folds(qids, 10, 8)


def test_train_validation_split():
    train, val = split_train_validation([f"q{i}" for i in range(23)], 0.2)
    assert len(val) == 5 and len(train) == 18
    assert split_train_validation(["a", "b"], 0.2) == (["a"], ["b"])
    with pytest.raises(ValueError):
        split_train_validation(["a"], 0.2)


def test_rank_keys_tie_rule():
    inst = QueryInstances("q", [("g", "b"), ("g", "a"), ("d", "z")], np.zeros((3, 1)))
    assert rank_keys(inst, np.array([0.5, 0.5, 0.9])) == [("d", "z"), ("g", "a"), ("g", "b")]


def _instances(n_q=12, per_q=25, seed=0):
    rng = np.random.default_rng(seed)
    insts, qrels = [], {}
    for i in range(n_q):
        qid = f"q{i:02d}"
        X = rng.normal(size=(per_q, 3))
        keys = [("f", f"v{j:03d}") for j in range(per_q)]
        rel = np.argsort(-(X[:, 0] + 0.2 * rng.normal(size=per_q)))[:3]
        for j in range(per_q):
            qrels[(qid, *keys[j])] = int(j in rel)
        insts.append(QueryInstances(qid, keys, X))
    return insts, qrels


def test_cross_validate_runs_and_is_deterministic():
    insts, qrels = _instances()
    cfg = GbtConfig(max_trees=30, min_obs_per_node=5)
    a = cross_validate(insts, qrels, ["a", "b", "c"], cfg, folds=4, seed=1, baselines=("a", "b"))
    b = cross_validate(insts, qrels, ["a", "b", "c"], cfg, folds=4, seed=1, baselines=("a", "b"))
    assert a.fold_qids == b.fold_qids
    assert a.gbt.mean() == b.gbt.mean()
    assert len(a.gbt.per_query_ap) == 12
    assert a.baselines["a"].mean()["map"] > a.baselines["b"].mean()["map"]
    assert a.gbt.mean()["map"] > 0.5
    for m in a.gbt.folds:
        assert 0 <= m.map_ <= 1


def test_cross_validate_errors():
    insts, qrels = _instances(n_q=5)
    with pytest.raises(ValueError):
        cross_validate(insts, qrels, ["a", "b", "c"], GbtConfig(max_trees=2), folds=1)
    with pytest.raises(ValueError):
        cross_validate(insts, qrels, ["a", "b", "c"], GbtConfig(max_trees=2), folds=10)
