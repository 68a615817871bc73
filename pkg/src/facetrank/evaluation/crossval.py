"""Query-grouped k-fold cross-validation of the boosted ranker and baselines."""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field

import numpy as np

from ..gbt import GbtConfig, GbtModel, RankingSet, predict_proba, relative_influence, train
from .metrics import Metrics, Qrels, evaluate_rankings, relevant_sets

log = logging.getLogger(__name__)

DEFAULT_FOLDS = 10
DEFAULT_VAL_FRAC = 0.2


@dataclass
class QueryInstances:
    """Feature matrix of one query's candidate pool, row ``i`` is ``keys[i]``."""

    qid: str
    keys: list[tuple[str, str]]
    X: np.ndarray


@dataclass
class FoldedMetrics:
    folds: list[Metrics]

    def mean(self) -> dict[str, float]:
        k = len(self.folds)
        return {
            "map": math.fsum(m.map_ for m in self.folds) / k,
            "r_prec": math.fsum(m.r_prec for m in self.folds) / k,
            "p5": math.fsum(m.p_at_5 for m in self.folds) / k,
            "p_r1": math.fsum(m.p_at_r1 for m in self.folds) / k,
        }

    @property
    def per_query_ap(self) -> dict[str, float]:
        out = {}
        for m in self.folds:
            out.update(m.per_query_ap)
        return dict(sorted(out.items()))

    def to_json(self, fold_qids: list[list[str]] | None = None) -> dict:
        out = dict(self.mean())
        out["per_query"] = self.per_query_ap
        folds = []
        for i, m in enumerate(self.folds):
            entry = {"fold": i, **{k: v for k, v in m.to_json().items() if k != "per_query"}}
            if fold_qids is not None:
                entry["qids"] = fold_qids[i]
            folds.append(entry)
        out["folds"] = folds
        return out


@dataclass
class CvResult:
    fold_qids: list[list[str]]
    gbt: FoldedMetrics
    models: list[GbtModel]
    baselines: dict[str, FoldedMetrics] = field(default_factory=dict)

    def mean_relative_influence(self) -> dict[str, float]:
        usable = [m for m in self.models if m.best_iteration >= 1]
        if not usable:
            return {}
        acc: dict[str, float] = {}
        for m in usable:
            for name, v in relative_influence(m).items():
                acc[name] = acc.get(name, 0.0) + v / len(usable)
        return acc


def assign_folds(qids: list[str], folds: int, seed: int) -> list[list[str]]:
    """Shuffle queries by ``seed`` and deal them round-robin into folds."""
    order = sorted(qids)
    random.Random(seed).shuffle(order)
    return [order[i::folds] for i in range(folds)]


def split_train_validation(qids: list[str], val_frac: float) -> tuple[list[str], list[str]]:
    """Last ``ceil(val_frac * n)`` queries (at least one) become validation."""
    if len(qids) < 2:
        raise ValueError("need at least two queries to split train/validation")
    n_val = min(len(qids) - 1, max(1, math.ceil(val_frac * len(qids))))
    return qids[:-n_val], qids[-n_val:]


def rank_keys(inst: QueryInstances, scores: np.ndarray) -> list[tuple[str, str]]:
    """Descending score, ties by (facet, value) ascending."""
    order = sorted(range(len(inst.keys)), key=lambda i: (-scores[i], inst.keys[i]))
    return [inst.keys[i] for i in order]


def _labels(inst: QueryInstances, qrels: Qrels) -> np.ndarray:
    return np.array([1.0 if qrels.get((inst.qid, f, v), 0) > 0 else 0.0 for f, v in inst.keys])


def stack_instances(instances: list[QueryInstances], qrels: Qrels, n_relevant: dict[str, int] | None = None) -> RankingSet:
    X = np.vstack([inst.X for inst in instances])
    y = np.concatenate([_labels(inst, qrels) for inst in instances])
    qids = [inst.qid for inst in instances for _ in inst.keys]
    keys = [k for inst in instances for k in inst.keys]
    return RankingSet(X, y, qids, keys, n_relevant)


def cross_validate(instances: list[QueryInstances], qrels: Qrels, feature_names: list[str],
                   config: GbtConfig | None = None, folds: int = DEFAULT_FOLDS, seed: int = 0,
                   val_frac: float = DEFAULT_VAL_FRAC, baselines: tuple[str, ...] = ()) -> CvResult:
    """Train and test the ranker fold by fold; score single-feature baselines on the same folds.

    Only queries with at least one relevant FVP take part.
    """
    config = config or GbtConfig()
    if folds < 2:
        raise ValueError("cross-validation needs at least two folds")
    rel = relevant_sets(qrels)
    by_qid = {inst.qid: inst for inst in instances if inst.qid in rel}
    if len(by_qid) < folds:
        raise ValueError(f"{len(by_qid)} queries with relevant FVPs cannot fill {folds} folds")
    n_relevant = {q: len(keys) for q, keys in rel.items()}
    fold_qids = assign_folds(list(by_qid), folds, seed)
    columns = [feature_names.index(b) for b in baselines]

    gbt_folds, models = [], []
    base_folds: dict[str, list[Metrics]] = {b: [] for b in baselines}
    for k, test_qids in enumerate(fold_qids):
        rest = [q for j, fq in enumerate(fold_qids) if j != k for q in fq]
        train_qids, val_qids = split_train_validation(rest, val_frac)
        train_set = stack_instances([by_qid[q] for q in train_qids], qrels)
        val_set = stack_instances([by_qid[q] for q in val_qids], qrels, n_relevant)
        model = train(train_set.X, train_set.y, val_set, config, feature_names)
        models.append(model)
        rankings = {}
        for q in test_qids:
            inst = by_qid[q]
            rankings[q] = rank_keys(inst, predict_proba(model, inst.X))
        gbt_folds.append(evaluate_rankings(rankings, qrels, test_qids))
        log.info("fold %d: %d test queries, best iteration %d, MAP %.4f",
                 k, len(test_qids), model.best_iteration, gbt_folds[-1].map_)
        for name, col in zip(baselines, columns):
            ranks = {q: rank_keys(by_qid[q], by_qid[q].X[:, col]) for q in test_qids}
            base_folds[name].append(evaluate_rankings(ranks, qrels, test_qids))
    return CvResult(
        fold_qids=fold_qids,
        gbt=FoldedMetrics(gbt_folds),
        models=models,
        baselines={b: FoldedMetrics(m) for b, m in base_folds.items()},
    )
