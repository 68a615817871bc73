"""Gradient boosted regression trees for binary relevance (Bernoulli deviance).

Trees are grown best-first: the leaf whose best split removes the most
squared error from the residuals is split next, until ``interaction_depth``
splits exist or no split leaves both children with ``min_obs_per_node``
instances. Leaf values are single Newton steps on the log-likelihood.
The number of trees used for prediction is chosen by validation MAP.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .evaluation.metrics import mean_average_precision_scores

log = logging.getLogger(__name__)

LEAF_CLIP = 10.0
HESSIAN_EPS = 1e-12


class DegenerateLabels(ValueError):
    pass


@dataclass(frozen=True)
class GbtConfig:
    max_trees: int = 3000
    interaction_depth: int = 5
    min_obs_per_node: int = 10
    shrinkage: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.shrinkage <= 1.0:
            raise ValueError("shrinkage must lie in (0, 1]")
        if self.interaction_depth < 1:
            raise ValueError("interaction_depth must be >= 1")
        if self.min_obs_per_node < 1:
            raise ValueError("min_obs_per_node must be >= 1")
        if self.max_trees < 0:
            raise ValueError("max_trees must be >= 0")


@dataclass
class RegressionTree:
    """Flat binary tree; ``feature[i] == -1`` marks node ``i`` as a leaf.

    Rows with ``x[feature] <= threshold`` go left.
    """

    feature: list[int] = field(default_factory=lambda: [-1])
    threshold: list[float] = field(default_factory=lambda: [0.0])
    left: list[int] = field(default_factory=lambda: [-1])
    right: list[int] = field(default_factory=lambda: [-1])
    value: list[float] = field(default_factory=lambda: [0.0])
    gain: list[float] = field(default_factory=lambda: [0.0])

    @property
    def n_splits(self) -> int:
        return sum(1 for f in self.feature if f >= 0)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node index for every row of ``X``."""
        X = np.atleast_2d(X)
        node = np.zeros(len(X), dtype=np.int64)
        for i, f in enumerate(self.feature):
            if f < 0:
                continue
            at = node == i
            go_left = X[:, f] <= self.threshold[i]
            node[at & go_left] = self.left[i]
            node[at & ~go_left] = self.right[i]
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.value)[self.apply(X)]

    def to_json(self) -> dict:
        nodes = []
        for i, f in enumerate(self.feature):
            if f < 0:
                nodes.append({"value": self.value[i]})
            else:
                nodes.append({"feature": f, "threshold": self.threshold[i],
                              "left": self.left[i], "right": self.right[i],
                              "gain": self.gain[i]})
        return {"nodes": nodes}

    @classmethod
    def from_json(cls, obj: dict) -> RegressionTree:
        tree = cls([], [], [], [], [], [])
        for node in obj["nodes"]:
            if "value" in node:
                tree._append(-1, 0.0, -1, -1, float(node["value"]), 0.0)
            else:
                tree._append(int(node["feature"]), float(node["threshold"]), int(node["left"]),
                             int(node["right"]), 0.0, float(node.get("gain", 0.0)))
        return tree

    def _append(self, feature, threshold, left, right, value, gain):
        self.feature.append(feature)
        self.threshold.append(threshold)
        self.left.append(left)
        self.right.append(right)
        self.value.append(value)
        self.gain.append(gain)
        return len(self.feature) - 1


@dataclass
class GbtModel:
    f0: float
    shrinkage: float
    trees: list[RegressionTree]
    best_iteration: int
    feature_names: list[str]
    validation_map: list[float] = field(default_factory=list, repr=False)

    def raw_score(self, X: np.ndarray, n_trees: int | None = None) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        n = self.best_iteration if n_trees is None else n_trees
        if not 0 <= n <= len(self.trees):
            raise ValueError(f"n_trees={n} outside [0, {len(self.trees)}]")
        out = np.full(len(X), self.f0)
        for tree in self.trees[:n]:
            out += self.shrinkage * tree.predict(X)
        return out

    def to_json(self) -> str:
        obj = {
            "f0": self.f0,
            "shrinkage": self.shrinkage,
            "best_iteration": self.best_iteration,
            "feature_names": list(self.feature_names),
            "trees": [t.to_json() for t in self.trees],
        }
        return json.dumps(obj, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str) -> GbtModel:
        obj = json.loads(text)
        return cls(
            f0=float(obj["f0"]),
            shrinkage=float(obj["shrinkage"]),
            trees=[RegressionTree.from_json(t) for t in obj["trees"]],
            best_iteration=int(obj["best_iteration"]),
            feature_names=list(obj["feature_names"]),
        )


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    return np.where(x >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def init_score(labels) -> float:
    y = np.asarray(labels, dtype=np.float64)
    p = y.mean() if len(y) else 0.0
    if not 0.0 < p < 1.0:
        raise DegenerateLabels("training labels must contain both classes")
    return math.log(p / (1.0 - p))


def negative_gradient(labels, raw_scores) -> np.ndarray:
    y = np.asarray(labels, dtype=np.float64)
    F = np.asarray(raw_scores, dtype=np.float64)
    if y.shape != F.shape:
        raise ValueError("labels and raw scores differ in length")
    return y - sigmoid(F)


def bernoulli_deviance(labels, raw_scores) -> float:
    """Total deviance ``-2 * sum(y*F - log(1 + e^F))``."""
    y = np.asarray(labels, dtype=np.float64)
    F = np.asarray(raw_scores, dtype=np.float64)
    return float(-2.0 * np.sum(y * F - np.logaddexp(0.0, F)))


class _PresortedFeatures:
    """Per-feature sort order of a fixed design matrix, reused across trees."""

    def __init__(self, X: np.ndarray):
        self.X = X
        self.order = np.argsort(X, axis=0, kind="stable").T.copy()  # (F, n)
        self.sorted_values = np.take_along_axis(X.T, self.order, axis=1)
        self.root = _Node(self.order, self.sorted_values)


@dataclass
class _Node:
    """Rows of one leaf, kept sorted along every feature."""

    order: np.ndarray  # (F, n_node) row indices
    values: np.ndarray  # (F, n_node) feature values in that order
    _legal: dict = field(default_factory=dict, repr=False)

    def legal(self, lo: int, hi: int) -> np.ndarray:
        """Split after sorted position i is legal where the next value differs."""
        key = (lo, hi)
        if key not in self._legal:
            self._legal[key] = self.values[:, lo:hi] < self.values[:, lo + 1:hi + 1]
        return self._legal[key]

    @property
    def size(self) -> int:
        return self.order.shape[1]

    def partition(self, goes_left: np.ndarray) -> tuple[_Node, _Node]:
        n_feat = self.order.shape[0]
        left = goes_left[self.order]
        n_left = int(left[0].sum())
        right = ~left
        return (
            _Node(self.order[left].reshape(n_feat, n_left), self.values[left].reshape(n_feat, n_left)),
            _Node(self.order[right].reshape(n_feat, -1), self.values[right].reshape(n_feat, -1)),
        )


def _best_split(node: _Node, resid: np.ndarray, min_obs: int):
    """Largest squared-error reduction over all legal splits of one leaf.

    Returns ``(gain, feature, threshold)`` or ``None``.
    """
    n_leaf = node.size
    if n_leaf < 2 * min_obs:
        return None
    vals = node.values
    csum = resid[node.order]
    scale = float(np.dot(csum[0], csum[0]))
    np.cumsum(csum, axis=1, out=csum)
    total = csum[:, -1:]
    # left child = first (i+1) rows in sort order, i+1 in [min_obs, n_leaf - min_obs]
    lo, hi = min_obs - 1, n_leaf - min_obs
    left_sum = csum[:, lo:hi]
    n_left = np.arange(lo + 1, hi + 1, dtype=np.float64)
    right_sum = total - left_sum
    right_sum *= right_sum
    right_sum /= n_left[::-1]
    gain = left_sum * left_sum
    gain /= n_left
    gain += right_sum
    gain -= total * total / n_leaf
    gain[~node.legal(lo, hi)] = -np.inf
    flat = int(np.argmax(gain))
    f, i = divmod(flat, gain.shape[1])
    best = gain[f, i]
    if not np.isfinite(best) or best <= 1e-10 * scale + 1e-300:
        return None
    a, b = vals[f, lo + i], vals[f, lo + i + 1]
    threshold = 0.5 * (a + b)
    if threshold >= b:
        threshold = a
    return float(best), int(f), float(threshold)


def _leaf_value(resid: np.ndarray, prob: np.ndarray, idx: np.ndarray) -> float:
    num = float(np.sum(resid[idx]))
    den = float(np.sum(prob[idx] * (1.0 - prob[idx]))) + HESSIAN_EPS
    return float(np.clip(num / den, -LEAF_CLIP, LEAF_CLIP))


def _grow(pre: _PresortedFeatures, resid: np.ndarray, raw_scores: np.ndarray,
          config: GbtConfig) -> tuple[RegressionTree, np.ndarray]:
    X = pre.X
    n = len(X)
    min_obs = config.min_obs_per_node
    prob = sigmoid(raw_scores)
    tree = RegressionTree()
    leaf_of = np.zeros(n, dtype=np.int64)
    root = pre.root
    pending = {0: (root, _best_split(root, resid, min_obs))}
    while tree.n_splits < config.interaction_depth:
        choices = [(-split[0], node_id) for node_id, (_, split) in pending.items() if split is not None]
        if not choices:
            break
        _, node_id = min(choices)
        node, (gain, f, thr) = pending.pop(node_id)
        goes_left = X[:, f] <= thr
        left_node, right_node = node.partition(goes_left)
        members = leaf_of == node_id
        left = tree._append(-1, 0.0, -1, -1, 0.0, 0.0)
        right = tree._append(-1, 0.0, -1, -1, 0.0, 0.0)
        tree.feature[node_id], tree.threshold[node_id], tree.gain[node_id] = f, thr, gain
        tree.left[node_id], tree.right[node_id] = left, right
        leaf_of[members & goes_left] = left
        leaf_of[members & ~goes_left] = right
        pending[left] = (left_node, _best_split(left_node, resid, min_obs))
        pending[right] = (right_node, _best_split(right_node, resid, min_obs))
    for node_id, f in enumerate(tree.feature):
        if f < 0:
            tree.value[node_id] = _leaf_value(resid, prob, np.flatnonzero(leaf_of == node_id))
    return tree, leaf_of


def fit_tree(features, residuals, raw_scores, config: GbtConfig) -> RegressionTree:
    X = np.asarray(features, dtype=np.float64)
    if len(X) < 2 * config.min_obs_per_node:
        raise ValueError(f"need at least {2 * config.min_obs_per_node} instances to grow a tree")
    tree, _ = _grow(_PresortedFeatures(X), np.asarray(residuals, dtype=np.float64),
                    np.asarray(raw_scores, dtype=np.float64), config)
    return tree


@dataclass
class RankingSet:
    """Instances grouped by query, as needed for validation MAP.

    ``n_relevant`` may exceed the labelled positives when some relevant
    items never entered the candidate pool.
    """

    X: np.ndarray
    y: np.ndarray
    qids: list[str]
    keys: list[tuple[str, str]]
    n_relevant: dict[str, int] | None = None

    def groups(self) -> list[tuple[np.ndarray, int]]:
        """Row indices per query in tie-break order, with the relevant count."""
        by_q: dict[str, list[int]] = {}
        for i, q in enumerate(self.qids):
            by_q.setdefault(q, []).append(i)
        out = []
        for q in sorted(by_q):
            rows = sorted(by_q[q], key=lambda i: self.keys[i])
            n_rel = int(self.y[rows].sum()) if self.n_relevant is None else self.n_relevant.get(q, 0)
            if n_rel > 0:
                out.append((np.asarray(rows), n_rel))
        return out


def best_iteration_from(history: list[float]) -> int:
    """Iteration with the highest MAP; the earliest wins ties.

    ``history[i]`` is the MAP after ``i + 1`` trees; index 0 of the result
    space (no trees) is not a candidate unless the history is empty.
    """
    if not history:
        return 0
    return int(np.argmax(np.asarray(history))) + 1


def train(X, y, validation: RankingSet, config: GbtConfig | None = None,
          feature_names: list[str] | None = None) -> GbtModel:
    config = config or GbtConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    f0 = init_score(y)
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(X.shape[1])]
    model = GbtModel(f0=f0, shrinkage=config.shrinkage, trees=[], best_iteration=0, feature_names=names)
    if config.max_trees == 0:
        return model
    if len(X) < 2 * config.min_obs_per_node:
        raise ValueError(f"need at least {2 * config.min_obs_per_node} training instances")
    groups = validation.groups()
    if not groups:
        raise ValueError("validation set has no query with a relevant item")
    pre = _PresortedFeatures(X)
    raw = np.full(len(X), f0)
    val_raw = np.full(len(validation.X), f0)
    history = []
    for it in range(config.max_trees):
        resid = negative_gradient(y, raw)
        tree, leaf_of = _grow(pre, resid, raw, config)
        raw += config.shrinkage * np.asarray(tree.value)[leaf_of]
        val_raw += config.shrinkage * tree.predict(validation.X)
        model.trees.append(tree)
        history.append(mean_average_precision_scores(val_raw, validation.y, groups))
        if log.isEnabledFor(logging.DEBUG) and (it + 1) % 500 == 0:
            log.debug("iteration %d: validation MAP %.4f", it + 1, history[-1])
    model.validation_map = history
    model.best_iteration = best_iteration_from(history)
    return model


def predict(model: GbtModel, feature_vector, n_trees: int | None = None) -> float:
    x = np.asarray(feature_vector, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict takes a single feature vector")
    return float(sigmoid(model.raw_score(x[None, :], n_trees))[0])


def predict_proba(model: GbtModel, X, n_trees: int | None = None) -> np.ndarray:
    return sigmoid(model.raw_score(X, n_trees))


def relative_influence(model: GbtModel, n_trees: int | None = None) -> dict[str, float]:
    """Share of total split gain credited to each feature, in percent."""
    n = model.best_iteration if n_trees is None else n_trees
    if n < 1:
        raise ValueError("relative influence needs at least one tree")
    totals = np.zeros(len(model.feature_names))
    for tree in model.trees[:n]:
        for f, g in zip(tree.feature, tree.gain):
            if f >= 0:
                totals[f] += g
    grand = totals.sum()
    if grand > 0:
        totals = 100.0 * totals / grand
    return {name: float(v) for name, v in zip(model.feature_names, totals)}


def config_dict(config: GbtConfig) -> dict:
    return asdict(config)
