"""Bagged variance-reduction regression trees."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

LEAF = -1


def _as_seed(rng):
    if isinstance(rng, np.random.Generator):
        return int(rng.integers(2**63 - 1))
    return 0 if rng is None else int(rng)


class RegressionTree:
    """CART regressor storing nodes in flat arrays.

    Splits minimize the summed squared error of the children; thresholds sit
    midway between consecutive distinct sorted values, and ``x <= threshold``
    goes left.
    """

    def __init__(self, max_depth=None, min_samples_leaf=1, max_features=None):
        if min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if max_depth is not None and max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features

    def fit(self, X, y, rng=None):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float).ravel()
        if X.shape[0] == 0:
            raise DataError("cannot fit a tree on an empty dataset")
        rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        p = X.shape[1]
        k = p if self.max_features is None else max(1, min(p, int(self.max_features)))

        feature, threshold, left, right, value, n_samples = [], [], [], [], [], []

        def new_node(idx):
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(float(y[idx].mean()))
            n_samples.append(idx.size)
            return len(value) - 1

        stack = [(new_node(np.arange(X.shape[0])), np.arange(X.shape[0]), 0)]
        while stack:
            node, idx, depth = stack.pop()
            if self.max_depth is not None and depth >= self.max_depth:
                continue
            if idx.size < 2 * self.min_samples_leaf or np.ptp(y[idx]) == 0:
                continue
            candidates = rng.choice(p, size=k, replace=False) if k < p else np.arange(p)
            split = self._best_split(X[idx], y[idx], candidates)
            if split is None:
                continue
            f, thr = split
            goes_left = X[idx, f] <= thr
            li, ri = idx[goes_left], idx[~goes_left]
            feature[node], threshold[node] = int(f), float(thr)
            left[node], right[node] = new_node(li), new_node(ri)
            stack.append((right[node], ri, depth + 1))
            stack.append((left[node], li, depth + 1))

        self.feature_ = np.array(feature, dtype=np.int64)
        self.threshold_ = np.array(threshold)
        self.left_ = np.array(left, dtype=np.int64)
        self.right_ = np.array(right, dtype=np.int64)
        self.value_ = np.array(value)
        self.n_samples_ = np.array(n_samples, dtype=np.int64)
        return self

    def _best_split(self, X, y, candidates):
        n = y.size
        m = self.min_samples_leaf
        total = y.sum()
        parent_score = total * total / n
        best_score, best = parent_score, None
        for f in candidates:
            order = np.argsort(X[:, f], kind="stable")
            xs, ys = X[order, f], y[order]
            csum = np.cumsum(ys)[:-1]
            n_left = np.arange(1, n)
            valid = (xs[1:] > xs[:-1]) & (n_left >= m) & (n - n_left >= m)
            if not valid.any():
                continue
            # Maximizing sum_l^2/n_l + sum_r^2/n_r minimizes the children's SSE.
            score = csum**2 / n_left + (total - csum) ** 2 / (n - n_left)
            score = np.where(valid, score, -np.inf)
            i = int(np.argmax(score))
            if score[i] > best_score * (1 + 1e-12) + 1e-300:
                lo, hi = xs[i], xs[i + 1]
                thr = 0.5 * (lo + hi)
                if not lo <= thr < hi:
                    thr = lo
                best_score, best = score[i], (f, thr)
        return best

    def apply(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=np.int64)
        active = self.feature_[node] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            cur = node[rows]
            go_left = X[rows, self.feature_[cur]] <= self.threshold_[cur]
            node[rows] = np.where(go_left, self.left_[cur], self.right_[cur])
            active = self.feature_[node] != LEAF
        return node

    def predict(self, X):
        return self.value_[self.apply(X)]

    @property
    def n_leaves(self) -> int:
        return int((self.feature_ == LEAF).sum())

    def to_dict(self):
        return {k: getattr(self, k + "_").tolist() for k in ("feature", "threshold", "left", "right", "value", "n_samples")}

    @classmethod
    def from_dict(cls, d, **hyper):
        tree = cls(**hyper)
        for k, dtype in (("feature", np.int64), ("threshold", float), ("left", np.int64),
                         ("right", np.int64), ("value", float), ("n_samples", np.int64)):
            setattr(tree, k + "_", np.array(d[k], dtype=dtype))
        return tree


@dataclass
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_fraction: float = 1.0 / 3.0
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if not 0.0 < self.features_fraction <= 1.0:
            raise ValueError("features_fraction must lie in (0, 1]")


@dataclass
class RandomForest:
    trees: list[RegressionTree]
    seeds: list[int]
    params: ForestParams = field(default_factory=ForestParams)

    def tree_predictions(self, X):
        return np.vstack([t.predict(X) for t in self.trees])

    def predict(self, X):
        return self.tree_predictions(X).mean(axis=0)


def fit_random_forest(X, y, params=None, rng=None) -> RandomForest:
    """Each tree gets its own seed spawned from ``rng``, so trees can be fit in any order."""
    params = params or ForestParams()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.shape[0] == 0:
        raise DataError("cannot fit a forest on an empty dataset")
    n, p = X.shape
    k = math.ceil(params.features_fraction * p)
    children = np.random.SeedSequence(_as_seed(rng)).spawn(params.n_trees)
    trees, seeds = [], []
    for child in children:
        tree_rng = np.random.default_rng(child)
        idx = tree_rng.integers(n, size=n) if params.bootstrap else np.arange(n)
        tree = RegressionTree(params.max_depth, params.min_samples_leaf, k)
        trees.append(tree.fit(X[idx], y[idx], tree_rng))
        seeds.append(int(child.generate_state(1)[0]))
    return RandomForest(trees, seeds, params)


def predict_forest(forest: RandomForest, x) -> float:
    return float(forest.predict(np.asarray(x, dtype=float)[None, :])[0])
