"""First-order gradient tree boosting with exact greedy regression trees."""
from __future__ import annotations

import numpy as np

from .losses import LossSpec


class RegressionTree:
    """Array-backed binary tree; a node is a leaf when ``feature[node] < 0``.

    Samples go left when ``x[feature] <= threshold``.
    """

    def __init__(self, feature=(), threshold=(), left=(), right=(), value=()):
        self.feature = list(feature)
        self.threshold = list(threshold)
        self.left = list(left)
        self.right = list(right)
        self.value = list(value)

    def _new_node(self, value: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        return len(self.value) - 1

    @staticmethod
    def best_split(x: np.ndarray, t: np.ndarray, min_leaf: int):
        """Exhaustive search for the split maximizing squared-error reduction.

        Returns ``(gain, feature, threshold)`` or ``None``.
        """
        n = len(t)
        if n < 2 * min_leaf:
            return None
        order = np.argsort(x, axis=0, kind="stable")
        xs = np.take_along_axis(x, order, axis=0)
        cs = np.cumsum(t[order], axis=0)[:-1]
        total = t.sum()
        n_left = np.arange(1, n, dtype=float)[:, None]
        n_right = n - n_left
        gain = cs ** 2 / n_left + (total - cs) ** 2 / n_right - total ** 2 / n
        valid = xs[:-1] < xs[1:]
        if min_leaf > 1:
            valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
        gain = np.where(valid, gain, -np.inf)
        pos, feat = np.unravel_index(np.argmax(gain), gain.shape)
        best = gain[pos, feat]
        if not np.isfinite(best) or best <= 1e-12 * max(1.0, float(np.dot(t, t))):
            return None
        threshold = xs[pos, feat] + (xs[pos + 1, feat] - xs[pos, feat]) / 2.0
        return float(best), int(feat), float(threshold)

    def fit(self, x: np.ndarray, t: np.ndarray, max_depth: int, min_leaf: int = 1) -> "RegressionTree":
        self.feature, self.threshold, self.left, self.right, self.value = [], [], [], [], []
        root = self._new_node(t.mean())
        stack = [(root, np.arange(len(t)), 0)]
        while stack:
            node, rows, depth = stack.pop()
            if depth >= max_depth:
                continue
            split = self.best_split(x[rows], t[rows], min_leaf)
            if split is None:
                continue
            _, feat, thr = split
            go_left = x[rows, feat] <= thr
            left_rows, right_rows = rows[go_left], rows[~go_left]
            if not len(left_rows) or not len(right_rows):
                continue
            self.feature[node], self.threshold[node] = feat, thr
            self.left[node] = self._new_node(t[left_rows].mean())
            self.right[node] = self._new_node(t[right_rows].mean())
            stack.append((self.right[node], right_rows, depth + 1))
            stack.append((self.left[node], left_rows, depth + 1))
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left, right = np.asarray(self.left), np.asarray(self.right)
        node = np.zeros(len(x), dtype=int)
        active = feature[node] >= 0
        while active.any():
            idx = np.nonzero(active)[0]
            cur = node[idx]
            goes_left = x[idx, feature[cur]] <= threshold[cur]
            node[idx] = np.where(goes_left, left[cur], right[cur])
            active = feature[node] >= 0
        return np.asarray(self.value)[node]

    def to_json(self) -> dict:
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left, "right": self.right, "value": self.value}

    @classmethod
    def from_json(cls, doc) -> "RegressionTree":
        return cls(doc["feature"], doc["threshold"], doc["left"], doc["right"], doc["value"])


class GTBModel:
    def __init__(self, rounds: int = 100, max_depth: int = 4, learning_rate: float = 0.1,
                 subsample: float = 1.0, min_samples_leaf: int = 1, seed: int = 0):
        self.rounds = rounds
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.subsample = subsample
        self.min_samples_leaf = min_samples_leaf
        self.seed = seed
        self.base = 0.0
        self.trees: list[RegressionTree] = []
        self.loss_history: list[float] = []

    def fit(self, x: np.ndarray, y: np.ndarray, loss: LossSpec) -> "GTBModel":
        rng = np.random.default_rng(self.seed)
        self.base = float(np.mean(y))
        self.trees = []
        pred = np.full(len(y), self.base)
        self.loss_history = [float(loss.value(pred - y).mean())]
        for _ in range(self.rounds):
            target = -loss.gradient(pred - y)
            rows = np.arange(len(y))
            if self.subsample < 1.0:
                size = max(1, int(round(self.subsample * len(y))))
                rows = np.sort(rng.choice(len(y), size=size, replace=False))
            tree = RegressionTree().fit(x[rows], target[rows], self.max_depth, self.min_samples_leaf)
            pred = pred + self.learning_rate * tree.predict(x)
            self.trees.append(tree)
            self.loss_history.append(float(loss.value(pred - y).mean()))
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        out = np.full(len(x), self.base)
        for tree in self.trees:
            out = out + self.learning_rate * tree.predict(x)
        return out

    def to_json(self) -> dict:
        return {"rounds": self.rounds, "max_depth": self.max_depth,
                "learning_rate": self.learning_rate, "subsample": self.subsample,
                "min_samples_leaf": self.min_samples_leaf, "seed": self.seed,
                "base": self.base, "trees": [t.to_json() for t in self.trees]}

    @classmethod
    def from_json(cls, doc) -> "GTBModel":
        model = cls(doc["rounds"], doc["max_depth"], doc["learning_rate"], doc["subsample"],
                    doc["min_samples_leaf"], doc["seed"])
        model.base = doc["base"]
        model.trees = [RegressionTree.from_json(t) for t in doc["trees"]]
        return model
