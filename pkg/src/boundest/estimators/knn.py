from __future__ import annotations

import numpy as np

UNIFORM = "uniform"
DISTANCE = "distance"


class KNNModel:
    """k nearest neighbours by linear scan over the stored training matrix."""

    def __init__(self, k: int = 5, weighting: str = UNIFORM, x=None, y=None):
        if k < 1:
            raise ValueError("k must be >= 1")
        if weighting not in (UNIFORM, DISTANCE):
            raise ValueError(f"unknown weighting {weighting!r}")
        self.k = k
        self.weighting = weighting
        self.x = None if x is None else np.asarray(x, dtype=float)
        self.y = None if y is None else np.asarray(y, dtype=float)

    def fit(self, x: np.ndarray, y: np.ndarray) -> "KNNModel":
        self.x = np.array(x, dtype=float)
        self.y = np.array(y, dtype=float)
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        k = min(self.k, len(self.x))
        out = np.empty(len(x))
        for row, q in enumerate(np.atleast_2d(x)):
            dist = np.sqrt(((self.x - q) ** 2).sum(axis=1))
            near = np.argsort(dist, kind="stable")[:k]
            d, t = dist[near], self.y[near]
            if self.weighting == UNIFORM:
                out[row] = t.mean()
            elif (d == 0).any():
                out[row] = t[d == 0].mean()
            else:
                w = 1.0 / d
                out[row] = (w * t).sum() / w.sum()
        return out

    def to_json(self) -> dict:
        return {"k": self.k, "weighting": self.weighting,
                "x": self.x.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_json(cls, doc) -> "KNNModel":
        return cls(doc["k"], doc["weighting"], doc["x"], doc["y"])
