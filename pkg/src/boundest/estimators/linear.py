from __future__ import annotations

import numpy as np

RIDGE_PENALTY = 1e-8


class LinearModel:
    """Ordinary least squares with intercept; ridge fallback when singular."""

    def __init__(self, weights=None, intercept: float = 0.0):
        self.weights = None if weights is None else np.asarray(weights, dtype=float)
        self.intercept = float(intercept)
        self.ridge_used = False

    def fit(self, x: np.ndarray, y: np.ndarray) -> "LinearModel":
        a = np.hstack([x, np.ones((len(x), 1))])
        gram = a.T @ a
        rhs = a.T @ y
        if np.linalg.matrix_rank(a) < a.shape[1]:
            self.ridge_used = True
            penalty = RIDGE_PENALTY * np.eye(a.shape[1])
            penalty[-1, -1] = 0.0
            gram = gram + penalty
        coef = np.linalg.solve(gram, rhs)
        self.weights, self.intercept = coef[:-1], float(coef[-1])
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        return x @ self.weights + self.intercept

    def to_json(self) -> dict:
        return {"weights": [float(w) for w in self.weights], "intercept": self.intercept}

    @classmethod
    def from_json(cls, doc) -> "LinearModel":
        return cls(doc["weights"], doc["intercept"])
