"""Symmetric and shifted squared error, and label shift."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cop import Domain

SQUARED = "SquaredError"
SHIFTED = "ShiftedSquaredError"

OVERESTIMATE = "Overestimate"
UNDERESTIMATE = "Underestimate"


@dataclass(frozen=True)
class LossSpec:
    """``r**2`` or ``r**2 * (sign(r) + a)**2`` with residual ``r = prediction - target``.

    Negative ``a`` makes underestimates (r < 0) costlier; ``a = -1`` removes the
    penalty on overestimates entirely.
    """

    kind: str = SQUARED
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in (SQUARED, SHIFTED):
            raise ValueError(f"unknown loss kind {self.kind!r}")
        if self.kind == SHIFTED and not -2.0 < self.a < 2.0:
            raise ValueError(f"shift parameter a={self.a} outside (-2, 2)")

    @property
    def symmetric(self) -> bool:
        return self.kind == SQUARED or self.a == 0.0

    def mirrored(self) -> "LossSpec":
        return LossSpec(self.kind, -self.a) if self.kind == SHIFTED else self

    def weights(self, r: np.ndarray) -> np.ndarray:
        """Per-residual factor ``(sign(r) + a)**2`` (1 for squared error)."""
        r = np.asarray(r, dtype=float)
        if self.kind == SQUARED:
            return np.ones_like(r)
        return (np.sign(r) + self.a) ** 2

    def value(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return r * r * self.weights(r)

    def gradient(self, r) -> np.ndarray:
        """d loss / d prediction; 0 at r = 0."""
        r = np.asarray(r, dtype=float)
        return 2.0 * r * self.weights(r)

    def to_json(self) -> dict:
        return {"kind": self.kind, "a": self.a}

    @classmethod
    def from_json(cls, doc) -> "LossSpec":
        return cls(doc["kind"], float(doc["a"]))


def loss(r: float, spec: LossSpec) -> float:
    return float(spec.value(r))


def loss_gradient(r: float, spec: LossSpec) -> float:
    return float(spec.gradient(r))


@dataclass(frozen=True)
class LabelShift:
    lam: float = 0.0
    direction: str = OVERESTIMATE

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"label shift lambda={self.lam} outside [0, 1]")
        if self.direction not in (OVERESTIMATE, UNDERESTIMATE):
            raise ValueError(f"unknown shift direction {self.direction!r}")

    def mirrored(self) -> "LabelShift":
        other = UNDERESTIMATE if self.direction == OVERESTIMATE else OVERESTIMATE
        return LabelShift(self.lam, other)

    def apply(self, y: np.ndarray, lb: np.ndarray, ub: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.direction == OVERESTIMATE:
            return y + self.lam * (np.asarray(ub, dtype=float) - y)
        return y - self.lam * (y - np.asarray(lb, dtype=float))

    def to_json(self) -> dict:
        return {"lambda": self.lam, "direction": self.direction}

    @classmethod
    def from_json(cls, doc) -> "LabelShift":
        return cls(float(doc["lambda"]), doc["direction"])


def shift_label(y: int, dom: Domain, shift: LabelShift) -> float:
    if y not in dom:
        raise ValueError(f"label {y} outside objective domain {dom.lb}..{dom.ub}")
    return float(shift.apply(y, dom.lb, dom.ub))
