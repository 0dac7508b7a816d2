"""Trained objective-boundary estimators."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from ..cop import CopInstance, Domain
from ..features import (FeatureSchemaError, FeatureVector, PreprocessRecipe,
                        raw_features)
from .gtb import GTBModel
from .knn import KNNModel
from .linear import LinearModel
from .losses import OVERESTIMATE, LabelShift, LossSpec
from .mlp import MLPModel

LR, KNN, GTB, MLP = "LR", "KNN", "GTB", "MLP"
KINDS = (LR, KNN, GTB, MLP)
SERIAL_VERSION = 1

DEFAULT_HYPERPARAMS: dict[str, dict[str, Any]] = {
    LR: {},
    KNN: {"k": 5, "weighting": "uniform"},
    GTB: {"rounds": 100, "max_depth": 4, "learning_rate": 0.1, "subsample": 1.0, "min_samples_leaf": 1},
    MLP: {"hidden": [32, 32], "epochs": 200, "batch_size": 16, "learning_rate": 1e-3},
}

_MODEL_CLASSES = {LR: LinearModel, KNN: KNNModel, GTB: GTBModel, MLP: MLPModel}


class UnsupportedCombination(ValueError):
    pass


@dataclass(frozen=True)
class Estimation:
    lo: int
    hi: int

    @classmethod
    def from_predictions(cls, lo_raw: float, hi_raw: float, dom: Domain) -> "Estimation":
        """Round outward (floor lower, ceil upper), clamp into ``dom``, order."""
        lo = min(max(math.floor(lo_raw), dom.lb), dom.ub)
        hi = min(max(math.ceil(hi_raw), dom.lb), dom.ub)
        if lo > hi:
            lo, hi = hi, lo
        return cls(int(lo), int(hi))


def is_admissible(est: Estimation, z_opt: int) -> bool:
    return est.lo <= z_opt <= est.hi


def _make_model(kind: str, hp: Mapping[str, Any], seed: int):
    if kind == LR:
        return LinearModel()
    if kind == KNN:
        return KNNModel(hp["k"], hp["weighting"])
    if kind == GTB:
        return GTBModel(hp["rounds"], hp["max_depth"], hp["learning_rate"], hp["subsample"],
                        hp["min_samples_leaf"], seed)
    return MLPModel(hp["hidden"], hp["epochs"], hp["batch_size"], hp["learning_rate"], seed)


def _fit(model, x, y, loss: LossSpec):
    if isinstance(model, (LinearModel, KNNModel)):
        return model.fit(x, y)
    return model.fit(x, y, loss)


@dataclass
class Estimator:
    """A cutting-bound model plus an optional mirrored companion.

    ``primary`` is trained with ``loss``/``shift`` as given; the companion
    uses the mirrored shift direction and negated ``a``. Whichever was
    trained towards overestimation supplies the upper bound.
    """

    kind: str
    loss: LossSpec
    shift: LabelShift
    recipe: PreprocessRecipe | None
    hyperparams: dict[str, Any]
    seed: int
    primary: Any
    companion: Any = None
    meta: dict[str, Any] = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.recipe.kept_features) if self.recipe else -1

    def predict_bounds(self, x: np.ndarray) -> tuple[np.ndarray | None, np.ndarray]:
        """Raw (lower, upper) predictions; lower is ``None`` without companion."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        main = self.primary.predict(x)
        other = self.companion.predict(x) if self.companion is not None else None
        if self.shift.direction == OVERESTIMATE:
            return other, main
        return main, other

    def vectorize(self, m: CopInstance) -> np.ndarray:
        if self.recipe is None:
            raise FeatureSchemaError("estimator has no preprocessing recipe")
        return self.recipe.matrix([raw_features(m)])

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "format": "boundest-estimator",
            "version": SERIAL_VERSION,
            "kind": self.kind,
            "loss": self.loss.to_json(),
            "shift": self.shift.to_json(),
            "recipe": self.recipe.to_json() if self.recipe else None,
            "hyperparams": self.hyperparams,
            "seed": self.seed,
            "primary": self.primary.to_json(),
            "companion": self.companion.to_json() if self.companion is not None else None,
            "meta": self.meta,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, doc: Mapping) -> "Estimator":
        if doc.get("format") != "boundest-estimator":
            raise ValueError("not a serialized estimator")
        if doc.get("version") != SERIAL_VERSION:
            raise ValueError(f"unsupported estimator version {doc.get('version')!r}")
        kind = doc["kind"]
        model_cls = _MODEL_CLASSES[kind]
        recipe = PreprocessRecipe.from_json(doc["recipe"]) if doc["recipe"] else None
        est = cls(kind, LossSpec.from_json(doc["loss"]), LabelShift.from_json(doc["shift"]), recipe,
                  doc["hyperparams"], doc["seed"], model_cls.from_json(doc["primary"]),
                  model_cls.from_json(doc["companion"]) if doc["companion"] else None,
                  doc.get("meta", {}))
        est.validate()
        return est

    @classmethod
    def loads(cls, text: str) -> "Estimator":
        return cls.from_json(json.loads(text))

    def validate(self) -> None:
        for model in (self.primary, self.companion):
            if isinstance(model, GTBModel) and self.recipe is not None:
                for tree in model.trees:
                    if any(f >= self.n_features for f in tree.feature):
                        raise ValueError("tree references a feature index outside the recipe")


def train_arrays(kind: str, x: np.ndarray, y: np.ndarray, lb: np.ndarray, ub: np.ndarray,
                 loss: LossSpec = LossSpec(), shift: LabelShift = LabelShift(),
                 hyperparams: Mapping[str, Any] | None = None,
                 recipe: PreprocessRecipe | None = None, seed: int = 0,
                 companion: bool = True) -> Estimator:
    if kind not in KINDS:
        raise ValueError(f"unknown estimator kind {kind!r}")
    if kind in (LR, KNN) and not loss.symmetric:
        raise UnsupportedCombination(f"{kind} cannot be trained with an asymmetric loss")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not len(y):
        raise ValueError("empty training set")
    hp = {**DEFAULT_HYPERPARAMS[kind], **(hyperparams or {})}
    primary = _fit(_make_model(kind, hp, seed), x, shift.apply(y, lb, ub), loss)
    other = None
    if companion:
        other = _fit(_make_model(kind, hp, seed), x, shift.mirrored().apply(y, lb, ub), loss.mirrored())
    return Estimator(kind, loss, shift, recipe, hp, seed, primary, other)


def train(kind: str, dataset: Sequence[tuple[FeatureVector, int, Domain]],
          loss: LossSpec = LossSpec(), shift: LabelShift = LabelShift(),
          hyperparams: Mapping[str, Any] | None = None, recipe: PreprocessRecipe | None = None,
          seed: int = 0, companion: bool = True) -> Estimator:
    if not dataset:
        raise ValueError("empty training set")
    schemas = {fv.schema_id for fv, _, _ in dataset}
    if len(schemas) != 1:
        raise FeatureSchemaError("training vectors do not share one schema")
    if recipe is not None and schemas != {recipe.schema_id}:
        raise FeatureSchemaError("training vectors were not produced by the given recipe")
    x = np.asarray([fv.values for fv, _, _ in dataset], dtype=float)
    y = np.asarray([t for _, t, _ in dataset], dtype=float)
    lb = np.asarray([d.lb for _, _, d in dataset], dtype=float)
    ub = np.asarray([d.ub for _, _, d in dataset], dtype=float)
    return train_arrays(kind, x, y, lb, ub, loss, shift, hyperparams, recipe, seed, companion)


def estimate(e: Estimator, m: CopInstance) -> Estimation:
    lower, upper = e.predict_bounds(e.vectorize(m))
    dom = m.objective_domain
    lo_raw = float(lower[0]) if lower is not None else dom.lb
    hi_raw = float(upper[0]) if upper is not None else dom.ub
    return Estimation.from_predictions(lo_raw, hi_raw, dom)


def save_estimator(e: Estimator, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(e.dumps())


def load_estimator(path) -> Estimator:
    with open(path, encoding="utf-8") as fh:
        return Estimator.loads(fh.read())
