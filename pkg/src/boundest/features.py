"""Instance features and the persisted preprocessing recipe.

Every integer array in ``params`` contributes nine descriptive statistics;
scalars are copied; a fixed set of static model features is appended.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .cop import DISJUNCTION, LINEAR_EQ, LINEAR_LE, MAX_OF, CopInstance

STANDARDIZE = "Standardize"
MINMAX = "MinMax"

STAT_NAMES = ("count", "min", "max", "mean", "median", "std", "iqr", "skew", "kurtosis")


class FeatureSchemaError(ValueError):
    pass


class RecipeError(ValueError):
    pass


def quantile(sorted_values: np.ndarray, q: float) -> float:
    """Linear interpolation between closest ranks, position ``q * (n - 1)``."""
    n = len(sorted_values)
    pos = q * (n - 1)
    low = int(np.floor(pos))
    high = min(low + 1, n - 1)
    frac = pos - low
    return float(sorted_values[low] + frac * (sorted_values[high] - sorted_values[low]))


def describe(values: Sequence[float]) -> dict[str, float]:
    """Nine summary statistics of a non-empty array.

    Standard deviation is the population one. Skewness and (excess) kurtosis
    are the biased moment ratios and are 0 for constant arrays.
    """
    x = np.sort(np.asarray(values, dtype=float))
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev ** 2))
    if m2 > 0:
        skew = float(np.mean(dev ** 3)) / m2 ** 1.5
        kurt = float(np.mean(dev ** 4)) / m2 ** 2 - 3.0
    else:
        skew = kurt = 0.0
    return {
        "count": float(len(x)),
        "min": float(x[0]),
        "max": float(x[-1]),
        "mean": mean,
        "median": quantile(x, 0.5),
        "std": m2 ** 0.5,
        "iqr": quantile(x, 0.75) - quantile(x, 0.25),
        "skew": skew,
        "kurtosis": kurt,
    }


def _ratio(a: float, b: float) -> float:
    return a / b if b else 0.0


def raw_features(m: CopInstance) -> dict[str, float]:
    feats: dict[str, float] = {}
    for key in sorted(m.params):
        value = m.params[key]
        if isinstance(value, (list, tuple)):
            for stat, v in describe(value).items():
                feats[f"param.{key}.{stat}"] = v
        else:
            feats[f"param.{key}"] = float(value)

    nv, nc = len(m.variables), len(m.constraints)
    kinds = [c.kind for c in m.constraints]
    sizes = [v.domain.size for v in m.variables]
    z_dom = m.objective_domain
    degree = sum(1 for c in m.constraints if m.objective in c.variables())
    feats.update({
        "model.n_vars": float(nv),
        "model.n_constraints": float(nc),
        "model.n_linear_le": float(kinds.count(LINEAR_LE)),
        "model.n_linear_eq": float(kinds.count(LINEAR_EQ)),
        "model.n_max_of": float(kinds.count(MAX_OF)),
        "model.n_disjunction": float(kinds.count(DISJUNCTION)),
        "model.vars_per_constraint": _ratio(nv, nc),
        "model.constraints_per_var": _ratio(nc, nv),
        "model.domain_size_sum": float(sum(sizes)),
        "model.domain_size_min": float(min(sizes)),
        "model.domain_size_max": float(max(sizes)),
        "model.domain_size_mean": float(np.mean(sizes)),
        "objective.domain_size": float(z_dom.size),
        "objective.degree": float(degree),
        "objective.domain_per_degree": _ratio(z_dom.size, degree),
    })
    return feats


def schema_id(names: Sequence[str]) -> str:
    return hashlib.sha256("\n".join(names).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FeatureVector:
    values: tuple[float, ...]
    schema_id: str

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class PreprocessRecipe:
    """Kept feature names plus the training-set scaling parameters.

    Under ``Standardize`` ``center``/``scale`` are mean and standard deviation;
    under ``MinMax`` they are minimum and range.
    """

    kept_features: tuple[str, ...]
    center: tuple[float, ...]
    scale: tuple[float, ...]
    mode: str = STANDARDIZE

    @property
    def schema_id(self) -> str:
        return schema_id(self.kept_features)

    # stats under their usual names
    @property
    def means(self):
        return self.center if self.mode == STANDARDIZE else None

    @property
    def stds(self):
        return self.scale if self.mode == STANDARDIZE else None

    def matrix(self, maps: Sequence[Mapping[str, float]]) -> np.ndarray:
        """Scaled feature matrix for a batch of raw feature maps."""
        rows = []
        for feats in maps:
            try:
                rows.append([feats[name] for name in self.kept_features])
            except KeyError as exc:
                raise FeatureSchemaError(f"instance lacks feature {exc.args[0]!r}") from None
        x = np.asarray(rows, dtype=float).reshape(len(rows), len(self.kept_features))
        return (x - np.asarray(self.center)) / np.asarray(self.scale)

    def to_json(self) -> dict:
        return {"kept_features": list(self.kept_features), "mode": self.mode,
                "center": list(self.center), "scale": list(self.scale)}

    @classmethod
    def from_json(cls, doc: Mapping) -> "PreprocessRecipe":
        return cls(tuple(doc["kept_features"]), tuple(float(v) for v in doc["center"]),
                   tuple(float(v) for v in doc["scale"]), doc["mode"])

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2) + "\n"


def fit_recipe_maps(maps: Sequence[Mapping[str, float]], mode: str = STANDARDIZE,
                    variance_threshold: float = 0.0) -> PreprocessRecipe:
    if len(maps) < 2:
        raise RecipeError("need at least two instances to fit a recipe")
    if mode not in (STANDARDIZE, MINMAX):
        raise RecipeError(f"unknown mode {mode!r}")
    names = sorted(set.intersection(*(set(f) for f in maps)))
    x = np.asarray([[f[n] for n in names] for f in maps], dtype=float)
    lo, hi = x.min(axis=0), x.max(axis=0)
    var = x.var(axis=0)
    keep = (hi > lo) & (var > variance_threshold)
    if not keep.any():
        raise RecipeError("every feature has zero variance over the training instances")
    x = x[:, keep]
    kept = tuple(n for n, k in zip(names, keep) if k)
    if mode == STANDARDIZE:
        center, scale = x.mean(axis=0), x.std(axis=0)
    else:
        center, scale = x.min(axis=0), x.max(axis=0) - x.min(axis=0)
    return PreprocessRecipe(kept, tuple(map(float, center)), tuple(map(float, scale)), mode)


def fit_recipe(instances: Sequence[CopInstance], mode: str = STANDARDIZE,
               variance_threshold: float = 0.0) -> PreprocessRecipe:
    return fit_recipe_maps([raw_features(m) for m in instances], mode, variance_threshold)


def apply_recipe_map(feats: Mapping[str, float], r: PreprocessRecipe) -> FeatureVector:
    return FeatureVector(tuple(float(v) for v in r.matrix([feats])[0]), r.schema_id)


def apply_recipe(m: CopInstance, r: PreprocessRecipe) -> FeatureVector:
    return apply_recipe_map(raw_features(m), r)
