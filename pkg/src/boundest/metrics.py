"""Estimation-quality and solver-performance metrics.

Undefined metric cells are ``None``; aggregation uses medians and median
absolute deviations over the defined cells only. All percentages are
oriented so that positive means the bounded configuration did better.
"""
from __future__ import annotations

import json
import math
import statistics
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from .cop import Domain
from .estimators import (Estimation, Estimator, LabelShift, LossSpec,
                         is_admissible, train_arrays)
from .features import STANDARDIZE, fit_recipe_maps
from .pipeline import Dataset, repeated_kfold
from .solver import OPTIMAL, SolveOutcome

TIME = "time"
NODES = "nodes"

LAMBDA_GRID = tuple(round(0.1 * i, 1) for i in range(11))


def gap_metric(est: Estimation, z_opt: int, dom: Domain) -> float | None:
    """Relative closeness of the estimated cutting bound to the optimum; ``None`` if ``ub == z_opt``."""
    if dom.ub == z_opt:
        return None
    return (1 - abs(est.hi - z_opt) / abs(dom.ub - z_opt)) * 100


def size_metric(est: Estimation, dom: Domain) -> float:
    if dom.ub <= dom.lb:
        raise ValueError(f"degenerate objective domain {dom.lb}..{dom.ub}")
    return (1 - abs(est.hi - est.lo) / abs(dom.ub - dom.lb)) * 100


def fixed_boundary(z_opt: int, z_first: int) -> int:
    if z_first < z_opt:
        raise ValueError(f"first solution {z_first} better than optimum {z_opt}")
    return z_opt + (z_first - z_opt) // 2


def median(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return statistics.median(vals) if vals else None


def mad(values: Iterable[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    if not vals:
        return None
    med = statistics.median(vals)
    return statistics.median(abs(v - med) for v in vals)


# -- solver comparison ---------------------------------------------------------

@dataclass(frozen=True)
class SolverComparison:
    equivalent_solution_time: float | None
    quality_of_first: float | None
    time_to_completion: float | None


def _stamp(rec, clock: str) -> float:
    return rec.time if clock == TIME else rec.nodes


def _relative_gain(original: float, bounded: float) -> float | None:
    if original <= 0:
        return None
    return (original - bounded) / original * 100


def solver_comparison(bounded: SolveOutcome, unbounded: SolveOutcome, clock: str = TIME) -> SolverComparison:
    """Compare a bounded run against the unmodified run of the same instance.

    ``clock`` selects wall time or explored nodes as the time axis.
    """
    est = qof = ttc = None
    if bounded.first is not None and unbounded.first is not None:
        z_b = bounded.first.objective
        reached = next((r for r in unbounded.solution_log if r.objective <= z_b), None)
        if reached is not None:
            est = _relative_gain(_stamp(reached, clock), _stamp(bounded.first, clock))
        z_o = unbounded.first.objective
        if z_o != 0:
            qof = (1 - z_b / z_o) * 100
    if bounded.verdict == OPTIMAL and unbounded.verdict == OPTIMAL:
        if clock == TIME:
            ttc = _relative_gain(unbounded.wall_time, bounded.wall_time)
        else:
            ttc = _relative_gain(unbounded.nodes_explored, bounded.nodes_explored)
    return SolverComparison(est, qof, ttc)


# -- cross-validated estimation ----------------------------------------------

@dataclass(frozen=True)
class ModelConfig:
    name: str
    kind: str
    loss: LossSpec = LossSpec()
    hyperparams: Mapping[str, Any] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"name": self.name, "kind": self.kind, "loss": self.loss.to_json(),
                "hyperparams": dict(self.hyperparams)}


@dataclass(frozen=True)
class InstanceRecord:
    """Validation outcome for one instance."""

    index: int
    optimum: int
    lb: int
    ub: int
    upper_raw: float
    lower_raw: float | None

    @property
    def domain(self) -> Domain:
        return Domain(self.lb, self.ub)

    @property
    def estimation(self) -> Estimation:
        lower = self.lower_raw if self.lower_raw is not None else self.lb
        return Estimation.from_predictions(lower, self.upper_raw, self.domain)

    @property
    def cutting_admissible(self) -> bool:
        """Raw upper prediction at or above the optimum (before rounding)."""
        return self.upper_raw >= self.optimum


def fit_fold(d: Dataset, train_idx: Sequence[int], config: ModelConfig, shift: LabelShift,
             seed: int = 0, companion: bool = True, mode: str = STANDARDIZE) -> Estimator:
    """Fit recipe and estimator on the entries at ``train_idx`` only."""
    maps, y, lb, ub = d.arrays(train_idx)
    recipe = fit_recipe_maps(maps, mode)
    return train_arrays(config.kind, recipe.matrix(maps), y, lb, ub, config.loss, shift,
                        config.hyperparams, recipe, seed, companion)


def cross_validate(d: Dataset, config: ModelConfig, shift: LabelShift, k: int = 10,
                   repetitions: int = 1, seed: int = 0, companion: bool = True,
                   mode: str = STANDARDIZE):
    """Repeated k-fold; recipes and models see only the training folds."""
    def evaluate(train_idx, val_idx):
        est = fit_fold(d, train_idx, config, shift, seed, companion, mode)
        vmaps, vy, vlb, vub = d.arrays(val_idx)
        lower, upper = est.predict_bounds(est.recipe.matrix(vmaps))
        return [InstanceRecord(i, int(vy[j]), int(vlb[j]), int(vub[j]), float(upper[j]),
                               None if lower is None else float(lower[j]))
                for j, i in enumerate(val_idx)]

    return repeated_kfold(d, k, repetitions, evaluate, seed)


@dataclass
class EstimationMetrics:
    admissible_ratio: float
    gap: float | None
    gap_mad: float | None
    size: float | None
    size_mad: float | None
    records: list[InstanceRecord] = field(default_factory=list, repr=False)


def estimation_metrics(records: Sequence[InstanceRecord]) -> EstimationMetrics:
    """Admissibility (both bounds) plus median/MAD of Gap and Size."""
    gaps, sizes, hits = [], [], 0
    for r in records:
        est = r.estimation
        hits += is_admissible(est, r.optimum)
        gaps.append(gap_metric(est, r.optimum, r.domain))
        sizes.append(size_metric(est, r.domain) if r.ub > r.lb else None)
    return EstimationMetrics(100.0 * hits / len(records), median(gaps), mad(gaps),
                             median(sizes), mad(sizes), list(records))


# -- lambda sweep --------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    model: str
    lam: float
    admissible: float
    admissible_mad: float
    admissible_rounded: float
    gap: float | None
    folds: int


def lambda_sweep(d: Dataset, configs: Sequence[ModelConfig], lambdas: Sequence[float] = LAMBDA_GRID,
                 k: int = 10, repetitions: int = 1, seed: int = 0) -> list[SweepRow]:
    """Median per-fold cutting-bound admissibility and Gap for every (model, lambda).

    Admissibility here concerns the upper bound only and is measured on the
    raw prediction; ``admissible_rounded`` uses the rounded, clamped bound.
    """
    rows = []
    for config in configs:
        for lam in lambdas:
            folds = cross_validate(d, config, LabelShift(lam), k, repetitions, seed, companion=False)
            adm, adm_rounded, gaps = [], [], []
            for fold in folds:
                recs = fold.result
                adm.append(100.0 * sum(r.cutting_admissible for r in recs) / len(recs))
                adm_rounded.append(100.0 * sum(r.estimation.hi >= r.optimum for r in recs) / len(recs))
                gaps.append(median(gap_metric(r.estimation, r.optimum, r.domain) for r in recs))
            rows.append(SweepRow(config.name, lam, median(adm), mad(adm), median(adm_rounded),
                                 median(gaps), len(folds)))
    return rows


# -- report emission -----------------------------------------------------------

def _clean(value):
    if isinstance(value, float):
        return None if math.isnan(value) else round(value, 6)
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def dumps_report(doc: Mapping) -> str:
    return json.dumps(_clean(dict(doc)), sort_keys=True, indent=2) + "\n"


def fmt(value, width: int = 8, digits: int = 1) -> str:
    if value is None:
        return "--".rjust(width)
    if isinstance(value, str):
        return value.rjust(width)
    return f"{value:{width}.{digits}f}"


def format_table(header: Sequence[str], rows: Sequence[Sequence[Any]], first_width: int = 16) -> str:
    lines = [header[0].ljust(first_width) + "".join(h.rjust(10) for h in header[1:])]
    for row in rows:
        lines.append(str(row[0]).ljust(first_width) + "".join(fmt(v, 10) for v in row[1:]))
    return "\n".join(lines) + "\n"


def sweep_table(rows: Sequence[SweepRow]) -> str:
    return format_table(["model/lambda", "adm%", "adm_mad", "adm_rnd%", "gap%"],
                        [(f"{r.model} {r.lam:.1f}", r.admissible, r.admissible_mad,
                          r.admissible_rounded, r.gap) for r in rows], 20)


def sweep_rows_json(rows: Sequence[SweepRow]) -> list[dict]:
    return [asdict(r) for r in rows]
