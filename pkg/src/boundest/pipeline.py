"""Solving with estimated objective boundaries, plus corpus and dataset handling."""
from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .cop import CopInstance, load_instance, post_boundary_constraint
from .estimators import Estimation, Estimator, estimate
from .features import raw_features
from .solver import (FEASIBLE, OPTIMAL, UNKNOWN, UNSATISFIABLE, SolutionRecord,
                     SolveOutcome, SolverConfig, solve)

log = logging.getLogger(__name__)

TRAIN, DEV, TEST = "train", "dev", "test"
SPLITS = (TRAIN, DEV, TEST)
DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)

BOTH, UPPER, NONE = "both", "upper", "none"


# -- solving with boundaries -------------------------------------------------

@dataclass
class BionResult:
    outcome: SolveOutcome
    estimation: Estimation | None
    fallback_used: bool = False
    fallback_reason: str | None = None
    first_outcome: SolveOutcome | None = None
    features: dict[str, float] = field(default_factory=dict)
    lower_checked: bool = False
    lower_violated: bool = False

    @property
    def training_record(self) -> tuple[dict[str, float], int] | None:
        """Feature map and optimum to feed back into the corpus, if proven optimal."""
        if self.outcome.verdict != OPTIMAL:
            return None
        return self.features, self.outcome.best_objective


def _chain(first: SolveOutcome, second: SolveOutcome) -> SolveOutcome:
    """``second`` as if it ran right after ``first`` (times, nodes and logs joined)."""
    log_ = list(first.solution_log) + [
        SolutionRecord(r.time + first.wall_time, r.nodes + first.nodes_explored, r.objective)
        for r in second.solution_log]
    return replace(second, nodes_explored=first.nodes_explored + second.nodes_explored,
                   wall_time=first.wall_time + second.wall_time, solution_log=log_)


def _check_below(m: CopInstance, lo: int, result: BionResult, cfg: SolverConfig) -> None:
    """Search ``lb..lo-1``; a solution there means the lower bound cut off the optimum."""
    done = result.outcome
    below = solve(post_boundary_constraint(m, m.objective_domain.lb, lo - 1), cfg)
    joined = _chain(done, below)
    result.lower_checked = True
    if below.best_objective is not None:
        result.lower_violated = True
        result.outcome = joined
    elif below.verdict == UNSATISFIABLE:
        result.outcome = replace(joined, verdict=done.verdict, best_objective=done.best_objective,
                                 assignment=done.assignment)
    else:
        # limit hit: nothing below lo was found, but nothing was proven either
        verdict = FEASIBLE if done.best_objective is not None else UNKNOWN
        result.outcome = replace(joined, verdict=verdict, best_objective=done.best_objective,
                                 assignment=done.assignment)


def solve_bounded(m: CopInstance, est: Estimation, cfg: SolverConfig, bounds: str = BOTH,
                  complement: str = "upper", verify_lower: bool = True) -> BionResult:
    """Solve ``m`` inside ``est``; on unsatisfiability re-solve outside it.

    With ``verify_lower`` a completed run under a lower bound above the
    domain minimum is followed by a search below that bound, so an
    overestimated lower bound cannot hide the optimum.
    """
    if bounds not in (BOTH, UPPER, NONE):
        raise ValueError(f"unknown bounds mode {bounds!r}")
    if bounds == NONE:
        return BionResult(solve(m, cfg), est)
    lo = est.lo if bounds == BOTH else m.objective_domain.lb
    first = solve(post_boundary_constraint(m, lo, est.hi), cfg)
    if first.verdict != UNSATISFIABLE:
        result = BionResult(first, est, first_outcome=first)
    else:
        second = solve(post_boundary_constraint(m, lo, est.hi, negated=True, complement=complement), cfg)
        reason = "unsatisfiable under estimated bounds"
        if second.verdict == UNSATISFIABLE:
            reason += "; also unsatisfiable outside them"
        result = BionResult(_chain(first, second), est, True, reason, first)
    below_searched = result.fallback_used and complement == "literal"
    if (verify_lower and lo > m.objective_domain.lb and not below_searched
            and result.outcome.completed):
        _check_below(m, lo, result, cfg)
    return result


def solve_with_bion(m: CopInstance, e: Estimator, cfg: SolverConfig = SolverConfig(),
                    bounds: str = BOTH, complement: str = "upper",
                    verify_lower: bool = True) -> BionResult:
    feats = raw_features(m)
    est = estimate(e, m)
    result = solve_bounded(m, est, cfg, bounds, complement, verify_lower)
    result.features = feats
    return result


# -- datasets ----------------------------------------------------------------

@dataclass(frozen=True)
class CorpusEntry:
    instance: CopInstance
    features: Mapping[str, float]
    optimum: int
    source: str | None = None


@dataclass
class Dataset:
    entries: list[CorpusEntry]
    split: list[str] = field(default_factory=list)
    seed: int = 0
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS

    def __len__(self) -> int:
        return len(self.entries)

    def subset(self, which: str) -> list[CorpusEntry]:
        return [e for e, s in zip(self.entries, self.split) if s == which]

    def arrays(self, indices: Sequence[int] | None = None):
        """Feature maps, optima and objective-domain bounds for ``indices``."""
        rows = [self.entries[i] for i in (range(len(self)) if indices is None else indices)]
        maps = [e.features for e in rows]
        y = np.asarray([e.optimum for e in rows], dtype=float)
        lb = np.asarray([e.instance.objective_domain.lb for e in rows], dtype=float)
        ub = np.asarray([e.instance.objective_domain.ub for e in rows], dtype=float)
        return maps, y, lb, ub


def split_sizes(n: int, fractions: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment; ties go to the earlier split."""
    if any(f < 0 for f in fractions):
        raise ValueError("split fractions must be non-negative")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    quotas = [f * n for f in fractions]
    sizes = [int(np.floor(q)) for q in quotas]
    order = sorted(range(len(quotas)), key=lambda i: (-(quotas[i] - sizes[i]), i))
    for i in order[: n - sum(sizes)]:
        sizes[i] += 1
    return sizes


def split_dataset(d: Dataset, fractions: Sequence[float] = DEFAULT_FRACTIONS, seed: int = 0) -> Dataset:
    sizes = split_sizes(len(d), fractions)
    perm = np.random.default_rng(seed).permutation(len(d))
    labels = [""] * len(d)
    start = 0
    for name, size in zip(SPLITS, sizes):
        for i in perm[start:start + size]:
            labels[i] = name
        start += size
    return Dataset(list(d.entries), labels, seed, tuple(fractions))


@dataclass(frozen=True)
class FoldRecord:
    repetition: int
    fold: int
    train: tuple[int, ...]
    validation: tuple[int, ...]
    result: Any


def kfold_indices(n: int, k: int, repetitions: int, seed: int = 0):
    if k < 2:
        raise ValueError("k must be >= 2")
    if n < k:
        raise ValueError(f"{n} entries cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    for rep in range(repetitions):
        folds = np.array_split(rng.permutation(n), k)
        for f, val in enumerate(folds):
            train = np.sort(np.concatenate([folds[j] for j in range(k) if j != f]))
            yield rep, f, tuple(int(i) for i in train), tuple(int(i) for i in np.sort(val))


def repeated_kfold(d: Dataset, k: int, repetitions: int,
                   evaluate: Callable[[Sequence[int], Sequence[int]], Any],
                   seed: int = 0) -> list[FoldRecord]:
    """Run ``evaluate(train_indices, validation_indices)`` on every fold of every repetition."""
    return [FoldRecord(rep, f, tr, va, evaluate(tr, va))
            for rep, f, tr, va in kfold_indices(len(d), k, repetitions, seed)]


# -- corpus ------------------------------------------------------------------

def _solve_one(args):
    m, cfg = args
    return solve(m, cfg)


def build_corpus(instances: Sequence[CopInstance], cfg: SolverConfig = SolverConfig(),
                 jobs: int = 1, sources: Sequence[str] | None = None, seed: int = 0) -> Dataset:
    """Solve every instance without bounds and keep the proven optima."""
    tasks = [(m, cfg) for m in instances]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_solve_one, tasks))
    else:
        outcomes = [_solve_one(t) for t in tasks]
    entries = []
    for i, (m, out) in enumerate(zip(instances, outcomes)):
        if out.verdict != OPTIMAL:
            log.warning("excluding %s from corpus: verdict %s", m.name, out.verdict)
            continue
        entries.append(CorpusEntry(m, raw_features(m), out.best_objective,
                                   sources[i] if sources else None))
    log.info("corpus: kept %d of %d instances", len(entries), len(instances))
    return Dataset(entries, [TRAIN] * len(entries), seed)


# -- manifest files ----------------------------------------------------------

MANIFEST_FORMAT = "boundest-corpus"


def save_dataset(d: Dataset, path) -> None:
    """Write a manifest; instance paths are stored relative to the manifest."""
    path = Path(path)
    base = path.parent.resolve()
    rows = []
    for e, s in zip(d.entries, d.split):
        if e.source is None:
            raise ValueError(f"entry {e.instance.name} has no instance file")
        rows.append({"instance": os.path.relpath(Path(e.source).resolve(), base),
                     "name": e.instance.name, "optimum": e.optimum, "split": s,
                     "features": dict(sorted(e.features.items()))})
    doc = {"format": MANIFEST_FORMAT, "version": 1, "seed": d.seed,
           "fractions": list(d.fractions), "entries": rows}
    path.write_text(json.dumps(doc, sort_keys=True, indent=1) + "\n", encoding="utf-8")


def load_dataset(path) -> Dataset:
    path = Path(path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if doc.get("format") != MANIFEST_FORMAT:
        raise ValueError(f"{path} is not a corpus manifest")
    entries, split = [], []
    for row in doc["entries"]:
        src = path.parent / row["instance"]
        entries.append(CorpusEntry(load_instance(src), row["features"], row["optimum"], str(src)))
        split.append(row["split"])
    return Dataset(entries, split, doc["seed"], tuple(doc["fractions"]))
