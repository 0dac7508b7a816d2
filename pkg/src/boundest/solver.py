"""Finite-domain branch-and-bound minimizer with bounds propagation.

Domains are integer intervals held in two parallel lists (``lo``/``hi``).
Constraints are compiled to index form once per solve; search is an
iterative depth-first traversal that copies the interval lists per node.
"""
from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Sequence

from .cop import (DISJUNCTION, LINEAR_EQ, LINEAR_LE, MAX_OF, Constraint,
                  CopInstance, Domain)

OPTIMAL = "Optimal"
FEASIBLE = "Feasible"
UNSATISFIABLE = "Unsatisfiable"
UNKNOWN = "Unknown"  # limit hit before any solution was found

FIRST_FAIL = "FirstFail"
INPUT_ORDER = "InputOrder"
MIN_FIRST = "MinFirst"

_LE, _MAX, _OR = 0, 1, 2


@dataclass(frozen=True)
class SolverConfig:
    time_limit: float = 10.0
    var_order: str = FIRST_FAIL
    val_order: str = MIN_FIRST
    seed: int = 0
    node_limit: int | None = None

    def __post_init__(self):
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.var_order not in (FIRST_FAIL, INPUT_ORDER):
            raise ValueError(f"unknown var_order {self.var_order!r}")
        if self.val_order != MIN_FIRST:
            raise ValueError(f"unknown val_order {self.val_order!r}")


class SolutionRecord(NamedTuple):
    time: float
    nodes: int
    objective: int


@dataclass
class SolveOutcome:
    verdict: str
    best_objective: int | None = None
    assignment: dict[str, int] | None = None
    nodes_explored: int = 0
    wall_time: float = 0.0
    solution_log: list[SolutionRecord] = field(default_factory=list)

    @property
    def completed(self) -> bool:
        return self.verdict in (OPTIMAL, UNSATISFIABLE)

    @property
    def first(self) -> SolutionRecord | None:
        return self.solution_log[0] if self.solution_log else None


# -- compiled model ----------------------------------------------------------

class _Model:
    def __init__(self, var_ids: Sequence[str], constraints: Sequence[Constraint]):
        self.index = {v: i for i, v in enumerate(var_ids)}
        self.props: list[tuple] = []
        for con in constraints:
            self._add(con)
        self.watch: list[list[int]] = [[] for _ in var_ids]
        for k, p in enumerate(self.props):
            for i in _prop_vars(p):
                if k not in self.watch[i]:
                    self.watch[i].append(k)

    def _linear(self, terms, rhs, sign=1):
        merged: dict[int, int] = {}
        for c, v in terms:
            i = self.index[v]
            merged[i] = merged.get(i, 0) + sign * c
        items = [(i, c) for i, c in merged.items() if c != 0]
        return (tuple(i for i, _ in items), tuple(c for _, c in items), sign * rhs)

    def _add(self, con: Constraint):
        if con.kind == LINEAR_LE:
            self.props.append((_LE, *self._linear(con.terms, con.rhs)))
        elif con.kind == LINEAR_EQ:
            self.props.append((_LE, *self._linear(con.terms, con.rhs)))
            self.props.append((_LE, *self._linear(con.terms, con.rhs, -1)))
        elif con.kind == MAX_OF:
            ops = tuple(dict.fromkeys(self.index[v] for v in con.operands))
            self.props.append((_MAX, self.index[con.target], ops))
        elif con.kind == DISJUNCTION:
            a, b = con.children
            self.props.append((_OR, self._linear(a.terms, a.rhs), self._linear(b.terms, b.rhs)))
        else:  # pragma: no cover - rejected at construction
            raise ValueError(con.kind)


def _prop_vars(p):
    if p[0] == _LE:
        return p[1]
    if p[0] == _MAX:
        return (p[1], *p[2])
    return (*p[1][0], *p[2][0])


def _min_sum(idx, coef, lo, hi):
    s = 0
    for i, c in zip(idx, coef):
        s += c * (lo[i] if c > 0 else hi[i])
    return s


def _narrow_le(idx, coef, rhs, lo, hi, changed):
    """One bounds-consistency pass of sum(coef*x) <= rhs. False on failure."""
    ms = _min_sum(idx, coef, lo, hi)
    if ms > rhs:
        return False
    for i, c in zip(idx, coef):
        if c > 0:
            slack = rhs - ms + c * lo[i]
            nh = slack // c
            if nh < hi[i]:
                if nh < lo[i]:
                    return False
                hi[i] = nh
                changed.append(i)
        else:
            slack = rhs - ms + c * hi[i]
            nl = -((-slack) // c)
            if nl > lo[i]:
                if nl > hi[i]:
                    return False
                lo[i] = nl
                changed.append(i)
    return True


def _narrow_max(t, ops, lo, hi, changed):
    mlo = max(lo[i] for i in ops)
    mhi = max(hi[i] for i in ops)
    if mlo > lo[t]:
        lo[t] = mlo
        changed.append(t)
    if mhi < hi[t]:
        hi[t] = mhi
        changed.append(t)
    if lo[t] > hi[t]:
        return False
    zt_hi, zt_lo = hi[t], lo[t]
    support = -1
    count = 0
    for i in ops:
        if hi[i] > zt_hi:
            hi[i] = zt_hi
            if hi[i] < lo[i]:
                return False
            changed.append(i)
        if hi[i] >= zt_lo:
            count += 1
            support = i
    if count == 0:
        return False
    if count == 1 and lo[support] < zt_lo:
        lo[support] = zt_lo
        changed.append(support)
    return True


def _run(p, lo, hi, changed):
    kind = p[0]
    if kind == _LE:
        return _narrow_le(p[1], p[2], p[3], lo, hi, changed)
    if kind == _MAX:
        return _narrow_max(p[1], p[2], lo, hi, changed)
    left, right = p[1], p[2]
    left_dead = _min_sum(*left[:2], lo, hi) > left[2]
    right_dead = _min_sum(*right[:2], lo, hi) > right[2]
    if left_dead and right_dead:
        return False
    if left_dead:
        return _narrow_le(*right, lo, hi, changed)
    if right_dead:
        return _narrow_le(*left, lo, hi, changed)
    return True


def _fixpoint(model: _Model, lo, hi, queue: list[int]) -> bool:
    pending = [False] * len(model.props)
    for k in queue:
        pending[k] = True
    queue = list(dict.fromkeys(queue))
    props, watch = model.props, model.watch
    changed: list[int] = []
    while queue:
        k = queue.pop()
        pending[k] = False
        changed.clear()
        if not _run(props[k], lo, hi, changed):
            return False
        for i in changed:
            for w in watch[i]:
                if not pending[w]:
                    pending[w] = True
                    queue.append(w)
    return True


def propagate(domains: Mapping[str, Domain | tuple[int, int]],
              constraints: Sequence[Constraint]) -> dict[str, Domain] | None:
    """Bounds-consistency fixpoint over ``constraints``; ``None`` on failure."""
    var_ids = list(domains)
    model = _Model(var_ids, constraints)
    lo, hi = [], []
    for v in var_ids:
        d = domains[v]
        a, b = (d.lb, d.ub) if isinstance(d, Domain) else d
        lo.append(a)
        hi.append(b)
    if not _fixpoint(model, lo, hi, list(range(len(model.props)))):
        return None
    return {v: Domain(lo[i], hi[i]) for i, v in enumerate(var_ids)}


# -- search ------------------------------------------------------------------

def solve(m: CopInstance, cfg: SolverConfig = SolverConfig()) -> SolveOutcome:
    """Depth-first branch and bound minimizing ``m.objective``.

    Decision variables are branched before the objective. Each branch is
    binary: ``x = lo`` first, then ``x >= lo + 1``.
    """
    start = time.monotonic()
    var_ids = [v.id for v in m.variables]
    model = _Model(var_ids, m.constraints)
    n = len(var_ids)
    z = model.index[m.objective]
    rank = list(range(n))
    if cfg.seed and cfg.var_order == FIRST_FAIL:
        random.Random(cfg.seed).shuffle(rank)
    decision = sorted((i for i in range(n) if i != z), key=rank.__getitem__)
    first_fail = cfg.var_order == FIRST_FAIL

    lo = [v.domain.lb for v in m.variables]
    hi = [v.domain.ub for v in m.variables]
    outcome = SolveOutcome(verdict=UNSATISFIABLE)
    best: int | None = None
    nodes = 0
    timed_out = False

    stack: list[tuple[list[int], list[int], list[int]]] = [(lo, hi, list(range(len(model.props))))]
    while stack:
        if cfg.node_limit is not None and nodes >= cfg.node_limit:
            timed_out = True
            break
        if nodes & 127 == 0 and time.monotonic() - start > cfg.time_limit:
            timed_out = True
            break
        lo, hi, queue = stack.pop()
        nodes += 1
        if best is not None and hi[z] >= best:
            if lo[z] >= best:
                continue
            hi[z] = best - 1
            queue = queue + model.watch[z]
        if not _fixpoint(model, lo, hi, queue):
            continue

        var = -1
        if first_fail:
            smallest = None
            for i in decision:
                size = hi[i] - lo[i]
                if size and (smallest is None or size < smallest):
                    smallest, var = size, i
                    if size == 1:
                        break
        else:
            for i in decision:
                if hi[i] > lo[i]:
                    var = i
                    break
        if var < 0 and hi[z] > lo[z]:
            var = z

        if var < 0:
            assignment = {v: lo[i] for i, v in enumerate(var_ids)}
            # bounds consistency on fixed values implies satisfaction; checked anyway
            if not m.is_solution(assignment):  # pragma: no cover
                raise AssertionError("propagation accepted a violating assignment")
            best = lo[z]
            outcome.assignment = assignment
            outcome.best_objective = best
            outcome.solution_log.append(SolutionRecord(time.monotonic() - start, nodes, best))
            continue

        value = lo[var]
        right_lo = lo.copy()
        right_lo[var] = value + 1
        stack.append((right_lo, hi.copy(), model.watch[var]))
        left_hi = hi.copy()
        left_hi[var] = value
        stack.append((lo, left_hi, model.watch[var]))

    outcome.nodes_explored = nodes
    outcome.wall_time = time.monotonic() - start
    if best is None:
        outcome.verdict = UNKNOWN if timed_out else UNSATISFIABLE
    else:
        outcome.verdict = FEASIBLE if timed_out else OPTIMAL
    return outcome
