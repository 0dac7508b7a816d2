"""Seeded instance generators: bin packing (sum objective) and jobshop (max objective)."""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass, replace

from .cop import OBJECTIVE, Constraint, CopInstance, Domain, Variable

BIN_PACKING = "binpacking"
JOBSHOP = "jobshop"
FAMILIES = (BIN_PACKING, JOBSHOP)

LEQ_MAX = "leqmax"
MAX_OF = "maxof"

MAX_ITEMS = 12
MAX_OPERATIONS = 16


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class GenSpec:
    """Generator parameters. Ranges are inclusive ``(low, high)`` pairs drawn per instance."""

    family: str = BIN_PACKING
    seed: int = 0
    # bin packing
    items: tuple[int, int] = (6, 12)
    capacity: tuple[int, int] = (10, 20)
    weights: tuple[int, int] = (2, 10)
    # jobshop
    jobs: tuple[int, int] = (2, 4)
    machines: tuple[int, int] = (2, 4)
    durations: tuple[int, int] = (1, 9)
    formulation: str = LEQ_MAX

    def validate(self) -> None:
        if self.family not in FAMILIES:
            raise GenerationError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        for name in ("items", "capacity", "weights", "jobs", "machines", "durations"):
            low, high = getattr(self, name)
            if low < 1 or low > high:
                raise GenerationError(f"{name}: need 1 <= low <= high, got {low}..{high}")
        if self.formulation not in (LEQ_MAX, MAX_OF):
            raise GenerationError(f"unknown jobshop formulation {self.formulation!r}")
        if self.family == BIN_PACKING:
            if self.items[1] > MAX_ITEMS:
                raise GenerationError(f"bin packing limited to {MAX_ITEMS} items at desk scale")
            if self.weights[1] > self.capacity[0]:
                raise GenerationError("largest weight must fit the smallest capacity")
        elif self.jobs[1] * self.machines[1] > MAX_OPERATIONS:
            raise GenerationError(f"jobshop limited to {MAX_OPERATIONS} operations at desk scale")

    @classmethod
    def from_dict(cls, doc: dict) -> "GenSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise GenerationError(f"unknown generator fields {sorted(unknown)}")
        fixed = {}
        for key, value in doc.items():
            if isinstance(value, list):
                value = tuple(value)
            elif isinstance(value, int) and key not in ("seed",):
                value = (value, value)
            fixed[key] = value
        return cls(**fixed)


def derive_seed(seed: int, index: int) -> int:
    digest = hashlib.sha256(f"{seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def _draw(rng: random.Random, bounds: tuple[int, int]) -> int:
    return rng.randint(*bounds)


def _bin_packing(spec: GenSpec) -> CopInstance:
    rng = random.Random(spec.seed)
    n = _draw(rng, spec.items)
    cap = _draw(rng, spec.capacity)
    weights = sorted((_draw(rng, spec.weights) for _ in range(n)), reverse=True)

    def x(i, b):
        return f"x_{i}_{b}"

    variables = []
    # item i may only open bins 0..i (symmetry breaking on sorted items)
    for i in range(n):
        variables += [Variable(x(i, b), Domain(0, 1)) for b in range(i + 1)]
    variables += [Variable(f"y_{b}", Domain(0, 1)) for b in range(n)]
    # trivial upper boundary: one bin per item
    variables.append(Variable("z", Domain(1, n), OBJECTIVE))

    cons = []
    for i in range(n):
        cons.append(Constraint.eq([(1, x(i, b)) for b in range(i + 1)], 1))
    for b in range(n):
        load = [(weights[i], x(i, b)) for i in range(b, n)]
        cons.append(Constraint.le(load + [(-cap, f"y_{b}")], 0))
        cons += [Constraint.le([(1, x(i, b)), (-1, f"y_{b}")], 0) for i in range(b, n)]
    cons += [Constraint.le([(1, f"y_{b + 1}"), (-1, f"y_{b}")], 0) for b in range(n - 1)]
    cons.append(Constraint.eq([(1, "z")] + [(-1, f"y_{b}") for b in range(n)], 0))
    cons.append(Constraint.le([(-cap, "z")], -sum(weights)))

    # first-fit decreasing witness
    loads: list[int] = []
    witness = {v.id: 0 for v in variables}
    for i, w in enumerate(weights):
        for b, used in enumerate(loads):
            if used + w <= cap:
                loads[b] += w
                break
        else:
            b = len(loads)
            loads.append(w)
        witness[x(i, b)] = 1
        witness[f"y_{b}"] = 1
    witness["z"] = len(loads)

    m = CopInstance(
        name=f"binpacking-{spec.seed}",
        variables=tuple(variables),
        constraints=tuple(cons),
        objective="z",
        params={"weights": tuple(weights), "capacity": cap, "n_items": n},
    )
    if not m.is_solution(witness):  # pragma: no cover - generator bug
        raise GenerationError("bin packing witness violates the model")
    return m


def _jobshop(spec: GenSpec) -> CopInstance:
    rng = random.Random(spec.seed)
    n_jobs = _draw(rng, spec.jobs)
    n_mach = _draw(rng, spec.machines)
    routes, durations = [], []
    for _ in range(n_jobs):
        route = list(range(n_mach))
        rng.shuffle(route)
        routes.append(route)
        durations.append([_draw(rng, spec.durations) for _ in range(n_mach)])
    horizon = sum(map(sum, durations))

    def s(j, k):
        return f"s_{j}_{k}"

    variables = [Variable(s(j, k), Domain(0, horizon - durations[j][k]))
                 for j in range(n_jobs) for k in range(n_mach)]
    cons = []
    for j in range(n_jobs):
        for k in range(n_mach - 1):
            cons.append(Constraint.le([(1, s(j, k)), (-1, s(j, k + 1))], -durations[j][k]))
    ops_on = {mc: [] for mc in range(n_mach)}
    for j in range(n_jobs):
        for k, mc in enumerate(routes[j]):
            ops_on[mc].append((j, k))
    for mc in range(n_mach):
        ops = ops_on[mc]
        for a in range(len(ops)):
            for b in range(a + 1, len(ops)):
                (ja, ka), (jb, kb) = ops[a], ops[b]
                cons.append(Constraint.either(
                    Constraint.le([(1, s(ja, ka)), (-1, s(jb, kb))], -durations[ja][ka]),
                    Constraint.le([(1, s(jb, kb)), (-1, s(ja, ka))], -durations[jb][kb])))
    if spec.formulation == LEQ_MAX:
        for j in range(n_jobs):
            for k in range(n_mach):
                cons.append(Constraint.le([(1, s(j, k)), (-1, "z")], -durations[j][k]))
    else:
        for j in range(n_jobs):
            last = n_mach - 1
            variables.append(Variable(f"e_{j}", Domain(durations[j][last], horizon)))
            cons.append(Constraint.eq([(1, f"e_{j}"), (-1, s(j, last))], durations[j][last]))
        cons.append(Constraint.max_of("z", [f"e_{j}" for j in range(n_jobs)]))
    variables.append(Variable("z", Domain(0, horizon), OBJECTIVE))

    # list-schedule witness: operations dispatched in round-robin job order
    witness = {}
    job_ready = [0] * n_jobs
    mach_ready = [0] * n_mach
    for k in range(n_mach):
        for j in range(n_jobs):
            mc = routes[j][k]
            t = max(job_ready[j], mach_ready[mc])
            witness[s(j, k)] = t
            job_ready[j] = mach_ready[mc] = t + durations[j][k]
    if spec.formulation == MAX_OF:
        for j in range(n_jobs):
            witness[f"e_{j}"] = job_ready[j]
    witness["z"] = max(job_ready)

    m = CopInstance(
        name=f"jobshop-{spec.seed}",
        variables=tuple(variables),
        constraints=tuple(cons),
        objective="z",
        params={
            "durations": tuple(d for row in durations for d in row),
            "machines": tuple(mc for route in routes for mc in route),
            "job_lengths": tuple(sum(row) for row in durations),
            "machine_loads": tuple(sum(durations[j][k] for j, k in ops_on[mc]) for mc in range(n_mach)),
            "n_jobs": n_jobs,
            "n_machines": n_mach,
        },
    )
    if not m.is_solution(witness):  # pragma: no cover - generator bug
        raise GenerationError("jobshop witness violates the model")
    return m


def generate(spec: GenSpec) -> CopInstance:
    spec.validate()
    if spec.family == BIN_PACKING:
        return _bin_packing(spec)
    return _jobshop(spec)


def generate_batch(spec: GenSpec, count: int) -> list[CopInstance]:
    if count < 1:
        raise GenerationError("count must be >= 1")
    spec.validate()
    return [generate(replace(spec, seed=derive_seed(spec.seed, i))) for i in range(count)]
