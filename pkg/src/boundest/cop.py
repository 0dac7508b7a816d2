"""COP data model and the canonical JSON instance format.

An instance is a set of integer variables with interval domains, a list of
constraints drawn from a small vocabulary (``LinearLe``, ``LinearEq``,
``MaxOf``, ``Disjunction``) and a single objective variable to minimize.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping

FORMAT_VERSION = 1

DECISION = "decision"
OBJECTIVE = "objective"

LINEAR_LE = "LinearLe"
LINEAR_EQ = "LinearEq"
MAX_OF = "MaxOf"
DISJUNCTION = "Disjunction"
CONSTRAINT_KINDS = (LINEAR_LE, LINEAR_EQ, MAX_OF, DISJUNCTION)


class InstanceError(ValueError):
    """Base class for malformed instances."""


class InstanceSyntaxError(InstanceError):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"{msg} (line {line}, column {column})")
        self.line = line
        self.column = column


class InstanceSemanticError(InstanceError):
    pass


@dataclass(frozen=True)
class Domain:
    lb: int
    ub: int

    def __post_init__(self):
        if self.lb > self.ub:
            raise InstanceSemanticError(f"empty domain {self.lb}..{self.ub}")

    @property
    def size(self) -> int:
        return self.ub - self.lb + 1

    def __contains__(self, value: int) -> bool:
        return self.lb <= value <= self.ub


@dataclass(frozen=True)
class Variable:
    id: str
    domain: Domain
    role: str = DECISION


@dataclass(frozen=True)
class Constraint:
    """One constraint.

    ``LinearLe``/``LinearEq``: ``sum(c * x for c, x in terms) <= / == rhs``.
    ``MaxOf``: ``target == max(operands)``.
    ``Disjunction``: at least one of two ``LinearLe`` children holds.
    """

    kind: str
    terms: tuple[tuple[int, str], ...] = ()
    rhs: int = 0
    target: str | None = None
    operands: tuple[str, ...] = ()
    children: tuple["Constraint", ...] = ()

    @classmethod
    def le(cls, terms: Iterable[tuple[int, str]], rhs: int) -> "Constraint":
        return cls(LINEAR_LE, terms=tuple((int(c), v) for c, v in terms), rhs=int(rhs))

    @classmethod
    def eq(cls, terms: Iterable[tuple[int, str]], rhs: int) -> "Constraint":
        return cls(LINEAR_EQ, terms=tuple((int(c), v) for c, v in terms), rhs=int(rhs))

    @classmethod
    def max_of(cls, target: str, operands: Iterable[str]) -> "Constraint":
        return cls(MAX_OF, target=target, operands=tuple(operands))

    @classmethod
    def either(cls, first: "Constraint", second: "Constraint") -> "Constraint":
        return cls(DISJUNCTION, children=(first, second))

    def variables(self) -> set[str]:
        if self.kind == MAX_OF:
            return {self.target, *self.operands}
        if self.kind == DISJUNCTION:
            return set().union(*(c.variables() for c in self.children))
        return {v for _, v in self.terms}

    def holds(self, assignment: Mapping[str, int]) -> bool:
        if self.kind == LINEAR_LE:
            return sum(c * assignment[v] for c, v in self.terms) <= self.rhs
        if self.kind == LINEAR_EQ:
            return sum(c * assignment[v] for c, v in self.terms) == self.rhs
        if self.kind == MAX_OF:
            return assignment[self.target] == max(assignment[v] for v in self.operands)
        return any(c.holds(assignment) for c in self.children)


@dataclass(frozen=True)
class CopInstance:
    name: str
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: str
    params: Mapping[str, Any] = field(default_factory=dict)
    known_optimum: int | None = None

    def __post_init__(self):
        _validate(self)

    def variable(self, var_id: str) -> Variable:
        for v in self.variables:
            if v.id == var_id:
                return v
        raise KeyError(var_id)

    @property
    def objective_domain(self) -> Domain:
        return self.variable(self.objective).domain

    def is_solution(self, assignment: Mapping[str, int]) -> bool:
        for v in self.variables:
            if assignment.get(v.id) not in v.domain:
                return False
        return all(c.holds(assignment) for c in self.constraints)

    def with_constraints(self, extra: Iterable[Constraint]) -> "CopInstance":
        return replace(self, constraints=self.constraints + tuple(extra))


def _check_int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceSemanticError(f"{what}: expected integer, got {value!r}")
    return value


def _validate_constraint(con: Constraint, known: set[str], where: str) -> None:
    if con.kind not in CONSTRAINT_KINDS:
        raise InstanceSemanticError(f"{where}: unknown constraint kind {con.kind!r}")
    if con.kind == DISJUNCTION:
        if len(con.children) != 2 or any(c.kind != LINEAR_LE for c in con.children):
            raise InstanceSemanticError(f"{where}: Disjunction needs exactly two LinearLe children")
    if con.kind == MAX_OF and not con.operands:
        raise InstanceSemanticError(f"{where}: MaxOf without operands")
    if con.kind in (LINEAR_LE, LINEAR_EQ):
        for c, _ in con.terms:
            _check_int(c, f"{where} coefficient")
        _check_int(con.rhs, f"{where} rhs")
    for v in sorted(con.variables()):
        if v not in known:
            raise InstanceSemanticError(f"{where}: undeclared variable {v!r}")


def _validate(m: CopInstance) -> None:
    ids = [v.id for v in m.variables]
    seen: set[str] = set()
    for vid in ids:
        if vid in seen:
            raise InstanceSemanticError(f"duplicate variable {vid!r}")
        seen.add(vid)
    if m.objective not in seen:
        raise InstanceSemanticError(f"objective refers to undeclared variable {m.objective!r}")
    objectives = [v.id for v in m.variables if v.role == OBJECTIVE]
    if objectives != [m.objective]:
        raise InstanceSemanticError(
            f"exactly one objective variable required, found {objectives} (objective={m.objective!r})")
    for v in m.variables:
        if v.role not in (DECISION, OBJECTIVE):
            raise InstanceSemanticError(f"variable {v.id!r}: unknown role {v.role!r}")
    for i, con in enumerate(m.constraints):
        _validate_constraint(con, seen, f"constraint #{i} ({con.kind})")
    for key, value in m.params.items():
        if isinstance(value, (list, tuple)):
            if not value:
                raise InstanceSemanticError(f"param {key!r}: empty array")
            for x in value:
                _check_int(x, f"param {key!r}")
        else:
            _check_int(value, f"param {key!r}")
    if m.known_optimum is not None:
        _check_int(m.known_optimum, "known_optimum")


# -- serialization -----------------------------------------------------------

def _constraint_to_json(con: Constraint) -> dict:
    if con.kind == MAX_OF:
        return {"kind": con.kind, "target": con.target, "operands": list(con.operands)}
    if con.kind == DISJUNCTION:
        return {"kind": con.kind, "children": [_constraint_to_json(c) for c in con.children]}
    return {"kind": con.kind, "terms": [[c, v] for c, v in con.terms], "rhs": con.rhs}


def instance_to_json(m: CopInstance) -> dict:
    params = {k: list(v) if isinstance(v, (list, tuple)) else v for k, v in m.params.items()}
    return {
        "format": FORMAT_VERSION,
        "name": m.name,
        "params": params,
        "variables": [{"id": v.id, "lb": v.domain.lb, "ub": v.domain.ub, "role": v.role}
                      for v in m.variables],
        "constraints": [_constraint_to_json(c) for c in m.constraints],
        "objective": m.objective,
        "known_optimum": m.known_optimum,
    }


def serialize_instance(m: CopInstance) -> bytes:
    """Canonical bytes: sorted keys, two-space indent, trailing newline."""
    return (json.dumps(instance_to_json(m), sort_keys=True, indent=2) + "\n").encode("utf-8")


def _require(obj: Mapping, key: str, where: str):
    if key not in obj:
        raise InstanceSemanticError(f"{where}: missing key {key!r}")
    return obj[key]


def _constraint_from_json(obj, where: str) -> Constraint:
    if not isinstance(obj, dict):
        raise InstanceSemanticError(f"{where}: expected an object")
    kind = _require(obj, "kind", where)
    if kind == MAX_OF:
        return Constraint.max_of(_require(obj, "target", where), _require(obj, "operands", where))
    if kind == DISJUNCTION:
        children = _require(obj, "children", where)
        return Constraint(DISJUNCTION, children=tuple(
            _constraint_from_json(c, f"{where} child {j}") for j, c in enumerate(children)))
    if kind in (LINEAR_LE, LINEAR_EQ):
        terms = []
        for term in _require(obj, "terms", where):
            if not (isinstance(term, list) and len(term) == 2 and isinstance(term[1], str)):
                raise InstanceSemanticError(f"{where}: malformed term {term!r}")
            terms.append((_check_int(term[0], f"{where} coefficient"), term[1]))
        return Constraint(kind, terms=tuple(terms), rhs=_check_int(_require(obj, "rhs", where), f"{where} rhs"))
    raise InstanceSemanticError(f"{where}: unknown constraint kind {kind!r}")


def instance_from_json(doc: Mapping) -> CopInstance:
    if not isinstance(doc, dict):
        raise InstanceSemanticError("top level must be an object")
    version = doc.get("format", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise InstanceSemanticError(f"unsupported format version {version!r}")
    variables = []
    for i, v in enumerate(_require(doc, "variables", "instance")):
        where = f"variable #{i}"
        vid = _require(v, "id", where)
        lb = _check_int(_require(v, "lb", where), f"variable {vid!r} lb")
        ub = _check_int(_require(v, "ub", where), f"variable {vid!r} ub")
        if lb > ub:
            raise InstanceSemanticError(f"variable {vid!r}: empty domain {lb}..{ub}")
        variables.append(Variable(vid, Domain(lb, ub), v.get("role", DECISION)))
    constraints = [_constraint_from_json(c, f"constraint #{i}")
                   for i, c in enumerate(_require(doc, "constraints", "instance"))]
    params = {k: tuple(v) if isinstance(v, list) else v for k, v in doc.get("params", {}).items()}
    return CopInstance(
        name=_require(doc, "name", "instance"),
        variables=tuple(variables),
        constraints=tuple(constraints),
        objective=_require(doc, "objective", "instance"),
        params=params,
        known_optimum=doc.get("known_optimum"),
    )


def parse_instance(data: bytes | str) -> CopInstance:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise InstanceSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    return instance_from_json(doc)


def load_instance(path) -> CopInstance:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


# -- boundary constraints ----------------------------------------------------

def post_boundary_constraint(m: CopInstance, lo: int, hi: int, negated: bool = False,
                             complement: str = "upper") -> CopInstance:
    """Return a copy of ``m`` with the objective restricted to ``lo..hi``.

    With ``negated=True`` the objective is pushed out of the interval instead.
    The default ``complement="upper"`` posts ``z >= hi + 1`` only: for
    minimization a failed bounded solve means the upper bound was too low.
    ``complement="literal"`` posts ``z <= lo - 1 or z >= hi + 1``.
    """
    z = m.objective
    if not negated:
        if lo > hi:
            raise ValueError(f"boundary lo={lo} exceeds hi={hi}")
        return m.with_constraints([Constraint.le([(-1, z)], -lo), Constraint.le([(1, z)], hi)])
    above = Constraint.le([(-1, z)], -(hi + 1))
    if complement == "upper":
        return m.with_constraints([above])
    if complement == "literal":
        below = Constraint.le([(1, z)], lo - 1)
        return m.with_constraints([Constraint.either(below, above)])
    raise ValueError(f"unknown complement mode {complement!r}")
