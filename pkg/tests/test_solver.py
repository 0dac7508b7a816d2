import pytest
from hypothesis import given, settings, strategies as st

from boundest.cop import OBJECTIVE, Constraint, CopInstance, Domain, Variable
from boundest.generators import BIN_PACKING, JOBSHOP, GenSpec, generate
from boundest.solver import (FEASIBLE, INPUT_ORDER, OPTIMAL, UNKNOWN, UNSATISFIABLE,
                             SolverConfig, propagate, solve)
from oracles import brute_force, random_instance


def single(*cons):
    return CopInstance("single", (Variable("z", Domain(0, 10), OBJECTIVE),), cons, "z")


def test_single_variable_minimum():
    out = solve(single(Constraint.le([(-1, "z")], -3)))
    assert out.verdict == OPTIMAL
    assert out.best_objective == 3
    assert out.assignment == {"z": 3}


def test_empty_intersection():
    out = solve(single(Constraint.le([(1, "z")], 2), Constraint.le([(-1, "z")], -5)))
    assert out.verdict == UNSATISFIABLE
    assert out.best_objective is None and out.assignment is None


def test_propagate_direct_bound():
    assert propagate({"x": (0, 9)}, [Constraint.le([(1, "x")], 4)]) == {"x": Domain(0, 4)}


def test_propagate_max():
    doms = propagate({"z": (0, 100), "a": (2, 5), "b": (3, 7)}, [Constraint.max_of("z", ["a", "b"])])
    assert doms["z"] == Domain(3, 7)


def test_propagate_disjunction():
    either = Constraint.either(Constraint.le([(1, "x")], 1), Constraint.le([(-1, "x")], -8))
    assert propagate({"x": (3, 9)}, [either]) == {"x": Domain(8, 9)}
    # both children alive: nothing narrows
    assert propagate({"x": (0, 9)}, [either]) == {"x": Domain(0, 9)}


def test_propagate_failure():
    assert propagate({"x": (0, 3)}, [Constraint.le([(-1, "x")], -5)]) is None


def test_propagate_linear_eq():
    doms = propagate({"x": (0, 10), "y": (0, 10)}, [Constraint.eq([(1, "x"), (1, "y")], 15)])
    assert doms == {"x": Domain(5, 10), "y": Domain(5, 10)}


@pytest.mark.parametrize("seed", range(60))
def test_matches_brute_force(seed):
    m = random_instance(seed)
    out = solve(m, SolverConfig(time_limit=60))
    expected = brute_force(m)
    if expected is None:
        assert out.verdict == UNSATISFIABLE
    else:
        assert out.verdict == OPTIMAL
        assert out.best_objective == expected


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_soundness_and_anytime(seed):
    m = random_instance(seed)
    out = solve(m)
    if out.assignment is not None:
        assert m.is_solution(out.assignment)
        assert out.assignment[m.objective] == out.best_objective
    objs = [r.objective for r in out.solution_log]
    assert all(a > b for a, b in zip(objs, objs[1:]))
    times = [r.time for r in out.solution_log]
    assert times == sorted(times)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10 ** 6), st.integers(0, 5))
def test_orders_and_seeds_agree(seed, solver_seed):
    m = random_instance(seed)
    ref = solve(m).best_objective
    assert solve(m, SolverConfig(seed=solver_seed)).best_objective == ref
    assert solve(m, SolverConfig(var_order=INPUT_ORDER)).best_objective == ref


def test_deterministic():
    m = generate(GenSpec(JOBSHOP, 5))
    a, b = solve(m), solve(m)
    assert (a.best_objective, a.nodes_explored, a.assignment) == (b.best_objective, b.nodes_explored, b.assignment)
    assert [(r.nodes, r.objective) for r in a.solution_log] == [(r.nodes, r.objective) for r in b.solution_log]


def test_node_limit_verdicts():
    m = generate(GenSpec(BIN_PACKING, 2, items=(12, 12)))
    out = solve(m, SolverConfig(node_limit=1))
    assert out.verdict == UNKNOWN and out.best_objective is None
    full = solve(m)
    limit = full.solution_log[0].nodes
    out = solve(m, SolverConfig(node_limit=limit))
    assert out.verdict in (FEASIBLE, OPTIMAL)
    assert out.best_objective is not None


@pytest.mark.parametrize("bad", [dict(time_limit=0), dict(time_limit=-1), dict(var_order="Random"),
                                 dict(val_order="MaxFirst")])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SolverConfig(**bad)
