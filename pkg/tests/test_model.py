from fractions import Fraction

import pytest

from fairflow import (
    Affine,
    CapacityError,
    Constant,
    EdgeFlow,
    Instance,
    PathFlow,
    PositiveThreshold,
    StructuralError,
    ValidationError,
    check_feasible,
    enumerate_paths,
    induced_edge_flow,
    path_latency,
    social_cost,
)
from fairflow.gadgets import fig1, partition_chain, pigou
from fairflow.model import check_path_flow, combine_path_flows, path_flow_edge_cost_identity

from oracles import simple_paths


def diamond():
    edges = [("s", "a", Affine(1, 0)), ("a", "t", Constant(1)), ("s", "b", Constant(1)), ("b", "t", Affine(1, 0)),
             ("a", "b", Constant(0))]
    return Instance.build(["s", "a", "b", "t"], edges, [("s", "t", 1)])


def test_build_by_labels_and_by_count():
    inst = diamond()
    assert inst.n_nodes == 4 and inst.n_edges == 5
    assert inst.arcs[4] == (1, 2)
    inst2 = Instance.build(3, [(0, 1, Constant(1)), (1, 2, Constant(1))], [(0, 2, 2)])
    assert inst2.nodes == ("0", "1", "2") and inst2.total_demand == 2


def test_structural_checks():
    with pytest.raises(StructuralError):
        Instance.build(["s", "t"], [("t", "s", Constant(1))], [("s", "t", 1)])
    with pytest.raises(StructuralError):
        Instance.build(["s", "t"], [("s", "s", Constant(1))], [("s", "t", 1)])
    with pytest.raises(StructuralError):
        Instance.build(["s", "t"], [("s", "x", Constant(1))], [("s", "t", 1)])
    with pytest.raises(ValidationError):
        Instance.build(["s", "t"], [("s", "t", Constant(1))], [("s", "t", 0)])
    with pytest.raises(ValidationError):
        Instance.build(["s", "t"], [("s", "t", Constant(1))], [])


def test_parallel_edges_are_distinct():
    inst = pigou(Constant(1), Affine(1, 0))
    assert enumerate_paths(inst, 0) == [(0,), (1,)]


def test_enumerate_paths_matches_plain_recursion():
    for inst in (diamond(), partition_chain((1, 2, 3)), fig1()[0]):
        com = inst.commodities[0]
        assert enumerate_paths(inst, 0) == simple_paths(inst.n_nodes, inst.arcs, com.source, com.sink)


def test_enumerate_paths_limit():
    inst = partition_chain((1,) * 6)
    assert len(enumerate_paths(inst, 0)) == 64
    with pytest.raises(CapacityError):
        enumerate_paths(inst, 0, limit=63)


def test_path_flow_validation():
    with pytest.raises(ValidationError):
        PathFlow.from_dicts([{(0,): -1}], drop_zeros=False)
    with pytest.raises(ValidationError):
        PathFlow(((((), 1),),))
    pf = PathFlow.from_dicts([{(0,): 0, (1,): 1}])
    assert pf.paths(0) == ((1,),)
    inst = pigou(Constant(1), Affine(1, 0))
    assert check_path_flow(inst, PathFlow.from_dicts([{(0,): Fraction(1, 2)}]))


def test_induced_flow_costs_and_identity():
    inst, pf = fig1()
    flow = induced_edge_flow(inst, pf)
    assert flow.aggregate == (Fraction(1, 2),) * 6
    assert path_latency(inst, flow, (0, 1, 3)) == Fraction(3, 2)
    assert path_latency(inst, flow, (2, 3)) == 1
    lhs, rhs = path_flow_edge_cost_identity(inst, pf)
    assert lhs == rhs == Fraction(3, 2)
    assert social_cost(inst, flow) == Fraction(3, 2)


def test_check_feasible_reports_violations():
    inst = pigou(Constant(1), Affine(1, 0))
    assert check_feasible(inst, EdgeFlow.single([Fraction(1, 2), Fraction(1, 2)])) == []
    bad = check_feasible(inst, EdgeFlow.single([Fraction(1, 2), Fraction(1, 4)]))
    assert {v.kind for v in bad} == {"conservation"}
    neg = check_feasible(inst, EdgeFlow.single([Fraction(3, 2), Fraction(-1, 2)]))
    assert any(v.kind == "nonnegativity" for v in neg)
    with pytest.raises(ValidationError):
        social_cost(inst, EdgeFlow.single([1, 1]))


def test_combine_path_flows():
    a = PathFlow.from_dicts([{(0,): 1}])
    b = PathFlow.from_dicts([{(1,): 1}])
    mix = combine_path_flows([(Fraction(1, 4), a), (Fraction(3, 4), b)])
    assert mix.flow(0, (0,)) == Fraction(1, 4) and mix.flow(0, (1,)) == Fraction(3, 4)


def test_positive_threshold_bounds():
    assert PositiveThreshold().cutoff(2) == pytest.approx(2e-9)
    with pytest.raises(ValidationError):
        PositiveThreshold(0)
    with pytest.raises(ValidationError):
        PositiveThreshold(1e-3)


def test_single_load_perturbation_hits_both_endpoints():
    inst, pf = fig1()
    flow = induced_edge_flow(inst, pf)
    tol = 1e-9
    loads = [float(x) for x in flow.loads[0]]
    loads[2] += 10 * tol
    bad = check_feasible(inst, EdgeFlow.single(loads), tol)
    assert {v.kind for v in bad} == {"conservation"}
    assert sorted(v.where for v in bad) == sorted(inst.arcs[2])
