import itertools
import random
from fractions import Fraction

import pytest

from fairflow import (
    Affine,
    Constant,
    ConstructionError,
    DomainError,
    ValidationError,
    brute_force_best_decomposition,
    check_PNE_acyclic,
    enumerate_paths,
    induced_edge_flow,
    measure_fairness,
    path_latency,
    social_cost,
    solve_nash,
    solve_social_optimum,
)
from fairflow.gadgets import (
    HardnessParams,
    balanced_partition,
    cascade,
    cascade_mixed_flow,
    cascade_so,
    hardness_instance,
    hardness_so,
    hardness_witness,
    partition_chain,
    partition_chain_so,
    pigou,
    solve_alpha_beta,
    subset_path,
    two_link,
    une_vs_pne_gadget,
)
from fairflow.solvers import SolverConfig

from oracles import has_partition

TIGHT = SolverConfig(tol=1e-12)


def test_pigou_and_two_link():
    inst = pigou(Constant(1), Affine(1, 0))
    assert solve_nash(inst, TIGHT).social_cost == pytest.approx(1.0)
    assert solve_social_optimum(inst, TIGHT).social_cost == pytest.approx(0.75)
    big = pigou(Constant(10), Affine(Fraction(1, 10), 0))
    assert solve_social_optimum(big, TIGHT).flow.aggregate[1] == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        pigou(Constant(1), Affine(1, 0), 0)
    for q, cost in ((1, 0.75), (2, 1.5)):
        so = solve_social_optimum(two_link(q), TIGHT)
        assert so.social_cost == pytest.approx(cost)
        assert so.flow.aggregate == pytest.approx((0.5, 0.5), abs=1e-6)
        assert solve_nash(two_link(q), TIGHT).flow.aggregate[1] == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        two_link(0)


def test_chain_path_lengths_match_subset_formula():
    rng = random.Random(12)
    for n in (2, 5, 12):
        q = [rng.randint(1, 6) for _ in range(n)]
        inst, flow = partition_chain(q), partition_chain_so(q)
        costs = inst.edge_costs(flow)
        for bits in itertools.product((0, 1), repeat=n) if n <= 5 else [tuple(rng.randint(0, 1) for _ in range(n)) for _ in range(200)]:
            subset = [i for i in range(n) if bits[i]]
            assert sum(costs[e] for e in subset_path(n, subset)) == Fraction(sum(q) + sum(q[i] for i in subset), 2)
    assert len(enumerate_paths(partition_chain([1] * 12), 0)) == 2**12
    with pytest.raises(ValidationError):
        partition_chain(())


def test_generator_social_optima_match_stated_loads():
    cases = [
        (partition_chain((1, 2, 3)), partition_chain_so((1, 2, 3))),
        (cascade(4, Fraction(1, 2)), cascade_so(4, Fraction(1, 2))),
        (hardness_instance(HardnessParams((1, 1), 1, 1, 2)), hardness_so(HardnessParams((1, 1), 1, 1, 2))),
        (hardness_instance(HardnessParams((1, 2, 3), 2, 1, 1)), hardness_so(HardnessParams((1, 2, 3), 2, 1, 1))),
    ]
    for inst, stated in cases:
        got = solve_social_optimum(inst, TIGHT).flow.aggregate
        assert got == pytest.approx([float(x) for x in stated.aggregate], abs=1e-5)


def test_cascade_nash_and_edge_unfairness():
    inst = cascade(4, Fraction(1, 2))
    ne = solve_nash(inst, TIGHT).flow.aggregate
    assert ne[1::2] == pytest.approx((1.0,) * 4, abs=1e-5)
    so = cascade_so(4, Fraction(1, 2))
    decision = check_PNE_acyclic(inst, so, 10)
    assert decision.theta == 2


@pytest.mark.parametrize("k", [0, 1, 2, 4])
def test_cascade_mixed_design(k):
    n, eps = 4, Fraction(1, 2)
    inst, flow = cascade(n, eps), cascade_mixed_flow(n, eps, k)
    assert check_PNE_acyclic(inst, flow, 100).theta == (n + k * (1 - eps)) / (n - k * eps / 2)
    assert social_cost(inst, flow) == n - k * eps**2 / 4


def test_cascade_preconditions():
    with pytest.raises(ValidationError):
        cascade(4, 1)
    with pytest.raises(ValidationError):
        cascade(0, Fraction(1, 2))


def test_hardness_params_and_targets():
    params = HardnessParams((1, 1), 1, 2, 2)
    assert params.c1 == Fraction(3, 2) and params.c2 == Fraction(5, 4)
    assert params.B == 1 and params.low == Fraction(3, 8)
    with pytest.raises(ConstructionError):
        HardnessParams((1, 1), 1, 1, 1)  # beta p = 1
    with pytest.raises(ConstructionError):
        HardnessParams((), 1, 1, 2)
    for p in (1, 2, 3):
        for target in (Fraction(101, 100), Fraction(3, 2), p + Fraction(999, 1000)):
            alpha, beta = solve_alpha_beta(p, target, "une")
            assert HardnessParams((1, 1), p, alpha, beta).c1 == target
            alpha, beta = solve_alpha_beta(p, target, "ef")
            assert HardnessParams((1, 1), p, alpha, beta).c2 == target
    with pytest.raises(DomainError):
        solve_alpha_beta(1, 1, "une")
    with pytest.raises(DomainError):
        solve_alpha_beta(1, 2, "une")
    with pytest.raises(DomainError):
        solve_alpha_beta(1, 1, "ef")


def test_hardness_witnesses_induce_the_optimum():
    params = HardnessParams((1, 2, 3), 1, 2, 2)
    subset = balanced_partition(params.q)
    for concept in ("une", "ef"):
        pf = hardness_witness(params, subset, concept)
        assert induced_edge_flow(hardness_instance(params), pf) == hardness_so(params)
    rep = measure_fairness(hardness_instance(params), hardness_witness(params, subset, "une"))
    assert rep.theta_une == params.c1


def test_hardness_oracle_equivalence_small_exhaustive():
    for n in range(1, 5):
        for q in itertools.combinations_with_replacement(range(1, 7), n):
            if sum(q) < 4:
                continue  # see the small-total test below
            params = HardnessParams(q, 1, 2, 2)
            une, _ = brute_force_best_decomposition(hardness_instance(params), hardness_so(params), "une")
            assert (une == params.c1) == has_partition(q), q
            assert une >= params.c1


@pytest.mark.parametrize("q, alpha, beta, expected", [
    ((1,), 2, 2, Fraction(7, 5)),
    ((1, 1, 1), 2, 2, Fraction(22, 15)),
    ((3,), 2, 2, Fraction(8, 5)),
    ((1, 2), 2, 2, Fraction(23, 15)),
])
def test_hardness_gadget_small_totals(q, alpha, beta, expected):
    """Below B = 2 the NO direction can fail: (1,) and (1, 1, 1) beat c1 without a partition."""
    params = HardnessParams(q, 1, alpha, beta)
    une, pf = brute_force_best_decomposition(hardness_instance(params), hardness_so(params), "une")
    assert une == expected
    assert measure_fairness(hardness_instance(params), pf).theta_une == expected


def test_hardness_oracle_equivalence_sampled_up_to_eight_stages():
    rng = random.Random(8)
    for n in (5, 6, 7, 8):
        q = tuple(rng.randint(1, 6) for _ in range(n))
        params = HardnessParams(q, 1, 2, 2)
        une, _ = brute_force_best_decomposition(hardness_instance(params), hardness_so(params), "une")
        assert (une == params.c1) == has_partition(q), q


def test_chain_equivalence_on_unsorted_sample():
    rng = random.Random(3)
    for _ in range(15):
        q = tuple(rng.randint(1, 5) for _ in range(rng.randint(1, 6)))
        une, _ = brute_force_best_decomposition(partition_chain(q), partition_chain_so(q), "une")
        assert (une == Fraction(3, 2)) == has_partition(q)


def test_balanced_partition():
    assert balanced_partition((1, 2, 3)) in ((0, 1), (2,))
    assert balanced_partition((1, 2)) is None


def test_une_gadget_bounds():
    for k in (2, 3, 5, 8):
        for theta in (Fraction(3, 2), Fraction(2), Fraction(5, 2)):
            inst, flow, pf = une_vs_pne_gadget(k, theta)
            rep = measure_fairness(inst, pf)
            assert rep.theta_une == theta
            assert rep.theta_pne == 1 + (k - 1) * (theta - 1)
            n = inst.n_nodes
            assert n == k + 2
            if k > 2:
                assert rep.theta_pne > Fraction(n - 3) * theta / 3
    with pytest.raises(ValidationError):
        une_vs_pne_gadget(1, Fraction(3, 2))
    with pytest.raises(ValidationError):
        une_vs_pne_gadget(3, Fraction(5, 4))


def test_chain_path_latency_helper():
    q = (1, 1)
    inst, flow = partition_chain(q), partition_chain_so(q)
    assert path_latency(inst, flow, subset_path(2, [])) == 1
    assert path_latency(inst, flow, subset_path(2, [0, 1])) == 2
    assert path_latency(inst, flow, subset_path(2, [1])) == Fraction(3, 2)
