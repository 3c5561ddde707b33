import math
from fractions import Fraction

import pytest

from fairflow import Affine, Constant, DomainError, Instance, PathFlow
from fairflow.gadgets import cascade, cascade_decomposition, fig1, nonconvexity_pair
from fairflow.randroute import (
    analytic_variance,
    build_ordering,
    draw_rotation,
    expected_latency,
    hash_assign,
    monte_carlo,
    stddev_bound,
)


def two_path_pigou():
    inst = Instance.build(["s", "t"], [("s", "t", Constant(1)), ("s", "t", Affine(1, 0))], [("s", "t", 1)])
    pf = PathFlow.from_dicts([{(0,): Fraction(1, 4), (1,): Fraction(3, 4)}])
    return inst, pf


def test_ordering_intervals_are_exact():
    order = build_ordering(cascade_decomposition(4, Fraction(1, 2)))
    assert order.lengths(0) == [Fraction(1, 4)] * 4
    assert order.intervals(0)[0] == (0, Fraction(1, 4))
    assert order.endpoints[0][-1] == 1


def test_hash_assign_boundaries_and_wraparound():
    inst, pf = two_path_pigou()
    order = build_ordering(pf)
    assert hash_assign(order, 0.5, 0, 0.75) == (1,)  # frac(1.25) = 0.25 lands on the boundary, which goes right
    assert hash_assign(order, 0.5, 0, 0.7) == (0,)
    assert hash_assign(order, 0.0, 0, 0.1) == (0,)
    assert hash_assign(order, 0.0, 0, 0.25) == (1,)
    assert hash_assign(order, Fraction(1, 2), 0, Fraction(1, 2)) == (0,)
    with pytest.raises(DomainError):
        hash_assign(order, 1.0, 0, 0.1)


def test_two_interval_example():
    # ids 0..1/2 go to the first path, 1/2..1 to the second; X = 0.5 and id 0.75 give frac 0.25
    pf = PathFlow.from_dicts([{(0,): Fraction(1, 2), (1,): Fraction(1, 2)}])
    assert hash_assign(build_ordering(pf), 0.5, 0, 0.75) == (0,)


def test_rotation_is_reproducible():
    assert draw_rotation(3) == draw_rotation(3)
    assert draw_rotation(3) != draw_rotation(4)
    assert 0 <= draw_rotation(0) < 1


def test_expected_latency_and_variance():
    inst, pf = fig1()
    assert expected_latency(inst, pf, 0) == Fraction(3, 2)
    assert analytic_variance(inst, pf, 0) == 0
    inst, pf = two_path_pigou()
    # loads (1/4, 3/4): latencies 1 and 3/4, mean 13/16
    assert expected_latency(inst, pf, 0) == Fraction(13, 16)
    assert analytic_variance(inst, pf, 0) == Fraction(1, 4) * Fraction(3, 16) ** 2 + Fraction(3, 4) * Fraction(1, 16) ** 2


def test_stddev_bound_ordering():
    inst, a, b = nonconvexity_pair()
    for pf, theta in ((a, 1.5), (b, 1.5)):
        bound = stddev_bound(inst, pf, 0, theta)
        assert bound.analytic <= bound.bhatia_davis + 1e-12 <= bound.corrected + 2e-12
        mc = monte_carlo(inst, pf, trials=2000, seed=1)[0]
        assert mc.std <= bound.corrected + 3 * mc.std_err


def test_published_stddev_formula_fails_at_band_ends():
    # flow B puts mass 2/3 at latency 1 and 1/3 at 3/2: std sqrt(2)/6 is twice the closed form
    inst, _, b = nonconvexity_pair()
    bound = stddev_bound(inst, b, 0, 1.5)
    assert bound.analytic == pytest.approx(math.sqrt(2) / 6)
    assert bound.analytic > bound.formula
    assert bound.corrected == pytest.approx(2 * bound.formula)
    inst, pf = two_path_pigou()
    assert stddev_bound(inst, pf, 0, 4).formula == pytest.approx(3 / 8 * 13 / 16)
    with pytest.raises(DomainError):
        stddev_bound(inst, pf, 0, 0.5)


def test_monte_carlo_mean_and_masses():
    inst, pf = two_path_pigou()
    mc = monte_carlo(inst, pf, trials=5000, ids_per_commodity=16, seed=5)[0]
    assert abs(mc.mean - 13 / 16) <= 3 * max(mc.std_err, 1e-12)
    for p, f in pf.items(0):
        se = math.sqrt(float(f) * (1 - float(f)) / mc.samples)
        assert abs(mc.masses[p] - float(f)) <= 3 * se
    assert mc.samples == 5000 * 16


def test_monte_carlo_is_seeded_per_commodity():
    edges = [("s", "t", Constant(1)), ("s", "t", Constant(2)), ("a", "t", Constant(1)), ("a", "t", Constant(3))]
    inst = Instance.build(["s", "a", "t"], edges, [("s", "t", 1), ("a", "t", 1)])
    pf = PathFlow.from_dicts([{(0,): Fraction(1, 2), (1,): Fraction(1, 2)}, {(2,): Fraction(1, 3), (3,): Fraction(2, 3)}])
    a = monte_carlo(inst, pf, trials=500, seed=42)
    b = monte_carlo(inst, pf, trials=500, seed=42)
    assert a == b
    assert a[0] != monte_carlo(inst, pf, trials=500, seed=43)[0]
    with pytest.raises(DomainError):
        monte_carlo(inst, pf, trials=0)


def test_cascade_routing_is_deterministic_in_latency():
    inst, pf = cascade(4, Fraction(1, 2)), cascade_decomposition(4, Fraction(1, 2))
    mc = monte_carlo(inst, pf, trials=1000, seed=0)[0]
    assert mc.std == 0 and mc.mean == pytest.approx(float(expected_latency(inst, pf, 0)))
