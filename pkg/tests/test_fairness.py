import math

import pytest

from fairflow import (
    Affine,
    Constant,
    DomainError,
    EdgeFlow,
    LatencyClass,
    ValidationError,
    check_variational_inequality,
    gamma_of,
    induced_edge_flow,
    omega,
    poa_upper_bound,
    pos_upper_bound_mm1,
    pos_upper_bound_poly,
    pos_upper_bound_series_parallel,
    solve_social_optimum,
)
from fairflow.fairness import beta_theta
from fairflow.gadgets import fig1, pigou, une_vs_pne_gadget
from fairflow.solvers import SolverConfig

from oracles import affine_poa, omega_grid


def test_latency_class_parsing():
    assert LatencyClass.parse("poly:3") == LatencyClass.poly(3)
    assert LatencyClass.parse("affine") == LatencyClass.affine()
    assert LatencyClass.parse("MM1:0.5") == LatencyClass.mm1(0.5)
    for bad in ("poly:x", "cubic", "mm1:1.5", "poly:-1"):
        with pytest.raises(ValidationError):
            LatencyClass.parse(bad)


def test_gamma():
    assert [gamma_of(LatencyClass.poly(p)) for p in range(7)] == list(range(1, 8))
    assert gamma_of(LatencyClass.affine()) == 2
    assert gamma_of(LatencyClass.mm1(0.5)) == pytest.approx(2.0)


def test_omega_affine_values():
    assert omega(LatencyClass.affine(), 1) == pytest.approx(0.25)
    assert omega(LatencyClass.affine(), 0.5) > 1
    assert omega(LatencyClass.poly(0), 1) == 0
    with pytest.raises(DomainError):
        omega(LatencyClass.affine(), 0)


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("lam", [1.0, 1.3, 2.0, 5.0])
def test_omega_poly_matches_grid(p, lam):
    assert omega(LatencyClass.poly(p), lam) == pytest.approx(omega_grid("poly", lam, p=p), abs=2e-3)
    assert omega(LatencyClass.poly(p), lam) >= omega_grid("poly", lam, p=p) - 1e-9


@pytest.mark.parametrize("rho", [0.3, 0.5, 0.9])
@pytest.mark.parametrize("lam", [1.0, 1.5, 3.0])
def test_omega_mm1_one_dimensional_reduction_matches_two_dimensional_grid(rho, lam):
    ours = omega(LatencyClass.mm1(rho), lam)
    grid = omega_grid("mm1", lam, rho=rho)
    assert ours >= grid - 1e-9
    assert ours == pytest.approx(grid, abs=2e-3)


@pytest.mark.parametrize("theta", [1.0, 1.2, 1.5, 2.0, 2.5, 3.0, 3.9])
def test_affine_poa_matches_hand_minimization(theta):
    assert poa_upper_bound(LatencyClass.affine(), theta).value == pytest.approx(affine_poa(theta), rel=1e-6)


def test_poa_examples():
    assert poa_upper_bound(LatencyClass.affine(), 1).value == pytest.approx(4 / 3, abs=1e-4)
    assert poa_upper_bound(LatencyClass.affine(), 2).value == pytest.approx(4, abs=1e-4)
    assert poa_upper_bound(LatencyClass.affine(), 3).value == pytest.approx(9, abs=1e-3)
    # degree-2 polynomials at theta = 1: the classical (1 - 2/3^1.5)^-1
    assert poa_upper_bound(LatencyClass.poly(2), 1).value == pytest.approx(1 / (1 - 2 / 3**1.5), rel=1e-6)
    res = poa_upper_bound(LatencyClass.mm1(0.5), 1)
    assert res.method == "numeric-grid" and res.value == pytest.approx(0.5 * (1 + 1 / math.sqrt(0.5)), rel=1e-4)
    with pytest.raises(DomainError):
        poa_upper_bound(LatencyClass.affine(), 0.9)


def test_poa_is_monotone_in_theta():
    vals = [poa_upper_bound(LatencyClass.poly(2), t).value for t in (1, 1.25, 1.5, 2, 3)]
    assert vals == sorted(vals)


def test_pos_mm1():
    assert pos_upper_bound_mm1(0.5, 2) == 1.0
    assert pos_upper_bound_mm1(0.5, 1) == pytest.approx(0.5 * (1 + 1 / math.sqrt(0.5)))
    vals = [pos_upper_bound_mm1(0.7, t) for t in (1, 1.5, 2, 3, 4)]
    assert vals == sorted(vals, reverse=True) and vals[-1] == 1.0
    with pytest.raises(DomainError):
        pos_upper_bound_mm1(1.0, 1)


def test_pos_poly():
    assert pos_upper_bound_poly(1, 1) == pytest.approx(4 / 3)
    assert pos_upper_bound_poly(2, 1) == pytest.approx(1 / (1 - 2 / 3**1.5))
    assert pos_upper_bound_poly(2, 3) == 1.0
    with pytest.raises(DomainError):
        pos_upper_bound_poly(0, 1)


def test_beta_theta_affine_oracle():
    # for l(x) = x and theta = 1 the ratio is y(x - y)/x^2, maximized at y = x/2
    assert beta_theta(LatencyClass.affine(), 1.0) == pytest.approx(0.25, abs=1e-6)
    res = pos_upper_bound_series_parallel(LatencyClass.affine(), 1.0)
    assert res.value == pytest.approx(4 / 3, abs=1e-5)
    assert res.params["applicability"] == "caller-asserted"
    assert pos_upper_bound_series_parallel(LatencyClass.poly(0), 1.0).value == 1.0
    # a larger theta only lowers the bound
    assert pos_upper_bound_series_parallel(LatencyClass.affine(), 1.5).value <= res.value


def test_vi_accepts_une_flows_at_their_ratio():
    inst, pf = fig1()
    flow = induced_edge_flow(inst, pf)
    assert check_variational_inequality(inst, flow, 1.5).accepted
    for k in (3, 5):
        inst, flow, _ = une_vs_pne_gadget(k, 2)
        assert check_variational_inequality(inst, flow, 2).accepted


def test_vi_rejects_all_bottom_pigou_flow():
    inst = pigou(Affine(0.1, 0), Constant(10))
    decision = check_variational_inequality(inst, EdgeFlow.single([0, 1]), 1e6)
    assert not decision.accepted and decision.theta_min == math.inf


def test_social_optimum_satisfies_vi_at_gamma():
    inst = pigou(Constant(1), Affine(1, 0))
    so = solve_social_optimum(inst, SolverConfig(tol=1e-12))
    decision = check_variational_inequality(inst, so.flow, 2)
    assert decision.accepted
    assert decision.theta_min == pytest.approx(1.5, abs=1e-6)
