"""Conditional-gradient minimization of separable convex edge potentials.

Every problem here has the form ``min sum_e int_0^{x_e} phi_e`` over feasible
multicommodity flows. ``phi = l`` gives Wardrop equilibria, ``phi = l*`` social
optima, and banded or tolled integrands give approximate equilibria with
better social cost.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Any

from scipy.integrate import quad

from . import graph
from ._parallel import ordered_map
from .errors import (
    CapabilityError,
    ConvergenceError,
    DomainError,
    InfeasibleError,
    StructuralError,
    ValidationError,
)
from .latency import MM1, POLE_MARGIN, Affine, Constant, LatencyFn, Number, Polynomial
from .model import EdgeFlow, Instance, Path, PathFlow, sum_cost

# ---------------------------------------------------------------------------
# integrands


class Integrand(ABC):
    """Per-edge potential integrand ``phi_e`` (float arithmetic)."""

    @abstractmethod
    def value(self, x: float) -> float: ...

    @abstractmethod
    def integral(self, x: float) -> float: ...

    @property
    def domain_limit(self) -> float:
        """Loads must stay strictly below this value."""
        return math.inf

    def __call__(self, x: float) -> float:
        return self.value(x)


@dataclass(frozen=True)
class Beckmann(Integrand):
    latency: LatencyFn

    def value(self, x):
        return self.latency.value(x)

    def integral(self, x):
        return self.latency.integral(x)

    @property
    def domain_limit(self):
        return _pole(self.latency)


@dataclass(frozen=True)
class Marginal(Integrand):
    latency: LatencyFn

    def value(self, x):
        return self.latency.marginal(x)

    def integral(self, x):
        # d/dx [x l(x)] = l*(x)
        return x * self.latency.value(x) if x > 0 else 0.0

    @property
    def domain_limit(self):
        return _pole(self.latency)


@dataclass(frozen=True)
class ScaledMM1(Integrand):
    """``1 / (u - a x)``: an M/M/1 delay whose load is discounted by ``a``."""

    u: float
    a: float

    def value(self, x):
        slack = self.u - self.a * x
        if slack <= POLE_MARGIN or x < 0:
            raise DomainError(f"load {x!r} outside the domain of 1/(u - a x)")
        return 1.0 / slack

    def integral(self, x):
        if self.a == 0:
            return x / self.u
        return math.log(self.u / (self.u - self.a * x)) / self.a

    @property
    def domain_limit(self):
        return self.u / self.a if self.a > 0 else math.inf


@dataclass(frozen=True)
class Banded(Integrand):
    """``min(l, max(l/theta, l*/gamma))``: marginal cost squeezed into the band."""

    latency: LatencyFn
    theta: float
    gamma: float

    def value(self, x):
        lx = self.latency.value(x)
        return min(lx, max(lx / self.theta, self.latency.marginal(x) / self.gamma))

    def integral(self, x):
        return _quad(self.value, x)

    @property
    def domain_limit(self):
        return _pole(self.latency)


@dataclass(frozen=True)
class Tolled(Integrand):
    """``l + min(x l', eps l)``: latency plus a marginal-cost toll capped at ``eps l``."""

    latency: LatencyFn
    eps: float

    def value(self, x):
        lx = self.latency.value(x)
        return lx + min(x * self.latency.derivative(x), self.eps * lx)

    def integral(self, x):
        return _quad(self.value, x)

    @property
    def domain_limit(self):
        return _pole(self.latency)


def _pole(lat: LatencyFn) -> float:
    return float(lat.u) if isinstance(lat, MM1) else math.inf


def _quad(fn, x: float) -> float:
    if x <= 0:
        return 0.0
    val, _err = quad(fn, 0.0, x, limit=200)
    return val


@dataclass(frozen=True)
class PotentialSpec:
    """Edge integrands plus a tag describing how they were obtained."""

    kind: str  # "beckmann" | "marginal" | "modified" | "toll"
    terms: tuple[Integrand, ...]
    params: dict[str, Any] = field(default_factory=dict)

    def value(self, loads: Sequence[float]) -> float:
        return sum(t.integral(float(x)) for t, x in zip(self.terms, loads))


def beckmann_potential(inst: Instance) -> PotentialSpec:
    return PotentialSpec("beckmann", tuple(Beckmann(e.latency.to_float()) for e in inst.edges))


def marginal_potential(inst: Instance) -> PotentialSpec:
    return PotentialSpec("marginal", tuple(Marginal(e.latency.to_float()) for e in inst.edges))


def design_modified_potential(inst: Instance, theta: float) -> PotentialSpec:
    """Integrands inside ``[l/theta, l]`` on ``[0, d_tot]``.

    M/M/1 edges use ``1/(u - a x)`` with ``a = rho(theta)/rho``, ``rho = d_tot/u``
    and ``rho(theta) = max(0, 1 - theta (1 - rho))``. Polynomial, affine and
    constant edges use :class:`Banded` with ``gamma = p + 1`` for the largest
    degree ``p`` among them, which reproduces the social optimum once
    ``theta >= gamma``.
    """
    theta = float(theta)
    if not theta >= 1:
        raise DomainError(f"theta must be >= 1, got {theta}")
    if theta == 1:
        spec = beckmann_potential(inst)
        return PotentialSpec("modified", spec.terms, {"theta": 1.0})
    d_tot = float(inst.total_demand)
    poly_degrees = [e.latency.degree for e in inst.edges if isinstance(e.latency, (Polynomial, Affine, Constant))]
    gamma = float(max(poly_degrees, default=0) + 1)
    terms: list[Integrand] = []
    scales: list[float | None] = []
    for i, e in enumerate(inst.edges):
        lat = e.latency.to_float()
        if isinstance(lat, MM1):
            rho = d_tot / lat.u
            rho_theta = max(0.0, 1.0 - theta * (1.0 - rho))
            a = min(1.0, rho_theta / rho)
            terms.append(ScaledMM1(lat.u, a))
            scales.append(a)
        elif isinstance(lat, (Polynomial, Affine, Constant)):
            terms.append(Banded(lat, theta, gamma))
            scales.append(None)
        else:
            raise CapabilityError(f"edge {i}: no modified potential for latency kind {lat.kind!r}")
    return PotentialSpec("modified", tuple(terms), {"theta": theta, "gamma": gamma, "mm1_a": scales})


def bounded_toll_potential(inst: Instance, eps: float) -> PotentialSpec:
    """Latency plus the toll ``min(x l'(x), eps l(x))`` on every edge."""
    eps = float(eps)
    if not eps >= 0:
        raise DomainError(f"toll bound must be >= 0, got {eps}")
    if eps == 0:
        return PotentialSpec("toll", beckmann_potential(inst).terms, {"eps": 0.0})
    return PotentialSpec("toll", tuple(Tolled(e.latency.to_float(), eps) for e in inst.edges), {"eps": eps})


# ---------------------------------------------------------------------------
# solver


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rule and step policy.

    ``method="pairwise"`` moves flow from the costliest active path to the
    current shortest path and can drop paths exactly; ``method="classic"`` is the
    textbook all-or-nothing direction with either an exact line search or the
    open-loop step ``2/(t+2)``.
    """

    tol: float = 1e-8
    max_iter: int = 100_000
    step_rule: str = "line_search"  # or "open_loop"
    method: str = "pairwise"  # or "classic"
    bisection_steps: int = 60

    def __post_init__(self) -> None:
        if not self.tol > 0:
            raise ValidationError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")
        if self.step_rule not in ("line_search", "open_loop"):
            raise ValidationError(f"unknown step rule {self.step_rule!r}")
        if self.method not in ("pairwise", "classic"):
            raise ValidationError(f"unknown method {self.method!r}")
        if self.method == "pairwise" and self.step_rule != "line_search":
            raise ValidationError("the pairwise method requires the line-search step rule")


@dataclass(frozen=True)
class SolveResult:
    flow: EdgeFlow
    path_flow: PathFlow
    potential: float
    gap: float
    iterations: int
    social_cost: float
    converged: bool = True
    history: tuple[float, ...] = ()


def shortest_path(inst: Instance, edge_costs: Sequence[Number], commodity: int) -> tuple[Path, Number]:
    """Minimum-cost simple path; ties go to the lexicographically smallest edge sequence."""
    if len(edge_costs) != inst.n_edges:
        raise StructuralError("need one cost per edge")
    if any(c < 0 for c in edge_costs):
        raise DomainError("edge costs must be nonnegative")
    com = inst.commodities[commodity]
    found = graph.shortest_path(inst.n_nodes, inst.arcs, edge_costs, com.source, com.sink)
    if found is None:
        raise StructuralError(f"commodity {commodity}: sink unreachable")
    return found


class _State:
    """Path flows per commodity with cached aggregate loads."""

    def __init__(self, inst: Instance, paths: list[dict[Path, float]]):
        self.inst = inst
        self.paths = paths
        self.x = [0.0] * inst.n_edges
        self.refresh()

    def refresh(self) -> None:
        x = [0.0] * self.inst.n_edges
        for row in self.paths:
            for p, f in row.items():
                for e in p:
                    x[e] += f
        self.x = x

    def edge_flow(self) -> EdgeFlow:
        rows = []
        for row in self.paths:
            loads = [0.0] * self.inst.n_edges
            for p, f in row.items():
                for e in p:
                    loads[e] += f
            rows.append(tuple(loads))
        return EdgeFlow(tuple(rows))

    def path_flow(self) -> PathFlow:
        return PathFlow.from_dicts(self.paths)


def _costs(terms: Sequence[Integrand], x: Sequence[float]) -> list[float]:
    return [t.value(xe) for t, xe in zip(terms, x)]


def _safe_value(term: Integrand, x: float) -> float:
    if x >= term.domain_limit - POLE_MARGIN:
        return math.inf
    try:
        return term.value(max(0.0, x))
    except DomainError:
        return math.inf


def _bisect(g, hi: float, steps: int) -> float:
    """Largest ``t`` in ``[0, hi]`` found by bisection with ``g(t) <= 0`` (g increasing)."""
    lo = 0.0
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) <= 0:
            lo = mid
        else:
            hi = mid
    return lo


def _capacity_check(inst: Instance, terms: Sequence[Integrand]) -> None:
    caps = [t.domain_limit for t in terms]
    if all(math.isinf(c) for c in caps):
        return
    for k, com in enumerate(inst.commodities):
        value, _ = graph.max_flow(inst.n_nodes, inst.arcs, caps, com.source, com.sink)
        if value <= com.demand:
            raise InfeasibleError(
                f"commodity {k}: demand {com.demand} is not below the network capacity {value}"
            )


def _all_or_nothing(inst: Instance, costs: Sequence[float]) -> list[tuple[Path, float]]:
    return ordered_map(lambda k: shortest_path(inst, costs, k), range(len(inst.commodities)))


def _feasible_start(inst: Instance, terms: Sequence[Integrand]) -> list[dict[Path, float]]:
    zero_costs = [t.value(0.0) for t in terms]
    paths = [{p: float(c.demand)} for (p, _), c in zip(_all_or_nothing(inst, zero_costs), inst.commodities)]
    loads = [0.0] * inst.n_edges
    for row in paths:
        for p, f in row.items():
            for e in p:
                loads[e] += f
    if all(x < t.domain_limit - POLE_MARGIN for x, t in zip(loads, terms)):
        return paths
    # Spread each commodity over a scaled maximum flow of the residual capacity.
    residual = [t.domain_limit * (1 - 1e-9) for t in terms]
    out: list[dict[Path, float]] = []
    for k, com in enumerate(inst.commodities):
        d = float(com.demand)
        free = {e for e, r in enumerate(residual) if math.isinf(r)}
        open_path = graph.shortest_path(inst.n_nodes, inst.arcs, [1.0] * inst.n_edges, com.source, com.sink, free)
        if open_path is not None:
            out.append({open_path[0]: d})
            continue
        value, fl = graph.max_flow(inst.n_nodes, inst.arcs, residual, com.source, com.sink)
        if value <= d:
            raise InfeasibleError(f"commodity {k}: no strictly feasible routing of demand {d}")
        scaled = [f * d / value for f in fl]
        row = graph.decompose_flow(inst.n_nodes, inst.arcs, scaled, com.source, com.sink)
        out.append(row)
        for e, f in enumerate(scaled):
            residual[e] -= f
    return out


def minimize_potential(inst: Instance, spec: PotentialSpec, cfg: SolverConfig | None = None) -> SolveResult:
    """Frank-Wolfe on ``sum_e int_0^{x_e} phi_e``.

    The stopping test is the duality gap ``sum_e phi_e(x_e)(x_e - y_e)`` with
    ``y`` the all-or-nothing flow at current costs, compared against
    ``tol * max(1, potential)``.
    """
    cfg = cfg or SolverConfig()
    if len(spec.terms) != inst.n_edges:
        raise ValidationError("potential needs one integrand per edge")
    fi = inst.to_float()
    terms = spec.terms
    _capacity_check(fi, terms)
    state = _State(fi, _feasible_start(fi, terms))
    demands = [c.demand for c in fi.commodities]
    history: list[float] = []
    gap = math.inf
    for it in range(1, cfg.max_iter + 1):
        costs = _costs(terms, state.x)
        targets = _all_or_nothing(fi, costs)
        gap = 0.0
        for k, row in enumerate(state.paths):
            routed = sum(f * sum(costs[e] for e in p) for p, f in row.items())
            gap += routed - demands[k] * targets[k][1]
        gap = max(gap, 0.0)
        upper = sum(x * c for x, c in zip(state.x, costs))  # >= potential for monotone phi
        if gap <= cfg.tol * max(1.0, upper):
            potential = spec.value(state.x)
            if gap <= cfg.tol * max(1.0, potential):
                return _result(fi, state, spec, gap, it, True, history)
        if cfg.method == "pairwise":
            _pairwise_round(fi, terms, state, cfg)
        else:
            _classic_step(fi, terms, state, targets, costs, it, cfg)
        if _track(cfg):
            history.append(spec.value(state.x))
    result = _result(fi, state, spec, gap, cfg.max_iter, False, history)
    raise ConvergenceError(f"no convergence in {cfg.max_iter} iterations (gap {gap:.3g})", result)


def _track(cfg: SolverConfig) -> bool:
    return cfg.max_iter <= 10_000


def _result(fi, state, spec, gap, iterations, converged, history) -> SolveResult:
    return SolveResult(
        flow=state.edge_flow(),
        path_flow=state.path_flow(),
        potential=spec.value(state.x),
        gap=gap,
        iterations=iterations,
        social_cost=float(sum_cost(fi, state.x)),
        converged=converged,
        history=tuple(history),
    )


def _pairwise_round(inst: Instance, terms: Sequence[Integrand], state: _State, cfg: SolverConfig) -> None:
    for k, row in enumerate(state.paths):
        costs = _costs(terms, state.x)
        target, target_cost = shortest_path(inst, costs, k)
        away, away_cost = max(
            ((p, sum(costs[e] for e in p)) for p in row), key=lambda pc: (pc[1], pc[0])
        )
        if away == target or away_cost <= target_cost:
            continue
        tset, aset = set(target), set(away)
        gain = [e for e in target if e not in aset]
        loss = [e for e in away if e not in tset]
        x = state.x

        def g(t: float) -> float:
            up = sum(_safe_value(terms[e], x[e] + t) for e in gain)
            down = sum(terms[e].value(max(0.0, x[e] - t)) for e in loss)
            return up - down

        f_away = row[away]
        t = f_away if g(f_away) <= 0 else _bisect(g, f_away, cfg.bisection_steps)
        if t <= 0:
            continue
        if t >= f_away:
            del row[away]
            t = f_away
        else:
            row[away] = f_away - t
        row[target] = row.get(target, 0.0) + t
        state.refresh()


def _classic_step(inst, terms, state: _State, targets, costs, it: int, cfg: SolverConfig) -> None:
    y = [0.0] * inst.n_edges
    for (p, _), com in zip(targets, inst.commodities):
        for e in p:
            y[e] += com.demand
    x = state.x
    d = [ye - xe for ye, xe in zip(y, x)]
    if cfg.step_rule == "line_search":

        def g(t: float) -> float:
            return sum(_safe_value(terms[e], x[e] + t * d[e]) * d[e] if d[e] > 0 else terms[e].value(max(0.0, x[e] + t * d[e])) * d[e]
                       for e in range(len(d)) if d[e] != 0)

        t = 1.0 if g(1.0) <= 0 else _bisect(g, 1.0, cfg.bisection_steps)
    else:
        t = 2.0 / (it + 2.0)
        while any(x[e] + t * d[e] >= terms[e].domain_limit - POLE_MARGIN for e in range(len(d))):
            t *= 0.5
    if t <= 0:
        return
    for (p, _), row, com in zip(targets, state.paths, inst.commodities):
        for q in list(row):
            row[q] *= 1.0 - t
        row[p] = row.get(p, 0.0) + t * com.demand
    state.refresh()


def solve_nash(inst: Instance, cfg: SolverConfig | None = None) -> SolveResult:
    return minimize_potential(inst, beckmann_potential(inst), cfg)


def solve_social_optimum(inst: Instance, cfg: SolverConfig | None = None) -> SolveResult:
    return minimize_potential(inst, marginal_potential(inst), cfg)


def solve_theta_pne(inst: Instance, theta: float, cfg: SolverConfig | None = None) -> SolveResult:
    return minimize_potential(inst, design_modified_potential(inst, theta), cfg)


def solve_tolled(inst: Instance, eps: float, cfg: SolverConfig | None = None) -> SolveResult:
    return minimize_potential(inst, bounded_toll_potential(inst, eps), cfg)
