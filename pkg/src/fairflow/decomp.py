"""Path decompositions of edge flows and their fairness certificates.

All ratios are taken at the FIXED edge costs ``l_e(x_e)`` of the flow under
study. A ratio whose denominator path has zero latency is ``inf`` unless the
numerator is zero too.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from . import graph
from .errors import CapabilityError, DomainError, PreconditionError, ValidationError
from .latency import Number, exact
from .lp import feasible_point
from .model import (
    DEFAULT_THRESHOLD,
    EdgeFlow,
    Instance,
    Path,
    PathFlow,
    PositiveThreshold,
    check_path_flow,
    enumerate_paths,
    induced_edge_flow,
    path_cost,
)
from .solvers import shortest_path

Concept = str  # "ef" | "une" | "pne"


def ratio(num: Number, den: Number) -> Number:
    if den == 0:
        return 1 if num == 0 else math.inf
    if exact(num) and exact(den):
        return Fraction(num) / Fraction(den)
    return num / den


@dataclass(frozen=True)
class CommodityFairness:
    theta_ef: Number
    theta_une: Number
    theta_pne: Number | None
    max_used: tuple[Path, Number]
    min_used: tuple[Path, Number]
    shortest: tuple[Path, Number]
    longest_positive: tuple[Path, Number] | None = None


@dataclass(frozen=True)
class FairnessReport:
    commodities: tuple[CommodityFairness, ...]

    @property
    def theta_ef(self) -> Number:
        return max(c.theta_ef for c in self.commodities)

    @property
    def theta_une(self) -> Number:
        return max(c.theta_une for c in self.commodities)

    @property
    def theta_pne(self) -> Number | None:
        vals = [c.theta_pne for c in self.commodities]
        return None if any(v is None for v in vals) else max(vals)

    def theta(self, concept: Concept) -> Number | None:
        return {"ef": self.theta_ef, "une": self.theta_une, "pne": self.theta_pne}[concept]

    def satisfies(self, concept: Concept, theta: Number) -> bool:
        val = self.theta(concept)
        if val is None:
            raise PreconditionError("positive support is cyclic; the PNE ratio is undefined")
        return val <= theta


@dataclass(frozen=True)
class PNEDecision:
    accepted: bool
    theta: Number
    per_commodity: tuple[Number, ...]
    longest_positive: tuple[tuple[Path, Number], ...]
    shortest: tuple[tuple[Path, Number], ...]


@dataclass
class DecompositionTrace:
    """Extraction steps ``(commodity, path, amount)`` with the residual loads after each."""

    steps: list[tuple[int, Path, Number]] = field(default_factory=list)
    residuals: list[tuple[Number, ...]] = field(default_factory=list)


# ---------------------------------------------------------------------------
# positive supports


def positive_support(inst: Instance, flow: EdgeFlow, k: int, threshold: PositiveThreshold = DEFAULT_THRESHOLD) -> set[int]:
    return flow.support(k, threshold.cutoff(inst.commodities[k].demand))


def _require_acyclic(inst: Instance, support: set[int], k: int) -> None:
    cycle = graph.find_cycle(inst.n_nodes, inst.arcs, support)
    if cycle is not None:
        raise PreconditionError(
            f"commodity {k}: positive support contains the cycle {cycle}; run remove_positive_cycles first",
            witness=tuple(cycle),
        )


def remove_positive_cycles(inst: Instance, flow: EdgeFlow) -> EdgeFlow:
    """Cancel every directed cycle of each commodity's support by its bottleneck."""
    rows = [tuple(graph.cancel_cycles(inst.n_nodes, inst.arcs, row)) for row in flow.loads]
    return EdgeFlow(tuple(rows))


def theta_pne(
    inst: Instance, flow: EdgeFlow, threshold: PositiveThreshold = DEFAULT_THRESHOLD
) -> tuple[list[Number], list[tuple[Path, Number]], list[tuple[Path, Number]]]:
    """Per commodity: longest positive path over shortest path, with both witnesses."""
    costs = inst.edge_costs(flow)
    thetas, longest, shortest = [], [], []
    for k, com in enumerate(inst.commodities):
        support = positive_support(inst, flow, k, threshold)
        _require_acyclic(inst, support, k)
        lp = graph.longest_path_dag(inst.n_nodes, inst.arcs, costs, com.source, com.sink, support)
        sp = shortest_path(inst, costs, k)
        if lp is None:
            raise PreconditionError(f"commodity {k}: no positive path carries the demand")
        thetas.append(ratio(lp[1], sp[1]))
        longest.append(lp)
        shortest.append(sp)
    return thetas, longest, shortest


def check_PNE_acyclic(
    inst: Instance, flow: EdgeFlow, theta: Number, threshold: PositiveThreshold = DEFAULT_THRESHOLD
) -> PNEDecision:
    """Accept iff every longest positive path is within ``theta`` of the shortest path."""
    if not theta >= 1:
        raise DomainError(f"theta must be >= 1, got {theta}")
    thetas, longest, shortest = theta_pne(inst, flow, threshold)
    worst = max(thetas)
    return PNEDecision(worst <= theta, worst, tuple(thetas), tuple(longest), tuple(shortest))


# ---------------------------------------------------------------------------
# decompositions


def greedy_decomposition(
    inst: Instance, flow: EdgeFlow, threshold: PositiveThreshold = DEFAULT_THRESHOLD
) -> PathFlow:
    return greedy_decomposition_trace(inst, flow, threshold)[0]


def greedy_decomposition_trace(
    inst: Instance, flow: EdgeFlow, threshold: PositiveThreshold = DEFAULT_THRESHOLD
) -> tuple[PathFlow, DecompositionTrace]:
    """Repeatedly peel the bottleneck off the shortest path of the residual support.

    Costs stay fixed at the input flow. The bottleneck edge is zeroed at each
    step, so at most ``|E|`` paths are produced per commodity.
    """
    costs = inst.edge_costs(flow)
    trace = DecompositionTrace()
    rows: list[dict[Path, Number]] = []
    for k, com in enumerate(inst.commodities):
        cutoff = threshold.cutoff(com.demand)
        residual = list(flow.loads[k])
        _require_acyclic(inst, {e for e, x in enumerate(residual) if x > cutoff}, k)
        out: dict[Path, Number] = {}
        while True:
            support = {e for e, x in enumerate(residual) if x > cutoff}
            found = graph.shortest_path(inst.n_nodes, inst.arcs, costs, com.source, com.sink, support)
            if found is None:
                break
            path = found[0]
            neck = min(path, key=lambda e: (residual[e], e))
            amount = residual[neck]
            for e in path:
                residual[e] -= amount
            residual[neck] = 0 * amount
            out[path] = out.get(path, 0) + amount
            trace.steps.append((k, path, amount))
            trace.residuals.append(tuple(residual))
        rows.append(out)
    return PathFlow.from_dicts(rows), trace


def _null_vector(columns: Sequence[Path], n_edges: int) -> list[Fraction] | None:
    """Exact nonzero ``lam`` with ``sum_j lam_j * 1[e in P_j] = 0`` for all e, if any."""
    m = len(columns)
    mat = [[Fraction(int(e in set(p))) for p in columns] for e in range(n_edges)]
    pivots: list[int] = []
    r = 0
    for c in range(m):
        pr = next((i for i in range(r, n_edges) if mat[i][c] != 0), None)
        if pr is None:
            continue
        mat[r], mat[pr] = mat[pr], mat[r]
        piv = mat[r][c]
        mat[r] = [v / piv for v in mat[r]]
        for i in range(n_edges):
            if i != r and mat[i][c] != 0:
                f = mat[i][c]
                mat[i] = [a - f * b for a, b in zip(mat[i], mat[r])]
        pivots.append(c)
        r += 1
        if r == n_edges:
            break
    free = next((c for c in range(m) if c not in pivots), None)
    if free is None:
        return None
    lam = [Fraction(0)] * m
    lam[free] = Fraction(1)
    for row_i, c in enumerate(pivots):
        lam[c] = -mat[row_i][free]
    return lam


def sparsify(inst: Instance, pf: PathFlow) -> PathFlow:
    """Carathéodory reduction to linearly independent used paths (hence at most ``|E|``).

    Each round takes the longest used path, the shortest used path and then
    the others in lexicographic order, finds an exact null combination of the
    first ``|E| + 1`` incidence columns and shifts flow along it until one path
    empties, preferring the direction that drains the longest path. The
    induced edge flow is unchanged and the used set only shrinks, so the
    longest used path cannot get longer and the shortest cannot get shorter.
    """
    loads = induced_edge_flow(inst, pf)
    costs = inst.edge_costs(loads)
    rows = []
    for k in range(pf.n_commodities):
        cur: dict[Path, Number] = dict(pf.items(k))
        lat = {p: path_cost(costs, p) for p in cur}
        while len(cur) > 1:
            longest = max(cur, key=lambda p: (lat[p], tuple(-e for e in p)))
            shortest = min((p for p in cur if p != longest), key=lambda p: (lat[p], p))
            rest = sorted(p for p in cur if p not in (longest, shortest))
            cols = ([longest, shortest] + rest)[: inst.n_edges + 1]
            lam = _null_vector(cols, inst.n_edges)
            if lam is None:
                if len(cols) == len(cur):
                    break
                raise AssertionError("more than |E| + 1 columns must be dependent")
            if lam[0] > 0 or (lam[0] == 0 and next(v for v in lam if v != 0) > 0):
                lam = [-v for v in lam]
            is_exact = all(exact(cur[p]) for p in cols)
            step = None
            drop = None
            for p, v in zip(cols, lam):
                if v < 0:
                    t = cur[p] / (-v) if is_exact else float(cur[p]) / float(-v)
                    if step is None or t < step:
                        step, drop = t, p
            for p, v in zip(cols, lam):
                if v != 0:
                    cur[p] = cur[p] + step * (v if is_exact else float(v))
            del cur[drop]
            for p in [p for p in cur if not cur[p] > 0]:
                del cur[p]
        rows.append(cur)
    return PathFlow.from_dicts(rows)


# ---------------------------------------------------------------------------
# measurement


def _extreme(items, largest: bool) -> tuple[Path, Number]:
    if largest:
        return max(items, key=lambda pl: (pl[1], tuple(-e for e in pl[0])))
    return min(items, key=lambda pl: (pl[1], pl[0]))


def measure_fairness(
    inst: Instance, pf: PathFlow, threshold: PositiveThreshold = DEFAULT_THRESHOLD
) -> FairnessReport:
    """Minimal theta per commodity for EF and UNE on ``pf``, plus PNE on its induced edge flow."""
    problems = check_path_flow(inst, pf, tol=1e-6)
    if problems:
        raise ValidationError(problems[0])
    flow = induced_edge_flow(inst, pf)
    costs = inst.edge_costs(flow)
    try:
        pne_vals, longest, _ = theta_pne(inst, flow, threshold)
    except PreconditionError:
        pne_vals, longest = None, None
    out = []
    for k in range(pf.n_commodities):
        used = [(p, path_cost(costs, p)) for p in pf.paths(k)]
        hi = _extreme(used, largest=True)
        lo = _extreme(used, largest=False)
        sp = shortest_path(inst, costs, k)
        out.append(
            CommodityFairness(
                theta_ef=ratio(hi[1], lo[1]),
                theta_une=ratio(hi[1], sp[1]),
                theta_pne=None if pne_vals is None else pne_vals[k],
                max_used=hi,
                min_used=lo,
                shortest=sp,
                longest_positive=None if longest is None else longest[k],
            )
        )
    return FairnessReport(tuple(out))


# ---------------------------------------------------------------------------
# exhaustive oracle


def _decompose_within(
    paths: Sequence[Path], edges: Sequence[int], loads: Sequence[Fraction], demand: Fraction
) -> dict[Path, Fraction] | None:
    if not paths:
        return None
    covered = set().union(*map(set, paths))
    if any(e not in covered for e in edges):
        return None
    a = [[int(e in set(p)) for p in paths] for e in edges]
    a.append([1] * len(paths))
    sol = feasible_point(a, [loads[e] for e in edges] + [demand])
    if sol is None:
        return None
    return {p: f for p, f in zip(paths, sol) if f > 0}


def brute_force_best_decomposition(
    inst: Instance, flow: EdgeFlow, concept: Concept, path_limit: int = 4096
) -> tuple[Number, PathFlow]:
    """Smallest theta over all path decompositions of ``flow`` (exact rationals).

    ``concept="une"`` scans candidate maximum latencies upwards from the
    flow-weighted average; ``concept="ef"`` scans candidate (min, max)
    latency pairs bracketing the average in order of their ratio. Each
    candidate is an exact LP feasibility question over the allowed paths.
    """
    concept = concept.lower()
    if concept not in ("ef", "une"):
        raise DomainError(f"concept must be 'ef' or 'une', got {concept!r}")
    if not inst.is_exact or not all(exact(x) for row in flow.loads for x in row):
        raise CapabilityError("the exhaustive oracle needs rational instance data and flows")
    costs = inst.edge_costs(flow)
    worst: Number = 1
    rows = []
    for k, com in enumerate(inst.commodities):
        loads = [Fraction(x) for x in flow.loads[k]]
        if any(x < 0 for x in loads):
            raise ValidationError(f"commodity {k}: negative load")
        edges = [e for e, x in enumerate(loads) if x > 0]
        eset = set(edges)
        paths = [p for p in enumerate_paths(inst, k, path_limit) if eset.issuperset(p)]
        lat = {p: path_cost(costs, p) for p in paths}
        demand = Fraction(com.demand)
        avg = sum(costs[e] * loads[e] for e in edges) / demand
        levels = sorted(set(lat.values()))
        best = None
        if concept == "une":
            sp_cost = shortest_path(inst, costs, k)[1]
            for top in levels:
                if top < avg:
                    continue
                sol = _decompose_within([p for p in paths if lat[p] <= top], edges, loads, demand)
                if sol is not None:
                    best = (ratio(top, sp_cost), sol)
                    break
        else:
            pairs = [(lo, hi) for lo in levels if lo <= avg for hi in levels if hi >= avg and hi >= lo]
            pairs.sort(key=lambda lh: (ratio(lh[1], lh[0]), lh[0]))
            for lo, hi in pairs:
                sol = _decompose_within([p for p in paths if lo <= lat[p] <= hi], edges, loads, demand)
                if sol is not None:
                    best = (ratio(hi, lo), sol)
                    break
        if best is None:
            raise PreconditionError(f"commodity {k}: the flow has no path decomposition (cyclic or infeasible)")
        worst = max(worst, best[0])
        rows.append(best[1])
    return worst, PathFlow.from_dicts(rows)
