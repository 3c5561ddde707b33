"""Network instances, edge and path flows, and cost evaluation."""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Any

from . import graph
from .errors import CapacityError, StructuralError, ValidationError
from .latency import LatencyFn, Number, exact, to_number

Path = tuple[int, ...]


@dataclass(frozen=True)
class Edge:
    tail: int
    head: int
    latency: LatencyFn


@dataclass(frozen=True)
class Commodity:
    source: int
    sink: int
    demand: Number


@dataclass(frozen=True)
class PositiveThreshold:
    """Cutoff below which a load counts as zero, relative to commodity demand."""

    eps: float = 1e-9

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValidationError("positivity cutoff must be > 0")
        if self.eps > 1e-6:
            raise ValidationError("positivity cutoff must not exceed 1e-6 of the demand")

    def cutoff(self, demand: Number) -> float:
        return self.eps * float(demand)


DEFAULT_THRESHOLD = PositiveThreshold()


@dataclass(frozen=True)
class Instance:
    """A routing game: directed multigraph, per-edge latencies and commodities.

    Nodes are labelled by strings; edges and commodities refer to nodes by
    index. Use :meth:`build` to construct from labels.
    """

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    commodities: tuple[Commodity, ...]

    def __post_init__(self) -> None:
        n = len(self.nodes)
        if len(set(self.nodes)) != n:
            raise ValidationError("node labels must be unique")
        for i, e in enumerate(self.edges):
            if not (0 <= e.tail < n and 0 <= e.head < n):
                raise StructuralError(f"edge {i} refers to an unknown node")
            if e.tail == e.head:
                raise StructuralError(f"edge {i} is a self-loop")
            if not isinstance(e.latency, LatencyFn):
                raise ValidationError(f"edge {i} has no latency function")
        if not self.commodities:
            raise ValidationError("an instance needs at least one commodity")
        for k, c in enumerate(self.commodities):
            if not (0 <= c.source < n and 0 <= c.sink < n):
                raise StructuralError(f"commodity {k} refers to an unknown node")
            if c.source == c.sink:
                raise StructuralError(f"commodity {k} has identical source and sink")
            if not c.demand > 0:
                raise ValidationError(f"commodity {k} demand must be positive, got {c.demand!r}")
            if c.sink not in graph.reachable(n, self.arcs, c.source):
                raise StructuralError(f"commodity {k}: sink {self.nodes[c.sink]!r} unreachable from source")

    @classmethod
    def build(
        cls,
        nodes: Iterable[str] | int,
        edges: Iterable[tuple[str, str, LatencyFn]],
        commodities: Iterable[tuple[str, str, Any]],
    ) -> "Instance":
        if isinstance(nodes, int):
            nodes = range(nodes)
        labels = tuple(str(v) for v in nodes)
        index = {v: i for i, v in enumerate(labels)}
        try:
            es = tuple(Edge(index[str(u)], index[str(v)], lat) for u, v, lat in edges)
            cs = tuple(Commodity(index[str(s)], index[str(t)], to_number(d)) for s, t, d in commodities)
        except KeyError as exc:
            raise StructuralError(f"unknown node {exc.args[0]!r}") from exc
        return cls(labels, es, cs)

    @cached_property
    def arcs(self) -> tuple[tuple[int, int], ...]:
        return tuple((e.tail, e.head) for e in self.edges)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def total_demand(self) -> Number:
        return sum(c.demand for c in self.commodities)

    @property
    def is_exact(self) -> bool:
        return all(e.latency.is_exact for e in self.edges) and all(exact(c.demand) for c in self.commodities)

    def to_float(self) -> "Instance":
        """Copy with every parameter converted to float (solver boundary)."""
        return Instance(
            self.nodes,
            tuple(Edge(e.tail, e.head, e.latency.to_float()) for e in self.edges),
            tuple(Commodity(c.source, c.sink, float(c.demand)) for c in self.commodities),
        )

    def latencies(self) -> tuple[LatencyFn, ...]:
        return tuple(e.latency for e in self.edges)

    def edge_costs(self, flow: "EdgeFlow") -> list[Number]:
        """Per-edge latency at the flow's aggregate loads."""
        return [e.latency.value(x) for e, x in zip(self.edges, flow.aggregate)]


@dataclass(frozen=True)
class EdgeFlow:
    """Per-commodity edge loads; ``loads[k][e]`` is the flow of commodity k on edge e."""

    loads: tuple[tuple[Number, ...], ...]

    def __post_init__(self) -> None:
        rows = tuple(tuple(r) for r in self.loads)
        if rows and len({len(r) for r in rows}) != 1:
            raise ValidationError("all commodities must have one load per edge")
        object.__setattr__(self, "loads", rows)

    @classmethod
    def zeros(cls, inst: Instance) -> "EdgeFlow":
        return cls(tuple((0,) * inst.n_edges for _ in inst.commodities))

    @classmethod
    def single(cls, loads: Sequence[Number]) -> "EdgeFlow":
        return cls((tuple(loads),))

    @cached_property
    def aggregate(self) -> tuple[Number, ...]:
        if not self.loads:
            return ()
        return tuple(sum(col) for col in zip(*self.loads))

    @property
    def n_commodities(self) -> int:
        return len(self.loads)

    def commodity(self, k: int) -> tuple[Number, ...]:
        return self.loads[k]

    def max_abs_diff(self, other: "EdgeFlow") -> float:
        return max(
            (abs(float(a) - float(b)) for ra, rb in zip(self.loads, other.loads) for a, b in zip(ra, rb)),
            default=0.0,
        )

    def support(self, k: int, cutoff: float = 0.0) -> set[int]:
        return {e for e, x in enumerate(self.loads[k]) if x > cutoff}


@dataclass(frozen=True)
class PathFlow:
    """Sparse path flow: per commodity a mapping from edge sequence to flow > 0."""

    flows: tuple[tuple[tuple[Path, Number], ...], ...]
    _maps: tuple[dict[Path, Number], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        rows = []
        maps = []
        for k, row in enumerate(self.flows):
            items = row.items() if isinstance(row, Mapping) else row
            m: dict[Path, Number] = {}
            for path, f in items:
                p = tuple(int(e) for e in path)
                if not p:
                    raise ValidationError(f"commodity {k}: empty path")
                f = to_number(f)
                if not f > 0:
                    raise ValidationError(f"commodity {k}: path {p} has nonpositive flow {f!r}")
                if p in m:
                    raise ValidationError(f"commodity {k}: duplicate path {p}")
                m[p] = f
            maps.append(m)
            rows.append(tuple(sorted(m.items())))
        object.__setattr__(self, "flows", tuple(rows))
        object.__setattr__(self, "_maps", tuple(maps))

    @classmethod
    def from_dicts(cls, rows: Iterable[Mapping[Path, Number]], drop_zeros: bool = True) -> "PathFlow":
        out = []
        for row in rows:
            out.append(tuple((p, f) for p, f in row.items() if not (drop_zeros and f <= 0)))
        return cls(tuple(out))

    @property
    def n_commodities(self) -> int:
        return len(self.flows)

    def items(self, k: int) -> tuple[tuple[Path, Number], ...]:
        return self.flows[k]

    def paths(self, k: int) -> tuple[Path, ...]:
        return tuple(p for p, _ in self.flows[k])

    def flow(self, k: int, path: Path) -> Number:
        return self._maps[k].get(tuple(path), 0)

    def as_dicts(self) -> list[dict[Path, Number]]:
        return [dict(m) for m in self._maps]

    def total(self, k: int) -> Number:
        return sum(f for _, f in self.flows[k])

    def n_paths(self, k: int) -> int:
        return len(self.flows[k])


# ---------------------------------------------------------------------------
# operations


def eval_latency(fn: LatencyFn, x: Number) -> Number:
    return fn.value(x)


def eval_marginal(fn: LatencyFn, x: Number) -> Number:
    return fn.marginal(x)


def path_latency(inst: Instance, flow: EdgeFlow, path: Sequence[int]) -> Number:
    """Sum of edge latencies along ``path`` at the flow's aggregate loads."""
    agg = flow.aggregate
    total: Number = 0
    for e in path:
        if not 0 <= e < inst.n_edges:
            raise StructuralError(f"unknown edge {e}")
        total = total + inst.edges[e].latency.value(agg[e])
    return total


def path_cost(costs: Sequence[Number], path: Sequence[int]) -> Number:
    total: Number = 0
    for e in path:
        total = total + costs[e]
    return total


def induced_edge_flow(inst: Instance, pf: PathFlow) -> EdgeFlow:
    if pf.n_commodities != len(inst.commodities):
        raise ValidationError("path flow and instance disagree on the number of commodities")
    rows = []
    for k in range(pf.n_commodities):
        loads: list[Number] = [0] * inst.n_edges
        for path, f in pf.items(k):
            for e in path:
                if not 0 <= e < inst.n_edges:
                    raise StructuralError(f"unknown edge {e}")
                loads[e] = loads[e] + f
        rows.append(tuple(loads))
    return EdgeFlow(tuple(rows))


def social_cost(inst: Instance, flow: EdgeFlow, tol: float = 1e-7) -> Number:
    """Total latency ``sum_e x_e l_e(x_e)``; rejects infeasible flows."""
    violations = check_feasible(inst, flow, tol)
    if violations:
        raise ValidationError(f"infeasible flow: {violations[0]}")
    return sum_cost(inst, flow.aggregate)


def sum_cost(inst: Instance, loads: Sequence[Number]) -> Number:
    total: Number = 0
    for e, x in zip(inst.edges, loads):
        if x != 0:
            total = total + x * e.latency.value(x)
    return total


@dataclass(frozen=True)
class Violation:
    kind: str  # "conservation" | "nonnegativity" | "shape"
    commodity: int
    where: int  # node index for conservation, edge index for nonnegativity
    amount: float

    def __str__(self) -> str:
        place = "node" if self.kind == "conservation" else "edge"
        return f"{self.kind} violation for commodity {self.commodity} at {place} {self.where}: {self.amount:.3g}"


def check_feasible(inst: Instance, flow: EdgeFlow, tol: float = 1e-9) -> list[Violation]:
    """List conservation and sign violations larger than ``tol`` (absolute)."""
    if not tol > 0:
        raise ValidationError("tol must be positive")
    if flow.n_commodities != len(inst.commodities) or any(len(r) != inst.n_edges for r in flow.loads):
        return [Violation("shape", -1, -1, float("nan"))]
    out: list[Violation] = []
    for k, com in enumerate(inst.commodities):
        loads = flow.loads[k]
        balance: list[Number] = [0] * inst.n_nodes
        for e, x in enumerate(loads):
            if x < -tol:
                out.append(Violation("nonnegativity", k, e, float(x)))
            u, v = inst.arcs[e]
            balance[u] = balance[u] + x
            balance[v] = balance[v] - x
        balance[com.source] = balance[com.source] - com.demand
        balance[com.sink] = balance[com.sink] + com.demand
        for node, b in enumerate(balance):
            if abs(b) > tol:
                out.append(Violation("conservation", k, node, float(b)))
    return out


def check_path_flow(inst: Instance, pf: PathFlow, tol: float = 1e-9) -> list[str]:
    """Problems with a path flow: non-simple paths, wrong endpoints, demand mismatch."""
    problems = []
    if pf.n_commodities != len(inst.commodities):
        return ["path flow and instance disagree on the number of commodities"]
    for k, com in enumerate(inst.commodities):
        for path, _f in pf.items(k):
            if any(not 0 <= e < inst.n_edges for e in path):
                problems.append(f"commodity {k}: path {path} uses an unknown edge")
                continue
            if not is_simple_path(inst, path, com.source, com.sink):
                problems.append(f"commodity {k}: {path} is not a simple {com.source}->{com.sink} path")
        total = pf.total(k)
        if abs(total - com.demand) > tol * max(1.0, float(com.demand)):
            problems.append(f"commodity {k}: path flows sum to {total!r}, demand is {com.demand!r}")
    return problems


def is_simple_path(inst: Instance, path: Sequence[int], source: int, sink: int) -> bool:
    node = source
    seen = {source}
    for e in path:
        u, v = inst.arcs[e]
        if u != node or v in seen:
            return False
        seen.add(v)
        node = v
    return node == sink and len(path) > 0


def enumerate_paths(inst: Instance, commodity: int, limit: int = 4096) -> list[Path]:
    """All simple source-sink paths in lexicographic edge-index order.

    Raises :class:`CapacityError` if more than ``limit`` paths exist.
    """
    if limit < 1:
        raise ValidationError("limit must be at least 1")
    com = inst.commodities[commodity]
    out_edges = graph.out_lists(inst.n_nodes, inst.arcs)
    # prune nodes that cannot reach the sink
    rev = [[] for _ in range(inst.n_nodes)]
    for e, (u, v) in enumerate(inst.arcs):
        rev[v].append(u)
    alive = {com.sink}
    stack = [com.sink]
    while stack:
        v = stack.pop()
        for u in rev[v]:
            if u not in alive:
                alive.add(u)
                stack.append(u)
    result: list[Path] = []
    on_path = [False] * inst.n_nodes

    def dfs(u: int, prefix: list[int]) -> None:
        if u == com.sink:
            if len(result) >= limit:
                raise CapacityError(f"commodity {commodity} has more than {limit} simple paths")
            result.append(tuple(prefix))
            return
        on_path[u] = True
        for e in out_edges[u]:
            v = inst.arcs[e][1]
            if not on_path[v] and v in alive:
                prefix.append(e)
                dfs(v, prefix)
                prefix.pop()
        on_path[u] = False

    dfs(com.source, [])
    return result


def path_flow_edge_cost_identity(inst: Instance, pf: PathFlow) -> tuple[Number, Number]:
    """Both sides of ``sum_e x_e l_e(x_e) = sum_{k,p} f_p l_p``."""
    flow = induced_edge_flow(inst, pf)
    costs = inst.edge_costs(flow)
    lhs = sum_cost(inst, flow.aggregate)
    rhs: Number = 0
    for k in range(pf.n_commodities):
        for path, f in pf.items(k):
            rhs = rhs + f * path_cost(costs, path)
    return lhs, rhs


def combine_path_flows(parts: Sequence[tuple[Number, PathFlow]]) -> PathFlow:
    """Weighted sum ``sum_i w_i * pf_i`` (e.g. a convex combination)."""
    if not parts:
        raise ValidationError("nothing to combine")
    n = parts[0][1].n_commodities
    rows: list[dict[Path, Number]] = [{} for _ in range(n)]
    for w, pf in parts:
        if pf.n_commodities != n:
            raise ValidationError("path flows have different commodity counts")
        for k in range(n):
            for path, f in pf.items(k):
                rows[k][path] = rows[k].get(path, 0) + w * f
    return PathFlow.from_dicts(rows)


def to_fraction_flow(flow: EdgeFlow) -> EdgeFlow:
    return EdgeFlow(tuple(tuple(Fraction(x) for x in row) for row in flow.loads))
