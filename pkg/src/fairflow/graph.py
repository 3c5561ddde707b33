"""Small directed-graph routines on edge lists.

Graphs are given as a node count plus ``arcs``: a sequence of ``(tail, head)``
pairs whose position is the edge index. An optional ``allowed`` set restricts
the routines to a subgraph.
"""

from __future__ import annotations

import heapq
from collections import deque
from collections.abc import Collection, Sequence

Arc = tuple[int, int]
Path = tuple[int, ...]


def out_lists(n: int, arcs: Sequence[Arc], allowed: Collection[int] | None = None) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(n)]
    for e, (u, _v) in enumerate(arcs):
        if allowed is None or e in allowed:
            out[u].append(e)
    return out


def reachable(n: int, arcs: Sequence[Arc], source: int, allowed: Collection[int] | None = None) -> set[int]:
    out = out_lists(n, arcs, allowed)
    seen = {source}
    stack = [source]
    while stack:
        u = stack.pop()
        for e in out[u]:
            v = arcs[e][1]
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def shortest_path(
    n: int,
    arcs: Sequence[Arc],
    costs: Sequence,
    source: int,
    sink: int,
    allowed: Collection[int] | None = None,
) -> tuple[Path, object] | None:
    """Dijkstra with labels ``(cost, edge sequence)`` compared lexicographically.

    Among all minimum-cost paths the one whose edge-index sequence is
    lexicographically smallest is returned. Returns ``None`` if ``sink`` is
    unreachable. Costs must be nonnegative.
    """
    out = out_lists(n, arcs, allowed)
    best: dict[int, tuple[object, Path]] = {source: (0, ())}
    heap: list[tuple[object, Path, int]] = [(0, (), source)]
    done: set[int] = set()
    while heap:
        cost, path, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == sink:
            return path, cost
        for e in out[u]:
            v = arcs[e][1]
            if v in done:
                continue
            label = (cost + costs[e], path + (e,))
            if v not in best or label < best[v]:
                best[v] = label
                heapq.heappush(heap, (label[0], label[1], v))
    return None


def topological_order(n: int, arcs: Sequence[Arc], allowed: Collection[int] | None = None) -> list[int] | None:
    """Kahn's algorithm; ``None`` when the (sub)graph has a directed cycle."""
    indeg = [0] * n
    out = out_lists(n, arcs, allowed)
    for u in range(n):
        for e in out[u]:
            indeg[arcs[e][1]] += 1
    queue = deque(u for u in range(n) if indeg[u] == 0)
    order = []
    while queue:
        u = queue.popleft()
        order.append(u)
        for e in out[u]:
            v = arcs[e][1]
            indeg[v] -= 1
            if indeg[v] == 0:
                queue.append(v)
    return order if len(order) == n else None


def find_cycle(n: int, arcs: Sequence[Arc], allowed: Collection[int] | None = None) -> list[int] | None:
    """Edge indices of some directed cycle in the (sub)graph, or ``None``."""
    out = out_lists(n, arcs, allowed)
    color = [0] * n  # 0 new, 1 on stack, 2 finished
    parent_edge: list[int | None] = [None] * n
    for root in range(n):
        if color[root]:
            continue
        color[root] = 1
        stack = [(root, iter(out[root]))]
        while stack:
            u, it = stack[-1]
            advanced = False
            for e in it:
                v = arcs[e][1]
                if color[v] == 0:
                    color[v] = 1
                    parent_edge[v] = e
                    stack.append((v, iter(out[v])))
                    advanced = True
                    break
                if color[v] == 1:
                    cycle = [e]
                    w = u
                    while w != v:
                        pe = parent_edge[w]
                        cycle.append(pe)
                        w = arcs[pe][0]
                    cycle.reverse()
                    return cycle
            if not advanced:
                color[u] = 2
                stack.pop()
    return None


def longest_path_dag(
    n: int,
    arcs: Sequence[Arc],
    weights: Sequence,
    source: int,
    sink: int,
    allowed: Collection[int] | None = None,
) -> tuple[Path, object] | None:
    """Longest ``source``-``sink`` path in an acyclic (sub)graph by dynamic programming.

    Raises ``ValueError`` if the subgraph has a cycle; returns ``None`` if the
    sink cannot be reached.
    """
    order = topological_order(n, arcs, allowed)
    if order is None:
        raise ValueError("longest path requires an acyclic graph")
    out = out_lists(n, arcs, allowed)
    best: dict[int, tuple[object, Path]] = {source: (0, ())}
    for u in order:
        if u not in best:
            continue
        cost, path = best[u]
        for e in out[u]:
            v = arcs[e][1]
            cand = (cost + weights[e], path + (e,))
            cur = best.get(v)
            # larger cost wins; ties keep the lexicographically smaller path
            if cur is None or cand[0] > cur[0] or (cand[0] == cur[0] and cand[1] < cur[1]):
                best[v] = cand
    if sink not in best:
        return None
    cost, path = best[sink]
    return path, cost


def max_flow(
    n: int, arcs: Sequence[Arc], capacity: Sequence[float], source: int, sink: int
) -> tuple[float, list[float]]:
    """Edmonds-Karp maximum flow: ``(value, per-edge flow)``.

    Infinite capacities are allowed; an infinite value is returned as soon as an
    uncapacitated augmenting path exists.
    """
    # residual graph: forward arcs 2e, backward arcs 2e+1
    res = []
    adj: list[list[int]] = [[] for _ in range(n)]
    for e, (u, v) in enumerate(arcs):
        adj[u].append(len(res))
        res.append([v, float(capacity[e])])
        adj[v].append(len(res))
        res.append([u, 0.0])
    total = 0.0
    while True:
        pred: dict[int, int] = {}
        queue = deque([source])
        seen = {source}
        while queue and sink not in seen:
            u = queue.popleft()
            for r in adj[u]:
                v, cap = res[r]
                if cap > 1e-15 and v not in seen:
                    seen.add(v)
                    pred[v] = r
                    queue.append(v)
        if sink not in seen:
            return total, [res[2 * e + 1][1] for e in range(len(arcs))]
        push = float("inf")
        v = sink
        while v != source:
            r = pred[v]
            push = min(push, res[r][1])
            v = res[r ^ 1][0]
        if push == float("inf"):
            return push, [res[2 * e + 1][1] for e in range(len(arcs))]
        v = sink
        while v != source:
            r = pred[v]
            res[r][1] -= push
            res[r ^ 1][1] += push
            v = res[r ^ 1][0]
        total += push


def cancel_cycles(n: int, arcs: Sequence[Arc], loads: Sequence[float], cutoff: float = 0.0) -> list:
    """Subtract flow around directed cycles of the support until it is acyclic."""
    x = list(loads)
    while True:
        support = {e for e, f in enumerate(x) if f > cutoff}
        cycle = find_cycle(n, arcs, support)
        if cycle is None:
            return x
        m = min(x[e] for e in cycle)
        for e in cycle:
            x[e] = x[e] - m
        x[min(cycle, key=lambda e: x[e])] = 0 * m


def decompose_flow(
    n: int, arcs: Sequence[Arc], loads: Sequence[float], source: int, sink: int, cutoff: float = 1e-12
) -> dict[Path, float]:
    """Split a single-commodity edge flow into path flows (cycles are cancelled first)."""
    x = cancel_cycles(n, arcs, loads, cutoff)
    out: dict[Path, float] = {}
    while True:
        support = {e for e, f in enumerate(x) if f > cutoff}
        found = shortest_path(n, arcs, [1] * len(arcs), source, sink, support)
        if found is None:
            return out
        path = found[0]
        m = min(x[e] for e in path)
        for e in path:
            x[e] -= m
        out[path] = out.get(path, 0) + m
