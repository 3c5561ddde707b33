"""Randomized routing: a rotated hash of user ids onto path intervals.

Users of commodity ``k`` carry ids in ``[0, 1)``. The used paths of ``k``
split ``[0, 1)`` into consecutive half-open intervals of length ``f_p/d_k``;
a user with id ``i`` under rotation ``X`` takes the path whose interval
contains ``frac(i + X)``.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DomainError
from .latency import Number, exact
from .model import Instance, Path, PathFlow, induced_edge_flow, path_cost


@dataclass(frozen=True)
class PathOrdering:
    """Per commodity: the used paths in lexicographic order and their cumulative right endpoints."""

    paths: tuple[tuple[Path, ...], ...]
    endpoints: tuple[tuple[Number, ...], ...]

    def intervals(self, k: int) -> list[tuple[Number, Number]]:
        ends = self.endpoints[k]
        return [(0 if i == 0 else ends[i - 1], ends[i]) for i in range(len(ends))]

    def lengths(self, k: int) -> list[Number]:
        return [b - a for a, b in self.intervals(k)]


def build_ordering(pf: PathFlow) -> PathOrdering:
    paths, ends = [], []
    for k in range(pf.n_commodities):
        items = sorted(pf.items(k))
        total = pf.total(k)
        acc: Number = 0
        row = []
        for _p, f in items:
            acc = acc + f
            row.append(Fraction(acc) / Fraction(total) if exact(acc) and exact(total) else acc / total)
        row[-1] = 1  # absorb rounding in the last endpoint
        paths.append(tuple(p for p, _ in items))
        ends.append(tuple(row))
    return PathOrdering(tuple(paths), tuple(ends))


def frac(x: Number) -> Number:
    return x - math.floor(x)


def hash_assign(order: PathOrdering, x: Number, k: int, user_id: Number) -> Path:
    """The path of user ``(k, user_id)`` under rotation ``x``; interval boundaries belong to the right."""
    if not (0 <= x < 1 and 0 <= user_id < 1):
        raise DomainError("rotation and id must lie in [0, 1)")
    pos = frac(user_id + x)
    i = bisect.bisect_right(order.endpoints[k], pos)
    return order.paths[k][min(i, len(order.paths[k]) - 1)]


def draw_rotation(seed: int = 0) -> float:
    """One uniform rotation from a Philox stream keyed by ``seed``."""
    return float(np.random.Generator(np.random.Philox(np.random.SeedSequence(seed))).random())


def used_latencies(inst: Instance, pf: PathFlow, k: int) -> list[tuple[Path, Number, Number]]:
    """``(path, flow, latency)`` for the used paths of ``k`` at the induced loads."""
    costs = inst.edge_costs(induced_edge_flow(inst, pf))
    return [(p, f, path_cost(costs, p)) for p, f in pf.items(k)]


def expected_latency(inst: Instance, pf: PathFlow, k: int) -> Number:
    rows = used_latencies(inst, pf, k)
    return sum(f * lat for _, f, lat in rows) / pf.total(k)


def analytic_variance(inst: Instance, pf: PathFlow, k: int) -> Number:
    rows = used_latencies(inst, pf, k)
    mean = expected_latency(inst, pf, k)
    return sum(f * (lat - mean) ** 2 for _, f, lat in rows) / pf.total(k)


@dataclass(frozen=True)
class StdBound:
    formula: float  # (theta - 1)/(4 sqrt(theta)) * mean, the published closed form
    corrected: float  # (theta - 1)/(2 sqrt(theta)) * mean, the maximum of Bhatia-Davis over L <= theta l
    bhatia_davis: float  # sqrt((L - mean)(mean - l))
    analytic: float  # exact standard deviation of the assigned latency


def stddev_bound(inst: Instance, pf: PathFlow, k: int, theta: float) -> StdBound:
    """Standard-deviation bounds for the latency of a randomly routed user of ``k``.

    With every used path in ``[l, theta l]``, ``(L - m)(m - l)`` peaks at
    ``m^2 (theta-1)^2 / (4 theta)``, so ``corrected`` always holds for a
    theta-UNE or theta-EF path flow. ``formula`` is half of it and can fail
    when the used latencies sit at both ends of the band.
    """
    if not theta >= 1:
        raise DomainError(f"theta must be >= 1, got {theta}")
    rows = used_latencies(inst, pf, k)
    mean = float(expected_latency(inst, pf, k))
    hi = float(max(lat for *_, lat in rows))
    lo = float(min(lat for *_, lat in rows))
    bd = math.sqrt(max(0.0, (hi - mean) * (mean - lo)))
    return StdBound(
        formula=(theta - 1) / (4 * math.sqrt(theta)) * mean,
        corrected=(theta - 1) / (2 * math.sqrt(theta)) * mean,
        bhatia_davis=bd,
        analytic=math.sqrt(max(0.0, float(analytic_variance(inst, pf, k)))),
    )


@dataclass(frozen=True)
class MonteCarloStats:
    mean: float
    std: float
    std_err: float
    samples: int
    masses: dict[Path, float]


def monte_carlo(
    inst: Instance, pf: PathFlow, trials: int, ids_per_commodity: int = 64, seed: int = 0
) -> list[MonteCarloStats]:
    """Simulate ``trials`` rotations with stratified ids ``(j + U_j)/m``.

    Each commodity draws from its own Philox stream spawned from ``seed``, so
    results do not depend on the number of commodities processed before it.
    """
    if trials < 1:
        raise DomainError("need at least one trial")
    if ids_per_commodity < 1:
        raise DomainError("need at least one id per commodity")
    order = build_ordering(pf)
    streams = np.random.SeedSequence(seed).spawn(pf.n_commodities)
    out = []
    for k in range(pf.n_commodities):
        rng = np.random.Generator(np.random.Philox(streams[k]))
        lat_of = {p: float(lat) for p, _, lat in used_latencies(inst, pf, k)}
        lats = np.array([lat_of[p] for p in order.paths[k]])
        ends = np.array([float(c) for c in order.endpoints[k]])
        m = ids_per_commodity
        x = rng.random(trials)
        ids = (np.arange(m)[None, :] + rng.random((trials, m))) / m
        pos = np.mod(ids + x[:, None], 1.0)
        idx = np.minimum(np.searchsorted(ends, pos, side="right"), len(lats) - 1)
        vals = lats[idx]
        n = vals.size
        std = float(vals.std())
        counts = np.bincount(idx.ravel(), minlength=len(lats))
        out.append(
            MonteCarloStats(
                mean=float(vals.mean()),
                std=std,
                std_err=std / math.sqrt(n),
                samples=n,
                masses={p: float(c) / n for p, c in zip(order.paths[k], counts)},
            )
        )
    return out
