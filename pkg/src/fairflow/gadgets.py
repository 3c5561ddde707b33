"""Deterministic instance generators with their reference flows.

Everything here is built from integers and ``Fraction`` so that path
latencies of the reference flows can be compared with zero tolerance.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction

from .errors import ConstructionError, DomainError, ValidationError
from .latency import Affine, Constant, LatencyFn, Number, Polynomial, rational
from .model import EdgeFlow, Instance, Path, PathFlow, combine_path_flows, induced_edge_flow

HALF = Fraction(1, 2)


def pigou(top: LatencyFn, bottom: LatencyFn, d: Number = 1) -> Instance:
    """Two parallel links ``s -> t``; edge 0 is the top link, edge 1 the bottom one."""
    return Instance.build(["s", "t"], [("s", "t", top), ("s", "t", bottom)], [("s", "t", d)])


def _positive_ints(q: Iterable[int]) -> tuple[int, ...]:
    q = tuple(q)
    for v in q:
        if isinstance(v, bool) or not isinstance(v, int) or v < 1:
            raise ValidationError(f"PARTITION data must be positive integers, got {v!r}")
    return q


def two_link(q: int) -> Instance:
    """G(q): top link of constant latency ``q``, bottom link ``q x``, unit demand."""
    (q,) = _positive_ints([q])
    return pigou(Constant(q), Affine(q, 0), 1)


def _chain_edges(q: Sequence[int]) -> list[tuple[str, str, LatencyFn]]:
    edges = []
    for i, qi in enumerate(q):
        edges.append((f"v{i}", f"v{i + 1}", Constant(qi)))
        edges.append((f"v{i}", f"v{i + 1}", Affine(qi, 0)))
    return edges


def partition_chain(q: Sequence[int]) -> Instance:
    """Series composition of ``G(q_1), ..., G(q_n)``; stage i has top edge 2i, bottom edge 2i+1."""
    q = _positive_ints(q)
    if not q:
        raise ValidationError("the chain needs at least one stage")
    nodes = [f"v{i}" for i in range(len(q) + 1)]
    return Instance.build(nodes, _chain_edges(q), [("v0", f"v{len(q)}", 1)])


def subset_path(n: int, subset: Iterable[int]) -> Path:
    """The chain path taking the top link exactly at the stages in ``subset``."""
    chosen = set(subset)
    return tuple(2 * i if i in chosen else 2 * i + 1 for i in range(n))


def chain_so_loads(n: int) -> list[Fraction]:
    return [HALF] * (2 * n)


def partition_chain_so(q: Sequence[int]) -> EdgeFlow:
    """The social optimum of the chain: half a unit on every link."""
    return EdgeFlow.single(chain_so_loads(len(q)))


def balanced_partition(q: Sequence[int]) -> tuple[int, ...] | None:
    """Stage indices of a subset summing to half the total, or ``None``."""
    total = sum(q)
    if total % 2:
        return None
    reach: dict[int, tuple[int, ...]] = {0: ()}
    for i, v in enumerate(q):
        for s, sub in list(reach.items()):
            reach.setdefault(s + v, sub + (i,))
    return reach.get(total // 2)


# ---------------------------------------------------------------------------
# hardness network H


@dataclass(frozen=True)
class HardnessParams:
    q: tuple[int, ...]
    p: int
    alpha: Fraction
    beta: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "q", _positive_ints(self.q))
        object.__setattr__(self, "alpha", rational(self.alpha))
        object.__setattr__(self, "beta", rational(self.beta))
        if not self.q:
            raise ConstructionError("need at least one PARTITION item")
        if isinstance(self.p, bool) or not isinstance(self.p, int) or self.p < 1:
            raise ConstructionError(f"degree p must be an integer >= 1, got {self.p!r}")
        if not (self.alpha > 0 and self.beta > 0):
            raise ConstructionError("alpha and beta must be positive")
        if not self.beta * self.p > 1:
            raise ConstructionError(f"need beta * p > 1, got {self.beta * self.p}")
        if not self.B > Fraction(3, 8):
            raise ConstructionError("need B > 3/8")

    @property
    def B(self) -> Fraction:
        return Fraction(sum(self.q), 2)

    @property
    def low(self) -> Fraction:
        """SO load on the bottom link of the tail block, ``3/(8B)``."""
        return Fraction(3, 8) / self.B

    @property
    def a(self) -> Fraction:
        return self.alpha * self.B / (1 - self.low) ** self.p

    @property
    def b(self) -> Fraction:
        return self.beta * self.B * (self.p + 1)

    @property
    def c(self) -> Fraction:
        return (self.alpha + self.beta) * self.B / self.low**self.p

    @property
    def c1(self) -> Fraction:
        s = self.alpha + self.beta
        return (s + self.beta * self.p + Fraction(3, 2)) / (s + 1)

    @property
    def c2(self) -> Fraction:
        s = self.alpha + self.beta
        return (s + self.beta * self.p + Fraction(3, 2)) / (s + 2)

    @property
    def top_edge(self) -> int:
        return 2 * len(self.q)

    @property
    def bottom_edge(self) -> int:
        return 2 * len(self.q) + 1


def hardness_instance(params: HardnessParams) -> Instance:
    """The chain followed by a block with top ``a x^p + b`` and bottom ``c x^p``."""
    n = len(params.q)
    top = Polynomial((params.b,) + (0,) * (params.p - 1) + (params.a,))
    bottom = Polynomial((0,) * params.p + (params.c,))
    edges = _chain_edges(params.q) + [(f"v{n}", "t", top), (f"v{n}", "t", bottom)]
    nodes = [f"v{i}" for i in range(n + 1)] + ["t"]
    return Instance.build(nodes, edges, [("v0", "t", 1)])


def hardness_so(params: HardnessParams) -> EdgeFlow:
    return EdgeFlow.single(chain_so_loads(len(params.q)) + [1 - params.low, params.low])


def hardness_witness(params: HardnessParams, subset: Iterable[int], concept: str) -> PathFlow:
    """The explicit YES-instance decompositions of the SO flow of H.

    ``concept="une"`` uses ``P_I + top`` at 1/2, ``P_{I^c} + top`` at
    ``1/2 - 3/(8B)`` and ``P_{I^c} + bottom`` at ``3/(8B)``. ``concept="ef"``
    uses ``P_[n] + bottom`` and ``P_empty + top`` at ``3/(8B)`` and both
    ``P_I + top`` and ``P_{I^c} + top`` at ``1/2 - 3/(8B)``.
    """
    n = len(params.q)
    subset = set(subset)
    rest = set(range(n)) - subset
    top, bot, low = params.top_edge, params.bottom_edge, params.low
    p_i, p_c = subset_path(n, subset), subset_path(n, rest)
    if concept == "une":
        row = {p_i + (top,): HALF, p_c + (top,): HALF - low, p_c + (bot,): low}
    elif concept == "ef":
        row = {
            subset_path(n, range(n)) + (bot,): low,
            p_i + (top,): HALF - low,
            p_c + (top,): HALF - low,
            subset_path(n, ()) + (top,): low,
        }
    else:
        raise DomainError(f"concept must be 'une' or 'ef', got {concept!r}")
    return PathFlow.from_dicts([row])


def solve_alpha_beta(p: int, theta: Number, concept: str) -> tuple[Fraction, Fraction]:
    """Positive ``(alpha, beta)`` with ``beta p > 1`` and ``c1 = theta`` (UNE) or ``c2 = theta`` (EF).

    Both targets are linear in ``alpha`` once ``beta`` is fixed; ``beta`` is
    taken as ``max(2/p, 2 t)`` with ``t`` the threshold above which ``alpha``
    comes out positive.
    """
    if isinstance(p, bool) or not isinstance(p, int) or p < 1:
        raise DomainError(f"degree p must be an integer >= 1, got {p!r}")
    th = rational(theta)
    concept = concept.lower()
    if concept == "une":
        if not 1 < th < p + 1:
            raise DomainError(f"UNE target must lie in (1, {p + 1}), got {theta}")
        threshold = (th - Fraction(3, 2)) / (p + 1 - th)
        beta = max(Fraction(2, p), 2 * threshold)
        alpha = (HALF + beta * p) / (th - 1) - 1 - beta
    elif concept == "ef":
        if not 1 <= th < p + 1:
            raise DomainError(f"EF target must lie in [1, {p + 1}), got {theta}")
        if th == 1:
            raise DomainError("an EF target of 1 needs beta p = 1/2; use partition_chain for that case")
        threshold = (2 * th - Fraction(3, 2)) / (p + 1 - th)
        beta = max(Fraction(2, p), 2 * threshold)
        alpha = (beta * p - HALF) / (th - 1) - 2 - beta
    else:
        raise DomainError(f"concept must be 'une' or 'ef', got {concept!r}")
    return alpha, beta


# ---------------------------------------------------------------------------
# cascade


def _check_cascade(n: int, eps: Number) -> Fraction:
    eps = rational(eps)
    if n < 1:
        raise ValidationError("cascade needs n >= 1")
    if not eps > 0:
        raise ValidationError("eps must be positive")
    if n * eps / 2 > 1:
        raise ValidationError(f"need n eps / 2 <= 1, got {n * eps / 2}")
    return eps


def cascade(n: int, eps: Number) -> Instance:
    """``n`` stages of a top link ``2 - eps`` over a bottom link ``x``; edges as in the chain."""
    eps = _check_cascade(n, eps)
    edges = []
    for i in range(n):
        edges.append((f"v{i}", f"v{i + 1}", Constant(2 - eps)))
        edges.append((f"v{i}", f"v{i + 1}", Affine(1, 0)))
    return Instance.build([f"v{i}" for i in range(n + 1)], edges, [("v0", f"v{n}", 1)])


def cascade_mixed_flow(n: int, eps: Number, k: int) -> EdgeFlow:
    """First ``k`` stages at the social optimum (bottom ``1 - eps/2``), the rest at Nash."""
    eps = _check_cascade(n, eps)
    if not 0 <= k <= n:
        raise ValidationError("need 0 <= k <= n")
    loads: list[Fraction] = []
    for i in range(n):
        top = eps / 2 if i < k else Fraction(0)
        loads += [top, 1 - top]
    return EdgeFlow.single(loads)


def cascade_so(n: int, eps: Number) -> EdgeFlow:
    return cascade_mixed_flow(n, eps, n)


def cascade_decomposition(n: int, eps: Number) -> PathFlow:
    """``p_i`` (top link only at stage i) at ``eps/2`` each plus ``p_0`` (all bottom) with the rest."""
    eps = _check_cascade(n, eps)
    row = {subset_path(n, [i]): eps / 2 for i in range(n)}
    rest = 1 - n * eps / 2
    if rest > 0:
        row[subset_path(n, ())] = rest
    return PathFlow.from_dicts([row])


# ---------------------------------------------------------------------------
# UNE versus PNE


def une_vs_pne_gadget(k: int, theta: Number, eps: Number = Fraction(1, 10)) -> tuple[Instance, EdgeFlow, PathFlow]:
    """Nodes ``s, u_1..u_k, t`` with constant latencies.

    Chain edges ``(u_i, u_{i+1})`` cost ``2(theta - 1)``, all other edges cost 1.
    The decomposition routes 1 on ``s u_1 t``, ``1 - eps`` on ``s u_i t`` for
    ``2 <= i <= k-1`` and ``eps`` on each ``s u_i u_{i+1} t``; every used path
    is within ``theta`` of the shortest, while the positive support contains
    the whole chain ``s u_1 ... u_k t``.
    """
    if k < 2:
        raise ValidationError("need k >= 2")
    theta, eps = rational(theta), rational(eps)
    if theta < Fraction(3, 2):
        raise ValidationError("need theta >= 3/2")
    if not 0 < eps < 1:
        raise ValidationError("need 0 < eps < 1")
    nodes = ["s"] + [f"u{i}" for i in range(1, k + 1)] + ["t"]
    edges: list[tuple[str, str, LatencyFn]] = []
    s_edge, t_edge, chain = {}, {}, {}
    for i in range(1, k + 1):
        s_edge[i] = len(edges)
        edges.append(("s", f"u{i}", Constant(1)))
        t_edge[i] = len(edges)
        edges.append((f"u{i}", "t", Constant(1)))
    for i in range(1, k):
        chain[i] = len(edges)
        edges.append((f"u{i}", f"u{i + 1}", Constant(2 * (theta - 1))))
    demand = k - 1 + eps
    inst = Instance.build(nodes, edges, [("s", "t", demand)])
    row: dict[Path, Fraction] = {(s_edge[1], t_edge[1]): Fraction(1)}
    for i in range(2, k):
        row[(s_edge[i], t_edge[i])] = 1 - eps
    for i in range(1, k):
        row[(s_edge[i], chain[i], t_edge[i + 1])] = eps
    pf = PathFlow.from_dicts([row])
    return inst, induced_edge_flow(inst, pf), pf


# ---------------------------------------------------------------------------
# reconstructed small examples


def nonconvexity_pair() -> tuple[Instance, PathFlow, PathFlow]:
    """Two 3/2-fair path flows on ``s, u, v, t`` whose even mixture is not 3/2-EF.

    Edges: ``su = x``, ``ut = 1/3``, ``sv = 7/6``, ``vt = x``, ``uv = 0``. Flow A
    sends everything along ``s u v t`` (cost 2, while ``s u t`` costs 4/3);
    flow B sends 2/3 along ``s u t`` (cost 1) and 1/3 along ``s v t`` (cost 3/2).
    In the mixture ``s u t`` costs 7/6 and ``s v t`` costs 11/6.
    """
    edges = [
        ("s", "u", Affine(1, 0)),
        ("u", "t", Constant(Fraction(1, 3))),
        ("s", "v", Constant(Fraction(7, 6))),
        ("v", "t", Affine(1, 0)),
        ("u", "v", Constant(0)),
    ]
    inst = Instance.build(["s", "u", "v", "t"], edges, [("s", "t", 1)])
    flow_a = PathFlow.from_dicts([{(0, 4, 3): Fraction(1)}])
    flow_b = PathFlow.from_dicts([{(0, 1): Fraction(2, 3), (2, 3): Fraction(1, 3)}])
    return inst, flow_a, flow_b


def mixture(a: PathFlow, b: PathFlow, w: Number = HALF) -> PathFlow:
    return combine_path_flows([(1 - w, a), (w, b)])


def fig1() -> tuple[Instance, PathFlow]:
    """Reconstructed two-path example: used paths cost 3/2, shortest path 1, longest positive path 2.

    Nodes ``s, a, b, c, t``; edges ``sa, ab, bc, ct`` have constant latency 1/2
    and ``sb, bt`` have latency ``x``. Half a unit follows ``s a b t`` and half
    ``s b c t``.
    """
    h = HALF
    edges = [
        ("s", "a", Constant(h)),
        ("a", "b", Constant(h)),
        ("s", "b", Affine(1, 0)),
        ("b", "t", Affine(1, 0)),
        ("b", "c", Constant(h)),
        ("c", "t", Constant(h)),
    ]
    inst = Instance.build(["s", "a", "b", "c", "t"], edges, [("s", "t", 1)])
    return inst, PathFlow.from_dicts([{(0, 1, 3): h, (2, 4, 5): h}])
