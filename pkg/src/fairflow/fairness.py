"""Price-of-anarchy and price-of-stability bounds for approximate equilibria.

Polynomial classes have closed forms for ``omega``; M/M/1 classes are
handled numerically on a grid with one local refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .errors import DomainError, ValidationError
from .latency import Number
from .model import EdgeFlow, Instance, social_cost
from .solvers import shortest_path

GRID = 2000


@dataclass(frozen=True)
class LatencyClass:
    """``poly`` (degree at most ``p``), ``affine`` or ``mm1`` (loads at most ``rho_max u``)."""

    kind: str
    p: int = 1
    rho_max: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("poly", "affine", "mm1"):
            raise ValidationError(f"unknown latency class {self.kind!r}")
        if self.kind == "poly" and (isinstance(self.p, bool) or not isinstance(self.p, int) or self.p < 0):
            raise ValidationError(f"degree must be an integer >= 0, got {self.p!r}")
        if self.kind == "mm1" and not (self.rho_max is not None and 0 < self.rho_max < 1):
            raise ValidationError(f"M/M/1 class needs 0 < rho_max < 1, got {self.rho_max!r}")

    @classmethod
    def poly(cls, p: int) -> "LatencyClass":
        return cls("poly", p=p)

    @classmethod
    def affine(cls) -> "LatencyClass":
        return cls("affine", p=1)

    @classmethod
    def mm1(cls, rho_max: float) -> "LatencyClass":
        return cls("mm1", p=0, rho_max=float(rho_max))

    @property
    def degree(self) -> int:
        return 1 if self.kind == "affine" else self.p

    @classmethod
    def parse(cls, text: str) -> "LatencyClass":
        """``poly:P``, ``affine`` or ``mm1:RHO``."""
        name, _, arg = text.strip().lower().partition(":")
        try:
            if name == "affine" and not arg:
                return cls.affine()
            if name == "poly":
                return cls.poly(int(arg))
            if name == "mm1":
                return cls.mm1(float(arg))
        except ValueError as exc:
            raise ValidationError(f"bad class parameter in {text!r}") from exc
        raise ValidationError(f"cannot parse latency class {text!r}; use poly:P, affine or mm1:RHO")


@dataclass(frozen=True)
class BoundResult:
    value: float
    method: str  # "analytic" | "numeric-grid"
    params: dict[str, Any] = field(default_factory=dict)


def gamma_of(cls: LatencyClass) -> Number:
    """Smallest ``gamma`` with ``l* <= gamma l`` on the class."""
    if cls.kind == "mm1":
        return 1.0 / (1.0 - cls.rho_max)
    return cls.degree + 1


# ---------------------------------------------------------------------------
# omega


def omega(cls: LatencyClass, lam: float) -> float:
    """``sup (l(x) - lam l(x')) x' / (x l(x))`` over the class and loads.

    Below ``lam = 1`` a constant part makes the supremum unbounded. For
    monomials of degree ``d`` the ratio depends on ``r = x'/x`` only and peaks
    at ``r = (lam (d+1))^(-1/d)``. For M/M/1 the ratio increases in ``x``, so
    ``x`` sits at the load cap and one grid over ``x'`` remains.
    """
    lam = float(lam)
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    if lam < 1:
        return math.inf
    if cls.kind in ("poly", "affine"):
        return max([0.0] + [d / (d + 1) * (lam * (d + 1)) ** (-1.0 / d) for d in range(1, cls.degree + 1)])
    rho = cls.rho_max
    return _grid_max(lambda s1: (1.0 - lam * (1.0 - rho) / (1.0 - s1)) * s1 / rho, 0.0, rho)


def _grid_max(fn, lo: float, hi: float) -> float:
    xs = np.linspace(lo, hi, GRID + 1)
    vals = fn(xs)
    i = int(np.argmax(vals))
    a, b = xs[max(i - 1, 0)], xs[min(i + 1, GRID)]
    best = float(vals[i])
    if b > a:
        res = minimize_scalar(lambda t: -float(fn(np.float64(t))), bounds=(a, b), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


def _omega_method(cls: LatencyClass) -> str:
    return "numeric-grid" if cls.kind == "mm1" else "analytic"


def poa_upper_bound(cls: LatencyClass, theta: float) -> BoundResult:
    """``inf theta lam / (1 - theta omega(lam))`` over ``lam`` with ``theta omega(lam) < 1``.

    A coarse log-spaced scan of ``[max(1, theta/4), 1e3]`` brackets the
    minimum, then golden-section search polishes it.
    """
    theta = float(theta)
    if not theta >= 1:
        raise DomainError(f"theta must be >= 1, got {theta}")

    def objective(lam: float) -> float:
        w = theta * omega(cls, lam)
        return math.inf if w >= 1 else theta * lam / (1 - w)

    lo, hi = max(1.0, theta / 4), 1e3
    grid = np.geomspace(lo, hi, 400)
    vals = [objective(x) for x in grid]
    i = int(np.argmin(vals))
    if not math.isfinite(vals[i]):
        return BoundResult(math.inf, _omega_method(cls), {"theta": theta})
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    lam, best = _golden(objective, a, b)
    if vals[i] < best:
        lam, best = float(grid[i]), vals[i]
    lam = float(lam)
    return BoundResult(float(best), _omega_method(cls), {"theta": theta, "lambda": lam, "omega": omega(cls, lam)})


def _golden(fn, a: float, b: float, tol: float = 1e-12) -> tuple[float, float]:
    g = (math.sqrt(5) - 1) / 2
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol * max(1.0, abs(a)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = fn(d)
    x = (a + b) / 2
    return x, fn(x)


# ---------------------------------------------------------------------------
# variational inequality


@dataclass(frozen=True)
class VIDecision:
    accepted: bool
    social_cost: float
    best_response_cost: float
    theta_min: float
    best_response: EdgeFlow


def check_variational_inequality(inst: Instance, flow: EdgeFlow, theta: float) -> VIDecision:
    """``SC(x) <= theta * min_x' sum_e x'_e l_e(x_e)``; the minimizer routes each commodity on one shortest path."""
    theta = float(theta)
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")
    sc = float(social_cost(inst, flow))
    costs = inst.edge_costs(flow)
    rows = []
    rhs = 0.0
    for k, com in enumerate(inst.commodities):
        path, dist = shortest_path(inst, costs, k)
        rhs += float(com.demand) * float(dist)
        row = [0.0] * inst.n_edges
        for e in path:
            row[e] = float(com.demand)
        rows.append(tuple(row))
    theta_min = sc / rhs if rhs > 0 else (1.0 if sc == 0 else math.inf)
    return VIDecision(sc <= theta * rhs + 1e-9, sc, rhs, theta_min, EdgeFlow(tuple(rows)))


# ---------------------------------------------------------------------------
# price of stability


def pos_upper_bound_mm1(rho_max: float, theta: float) -> float:
    """``(1 + 1/sqrt(1 - rho(theta)))/2`` with ``rho(theta) = max(0, 1 - theta (1 - rho_max))``."""
    if not 0 < rho_max < 1:
        raise DomainError(f"need 0 < rho_max < 1, got {rho_max}")
    if not theta >= 1:
        raise DomainError(f"theta must be >= 1, got {theta}")
    if theta >= 1 / (1 - rho_max):
        return 1.0
    rho_t = max(0.0, 1 - theta * (1 - rho_max))
    return 0.5 * (1 + 1 / math.sqrt(1 - rho_t))


def pos_upper_bound_poly(p: int, theta: float) -> float:
    """``1 / (theta (1 - p theta^(1/p) / (p+1)^(1+1/p)))`` below ``theta = p + 1``, else 1."""
    if isinstance(p, bool) or not isinstance(p, int) or p < 1:
        raise DomainError(f"degree must be an integer >= 1, got {p!r}")
    if not theta >= 1:
        raise DomainError(f"theta must be >= 1, got {theta}")
    if theta >= p + 1:
        return 1.0
    return 1.0 / (theta * (1 - p * theta ** (1 / p) / (p + 1) ** (1 + 1 / p)))


def _representatives(cls: LatencyClass, d: float):
    if cls.kind == "mm1":
        u = d / cls.rho_max
        return [("mm1", lambda x: 1.0 / (u - x))]
    return [(f"x^{j}", lambda x, j=j: np.power(x, j)) for j in range(cls.degree + 1)]


def _beta_ratio(lat, theta: float):
    def fn(x, y):
        lx, ly = lat(x), lat(y)
        return (y * (lx - ly) - (theta - 1) * (x - y) * lx) / (x * lx)

    return fn


def beta_theta(cls: LatencyClass, theta: float, d: float = 1.0) -> float:
    """``sup_{x >= y >= 0} [y (l(x) - l(y)) - (theta-1)(x-y) l(x)] / (x l(x))`` on ``[0, d]``."""
    best = -math.inf
    xs = np.linspace(d / GRID, d, GRID)
    for _name, lat in _representatives(cls, d):
        fn = _beta_ratio(lat, theta)
        x, y = np.meshgrid(xs, np.linspace(0.0, d, GRID + 1), indexing="ij")
        y = np.minimum(y, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(np.isfinite(fn(x, y)), fn(x, y), -np.inf)
        i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
        start = np.array([x[i, j], y[i, j]])
        cur = float(vals[i, j])

        def neg(z):
            xx = float(np.clip(z[0], d / GRID / 10, d))
            yy = float(np.clip(z[1], 0.0, xx))
            return -float(fn(np.float64(xx), np.float64(yy)))

        res = minimize(neg, start, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": 1e-12})
        best = max(best, cur, -float(res.fun))
    return best


def pos_upper_bound_series_parallel(cls: LatencyClass, theta: float, d: float = 1.0) -> BoundResult:
    """``max(1, 1/(1 - beta_theta))``; whether the network is series-parallel is up to the caller."""
    theta = float(theta)
    if not theta >= 1:
        raise DomainError(f"theta must be >= 1, got {theta}")
    if not d > 0:
        raise DomainError("demand bound d must be positive")
    beta = beta_theta(cls, theta, d)
    value = math.inf if beta >= 1 else max(1.0, 1.0 / (1.0 - beta))
    return BoundResult(float(value), "numeric-grid", {"beta": float(beta), "theta": theta, "d": d, "applicability": "caller-asserted"})
