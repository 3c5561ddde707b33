"""``fairflow`` command-line driver.

Exit status: 0 on success, 1 when a requested certification fails, 2 on bad
input (including malformed files, which are reported with their location).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from typing import Any

from . import decomp, fairness, gadgets, io, randroute, solvers
from .errors import FairflowError, ValidationError
from .latency import latency_from_params, to_number
from .model import EdgeFlow, Instance, PathFlow, check_feasible, enumerate_paths, induced_edge_flow

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(ValidationError):
    pass


def num(x: Any) -> Any:
    """JSON-safe number: floats and ints unchanged, rationals as floats, infinities as strings."""
    if x is None:
        return None
    if isinstance(x, Fraction):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return "inf" if x > 0 else "-inf"
    return x


def fmt(x: Any) -> str:
    if x is None:
        return "-"
    if isinstance(x, Fraction):
        return f"{float(x):.10g} ({x})" if x.denominator != 1 else str(x.numerator)
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _theta(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return val


def _require_theta(theta: float | None) -> None:
    if theta is not None and not theta >= 1:
        raise InputError(f"theta must be >= 1, got {theta}")


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def parse_latency(text: str):
    """``constant:C``, ``affine:A,B``, ``mm1:U`` or ``poly:A0,A1,...``."""
    kind, _, arg = text.partition(":")
    vals = [to_number(v) for v in arg.split(",") if v.strip()]
    kind = {"poly": "polynomial"}.get(kind, kind)
    params: dict[str, Any]
    if kind == "constant" and len(vals) == 1:
        params = {"c": vals[0]}
    elif kind == "affine" and len(vals) == 2:
        params = {"a": vals[0], "b": vals[1]}
    elif kind == "mm1" and len(vals) == 1:
        params = {"u": vals[0]}
    elif kind == "polynomial" and vals:
        params = {"coefficients": vals}
    else:
        raise InputError(f"cannot parse latency {text!r}")
    return latency_from_params(kind, params)


# ---------------------------------------------------------------------------
# reports


def fairness_rows(report: decomp.FairnessReport) -> list[dict[str, Any]]:
    rows = []
    for k, c in enumerate(report.commodities):
        rows.append(
            {
                "commodity": k,
                "theta_ef": num(c.theta_ef),
                "theta_une": num(c.theta_une),
                "theta_pne": num(c.theta_pne),
                "max_used": {"path": list(c.max_used[0]), "latency": num(c.max_used[1])},
                "min_used": {"path": list(c.min_used[0]), "latency": num(c.min_used[1])},
                "shortest": {"path": list(c.shortest[0]), "latency": num(c.shortest[1])},
            }
        )
    return rows


def fairness_table(report: decomp.FairnessReport) -> list[str]:
    lines = ["commodity  theta_EF        theta_UNE       theta_PNE"]
    for k, c in enumerate(report.commodities):
        lines.append(f"{k:<10} {fmt(c.theta_ef):<15} {fmt(c.theta_une):<15} {fmt(c.theta_pne)}")
    return lines


def emit(args: argparse.Namespace, report: dict[str, Any], lines: list[str]) -> None:
    if getattr(args, "json", False):
        print(json.dumps(report, indent=2, sort_keys=True))
    else:
        print("\n".join(lines))


# ---------------------------------------------------------------------------
# commands


def _solver_config(args) -> solvers.SolverConfig:
    return solvers.SolverConfig(tol=args.tol, max_iter=args.max_iter, method=args.method, step_rule=args.step_rule)


def _objective(inst: Instance, objective: list[str]) -> solvers.PotentialSpec:
    name, rest = objective[0], objective[1:]
    need = {"nash": 0, "so": 0, "theta-pne": 1, "toll": 1}
    if name not in need:
        raise InputError(f"unknown objective {name!r}; expected nash, so, theta-pne THETA or toll EPS")
    if len(rest) != need[name]:
        raise InputError(f"objective {name!r} takes {need[name]} parameter(s)")
    if name == "nash":
        return solvers.beckmann_potential(inst)
    if name == "so":
        return solvers.marginal_potential(inst)
    try:
        value = float(rest[0])
    except ValueError:
        raise InputError(f"bad objective parameter {rest[0]!r}") from None
    if name == "theta-pne":
        _require_theta(value)
        return solvers.design_modified_potential(inst, value)
    return solvers.bounded_toll_potential(inst, value)


def cmd_solve(args) -> int:
    inst = io.read_instance(args.instance)
    spec = _objective(inst, args.objective)
    res = solvers.minimize_potential(inst, spec, _solver_config(args))
    meta = {
        "objective": " ".join(args.objective),
        "potential": res.potential,
        "social_cost": res.social_cost,
        "gap": res.gap,
        "iterations": res.iterations,
    }
    if args.out:
        io.write_json(args.out, io.edge_flow_to_dict(inst, res.flow, meta))
    report = {"command": "solve", "digest": io.digest(inst), **meta,
              "aggregate": [num(x) for x in res.flow.aggregate]}
    lines = [f"instance {io.digest(inst)}  objective {meta['objective']}",
             f"potential    {res.potential:.12g}",
             f"social cost  {res.social_cost:.12g}",
             f"gap          {res.gap:.3g}",
             f"iterations   {res.iterations}"]
    emit(args, report, lines)
    return EXIT_OK


def _as_path_flow(inst: Instance, flow: EdgeFlow | PathFlow) -> PathFlow:
    if isinstance(flow, PathFlow):
        return flow
    return decomp.greedy_decomposition(inst, decomp.remove_positive_cycles(inst, flow))


def cmd_decompose(args) -> int:
    inst, flow = io.read_any_flow(args.flow)
    if args.method == "greedy":
        if isinstance(flow, PathFlow):
            flow = induced_edge_flow(inst, flow)
        pf = decomp.greedy_decomposition(inst, decomp.remove_positive_cycles(inst, flow))
    else:
        pf = decomp.sparsify(inst, _as_path_flow(inst, flow))
    rep = decomp.measure_fairness(inst, pf)
    if args.out:
        io.write_json(args.out, io.path_flow_to_dict(inst, pf, {"method": args.method}))
    report = {"command": "decompose", "method": args.method, "digest": io.digest(inst),
              "paths": [pf.n_paths(k) for k in range(pf.n_commodities)], "fairness": fairness_rows(rep)}
    lines = [f"instance {io.digest(inst)}  method {args.method}",
             "used paths per commodity: " + ", ".join(str(pf.n_paths(k)) for k in range(pf.n_commodities))]
    emit(args, report, lines + fairness_table(rep))
    return EXIT_OK


def cmd_check(args) -> int:
    _require_theta(args.theta)
    source = args.pathflow or args.flow
    if source is None:
        raise InputError("give --pathflow or --flow")
    inst, flow = io.read_any_flow(source)
    if isinstance(flow, EdgeFlow):
        if args.concept != "pne":
            flow_pf = _as_path_flow(inst, flow)
        else:
            flow_pf = None
        edge = flow
    else:
        flow_pf = flow
        edge = induced_edge_flow(inst, flow)
    report: dict[str, Any] = {"command": "check", "concept": args.concept, "digest": io.digest(inst),
                              "theta": num(args.theta)}
    lines = [f"instance {io.digest(inst)}  concept {args.concept}"]
    if args.concept == "pne":
        thetas, longest, shortest = decomp.theta_pne(inst, edge)
        measured = max(thetas)
        report["per_commodity"] = [
            {"commodity": k, "theta_pne": num(t), "longest_positive": list(lp[0]), "shortest": list(sp[0])}
            for k, (t, lp, sp) in enumerate(zip(thetas, longest, shortest))
        ]
        lines += [f"commodity {k}: theta_PNE {fmt(t)}" for k, t in enumerate(thetas)]
    else:
        rep = decomp.measure_fairness(inst, flow_pf)
        measured = rep.theta(args.concept)
        report["fairness"] = fairness_rows(rep)
        lines += fairness_table(rep)
    report["measured"] = num(measured)
    code = EXIT_OK
    if args.theta is not None:
        ok = measured <= args.theta * (1 + args.rtol)
        report["accepted"] = ok
        lines.append(f"{args.concept.upper()} at theta={args.theta:g}: {'ACCEPT' if ok else 'REJECT'} (measured {fmt(measured)})")
        code = EXIT_OK if ok else EXIT_FAIL
    emit(args, report, lines)
    return code


def cmd_bounds(args) -> int:
    _require_theta(args.theta)
    cls = fairness.LatencyClass.parse(args.latency_class)
    which = "pos" if args.pos else "pos-sp" if args.pos_sp else "poa"
    if which == "poa":
        res = fairness.poa_upper_bound(cls, args.theta)
        value, method, params = res.value, res.method, res.params
    elif which == "pos":
        if cls.kind == "mm1":
            value = fairness.pos_upper_bound_mm1(cls.rho_max, args.theta)
        else:
            value = fairness.pos_upper_bound_poly(cls.degree, args.theta)
        method, params = "analytic", {"theta": args.theta}
    else:
        res = fairness.pos_upper_bound_series_parallel(cls, args.theta, args.d)
        value, method, params = res.value, res.method, res.params
    report = {"command": "bounds", "bound": which, "class": args.latency_class, "value": num(value),
              "method": method, "params": {k: num(v) for k, v in params.items()}}
    emit(args, report, [f"{which} bound for {args.latency_class} at theta={args.theta:g}: {fmt(value)} [{method}]"])
    return EXIT_OK


def build_gadget(args) -> tuple[Instance, PathFlow | None, EdgeFlow | None]:
    """Instance plus its reference path flow and reference edge flow where the construction has them."""
    name = args.gadget
    if name == "pigou":
        return gadgets.pigou(parse_latency(args.top), parse_latency(args.bottom), to_number(args.demand)), None, None
    if name == "two-link":
        return gadgets.two_link(args.qval), None, EdgeFlow.single([Fraction(1, 2)] * 2)
    if name == "chain":
        return gadgets.partition_chain(args.q), None, gadgets.partition_chain_so(args.q)
    if name == "hardness":
        if args.alpha is not None and args.beta is not None:
            alpha, beta = args.alpha, args.beta
        elif args.theta is not None:
            alpha, beta = gadgets.solve_alpha_beta(args.p, args.theta, args.concept if args.concept != "pne" else "une")
        else:
            raise InputError("hardness needs --alpha and --beta, or --theta with --concept")
        params = gadgets.HardnessParams(args.q, args.p, alpha, beta)
        sub = gadgets.balanced_partition(args.q)
        witness = None
        if sub is not None and args.concept in ("une", "ef"):
            witness = gadgets.hardness_witness(params, sub, args.concept)
        return gadgets.hardness_instance(params), witness, gadgets.hardness_so(params)
    if name == "cascade":
        return gadgets.cascade(args.n, args.eps), gadgets.cascade_decomposition(args.n, args.eps), gadgets.cascade_so(args.n, args.eps)
    if name == "une-gadget":
        inst, edge, pf = gadgets.une_vs_pne_gadget(args.k, args.theta if args.theta is not None else 1.5, args.eps)
        return inst, pf, edge
    if name == "nonconvex":
        inst, a, b = gadgets.nonconvexity_pair()
        pf = {"a": a, "b": b, "mix": gadgets.mixture(a, b)}[args.which]
        return inst, pf, None
    if name == "fig1":
        inst, pf = gadgets.fig1()
        return inst, pf, None
    raise InputError(f"unknown gadget {name!r}")


def cmd_gadget(args) -> int:
    inst, pf, _edge = build_gadget(args)
    if args.out:
        io.write_json(args.out, io.instance_to_dict(inst))
    if args.pathflow_out:
        if pf is None:
            raise InputError(f"gadget {args.gadget!r} has no reference path flow")
        io.write_json(args.pathflow_out, io.path_flow_to_dict(inst, pf, {"gadget": args.gadget}))
    report = {"command": "gadget", "gadget": args.gadget, "digest": io.digest(inst),
              "nodes": inst.n_nodes, "edges": inst.n_edges, "commodities": len(inst.commodities)}
    if args.out is None and not args.json:
        print(json.dumps(io.instance_to_dict(inst), indent=2))
        return EXIT_OK
    emit(args, report, [f"gadget {args.gadget}: {inst.n_nodes} nodes, {inst.n_edges} edges, digest {io.digest(inst)}"])
    return EXIT_OK


def cmd_randroute(args) -> int:
    inst, pf = io.read_path_flow(args.pathflow)
    rep = decomp.measure_fairness(inst, pf)
    stats = randroute.monte_carlo(inst, pf, args.trials, args.ids, args.seed)
    rows, lines = [], [f"instance {io.digest(inst)}  trials {args.trials}  seed {args.seed}"]
    for k, st in enumerate(stats):
        theta = float(args.theta if args.theta is not None else rep.commodities[k].theta_une)
        bound = randroute.stddev_bound(inst, pf, k, theta) if math.isfinite(theta) else None
        mean = randroute.expected_latency(inst, pf, k)
        rows.append({
            "commodity": k, "expected": num(mean), "mean": st.mean, "std": st.std, "std_err": st.std_err,
            "theta": num(theta),
            "bound": None if bound is None else bound.formula,
            "corrected_bound": None if bound is None else bound.corrected,
            "bhatia_davis": None if bound is None else bound.bhatia_davis,
            "masses": [{"path": list(p), "mass": m, "target": num(pf.flow(k, p) / pf.total(k))}
                       for p, m in st.masses.items()],
        })
        lines.append(f"commodity {k}: mean {st.mean:.10g} (exact {fmt(mean)}), std {st.std:.3g}, "
                     f"bound {fmt(None if bound is None else bound.formula)}, "
                     f"corrected {fmt(None if bound is None else bound.corrected)}")
        for p, m in st.masses.items():
            lines.append(f"  path {list(p)}: mass {m:.6f} target {float(pf.flow(k, p) / pf.total(k)):.6f}")
    emit(args, {"command": "randroute", "digest": io.digest(inst), "seed": args.seed, "commodities": rows}, lines)
    return EXIT_OK


def snap(flow: EdgeFlow, max_den: int = 10**6) -> EdgeFlow:
    return EdgeFlow(tuple(tuple(Fraction(x).limit_denominator(max_den) for x in row) for row in flow.loads))


def cmd_pipeline(args) -> int:
    _require_theta(args.theta)
    inst, _ref_pf, _ref_edge = build_gadget(args)
    res = solvers.solve_social_optimum(inst, solvers.SolverConfig(tol=args.tol))
    flow = decomp.remove_positive_cycles(inst, res.flow)
    pf = decomp.sparsify(inst, decomp.greedy_decomposition(inst, flow))
    rep = decomp.measure_fairness(inst, pf)
    measured = rep.theta(args.concept)
    stages = {"social_cost": res.social_cost, "iterations": res.iterations, "greedy_sparsified": num(measured)}
    lines = [f"gadget {args.gadget}  digest {io.digest(inst)}",
             f"social optimum cost {res.social_cost:.10g} after {res.iterations} iterations",
             f"greedy + sparsify: theta_{args.concept.upper()} = {fmt(measured)}"]
    method = "greedy+sparsify"
    if args.concept in ("une", "ef") and not measured <= args.theta and inst.is_exact:
        exact_flow = snap(flow)
        small = all(_count_paths(inst, k, args.path_limit) for k in range(len(inst.commodities)))
        if small and not check_feasible(inst, exact_flow, tol=1e-30):
            measured, pf = decomp.brute_force_best_decomposition(inst, exact_flow, args.concept, args.path_limit)
            method = "exhaustive"
            lines.append(f"exhaustive oracle: best theta_{args.concept.upper()} = {fmt(measured)}")
        else:
            lines.append("exhaustive oracle skipped (too many paths or flow not exactly representable)")
    if args.concept == "pne":
        measured = decomp.theta_pne(inst, flow)[0]
        measured = max(measured)
    ok = measured <= args.theta * (1 + 1e-9)
    lines.append(f"{args.concept.upper()} at theta={args.theta:g}: {'ACCEPT' if ok else 'REJECT'}")
    if args.out:
        io.write_json(args.out, io.path_flow_to_dict(inst, pf, {"method": method}))
    report = {"command": "pipeline", "gadget": args.gadget, "digest": io.digest(inst), "concept": args.concept,
              "theta": args.theta, "measured": num(measured), "method": method, "accepted": ok, **stages}
    emit(args, report, lines)
    return EXIT_OK if ok else EXIT_FAIL


def _count_paths(inst: Instance, k: int, limit: int) -> bool:
    try:
        enumerate_paths(inst, k, limit)
    except FairflowError:
        return False
    return True


# ---------------------------------------------------------------------------
# parser


def _gadget_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--q", type=_int_list, default=(1, 1), help="PARTITION data, e.g. 1,2,3")
    p.add_argument("--qval", type=int, default=1, help="two-link parameter q")
    p.add_argument("--p", type=int, default=1, help="degree of the hardness block")
    p.add_argument("--alpha", type=_fraction, default=None)
    p.add_argument("--beta", type=_fraction, default=None)
    p.add_argument("--n", type=int, default=4, help="cascade stages")
    p.add_argument("--eps", type=_fraction, default=Fraction(1, 2))
    p.add_argument("--k", type=int, default=4, help="une-gadget chain length")
    p.add_argument("--top", default="constant:1")
    p.add_argument("--bottom", default="affine:1,0")
    p.add_argument("--demand", default="1")
    p.add_argument("--which", choices=["a", "b", "mix"], default="a", help="nonconvex reference flow")


GADGETS = ["pigou", "two-link", "chain", "hardness", "cascade", "une-gadget", "nonconvex", "fig1"]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fairflow", description="Fairness of flows in nonatomic routing games.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--json", action="store_true", help="print a structured report")
        return p

    p = add("solve", "minimize an edge potential")
    p.add_argument("--instance", required=True)
    p.add_argument("--objective", nargs="+", default=["nash"], metavar="OBJ",
                   help="nash | so | theta-pne THETA | toll EPS")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--method", choices=["pairwise", "classic"], default="pairwise")
    p.add_argument("--step-rule", choices=["line_search", "open_loop"], default="line_search")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = add("decompose", "turn an edge flow into a path flow")
    p.add_argument("--flow", required=True)
    p.add_argument("--method", choices=["greedy", "sparsify"], default="greedy")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = add("check", "certify EF / UNE / PNE")
    p.add_argument("--pathflow")
    p.add_argument("--flow")
    p.add_argument("--concept", choices=["ef", "une", "pne"], default="une")
    p.add_argument("--theta", type=_theta)
    p.add_argument("--rtol", type=float, default=1e-9, help="relative slack on the theta test")
    p.set_defaults(func=cmd_check)

    p = add("bounds", "PoA / PoS upper bounds")
    p.add_argument("--class", dest="latency_class", required=True, help="poly:P | affine | mm1:RHO")
    p.add_argument("--theta", type=_theta, default=1.0)
    p.add_argument("--d", type=float, default=1.0, help="load range for the series-parallel bound")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--poa", action="store_true")
    g.add_argument("--pos", action="store_true")
    g.add_argument("--pos-sp", action="store_true")
    p.set_defaults(func=cmd_bounds)

    p = add("gadget", "write a construction as an instance file")
    p.add_argument("gadget", choices=GADGETS)
    p.add_argument("--theta", type=_theta)
    p.add_argument("--concept", choices=["une", "ef"], default="une")
    _gadget_options(p)
    p.add_argument("--out")
    p.add_argument("--pathflow-out")
    p.set_defaults(func=cmd_gadget)

    p = add("randroute", "simulate randomized routing of a path flow")
    p.add_argument("--pathflow", required=True)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--ids", type=int, default=64, help="stratified ids per trial")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta", type=_theta, help="certified theta (default: measured UNE ratio)")
    p.set_defaults(func=cmd_randroute)

    p = add("pipeline", "gadget -> social optimum -> decomposition -> certificate")
    p.add_argument("--gadget", choices=GADGETS, default="chain")
    p.add_argument("--concept", choices=["ef", "une", "pne"], default="une")
    p.add_argument("--theta", type=_theta, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--path-limit", type=int, default=4096)
    _gadget_options(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_pipeline)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except FairflowError as exc:
        print(f"fairflow {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
