"""JSON documents for instances and flows (format tag ``fairflow_v1``).

Instance::

    {"format": "fairflow_v1", "type": "instance",
     "nodes": ["s", "t"],
     "edges": [{"from": "s", "to": "t", "latency": {"kind": "affine", "params": {"a": 1, "b": 0}}}],
     "commodities": [{"source": "s", "sink": "t", "demand": 1}]}

Edge flows store one sparse ``{edge index: load}`` map per commodity under
``"loads"``; path flows store per commodity a list of
``{"edges": [...], "flow": f}`` under ``"paths"``. Both embed the instance.
Numbers are JSON numbers or exact rationals written as strings (``"3/8"``).
"""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction
from pathlib import Path as FsPath
from typing import Any

from .errors import FairflowError, ValidationError
from .latency import latency_from_params, to_number
from .model import Commodity, Edge, EdgeFlow, Instance, PathFlow, check_path_flow

FORMAT = "fairflow_v1"


class ParseError(ValidationError):
    """Malformed document; ``location`` names the offending position."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


def encode_number(x: Any) -> Any:
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return x


def _number(raw: Any, where: str) -> Any:
    try:
        return to_number(raw)
    except ValidationError as exc:
        raise ParseError(str(exc), where) from None


def _field(doc: dict, key: str, where: str) -> Any:
    if not isinstance(doc, dict):
        raise ParseError("expected an object", where)
    if key not in doc:
        raise ParseError(f"missing field {key!r}", where)
    return doc[key]


def _list(doc: dict, key: str, where: str) -> list:
    val = _field(doc, key, where)
    if not isinstance(val, list):
        raise ParseError(f"field {key!r} must be a list", f"{where}.{key}")
    return val


def _check_header(doc: Any, kind: str) -> None:
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    if doc.get("format") != FORMAT:
        raise ParseError(f"format must be {FORMAT!r}, got {doc.get('format')!r}", "$.format")
    if doc.get("type", kind) != kind:
        raise ParseError(f"expected a {kind!r} document, got {doc.get('type')!r}", "$.type")


# ---------------------------------------------------------------------------
# instances


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    return {
        "format": FORMAT,
        "type": "instance",
        "nodes": list(inst.nodes),
        "edges": [
            {
                "from": inst.nodes[e.tail],
                "to": inst.nodes[e.head],
                "latency": {"kind": e.latency.kind, "params": _encode_params(e.latency.params())},
            }
            for e in inst.edges
        ],
        "commodities": [
            {"source": inst.nodes[c.source], "sink": inst.nodes[c.sink], "demand": encode_number(c.demand)}
            for c in inst.commodities
        ],
    }


def _encode_params(params: dict[str, Any]) -> dict[str, Any]:
    return {k: [encode_number(c) for c in v] if isinstance(v, list) else encode_number(v) for k, v in params.items()}


def instance_from_dict(doc: Any, where: str = "$") -> Instance:
    if where == "$":
        _check_header(doc, "instance")
    nodes_raw = _list(doc, "nodes", where)
    nodes = tuple(str(v) for v in nodes_raw)
    index = {v: i for i, v in enumerate(nodes)}
    if len(index) != len(nodes):
        raise ParseError("node labels must be unique", f"{where}.nodes")

    def node(raw: Any, at: str) -> int:
        if str(raw) in index:
            return index[str(raw)]
        raise ParseError(f"unknown node {raw!r}", at)

    edges = []
    for i, e in enumerate(_list(doc, "edges", where)):
        at = f"{where}.edges[{i}]"
        lat = _field(e, "latency", at)
        kind = _field(lat, "kind", f"{at}.latency")
        params = _field(lat, "params", f"{at}.latency")
        if not isinstance(params, dict):
            raise ParseError("params must be an object", f"{at}.latency.params")
        try:
            fn = latency_from_params(kind, params)
        except ValidationError as exc:
            raise ParseError(str(exc), f"{at}.latency") from None
        edges.append(Edge(node(_field(e, "from", at), f"{at}.from"), node(_field(e, "to", at), f"{at}.to"), fn))
    comms = []
    for k, c in enumerate(_list(doc, "commodities", where)):
        at = f"{where}.commodities[{k}]"
        comms.append(
            Commodity(
                node(_field(c, "source", at), f"{at}.source"),
                node(_field(c, "sink", at), f"{at}.sink"),
                _number(_field(c, "demand", at), f"{at}.demand"),
            )
        )
    try:
        return Instance(nodes, tuple(edges), tuple(comms))
    except FairflowError as exc:
        raise ParseError(str(exc), where) from None


def digest(inst: Instance) -> str:
    """Content hash of the canonical instance document (16 hex digits)."""
    text = json.dumps(instance_to_dict(inst), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# flows


def edge_flow_to_dict(inst: Instance, flow: EdgeFlow, extra: dict[str, Any] | None = None) -> dict[str, Any]:
    doc = {
        "format": FORMAT,
        "type": "edge_flow",
        "instance": instance_to_dict(inst),
        "loads": [{str(e): encode_number(x) for e, x in enumerate(row) if x != 0} for row in flow.loads],
    }
    if extra:
        doc["meta"] = extra
    return doc


def edge_flow_from_dict(doc: Any) -> tuple[Instance, EdgeFlow]:
    _check_header(doc, "edge_flow")
    inst = instance_from_dict(_field(doc, "instance", "$"), "$.instance")
    rows = _list(doc, "loads", "$")
    if len(rows) != len(inst.commodities):
        raise ParseError(f"expected {len(inst.commodities)} load maps, got {len(rows)}", "$.loads")
    loads = []
    for k, row in enumerate(rows):
        at = f"$.loads[{k}]"
        if not isinstance(row, dict):
            raise ParseError("expected an object keyed by edge index", at)
        vec: list[Any] = [0] * inst.n_edges
        for key, val in row.items():
            try:
                e = int(key)
            except ValueError:
                raise ParseError(f"edge key {key!r} is not an integer", at) from None
            if not 0 <= e < inst.n_edges:
                raise ParseError(f"edge index {e} out of range", at)
            vec[e] = _number(val, f"{at}[{key!r}]")
        loads.append(tuple(vec))
    return inst, EdgeFlow(tuple(loads))


def path_flow_to_dict(inst: Instance, pf: PathFlow, extra: dict[str, Any] | None = None) -> dict[str, Any]:
    doc = {
        "format": FORMAT,
        "type": "path_flow",
        "instance": instance_to_dict(inst),
        "paths": [[{"edges": list(p), "flow": encode_number(f)} for p, f in row] for row in pf.flows],
    }
    if extra:
        doc["meta"] = extra
    return doc


def path_flow_from_dict(doc: Any) -> tuple[Instance, PathFlow]:
    _check_header(doc, "path_flow")
    inst = instance_from_dict(_field(doc, "instance", "$"), "$.instance")
    rows = _list(doc, "paths", "$")
    if len(rows) != len(inst.commodities):
        raise ParseError(f"expected {len(inst.commodities)} path lists, got {len(rows)}", "$.paths")
    out = []
    for k, row in enumerate(rows):
        if not isinstance(row, list):
            raise ParseError("expected a list of paths", f"$.paths[{k}]")
        items = []
        for j, item in enumerate(row):
            at = f"$.paths[{k}][{j}]"
            edges = _field(item, "edges", at)
            if not isinstance(edges, list) or not all(isinstance(e, int) and not isinstance(e, bool) for e in edges):
                raise ParseError("edges must be a list of edge indices", f"{at}.edges")
            items.append((tuple(edges), _number(_field(item, "flow", at), f"{at}.flow")))
        out.append(tuple(items))
    try:
        pf = PathFlow(tuple(out))
    except FairflowError as exc:
        raise ParseError(str(exc), "$.paths") from None
    problems = check_path_flow(inst, pf)
    if problems:
        raise ParseError(problems[0], "$.paths")
    return inst, pf


# ---------------------------------------------------------------------------
# files


def loads_json(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", f"{source}:{exc.lineno}:{exc.colno}") from None


def read_json(path: str | FsPath) -> Any:
    try:
        text = FsPath(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read file: {exc.strerror}", str(path)) from None
    return loads_json(text, str(path))


def write_json(path: str | FsPath, doc: Any) -> None:
    FsPath(path).write_text(json.dumps(doc, indent=2) + "\n")


def read_instance(path: str | FsPath) -> Instance:
    return instance_from_dict(read_json(path))


def read_edge_flow(path: str | FsPath) -> tuple[Instance, EdgeFlow]:
    return edge_flow_from_dict(read_json(path))


def read_path_flow(path: str | FsPath) -> tuple[Instance, PathFlow]:
    return path_flow_from_dict(read_json(path))


def read_any_flow(path: str | FsPath) -> tuple[Instance, EdgeFlow | PathFlow]:
    doc = read_json(path)
    kind = doc.get("type") if isinstance(doc, dict) else None
    if kind == "path_flow":
        return path_flow_from_dict(doc)
    if kind == "edge_flow":
        return edge_flow_from_dict(doc)
    raise ParseError(f"expected an edge_flow or path_flow document, got type {kind!r}", "$.type")
