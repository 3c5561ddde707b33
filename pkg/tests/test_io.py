import copy
import json
from fractions import Fraction

import pytest

from fairflow import MM1, Affine, Constant, EdgeFlow, Instance, Polynomial
from fairflow.gadgets import fig1, hardness_instance, HardnessParams
from fairflow.io import (
    ParseError,
    digest,
    edge_flow_from_dict,
    edge_flow_to_dict,
    instance_from_dict,
    instance_to_dict,
    loads_json,
    path_flow_from_dict,
    path_flow_to_dict,
    read_any_flow,
    read_instance,
    write_json,
)


def mixed_instance():
    edges = [
        ("s", "a", Polynomial((Fraction(1, 3), 0, 2))),
        ("a", "t", MM1(5)),
        ("s", "t", Affine(Fraction(3, 8), 1)),
        ("s", "a", Constant(0.25)),
    ]
    return Instance.build(["s", "a", "t"], edges, [("s", "t", Fraction(3, 2)), ("s", "a", 1)])


def test_instance_round_trip_through_json_text():
    inst = mixed_instance()
    doc = json.loads(json.dumps(instance_to_dict(inst)))
    back = instance_from_dict(doc)
    assert back == inst
    assert back.edges[0].latency.coefficients[0] == Fraction(1, 3)


def test_rationals_serialize_as_strings():
    doc = instance_to_dict(mixed_instance())
    assert doc["commodities"][0]["demand"] == "3/2"
    assert doc["edges"][2]["latency"]["params"]["a"] == "3/8"


def test_digest_is_stable_and_content_sensitive():
    a, b = mixed_instance(), mixed_instance()
    assert digest(a) == digest(b) and len(digest(a)) == 16
    params = HardnessParams((1, 1), 1, 2, 2)
    assert digest(hardness_instance(params)) != digest(hardness_instance(HardnessParams((1, 2), 1, 2, 2)))


def test_flow_round_trips():
    inst, pf = fig1()
    doc = json.loads(json.dumps(path_flow_to_dict(inst, pf, {"note": "x"})))
    inst2, pf2 = path_flow_from_dict(doc)
    assert inst2 == inst and pf2 == pf and doc["meta"] == {"note": "x"}
    flow = EdgeFlow.single([Fraction(1, 2)] * 5 + [0])
    inst3, flow2 = edge_flow_from_dict(json.loads(json.dumps(edge_flow_to_dict(inst, flow))))
    assert flow2 == flow


@pytest.mark.parametrize(
    "mutate, location",
    [
        (lambda d: d.update(format="other"), "$.format"),
        (lambda d: d["edges"][1].update(latency={"kind": "cubic", "params": {}}), "$.edges[1].latency"),
        (lambda d: d["edges"][0].update(to="nowhere"), "$.edges[0].to"),
        (lambda d: d["commodities"][0].update(demand="abc"), "$.commodities[0].demand"),
    ],
)
def test_parse_errors_carry_locations(mutate, location):
    doc = copy.deepcopy(instance_to_dict(mixed_instance()))
    mutate(doc)
    with pytest.raises(ParseError) as info:
        instance_from_dict(doc)
    assert info.value.location.startswith(location)


def test_bad_path_flow_rejected():
    inst, pf = fig1()
    doc = path_flow_to_dict(inst, pf)
    doc["paths"][0][0]["flow"] = "1/4"
    with pytest.raises(ParseError):
        path_flow_from_dict(doc)


def test_invalid_json_reports_line_and_column(tmp_path):
    with pytest.raises(ParseError) as info:
        loads_json('{\n  "a": }', "x.json")
    assert info.value.location == "x.json:2:8"
    path = tmp_path / "inst.json"
    write_json(path, instance_to_dict(mixed_instance()))
    assert read_instance(path) == mixed_instance()
    with pytest.raises(ParseError):
        read_any_flow(path)
