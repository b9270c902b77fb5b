"""JSON network files.

Layout::

    {
      "variables": [{"name": "a", "cardinality": 2, "states": ["no", "yes"]}, ...],
      "cpds": [
        {"kind": "table", "child": "a", "parents": [], "probs": [0.4, 0.6]},
        {"kind": "causal", "child": "e", "op": "or",
         "leak": [0.99, 0.01],
         "contributions": [{"parent": "a", "table": [[1.0, 0.0], [0.2, 0.8]]}]}
      ]
    }

``probs`` is flat and row-major over ``parents + [child]`` (child value
fastest). A contribution ``table`` has one row per parent value, each row a
distribution over the child's values. ``states``, ``leak`` and
``custom_table`` (only with ``"op": "custom"``) are optional. Unknown keys
are rejected.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError, ValidationError
from .model import CausalCPD, DEPUTY, Network, NetworkBuilder, TableCPD, validate
from .ops import BaseOp, OP_KINDS

_VAR_KEYS = {"name", "cardinality", "states"}
_TABLE_KEYS = {"kind", "child", "parents", "probs"}
_CAUSAL_KEYS = {"kind", "child", "op", "custom_table", "leak", "contributions"}
_CONTRIB_KEYS = {"parent", "table"}


def _keys(obj, allowed: set, required: set, where: str) -> None:
    if not isinstance(obj, dict):
        raise ParseError(f"{where}: expected an object")
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise ParseError(f"{where}: unknown key {unknown[0]!r}")
    missing = sorted(required - set(obj))
    if missing:
        raise ParseError(f"{where}: missing key {missing[0]!r}")


def _numbers(values, where: str) -> list[float]:
    if not isinstance(values, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in values):
        raise ParseError(f"{where}: expected a list of numbers")
    return [float(x) for x in values]


def from_dict(data) -> Network:
    """Parse and validate a network object; raises ParseError or ValidationError."""
    _keys(data, {"variables", "cpds"}, {"variables", "cpds"}, "network")
    if not isinstance(data["variables"], list) or not isinstance(data["cpds"], list):
        raise ParseError("network: 'variables' and 'cpds' must be lists")
    b = NetworkBuilder()
    cards = {}
    for i, v in enumerate(data["variables"]):
        where = f"variables[{i}]"
        _keys(v, _VAR_KEYS, {"name", "cardinality"}, where)
        name, card = v["name"], v["cardinality"]
        if not isinstance(name, str) or not name:
            raise ParseError(f"{where}: 'name' must be a non-empty string")
        if not isinstance(card, int) or isinstance(card, bool):
            raise ParseError(f"{where}: 'cardinality' must be an integer")
        states = v.get("states")
        if states is not None and (not isinstance(states, list)
                                   or not all(isinstance(s, str) for s in states)):
            raise ParseError(f"{where}: 'states' must be a list of strings")
        try:
            b.variable(name, card, states)
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}") from None
        cards[name] = card

    def ref(name, where):
        if not isinstance(name, str) or name not in cards:
            raise ParseError(f"{where}: unknown variable {name!r}")
        return name

    seen = set()
    for i, c in enumerate(data["cpds"]):
        where = f"cpds[{i}]"
        if not isinstance(c, dict) or c.get("kind") not in ("table", "causal"):
            raise ParseError(f"{where}: 'kind' must be 'table' or 'causal'")
        if c["kind"] == "table":
            _keys(c, _TABLE_KEYS, _TABLE_KEYS, where)
            child = ref(c["child"], f"{where}.child")
            if not isinstance(c["parents"], list):
                raise ParseError(f"{where}.parents: expected a list")
            parents = [ref(p, f"{where}.parents") for p in c["parents"]]
            probs = _numbers(c["probs"], f"{where}.probs")
            shape = tuple(cards[p] for p in parents) + (cards[child],)
            if len(probs) != math.prod(shape):
                raise ParseError(f"{where}.probs: expected {math.prod(shape)} numbers, got {len(probs)}")
            b.table(child, parents, np.array(probs).reshape(shape))
        else:
            _keys(c, _CAUSAL_KEYS, {"kind", "child", "op", "contributions"}, where)
            child = ref(c["child"], f"{where}.child")
            if c["op"] not in OP_KINDS:
                raise ParseError(f"{where}.op: expected one of {list(OP_KINDS)}")
            if (c["op"] == "custom") != ("custom_table" in c):
                raise ParseError(f"{where}: 'custom_table' goes with op 'custom' only")
            table = None
            if "custom_table" in c:
                rows = c["custom_table"]
                if not isinstance(rows, list) or not all(
                        isinstance(r, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in r)
                        for r in rows):
                    raise ParseError(f"{where}.custom_table: expected a list of integer lists")
                table = rows
            op = BaseOp(c["op"], table)
            if not isinstance(c["contributions"], list):
                raise ParseError(f"{where}.contributions: expected a list")
            contribs = []
            for j, ct in enumerate(c["contributions"]):
                w = f"{where}.contributions[{j}]"
                _keys(ct, _CONTRIB_KEYS, _CONTRIB_KEYS, w)
                parent = ref(ct["parent"], f"{w}.parent")
                if not isinstance(ct["table"], list):
                    raise ParseError(f"{w}.table: expected a list of rows")
                rows = [_numbers(r, f"{w}.table") for r in ct["table"]]
                if len(rows) != cards[parent] or any(len(r) != cards[child] for r in rows):
                    raise ParseError(f"{w}.table: expected {cards[parent]} rows of {cards[child]} numbers")
                contribs.append((parent, np.array(rows)))
            leak = None
            if "leak" in c:
                leak = _numbers(c["leak"], f"{where}.leak")
                if len(leak) != cards[child]:
                    raise ParseError(f"{where}.leak: expected {cards[child]} numbers")
            b.causal(child, op, contribs, leak)
        if child in seen:
            raise ParseError(f"{where}: second CPD for {child!r}")
        seen.add(child)
    net = b.build()
    problems = validate(net)
    if problems:
        raise ValidationError(problems)
    return net


def to_dict(network: Network) -> dict:
    """Serialisable form of ``network``; deputies and their CPDs are internal and omitted."""
    keep = [v for v in network.variables if v.kind != DEPUTY]
    name = {v.id: v.name for v in network.variables}
    variables = []
    for v in keep:
        item = {"name": v.name, "cardinality": v.cardinality}
        if v.states:
            item["states"] = list(v.states)
        variables.append(item)
    cpds = []
    for v in keep:
        cpd = network.cpds[v.id]
        if isinstance(cpd, TableCPD):
            cpds.append({"kind": "table", "child": v.name,
                         "parents": [name[p] for p in cpd.parents],
                         "probs": [float(x) for x in cpd.probs.reshape(-1)]})
        else:
            assert isinstance(cpd, CausalCPD)
            item = {"kind": "causal", "child": v.name, "op": cpd.op.kind}
            if cpd.op.kind == "custom":
                item["custom_table"] = [list(r) for r in cpd.op.custom_table]
            if cpd.leak is not None:
                item["leak"] = [float(x) for x in cpd.leak]
            item["contributions"] = [{"parent": name[p], "table": t.tolist()}
                                     for p, t in cpd.contributions]
            cpds.append(item)
    return {"variables": variables, "cpds": cpds}


def loads(text: str) -> Network:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc}") from None
    return from_dict(data)


def dumps(network: Network) -> str:
    return json.dumps(to_dict(network), indent=1) + "\n"


def load(path) -> Network:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return loads(text)


def save(network: Network, path) -> None:
    Path(path).write_text(dumps(network), encoding="utf-8")
