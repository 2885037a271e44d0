"""JSON documents for communities, tariffs and outcomes."""

from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from .core import Community, Device, DeviceBounds, Member, NemTariff, QuadraticUtility
from .welfare import MemberOutcome, Outcome

_NUM = {"type": "number"}
_NONNEG = {"type": "number", "minimum": 0}

DEVICE_SCHEMA = {
    "type": "object",
    "required": ["a", "b", "lower", "upper"],
    "properties": {
        "a": {"type": "number", "exclusiveMinimum": 0},
        "b": {"type": "number", "exclusiveMinimum": 0},
        "lower": _NONNEG,
        "upper": _NONNEG,
    },
}

COMMUNITY_SCHEMA = {
    "type": "object",
    "required": ["members"],
    "properties": {
        "members": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["id", "devices"],
                "properties": {
                    "id": {"type": ["string", "integer"]},
                    "generation": _NONNEG,
                    "devices": {"type": "array", "minItems": 1, "items": DEVICE_SCHEMA},
                },
            },
        }
    },
}

TARIFF_SCHEMA = {
    "type": "object",
    "required": ["retail", "export"],
    "properties": {"retail": _NONNEG, "export": _NONNEG, "fixed": _NONNEG},
}

OUTCOME_SCHEMA = {
    "type": "object",
    "required": ["price", "members", "aggregate_net", "community_payment", "welfare", "operator_profit"],
    "properties": {
        "price": {
            "type": "object",
            "required": ["zone", "rate", "fixed_share"],
            "properties": {
                "zone": {"enum": ["NetConsuming", "NetZero", "NetProducing"]},
                "rate": _NUM,
                "fixed_share": _NUM,
            },
        },
        "members": {"type": "array", "items": {"$ref": "#/$defs/member"}},
        "aggregate_net": _NUM,
        "community_payment": _NUM,
        "welfare": _NUM,
        "operator_profit": _NUM,
    },
    "$defs": {
        "member": {
            "type": "object",
            "required": ["member_id", "consumption", "net", "payment", "surplus"],
            "properties": {
                "member_id": {"type": ["string", "integer"]},
                "consumption": {"type": "array", "items": _NUM},
                "net": _NUM,
                "payment": _NUM,
                "surplus": _NUM,
            },
        }
    },
}

BENCHMARK_SCHEMA = {
    "type": "object",
    "required": ["members"],
    "properties": {"members": {"type": "array", "items": OUTCOME_SCHEMA["$defs"]["member"]}},
}


class SchemaError(ValueError):
    """A document failed validation; ``path`` locates the offending field."""

    def __init__(self, source, path: str, message: str):
        self.source = str(source)
        self.path = path
        super().__init__(f"{source}: {path or '<root>'}: {message}")


def _path(parts) -> str:
    out = ""
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out


def _validate(doc, schema, source):
    try:
        jsonschema.validate(doc, schema)
    except jsonschema.ValidationError as e:
        raise SchemaError(source, _path(e.absolute_path), e.message) from None


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such file: {path}")
    with path.open(encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as e:
            raise SchemaError(path, "", f"invalid JSON ({e})") from None


def community_from_dict(doc: dict, source="<community>") -> Community:
    _validate(doc, COMMUNITY_SCHEMA, source)
    members = []
    for i, m in enumerate(doc["members"]):
        devices = []
        for k, d in enumerate(m["devices"]):
            try:
                devices.append(Device(QuadraticUtility(d["a"], d["b"]), DeviceBounds(d["lower"], d["upper"])))
            except ValueError as e:
                raise SchemaError(source, f"members[{i}].devices[{k}]", str(e)) from None
        members.append(Member(str(m["id"]), tuple(devices), float(m.get("generation", 0.0))))
    try:
        return Community(tuple(members))
    except ValueError as e:
        raise SchemaError(source, "members", str(e)) from None


def tariff_from_dict(doc: dict, source="<tariff>") -> NemTariff:
    if "tariff" in doc and isinstance(doc["tariff"], dict):
        doc = doc["tariff"]
    _validate(doc, TARIFF_SCHEMA, source)
    try:
        return NemTariff(float(doc["retail"]), float(doc["export"]), float(doc.get("fixed", 0.0)))
    except ValueError as e:
        raise SchemaError(source, "export", str(e)) from None


def community_to_dict(c: Community) -> dict:
    return {
        "members": [
            {
                "id": m.id,
                "generation": m.generation,
                "devices": [
                    {"a": d.utility.a, "b": d.utility.b, "lower": d.bounds.lower, "upper": d.bounds.upper}
                    for d in m.devices
                ],
            }
            for m in c.members
        ]
    }


def load_community(path) -> Community:
    return community_from_dict(read_json(path), path)


def load_tariff(path) -> NemTariff:
    return tariff_from_dict(read_json(path), path)


def load_outcome(path) -> Outcome:
    doc = read_json(path)
    _validate(doc, OUTCOME_SCHEMA, path)
    return Outcome.from_dict(doc)


def load_benchmarks(path) -> list[MemberOutcome]:
    doc = read_json(path)
    if isinstance(doc, list):
        doc = {"members": doc}
    _validate(doc, BENCHMARK_SCHEMA, path)
    return [MemberOutcome.from_dict(m) for m in doc["members"]]


def dump_json(obj, path=None) -> str:
    """Serialize with round-trip float precision (``repr``), one line."""
    text = json.dumps(obj, separators=(",", ":"), allow_nan=False)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text
