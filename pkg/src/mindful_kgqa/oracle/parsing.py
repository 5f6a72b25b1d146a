"""Extraction of structured fields from free-form model output.

Prompts ask the model to answer inside a fenced block of ``key: value``
lines. Models wrap that block in prose, so the parser scans every fenced
block and every top-level JSON object in order of appearance and returns the
first one that satisfies the schema.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Union

from ..errors import OracleParseError
from .tasks import OracleResponse

Fields = dict[str, Union[str, list[str]]]

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)
_KEY = re.compile(r"^\s*(?:[-*]\s+)?([A-Za-z][A-Za-z0-9 _-]*?)\s*:\s*(.*)$")


@dataclass(frozen=True)
class Schema:
    name: str
    required: tuple[str, ...] = ()
    any_of: tuple[str, ...] = ()
    # Values split on ';' and accumulated across repeated keys.
    lists: frozenset[str] = frozenset()
    # Accumulated across repeated keys only; a line is one item.
    repeated: frozenset[str] = frozenset()
    optional: tuple[str, ...] = field(default=())

    @property
    def keys(self) -> frozenset[str]:
        return frozenset(self.required) | frozenset(self.any_of) | self.lists | self.repeated | frozenset(self.optional)


SCHEMAS: dict[str, Schema] = {
    s.name: s
    for s in (
        Schema("elements", required=("entities",), lists=frozenset({"entities", "tokens"})),
        Schema(
            "analysis",
            required=("entities", "intent", "context"),
            lists=frozenset({"entities", "tokens", "context"}),
        ),
        Schema("intent", required=("intent",)),
        Schema("context", required=("context",), lists=frozenset({"context"})),
        Schema(
            "constraints",
            any_of=("temporal", "geographic", "aggregation", "other"),
            lists=frozenset({"other"}),
        ),
        Schema("ranking", required=("relation",), repeated=frozenset({"relation"})),
        Schema("alignment", required=("decision",), lists=frozenset({"select"}), optional=("rationale",)),
        Schema("validation", required=("verdict",), optional=("reason",)),
        Schema("baseline_select", required=("relation",)),
        Schema(
            "baseline_answer",
            required=("decision",),
            lists=frozenset({"select", "constraints"}),
        ),
    )
}


def _split(value: str) -> list[str]:
    return [part.strip() for part in value.split(";") if part.strip()]


def _from_lines(body: str, schema: Schema) -> Fields:
    out: Fields = {}
    for line in body.splitlines():
        m = _KEY.match(line)
        if not m:
            continue
        key = m.group(1).strip().lower().replace(" ", "_").replace("-", "_")
        value = m.group(2).strip()
        if key in schema.lists:
            out.setdefault(key, [])
            out[key].extend(_split(value))  # type: ignore[union-attr]
        elif key in schema.repeated:
            out.setdefault(key, [])
            if value:
                out[key].append(value)  # type: ignore[union-attr]
        elif key not in out:
            out[key] = value
    return out


def _from_json(obj: dict[str, Any], schema: Schema) -> Fields:
    out: Fields = {}
    for raw_key, value in obj.items():
        key = str(raw_key).strip().lower().replace(" ", "_").replace("-", "_")
        if key in schema.lists or key in schema.repeated:
            items = value if isinstance(value, list) else [value]
            parts: list[str] = []
            for item in items:
                if item is None:
                    continue
                parts.extend(_split(str(item)) if key in schema.lists else [str(item).strip()])
            out[key] = [p for p in parts if p]
        elif value is not None:
            out[key] = str(value).strip()
    return out


def _matches(fields: Fields, schema: Schema) -> bool:
    if any(not fields.get(k) for k in schema.required):
        return False
    if schema.any_of and not any(k in fields for k in schema.any_of):
        return False
    return True


def _candidate_blocks(text: str) -> list[tuple[int, str, Any]]:
    blocks: list[tuple[int, str, Any]] = []
    fenced_spans = []
    for m in _FENCE.finditer(text):
        fenced_spans.append(m.span())
        body = m.group(1)
        try:
            obj = json.loads(body)
        except ValueError:
            obj = None
        if isinstance(obj, dict):
            blocks.append((m.start(), "json", obj))
        else:
            blocks.append((m.start(), "lines", body))
    decoder = json.JSONDecoder()
    pos = text.find("{")
    while pos != -1:
        if not any(a <= pos < b for a, b in fenced_spans):
            try:
                obj, end = decoder.raw_decode(text, pos)
            except ValueError:
                obj, end = None, pos + 1
            if isinstance(obj, dict):
                blocks.append((pos, "json", obj))
                pos = text.find("{", end)
                continue
        pos = text.find("{", pos + 1)
    blocks.sort(key=lambda b: b[0])
    return blocks


def parse_structured(response: OracleResponse | str, expected: str) -> Fields:
    """Return the fields of the first block in ``response`` matching ``expected``.

    Raises :class:`OracleParseError` carrying the untouched raw text when no
    block qualifies.
    """
    schema = SCHEMAS[expected]
    text = response.text if isinstance(response, OracleResponse) else response
    for _, shape, body in _candidate_blocks(text):
        fields = _from_json(body, schema) if shape == "json" else _from_lines(body, schema)
        fields = {k: v for k, v in fields.items() if k in schema.keys}
        if _matches(fields, schema):
            return fields
    raise OracleParseError(expected, text)
