"""Wire-message validation against the bundled JSON schema.

Every inbound message is schema-checked before it can touch a session; the
same schema file ships to clients so both ends validate identical shapes.
"""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from .errors import ProtocolError

INBOUND_TYPES = ("load_chain", "hand", "drag_ee", "register", "set_config",
                 "mode", "record", "replay")
OUTBOUND_TYPES = ("state", "target", "highlight", "registration", "chain", "error")


@lru_cache(maxsize=1)
def schema_document() -> dict:
    text = resources.files("handguide").joinpath("protocol.schema.json").read_text("utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(msg_type: str) -> jsonschema.Validator:
    doc = schema_document()
    sub = {"$defs": doc["$defs"], **doc["$defs"][msg_type]}
    return jsonschema.Draft202012Validator(sub)


def _validate(message: dict, allowed: tuple[str, ...], direction: str) -> dict:
    if not isinstance(message, dict):
        raise ProtocolError(f"{direction} message must be a JSON object")
    msg_type = message.get("type")
    if msg_type not in allowed:
        raise ProtocolError(f"unknown {direction} message type {msg_type!r}")
    errors = sorted(_validator(msg_type).iter_errors(message), key=str)
    if errors:
        raise ProtocolError(f"invalid {msg_type!r} message: {errors[0].message}")
    return message


def validate_inbound(message: dict) -> dict:
    return _validate(message, INBOUND_TYPES, "inbound")


def validate_outbound(message: dict) -> dict:
    return _validate(message, OUTBOUND_TYPES, "outbound")


def parse_line(line: str) -> dict:
    try:
        return json.loads(line)
    except json.JSONDecodeError as e:
        raise ProtocolError(f"message is not valid JSON: {e.msg}")
