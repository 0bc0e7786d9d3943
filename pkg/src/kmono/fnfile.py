"""Function files: JSON documents holding a truth table, a generator call or real values.

A table is stored as hex of the bit-packed values, little-endian within each
byte, in point-index order (coordinate 1 least significant).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .poset import Domain, Oracle


class FunctionFileError(ValueError):
    """A function file that cannot be parsed; the message says where."""


def encode_bits(table) -> str:
    t = np.asarray(table, dtype=np.uint8).reshape(-1)
    return np.packbits(t, bitorder="little").tobytes().hex()


def decode_bits(text: str, size: int) -> np.ndarray:
    try:
        raw = bytes.fromhex(text)
    except ValueError as e:
        raise FunctionFileError(f"repr.bits is not hex: {e}") from None
    if len(raw) != (size + 7) // 8:
        raise FunctionFileError(f"repr.bits holds {len(raw)} bytes, the domain needs {(size + 7) // 8}")
    bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
    if bits[size:].any():
        raise FunctionFileError("repr.bits has set padding bits past the last point")
    return bits[:size].copy()


def table_document(domain: Domain, table) -> dict:
    return {"domain": domain.to_json(), "repr": {"kind": "table", "bits": encode_bits(table)}}


def generator_document(name: str, params: dict, seed) -> dict:
    return {"repr": {"kind": "generator", "name": name, "params": params, "seed": seed}}


def _domain(doc: dict) -> Domain:
    if "domain" not in doc:
        raise FunctionFileError("missing 'domain'")
    try:
        return Domain.from_json(doc["domain"])
    except (KeyError, TypeError, ValueError) as e:
        raise FunctionFileError(f"bad domain {doc['domain']!r}: {e}") from None


def parse_document(doc):
    """An Oracle for Boolean tables and generators, a RealFunction for real values.

    Generated functions keep their bundle on ``oracle.source["bundle"]``.
    """
    if not isinstance(doc, dict) or not isinstance(doc.get("repr"), dict):
        raise FunctionFileError("expected an object with a 'repr' object")
    rep = doc["repr"]
    kind = rep.get("kind")
    if kind == "table":
        dom = _domain(doc)
        if not isinstance(rep.get("bits"), str):
            raise FunctionFileError("repr.bits must be a hex string")
        return Oracle(dom, decode_bits(rep["bits"], dom.size), {"file": "table"})
    if kind == "generator":
        from .adversaries import generate

        try:
            bundle = generate(rep["name"], rep.get("params", {}), rep.get("seed"))
        except KeyError as e:
            raise FunctionFileError(f"generator is missing {e}") from None
        except (TypeError, ValueError) as e:
            raise FunctionFileError(f"generator failed: {e}") from None
        if "domain" in doc and _domain(doc) != bundle.domain:
            raise FunctionFileError("declared domain differs from the generated one")
        oracle = bundle.fresh_oracle()
        oracle.source = {"file": "generator", "bundle": bundle}
        return oracle
    if kind == "real":
        from .l1bridge import RealFunction

        try:
            return RealFunction.from_json({"domain": doc.get("domain"), **rep})
        except (KeyError, TypeError, ValueError, ZeroDivisionError) as e:
            raise FunctionFileError(f"bad real values: {e}") from None
    raise FunctionFileError(f"unknown repr.kind {kind!r}")


def load_function(path):
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FunctionFileError(f"{path}: line {e.lineno} column {e.colno}: {e.msg}") from None
    return parse_document(doc)


def dump(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, sort_keys=True) + "\n")


def real_document(f) -> dict:
    obj = f.to_json()
    return {"domain": obj.pop("domain"), "repr": {"kind": "real", **obj}}
