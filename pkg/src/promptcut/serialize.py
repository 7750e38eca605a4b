"""JSON form of lassos and reports.

A guarded-protocol step reads ``{"state": {"A": "nw", "B1": "nr"}, "mover": "B1"}``;
token steps name processes ``T1..Tn`` and add ``"action"`` (``eps`` or
``snd``) plus ``"receiver"`` for sends.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .protocol import SystemLasso, parse_process_name, process_name

__all__ = ["SCHEMA", "lasso_to_json", "lasso_from_json", "dumps", "digest", "SchemaError"]

SCHEMA = 1


class SchemaError(ValueError):
    pass


def _tname(p: int) -> str:
    return f"T{p}"


def _tindex(name: str) -> int:
    if not (name.startswith("T") and name[1:].isdigit() and int(name[1:]) >= 1):
        raise SchemaError(f"bad token process name {name!r}")
    return int(name[1:])


def _step_out(s: tuple, label, kind: str) -> dict:
    if kind == "guarded":
        return {"state": {process_name(p): q for p, q in enumerate(s)}, "mover": process_name(label)}
    out = {"state": {_tname(p + 1): q for p, q in enumerate(s)}, "mover": _tname(label[1]),
           "action": label[0]}
    if label[0] == "snd":
        out["receiver"] = _tname(label[2])
    return out


def lasso_to_json(x: SystemLasso, kind: str = "guarded") -> dict:
    if kind not in ("guarded", "token"):
        raise ValueError(f"unknown lasso kind {kind!r}")
    return {"schema": SCHEMA, "kind": kind,
            "prefix": [_step_out(s, m, kind) for s, m in x.prefix],
            "period": [_step_out(s, m, kind) for s, m in x.period]}


def _step_in(d: dict, kind: str):
    try:
        state, mover = d["state"], d["mover"]
    except (KeyError, TypeError):
        raise SchemaError("each step needs 'state' and 'mover'") from None
    if kind == "guarded":
        try:
            idx = sorted((parse_process_name(k), v) for k, v in state.items())
            label = parse_process_name(mover)
        except ValueError as e:
            raise SchemaError(str(e)) from None
        if [p for p, _ in idx] != list(range(len(idx))):
            raise SchemaError("guarded states must name A, B1, ..., Bn")
        return tuple(v for _, v in idx), label
    idx = sorted((_tindex(k), v) for k, v in state.items())
    if [p for p, _ in idx] != list(range(1, len(idx) + 1)):
        raise SchemaError("token states must name T1, ..., Tn")
    action = d.get("action")
    if action == "eps":
        label = ("eps", _tindex(mover))
    elif action == "snd":
        if "receiver" not in d:
            raise SchemaError("send steps need a 'receiver'")
        label = ("snd", _tindex(mover), _tindex(d["receiver"]))
    else:
        raise SchemaError(f"token steps need action eps or snd, found {action!r}")
    return tuple(v for _, v in idx), label


def lasso_from_json(doc: dict) -> tuple[SystemLasso, str]:
    if not isinstance(doc, dict):
        raise SchemaError("lasso document must be an object")
    if doc.get("schema", SCHEMA) != SCHEMA:
        raise SchemaError(f"unsupported schema {doc.get('schema')!r}")
    kind = doc.get("kind")
    if kind is None:
        first = (doc.get("prefix") or doc.get("period") or [{}])[0]
        kind = "token" if "action" in first else "guarded"
    if not doc.get("period"):
        raise SchemaError("lasso period must be non-empty")
    pre = [_step_in(d, kind) for d in doc.get("prefix", [])]
    per = [_step_in(d, kind) for d in doc["period"]]
    width = {len(s) for s, _ in pre + per}
    if len(width) != 1:
        raise SchemaError("all states must name the same processes")
    return SystemLasso(tuple(pre), tuple(per)), kind


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
