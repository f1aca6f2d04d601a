"""JSON encoding of values, actions, and events.

One object per action:

    {"k":"tau"}
    {"k":"call","name":"f","args":[{"int":5}]}
    {"k":"return","name":"f"}
    {"k":"read","loc":"l2","off":0,"val":{"int":5}}
    {"k":"write","loc":"l2","off":0,"val":{"int":5}}

Values: {"int":n} | {"bool":b} | {"loc":"name"}. Parallel events wrap an
action with its thread: {"tid":0,"act":{...}} or {"tid":0,"atomic":[...]}.
"""

from __future__ import annotations

from .lang import Loc, Value
from .semseq import ActionSeq, CallAct, ReadAct, ReturnAct, Tau, TAU, WriteAct
from .sempar import AtomicAct, EventPar


def value_to_json(v: Value) -> dict:
    if type(v) is bool:
        return {"bool": v}
    if isinstance(v, Loc):
        return {"loc": v.name}
    return {"int": v}


def value_from_json(obj: dict) -> Value:
    if "bool" in obj:
        return bool(obj["bool"])
    if "loc" in obj:
        return Loc(obj["loc"])
    return int(obj["int"])


def action_to_json(a: ActionSeq) -> dict:
    if isinstance(a, Tau):
        return {"k": "tau"}
    if isinstance(a, CallAct):
        return {"k": "call", "name": a.name,
                "args": [value_to_json(v) for v in a.args]}
    if isinstance(a, ReturnAct):
        return {"k": "return", "name": a.name}
    if isinstance(a, ReadAct):
        return {"k": "read", "loc": a.loc, "off": a.offset,
                "val": value_to_json(a.value)}
    if isinstance(a, WriteAct):
        return {"k": "write", "loc": a.loc, "off": a.offset,
                "val": value_to_json(a.value)}
    raise TypeError(f"not an action: {a!r}")


def action_from_json(obj: dict) -> ActionSeq:
    k = obj["k"]
    if k == "tau":
        return TAU
    if k == "call":
        return CallAct(obj["name"], tuple(value_from_json(v) for v in obj["args"]))
    if k == "return":
        return ReturnAct(obj["name"])
    if k == "read":
        return ReadAct(obj["loc"], obj["off"], value_from_json(obj["val"]))
    if k == "write":
        return WriteAct(obj["loc"], obj["off"], value_from_json(obj["val"]))
    raise ValueError(f"unknown action kind {k!r}")


def event_to_json(e: EventPar) -> dict:
    if isinstance(e.action, AtomicAct):
        return {"tid": e.tid,
                "atomic": [action_to_json(a) for a in e.action.actions]}
    return {"tid": e.tid, "act": action_to_json(e.action)}


def event_from_json(obj: dict) -> EventPar:
    if "atomic" in obj:
        return EventPar(obj["tid"],
                        AtomicAct(tuple(action_from_json(a) for a in obj["atomic"])))
    return EventPar(obj["tid"], action_from_json(obj["act"]))


def heap_to_json(heap: dict) -> dict:
    return {name: [value_to_json(v) for v in cells]
            for name, cells in sorted(heap.items())}
