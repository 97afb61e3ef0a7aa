"""Flow documents: the on-disk graph format, validation, and result strings.

A flow file is a JSON object::

    {
      "name": "sleep_check",
      "ez": false,
      "rules": "AFFIRM = yes | yeah\\n",
      "activities": [
        {"id": "a1", "type": "Begin", "name": "Begin", "options": {}, "x": 0, "y": 0}
      ],
      "transitions": [
        {"from": "a1", "label": "", "to": "a2"}
      ]
    }

Activity order and transition order are significant and preserved: the
engine starts entries in file order and resolves equal-priority transition
lookups in file order. ``dumps`` is canonical (sorted keys, fixed layout),
so load/dump cycles are byte-stable, which the editor relies on to avoid
spurious diffs.

Structural problems (bad JSON, wrong field types) raise at load time.
Graph-level problems (dangling transitions, duplicate labels, EZ-mode
violations) come back as diagnostics from :func:`validate_flow` so a
validator run can report all of them at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Protocol

from .errors import FlowSchemaError, FlowSyntaxError

#: Activity types that start automatically when an execution begins.
ENTRY_TYPES = ("Begin", "Parallel-Begin")

#: Activity type consulted during exception dispatch, matched by display name.
CATCH_TYPE = "Catch"

#: Accepted aliases for activity types, applied at load time.
TYPE_ALIASES = {"TimeoutJS": "Timeout"}


def stringify_result(value: Any) -> str:
    """Canonical transition-label form of an activity result.

    None maps to the empty string so a bare completion follows the unnamed
    transition. Booleans use JSON casing, not Python casing, to match what
    flow authors type as labels.
    """
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (int, float)):
        return str(value)
    try:
        return json.dumps(value, sort_keys=True)
    except (TypeError, ValueError):
        return str(value)


@dataclass
class ActivityNode:
    id: str
    type: str
    name: str
    options: dict = field(default_factory=dict)
    x: float = 0.0
    y: float = 0.0

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "type": self.type,
            "name": self.name,
            "options": self.options,
            "x": self.x,
            "y": self.y,
        }


@dataclass
class Transition:
    source: str
    label: str
    target: str

    def to_dict(self) -> dict:
        return {"from": self.source, "label": self.label, "to": self.target}


@dataclass
class Flow:
    name: str
    activities: list[ActivityNode] = field(default_factory=list)
    transitions: list[Transition] = field(default_factory=list)
    ez: bool = False
    rules: str = ""

    def __post_init__(self):
        self._by_id = {a.id: a for a in self.activities}
        self._outgoing: dict[str, list[Transition]] = {}
        for t in self.transitions:
            self._outgoing.setdefault(t.source, []).append(t)

    def activity(self, activity_id: str) -> ActivityNode:
        try:
            return self._by_id[activity_id]
        except KeyError:
            raise FlowSchemaError(f"no activity {activity_id!r} in flow {self.name!r}") from None

    def has_activity(self, activity_id: str) -> bool:
        return activity_id in self._by_id

    def entries(self) -> list[ActivityNode]:
        return [a for a in self.activities if a.type in ENTRY_TYPES]

    def outgoing(self, activity_id: str) -> list[Transition]:
        return self._outgoing.get(activity_id, [])

    def catches(self) -> list[ActivityNode]:
        return [a for a in self.activities if a.type == CATCH_TYPE]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "ez": self.ez,
            "rules": self.rules,
            "activities": [a.to_dict() for a in self.activities],
            "transitions": [t.to_dict() for t in self.transitions],
        }


# ---------------------------------------------------------------------------
# Parse / serialize


def _expect(value: Any, kind: type, where: str) -> Any:
    if kind is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if not isinstance(value, kind) or (kind is not bool and isinstance(value, bool)):
        raise FlowSchemaError(f"{where}: expected {kind.__name__}, got {type(value).__name__}")
    return value


def flow_from_dict(doc: Any) -> Flow:
    if not isinstance(doc, dict):
        raise FlowSchemaError("flow document must be a JSON object")
    name = _expect(doc.get("name", ""), str, "name")
    if not name:
        raise FlowSchemaError("flow must have a non-empty name")
    ez = _expect(doc.get("ez", False), bool, "ez")
    rules = _expect(doc.get("rules", ""), str, "rules")

    activities: list[ActivityNode] = []
    raw_acts = doc.get("activities", [])
    if not isinstance(raw_acts, list):
        raise FlowSchemaError("activities: expected a list")
    for i, raw in enumerate(raw_acts):
        if not isinstance(raw, dict):
            raise FlowSchemaError(f"activities[{i}]: expected an object")
        where = f"activities[{i}]"
        act_id = _expect(raw.get("id", ""), str, f"{where}.id")
        if not act_id:
            raise FlowSchemaError(f"{where}: activity must have an id")
        act_type = _expect(raw.get("type", ""), str, f"{where}.type")
        if not act_type:
            raise FlowSchemaError(f"{where}: activity must have a type")
        act_type = TYPE_ALIASES.get(act_type, act_type)
        options = raw.get("options", {})
        if not isinstance(options, dict):
            raise FlowSchemaError(f"{where}.options: expected an object")
        activities.append(
            ActivityNode(
                id=act_id,
                type=act_type,
                name=_expect(raw.get("name", act_id), str, f"{where}.name"),
                options=options,
                x=_expect(raw.get("x", 0.0), float, f"{where}.x"),
                y=_expect(raw.get("y", 0.0), float, f"{where}.y"),
            )
        )

    transitions: list[Transition] = []
    raw_trans = doc.get("transitions", [])
    if not isinstance(raw_trans, list):
        raise FlowSchemaError("transitions: expected a list")
    for i, raw in enumerate(raw_trans):
        if not isinstance(raw, dict):
            raise FlowSchemaError(f"transitions[{i}]: expected an object")
        where = f"transitions[{i}]"
        transitions.append(
            Transition(
                source=_expect(raw.get("from", ""), str, f"{where}.from"),
                label=_expect(raw.get("label", ""), str, f"{where}.label"),
                target=_expect(raw.get("to", ""), str, f"{where}.to"),
            )
        )

    return Flow(name=name, activities=activities, transitions=transitions, ez=ez, rules=rules)


def loads(text: str) -> Flow:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FlowSyntaxError(f"invalid JSON: {exc}") from None
    return flow_from_dict(doc)


def dumps(flow: Flow) -> str:
    return json.dumps(flow.to_dict(), indent=2, sort_keys=True) + "\n"


def load(path) -> Flow:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def save(path, flow: Flow) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(flow))


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" or "warning"
    code: str
    where: str
    message: str

    def line(self) -> str:
        return "\t".join((self.level, self.code, self.where, self.message))


class TypeCatalog(Protocol):
    """What validation needs to know about activity types."""

    def has_type(self, name: str) -> bool: ...

    def is_ez(self, name: str) -> bool: ...

    def check_options(self, name: str, options: dict) -> list[str]: ...


def validate_flow(flow: Flow, catalog: TypeCatalog | None = None) -> list[Diagnostic]:
    """All graph-level problems in ``flow``, errors and warnings together."""
    diags: list[Diagnostic] = []

    def err(code: str, where: str, message: str) -> None:
        diags.append(Diagnostic("error", code, where, message))

    def warn(code: str, where: str, message: str) -> None:
        diags.append(Diagnostic("warning", code, where, message))

    seen_ids: set[str] = set()
    for act in flow.activities:
        if act.id in seen_ids:
            err("duplicate-id", act.id, f"activity id {act.id!r} appears more than once")
        seen_ids.add(act.id)

    for act in flow.activities:
        if catalog is not None:
            if not catalog.has_type(act.type):
                err("unknown-type", act.id, f"unknown activity type {act.type!r}")
                continue
            if flow.ez and not catalog.is_ez(act.type):
                err("ez-violation", act.id, f"type {act.type!r} is not available in EZ mode")
            for problem in catalog.check_options(act.type, act.options):
                err("bad-option", act.id, problem)

    if flow.rules:
        from .grammar import RuleSet
        from .errors import GrammarError

        try:
            RuleSet.parse(flow.rules)
        except GrammarError as exc:
            err("bad-rules", "rules", str(exc))

    labels_seen: set[tuple[str, str]] = set()
    for i, tr in enumerate(flow.transitions):
        where = f"transition[{i}]"
        if not flow.has_activity(tr.source):
            err("dangling-transition", where, f"transition from unknown activity {tr.source!r}")
        if not flow.has_activity(tr.target):
            err("dangling-transition", where, f"transition to unknown activity {tr.target!r}")
        key = (tr.source, tr.label)
        if key in labels_seen:
            shown = tr.label or "<unnamed>"
            err("duplicate-label", where, f"activity {tr.source!r} has two {shown!r} transitions")
        labels_seen.add(key)

    entries = flow.entries()
    if not entries:
        err("no-entry", flow.name, "flow has no Begin activity")

    # Catch activities are alternate roots: dispatch can jump straight to
    # them, so they do not count as unreachable.
    reachable: set[str] = set()
    frontier = [a.id for a in entries] + [a.id for a in flow.catches()]
    adjacency: dict[str, list[str]] = {}
    for tr in flow.transitions:
        adjacency.setdefault(tr.source, []).append(tr.target)
    while frontier:
        current = frontier.pop()
        if current in reachable:
            continue
        reachable.add(current)
        frontier.extend(adjacency.get(current, ()))
    for act in flow.activities:
        if act.id not in reachable:
            warn("unreachable", act.id, f"activity {act.id!r} cannot be reached from any entry")

    return diags


def errors_only(diags: Iterable[Diagnostic]) -> list[Diagnostic]:
    return [d for d in diags if d.level == "error"]
