"""Base contract every activity type implements.

An activity instance lives for one visit to one node. The engine calls
``start`` exactly once; if that returns :data:`RUNNING`, the engine calls
``update`` once per tick until something else comes back. Whatever
``start`` or ``update`` finally returns is the activity's result, which
the engine stringifies and uses to pick the outbound transition.

Activities talk to the world only through the runtime facade handed to
``__init__`` (scopes, clock, bridge, rng, sub-flow calls). Raising
FlowSignal routes through handler dispatch; any other exception is an
implementation bug that the engine converts to an activityError signal.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, ClassVar


class _Running:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "RUNNING"


#: Sentinel an activity returns while it still needs ticks.
RUNNING = _Running()


@dataclass(frozen=True)
class OptionSpec:
    """One configurable field, as shown in the editor's options panel."""

    name: str
    kind: str  # "string" | "number" | "boolean" | "object" | "list" | "script" | "prompts"
    required: bool = False
    default: Any = None
    description: str = ""

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "required": self.required,
            "default": self.default,
            "description": self.description,
        }


_KIND_CHECKS = {
    "string": lambda v: isinstance(v, str),
    "script": lambda v: isinstance(v, str),
    "number": lambda v: isinstance(v, (int, float)) and not isinstance(v, bool),
    "boolean": lambda v: isinstance(v, bool),
    "object": lambda v: isinstance(v, dict),
    "list": lambda v: isinstance(v, list),
    "prompts": lambda v: isinstance(v, list),
}


class Activity:
    """One node's behavior. Subclasses set the class attributes and override
    start/update."""

    type_name: ClassVar[str] = ""
    ez: ClassVar[bool] = False
    option_schema: ClassVar[tuple[OptionSpec, ...]] = ()

    def __init__(self, node, runtime):
        self.node = node
        self.runtime = runtime

    # -- config access ------------------------------------------------------

    def opt(self, name: str, default: Any = None) -> Any:
        value = self.node.options.get(name)
        if value is None:
            for spec in self.option_schema:
                if spec.name == name and spec.default is not None:
                    return spec.default
            return default
        return value

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> Any:
        return None

    def update(self) -> Any:  # pragma: no cover - overridden wherever reachable
        return None

    def cancel(self) -> None:
        """Called when the engine abandons a running instance."""

    # -- static validation --------------------------------------------------

    @classmethod
    def check_options(cls, options: dict) -> list[str]:
        problems = []
        for spec in cls.option_schema:
            present = spec.name in options
            if spec.required and not present:
                problems.append(f"{cls.type_name}: missing required option {spec.name!r}")
                continue
            if present and options[spec.name] is not None:
                check = _KIND_CHECKS.get(spec.kind)
                if check and not check(options[spec.name]):
                    problems.append(
                        f"{cls.type_name}: option {spec.name!r} must be a {spec.kind}"
                    )
        problems.extend(cls.check_extra(options))
        return problems

    @classmethod
    def check_extra(cls, options: dict) -> list[str]:
        """Type-specific constraints beyond field shapes."""
        return []
