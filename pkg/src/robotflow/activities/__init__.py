"""The built-in activity catalog.

``default_registry`` assembles all thirty-two types. Embedders wanting a
custom palette can start from a copy and register more.
"""

from __future__ import annotations

from ..registry import ActivityRegistry
from .base import RUNNING, Activity, OptionSpec
from .bridge_ops import BRIDGE_TYPES
from .core import CORE_TYPES
from .robot import DEFAULT_ADAPTER_CONFIG, ROBOT_TYPES, RobotAdapter

_DEFAULT: ActivityRegistry | None = None


def default_registry() -> ActivityRegistry:
    """The shared catalog instance; copy it before mutating."""
    global _DEFAULT
    if _DEFAULT is None:
        registry = ActivityRegistry()
        for cls in (*CORE_TYPES, *BRIDGE_TYPES, *ROBOT_TYPES):
            registry.register(cls)
        _DEFAULT = registry
    return _DEFAULT


__all__ = [
    "Activity",
    "OptionSpec",
    "RUNNING",
    "RobotAdapter",
    "DEFAULT_ADAPTER_CONFIG",
    "default_registry",
]
