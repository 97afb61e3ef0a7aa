"""Flow runtime for scripted robot interactions.

A flow is a directed graph of activities. The engine starts entry
activities, advances every live context once per tick on a fixed-rate
virtual clock, and follows the transition whose label equals each
activity's stringified result. Speech handling, robot commands, and
parameter access go through a JSON bridge that can point at a real
endpoint or the bundled simulator.
"""

from .errors import (
    ExpressionError,
    FlowFormatError,
    FlowSchemaError,
    FlowSignal,
    FlowSyntaxError,
    GrammarError,
    RegistryError,
)

__version__ = "0.1.0"

__all__ = [
    "ExpressionError",
    "FlowFormatError",
    "FlowSchemaError",
    "FlowSignal",
    "FlowSyntaxError",
    "GrammarError",
    "RegistryError",
    "__version__",
]
