"""Error types shared across the runtime.

Two families live here: document/compile errors (raised while loading or
validating artifacts, never routed through a running flow) and FlowSignal,
the single runtime exception type that travels through the engine's
handler-dispatch machinery under a "~"-prefixed name.
"""

from __future__ import annotations


class FlowFormatError(Exception):
    """Base for problems with a flow document."""


class FlowSyntaxError(FlowFormatError):
    """The document is not well-formed (e.g. broken JSON)."""


class FlowSchemaError(FlowFormatError):
    """The document parses but violates the schema or a structural invariant."""


class EzViolationError(FlowSchemaError):
    """An easy-mode document uses a block outside the easy subset."""


class GrammarError(Exception):
    """A prompt pattern or rule file failed to compile."""


class ExpressionError(Exception):
    """An embedded expression failed to parse or evaluate."""


class RegistryError(Exception):
    """Invalid activity registration (duplicate or empty name)."""


class FlowSignal(Exception):
    """A runtime exception routed through flow-level handler dispatch.

    ``name`` always starts with "~"; dot-separated segments after the tilde
    form the namespace used by suffix-drop matching.
    """

    def __init__(self, name: str, message: str = ""):
        self.name = normalize_exception_name(name)
        self.message = message
        super().__init__(f"{self.name}: {message}" if message else self.name)


def normalize_exception_name(name: str) -> str:
    """Prefix ``name`` with "~" unless it already carries one."""
    if not name:
        raise ValueError("exception name must be nonempty")
    return name if name.startswith("~") else "~" + name


# Engine-raised signals share the user-visible "~" namespace so flows can
# catch them like any other exception.
ENGINE_NO_TRANSITION = "~Flow.Engine.noTransition"
ENGINE_LOOP_LIMIT = "~Flow.Engine.loopLimit"
ENGINE_ACTIVITY_ERROR = "~Flow.Engine.activityError"
ENGINE_LOAD_ERROR = "~Flow.Engine.loadError"
EVAL_ERROR = "~Flow.Eval.error"
GRAMMAR_ERROR = "~Flow.Grammar.error"

BRIDGE_CONNECT_FAILED = "~Flow.Bridge.connectFailed"
BRIDGE_NOT_CONNECTED = "~Flow.Bridge.notConnected"
BRIDGE_WAIT_TIMEOUT = "~Flow.Bridge.waitTimeout"
BRIDGE_SERVICE_ERROR = "~Flow.Bridge.serviceError"
BRIDGE_DISCONNECTED = "~Flow.Bridge.disconnected"

SPEAK_TIMEOUT = "~Robot.speak.timeout"
ROBOT_INVALID_OPTION = "~Robot.invalidOption"
