"""Control-flow and utility activities.

These are the blocks that need no bridge: flow entry and exit, sub-flow
calls, waiting, scripted evaluation, exception raising and catching, and
small conveniences (variables, logging, seeded choice).
"""

from __future__ import annotations

from typing import Any

from ..errors import EVAL_ERROR, ExpressionError, FlowSignal, normalize_exception_name
from .base import RUNNING, Activity, OptionSpec


class Begin(Activity):
    """Entry point; one context starts here when the flow is run."""

    type_name = "Begin"
    ez = True

    def start(self):
        return None


class ParallelBegin(Activity):
    """Additional entry point; each one spawns its own parallel context."""

    type_name = "Parallel-Begin"

    def start(self):
        return None


class End(Activity):
    """Finishes the current frame and hands its result to the caller."""

    type_name = "End"
    ez = True
    option_schema = (
        OptionSpec("result", "string", description="literal result value"),
        OptionSpec("result_expr", "script", description="expression computing the result"),
    )

    def start(self):
        expr = self.node.options.get("result_expr")
        if expr:
            try:
                value = self.runtime.eval(expr)
            except ExpressionError as exc:
                raise FlowSignal(EVAL_ERROR, str(exc)) from None
        else:
            value = self.node.options.get("result")
        self.runtime.finish_frame(value)
        return value


class SubFlow(Activity):
    """Calls another flow (or this one) in a fresh frame and waits for it.

    The child's End result lands in this frame's notepad under ``result``
    (configurable) and also becomes this activity's own result.
    """

    type_name = "SubFlow"
    option_schema = (
        OptionSpec("flow", "string", description="name of the flow to call"),
        OptionSpec("path", "string", description="accepted alias for flow"),
        OptionSpec("args", "object", description="literal values seeded into the child notepad"),
        OptionSpec("args_expr", "script", description="expression producing extra args"),
        OptionSpec("result", "string", default="result", description="notepad key for the child result"),
    )

    @classmethod
    def check_extra(cls, options):
        if not options.get("flow") and not options.get("path"):
            return ["SubFlow: needs a 'flow' (or 'path') option naming the flow to call"]
        return []

    def start(self):
        args = dict(self.opt("args") or {})
        expr = self.node.options.get("args_expr")
        if expr:
            try:
                extra = self.runtime.eval(expr)
            except ExpressionError as exc:
                raise FlowSignal(EVAL_ERROR, str(exc)) from None
            if not isinstance(extra, dict):
                raise FlowSignal(EVAL_ERROR, "args_expr must produce a map")
            args.update(extra)
        target = self.opt("flow") or self.opt("path")
        self.runtime.call_flow(target, args, self.opt("result", "result"))
        return RUNNING

    def update(self):  # pragma: no cover - frame is suspended while child runs
        return RUNNING


class Nop(Activity):
    """Does nothing and completes immediately; useful as a junction."""

    type_name = "NOP"
    ez = True

    def start(self):
        return None


class Timeout(Activity):
    """Waits the given number of virtual milliseconds, then completes.

    Completion happens on the first tick at which the elapsed time reaches
    the target, so a 100 ms timeout at 20 fps finishes two ticks after it
    started. Zero (or negative) waits complete during start.
    """

    type_name = "Timeout"
    option_schema = (
        OptionSpec("ms", "number", default=0, description="how long to wait, in milliseconds"),
    )

    def start(self):
        self._ms = float(self.opt("ms", 0) or 0)
        if self._ms <= 0:
            return None
        self._started = self.runtime.now_ms()
        return RUNNING

    def update(self):
        if self.runtime.now_ms() - self._started + 1e-9 >= self._ms:
            return None
        return RUNNING


class Eval(Activity):
    """Runs a script; the script's final expression becomes the result."""

    type_name = "Eval"
    option_schema = (
        OptionSpec("script", "script", required=True, description="expression script to run"),
    )

    def start(self):
        try:
            return self.runtime.eval(self.opt("script", ""))
        except ExpressionError as exc:
            raise FlowSignal(EVAL_ERROR, str(exc)) from None


class EvalAsync(Activity):
    """Completes at once; the script runs at the next tick boundary.

    The script's value lands on the blackboard under ``key``. Evaluation
    errors store None there and add a log entry instead of failing the
    flow, matching the other fire-and-forget blocks.
    """

    type_name = "Eval-Async"
    option_schema = (
        OptionSpec("script", "script", required=True, description="expression script to run"),
        OptionSpec("key", "string", default="asyncResult", description="blackboard key for the value"),
    )

    def start(self):
        runtime = self.runtime
        script = self.opt("script", "")
        key = self.opt("key", "asyncResult")

        def evaluate_later():
            try:
                runtime.blackboard[key] = runtime.eval(script)
            except ExpressionError as exc:
                runtime.blackboard[key] = None
                runtime.log(f"async eval failed: {exc}")

        runtime.defer(evaluate_later)
        return None


class Throw(Activity):
    """Raises a named exception into handler dispatch."""

    type_name = "Throw"
    option_schema = (
        OptionSpec("name", "string", required=True, description="exception name, with or without the leading ~"),
        OptionSpec("message", "string", description="details carried with the exception"),
    )

    def start(self):
        raise FlowSignal(normalize_exception_name(self.opt("name")), self.opt("message", ""))

    @classmethod
    def check_extra(cls, options):
        name = options.get("name")
        if isinstance(name, str) and name.strip("~") == "":
            return ["Throw: exception name must have at least one segment"]
        return []


class Interrupt(Activity):
    """Cancels every other parallel track, leaving only this one."""

    type_name = "Interrupt"

    def start(self):
        self.runtime.interrupt_siblings()
        return None


class Catch(Activity):
    """Handler target: dispatch jumps here when this block's display name
    matches a thrown exception name (or one of its prefixes).

    The exception that was caught is available as ``notepad.exception``.
    """

    type_name = "Catch"

    def start(self):
        return None

    @classmethod
    def check_extra(cls, options):
        return []


class SetVariable(Activity):
    """Writes one value into the notepad or the blackboard."""

    type_name = "Set-Variable"
    option_schema = (
        OptionSpec("scope", "string", default="notepad", description="notepad or blackboard"),
        OptionSpec("name", "string", required=True, description="key to write"),
        OptionSpec("value", "string", description="literal value"),
        OptionSpec("value_expr", "script", description="expression computing the value"),
    )

    def start(self):
        expr = self.node.options.get("value_expr")
        if expr:
            try:
                value: Any = self.runtime.eval(expr)
            except ExpressionError as exc:
                raise FlowSignal(EVAL_ERROR, str(exc)) from None
        else:
            value = self.node.options.get("value")
        scope = self.opt("scope", "notepad")
        target = self.runtime.notepad if scope == "notepad" else self.runtime.blackboard
        target[self.opt("name")] = value
        return None

    @classmethod
    def check_extra(cls, options):
        scope = options.get("scope")
        if scope is not None and scope not in ("notepad", "blackboard"):
            return [f"Set-Variable: scope must be notepad or blackboard, not {scope!r}"]
        return []


class Log(Activity):
    """Adds a line to the execution log."""

    type_name = "Log"
    option_schema = (
        OptionSpec("message", "string", description="literal text to log"),
        OptionSpec("message_expr", "script", description="expression producing the text"),
    )

    def start(self):
        expr = self.node.options.get("message_expr")
        if expr:
            try:
                message = self.runtime.stringify(self.runtime.eval(expr))
            except ExpressionError as exc:
                raise FlowSignal(EVAL_ERROR, str(exc)) from None
        else:
            message = str(self.opt("message", ""))
        self.runtime.log(message)
        return None


class RandomChoice(Activity):
    """Picks one of the listed results with the execution's seeded rng."""

    type_name = "Random"
    option_schema = (
        OptionSpec("choices", "list", required=True, description="possible results, one is chosen"),
    )

    def start(self):
        choices = self.opt("choices") or []
        return self.runtime.rng.choice(choices)

    @classmethod
    def check_extra(cls, options):
        choices = options.get("choices")
        if isinstance(choices, list) and not choices:
            return ["Random: choices must not be empty"]
        return []


CORE_TYPES = (
    Begin,
    ParallelBegin,
    End,
    SubFlow,
    Nop,
    Timeout,
    Eval,
    EvalAsync,
    Throw,
    Interrupt,
    Catch,
    SetVariable,
    Log,
    RandomChoice,
)
