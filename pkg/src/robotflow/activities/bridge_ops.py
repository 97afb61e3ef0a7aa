"""Bridge-facing activities: connection, topics, params, and services.

Synchronous blocks hold their context until the answer arrives (one tick
of latency at minimum, since replies are only applied at tick
boundaries). The -Async variants complete immediately and deliver to a
blackboard key later; their failures log and store None rather than
raising, because by then no activity is left to catch anything.
"""

from __future__ import annotations

from typing import Any

from ..bridge import subset_match
from ..errors import (
    BRIDGE_SERVICE_ERROR,
    BRIDGE_WAIT_TIMEOUT,
    EVAL_ERROR,
    ExpressionError,
    FlowSignal,
)
from .base import RUNNING, Activity, OptionSpec


class RobotConnect(Activity):
    """Opens the bridge connection; a second connect is a no-op."""

    type_name = "Robot-Connect"
    ez = True
    option_schema = (
        OptionSpec("url", "string", description="informational endpoint label"),
    )

    def start(self):
        self.runtime.connect_bridge()
        return None


def _eval_or_literal(activity: Activity, literal_key: str, expr_key: str, default: Any) -> Any:
    expr = activity.node.options.get(expr_key)
    if expr:
        try:
            return activity.runtime.eval(expr)
        except ExpressionError as exc:
            raise FlowSignal(EVAL_ERROR, str(exc)) from None
    return activity.opt(literal_key, default)


class PublishTopic(Activity):
    """Publishes one message; the topic is advertised on first use."""

    type_name = "Publish-Topic"
    option_schema = (
        OptionSpec("topic", "string", required=True),
        OptionSpec("msg", "object", description="literal message payload"),
        OptionSpec("msg_expr", "script", description="expression producing the payload"),
    )

    def start(self):
        msg = _eval_or_literal(self, "msg", "msg_expr", {})
        self.runtime.bridge.publish(self.opt("topic"), msg)
        return None


class SubscribeTopic(Activity):
    """Mirrors every message on a topic into a blackboard key.

    Delivery happens at tick boundaries for the rest of the execution.
    """

    type_name = "Subscribe-Topic"
    option_schema = (
        OptionSpec("topic", "string", required=True),
        OptionSpec("key", "string", description="blackboard key; defaults to the topic name"),
    )

    def start(self):
        topic = self.opt("topic")
        key = self.opt("key") or topic
        blackboard = self.runtime.blackboard

        def store(msg):
            blackboard[key] = msg

        self.runtime.bridge.subscribe(topic, store)
        return None


class WaitTopic(Activity):
    """Blocks until a message on the topic matches the filter.

    ``match`` is a subset pattern (all given fields must equal); omitted
    means any message. The message lands in ``notepad.message``. A message
    that arrived just before this block started (and nothing consumed) is
    taken from the topic queue immediately.
    """

    type_name = "Wait-Topic"
    option_schema = (
        OptionSpec("topic", "string", required=True),
        OptionSpec("match", "object", description="subset pattern the message must contain"),
        OptionSpec("timeout_ms", "number", description="give up after this long"),
    )

    def start(self):
        topic = self.opt("topic")
        pattern = self.opt("match")
        predicate = (lambda m: True) if pattern is None else (lambda m: subset_match(pattern, m))
        bridge = self.runtime.bridge
        bridge.subscribe(topic)
        queued = bridge.take_queued(topic, predicate)
        if queued is not None:
            self.runtime.notepad["message"] = queued
            return None
        self._waiter = bridge.add_waiter(topic, predicate)
        self._timeout = self.opt("timeout_ms")
        self._started = self.runtime.now_ms()
        return RUNNING

    def update(self):
        if self._waiter.done:
            self.runtime.notepad["message"] = self._waiter.message
            return None
        if self._timeout is not None:
            if self.runtime.now_ms() - self._started + 1e-9 >= float(self._timeout):
                self.cancel()
                raise FlowSignal(
                    BRIDGE_WAIT_TIMEOUT, f"no matching message on {self.opt('topic')!r}"
                )
        return RUNNING

    def cancel(self):
        waiter = getattr(self, "_waiter", None)
        if waiter is not None:
            self.runtime.bridge.cancel_waiter(waiter)


class SetParam(Activity):
    """Stores a parameter on the robot side; completes when acknowledged."""

    type_name = "Set-Param"
    option_schema = (
        OptionSpec("name", "string", required=True),
        OptionSpec("value", "string", description="literal parameter value"),
        OptionSpec("value_expr", "script", description="expression computing the value"),
    )

    def start(self):
        value = _eval_or_literal(self, "value", "value_expr", None)
        self._call_id = self.runtime.bridge.set_param(self.opt("name"), value)
        return RUNNING

    def update(self):
        response = self.runtime.bridge.take_response(self._call_id)
        if response is None:
            return RUNNING
        if not response.get("result", False):
            raise FlowSignal(BRIDGE_SERVICE_ERROR, self.runtime.stringify(response.get("values")))
        return None


class GetParam(Activity):
    """Reads a parameter; the value is the result and goes to the notepad."""

    type_name = "Get-Param"
    option_schema = (
        OptionSpec("name", "string", required=True),
        OptionSpec("key", "string", default="param", description="notepad key for the value"),
    )

    def start(self):
        self._call_id = self.runtime.bridge.get_param(self.opt("name"))
        return RUNNING

    def update(self):
        response = self.runtime.bridge.take_response(self._call_id)
        if response is None:
            return RUNNING
        if not response.get("result", False):
            raise FlowSignal(BRIDGE_SERVICE_ERROR, self.runtime.stringify(response.get("values")))
        value = (response.get("values") or {}).get("value")
        self.runtime.notepad[self.opt("key", "param")] = value
        return value


class GetParamAsync(Activity):
    """Requests a parameter and moves on; the value arrives on the blackboard."""

    type_name = "Get-Param-Async"
    option_schema = (
        OptionSpec("name", "string", required=True),
        OptionSpec("key", "string", default="param", description="blackboard key for the value"),
    )

    def start(self):
        runtime = self.runtime
        key = self.opt("key", "param")
        name = self.opt("name")
        call_id = runtime.bridge.get_param(name)

        def deliver(response: dict):
            if response.get("result", False):
                runtime.blackboard[key] = (response.get("values") or {}).get("value")
            else:
                runtime.blackboard[key] = None
                runtime.log(f"get_param {name!r} failed: {response.get('values')}")

        runtime.bridge.on_response(call_id, deliver)
        return None


class CallService(Activity):
    """Calls a service and waits; response values go to the notepad."""

    type_name = "Call-Service"
    option_schema = (
        OptionSpec("service", "string", required=True),
        OptionSpec("args", "object", description="literal call arguments"),
        OptionSpec("args_expr", "script", description="expression producing the arguments"),
        OptionSpec("key", "string", default="values", description="notepad key for the response"),
    )

    def start(self):
        args = _eval_or_literal(self, "args", "args_expr", None)
        self._call_id = self.runtime.bridge.call(self.opt("service"), args)
        return RUNNING

    def update(self):
        response = self.runtime.bridge.take_response(self._call_id)
        if response is None:
            return RUNNING
        if not response.get("result", False):
            raise FlowSignal(BRIDGE_SERVICE_ERROR, self.runtime.stringify(response.get("values")))
        self.runtime.notepad[self.opt("key", "values")] = response.get("values")
        return None


class CallServiceAsync(Activity):
    """Calls a service and moves on; values (or None on error) hit the blackboard."""

    type_name = "Call-Service-Async"
    option_schema = (
        OptionSpec("service", "string", required=True),
        OptionSpec("args", "object", description="literal call arguments"),
        OptionSpec("args_expr", "script", description="expression producing the arguments"),
        OptionSpec("key", "string", default="values", description="blackboard key for the response"),
    )

    def start(self):
        runtime = self.runtime
        service = self.opt("service")
        key = self.opt("key", "values")
        args = _eval_or_literal(self, "args", "args_expr", None)
        call_id = runtime.bridge.call(service, args)

        def deliver(response: dict):
            if response.get("result", False):
                runtime.blackboard[key] = response.get("values")
            else:
                runtime.blackboard[key] = None
                runtime.log(f"service {service!r} failed: {response.get('values')}")

        runtime.bridge.on_response(call_id, deliver)
        return None


BRIDGE_TYPES = (
    RobotConnect,
    PublishTopic,
    SubscribeTopic,
    WaitTopic,
    SetParam,
    GetParam,
    GetParamAsync,
    CallService,
    CallServiceAsync,
)
