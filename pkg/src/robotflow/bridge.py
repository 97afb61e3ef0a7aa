"""JSON bridge between the engine and a robot endpoint.

Wire format is line-oriented JSON envelopes, one object per WebSocket
message, styled after the rosbridge protocol::

    {"op": "advertise", "topic": "/robot/command"}
    {"op": "publish", "topic": "/robot/command", "msg": {...}}
    {"op": "subscribe", "topic": "/robot/event"}
    {"op": "call_service", "service": "/rosapi/get_param", "args": {...}, "id": "call-1"}
    {"op": "service_response", "service": "...", "id": "call-1", "result": true, "values": {...}}

Two transports speak it: an in-process one that hands envelopes straight
to a simulator object (still round-tripping them through the codec, so
both paths reject the same malformed traffic), and a WebSocket one with a
reader thread. Incoming traffic is buffered and only applied when the
engine calls :meth:`BridgeConnection.pump` at a tick boundary; nothing a
robot sends can mutate execution state mid-tick.
"""

from __future__ import annotations

import itertools
import json
import queue
import threading
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Protocol

from .errors import (
    BRIDGE_CONNECT_FAILED,
    BRIDGE_DISCONNECTED,
    BRIDGE_NOT_CONNECTED,
    FlowSignal,
)

PARAM_GET_SERVICE = "/rosapi/get_param"
PARAM_SET_SERVICE = "/rosapi/set_param"

_QUEUE_CAP = 256


class EnvelopeError(Exception):
    """An envelope is malformed for its op."""


def subset_match(pattern: Any, value: Any) -> bool:
    """True when ``value`` contains everything ``pattern`` specifies.

    Dicts match recursively on the pattern's keys (extra keys in the value
    are fine); everything else compares by equality. Used both for
    Wait-Topic filters and for simulator script triggers, so the two always
    agree on what "matches" means.
    """
    if isinstance(pattern, dict):
        if not isinstance(value, dict):
            return False
        return all(k in value and subset_match(v, value[k]) for k, v in pattern.items())
    return pattern == value


class TransportClosed(Exception):
    """The underlying channel is gone."""


_REQUIRED_FIELDS: dict[str, tuple[tuple[str, type], ...]] = {
    "advertise": (("topic", str),),
    "unadvertise": (("topic", str),),
    "publish": (("topic", str),),
    "subscribe": (("topic", str),),
    "unsubscribe": (("topic", str),),
    "call_service": (("service", str),),
    "service_response": (("service", str), ("result", bool)),
}


def validate_envelope(env: Any) -> dict:
    if not isinstance(env, dict):
        raise EnvelopeError("envelope must be a JSON object")
    op = env.get("op")
    if not isinstance(op, str):
        raise EnvelopeError("envelope missing 'op'")
    required = _REQUIRED_FIELDS.get(op)
    if required is None:
        raise EnvelopeError(f"unknown op {op!r}")
    for name, kind in required:
        value = env.get(name)
        if not isinstance(value, kind) or (kind is str and not value):
            raise EnvelopeError(f"{op}: field {name!r} must be a non-empty {kind.__name__}")
    if op == "publish" and "msg" not in env:
        raise EnvelopeError("publish: missing 'msg'")
    if "id" in env and not isinstance(env["id"], str):
        raise EnvelopeError("'id' must be a string")
    return env


def encode_envelope(env: dict) -> str:
    validate_envelope(env)
    try:
        return json.dumps(env, sort_keys=True)
    except (TypeError, ValueError) as exc:
        raise EnvelopeError(f"envelope is not JSON-serializable: {exc}") from None


def decode_envelope(text: str | bytes) -> dict:
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EnvelopeError(f"invalid JSON envelope: {exc}") from None
    return validate_envelope(doc)


# ---------------------------------------------------------------------------
# Transports


class Transport(Protocol):
    def send(self, envelope: dict) -> None: ...

    def drain(self) -> list[dict]: ...

    def close(self) -> None: ...


class InProcessTransport:
    """Direct line to a simulator living in the same process.

    Envelopes still pass through encode/decode both ways so tests exercise
    the exact bytes a socket would carry.
    """

    def __init__(self, sim):
        self._sim = sim
        self._inbox: queue.SimpleQueue[dict] = queue.SimpleQueue()
        self._closed = False
        sim.attach(self._deliver)

    def _deliver(self, envelope: dict) -> None:
        self._inbox.put(decode_envelope(encode_envelope(envelope)))

    def send(self, envelope: dict) -> None:
        if self._closed:
            raise TransportClosed("in-process transport closed")
        self._sim.handle(decode_envelope(encode_envelope(envelope)))

    def drain(self) -> list[dict]:
        out: list[dict] = []
        while True:
            try:
                out.append(self._inbox.get_nowait())
            except queue.Empty:
                return out

    def close(self) -> None:
        self._closed = True
        self._sim.detach(self._deliver)


class WebSocketTransport:
    """Client socket plus a reader thread filling the inbox.

    The reader never touches engine state; it only decodes and buffers.
    Malformed inbound envelopes are dropped (counted), not fatal.
    """

    def __init__(self, url: str, open_timeout: float = 5.0):
        from websockets.sync.client import connect

        try:
            self._conn = connect(url, open_timeout=open_timeout)
        except Exception as exc:
            raise TransportClosed(f"connect to {url} failed: {exc}") from exc
        self._inbox: queue.SimpleQueue[dict] = queue.SimpleQueue()
        self._closed = False
        self.dropped = 0
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _read_loop(self) -> None:
        try:
            for message in self._conn:
                try:
                    self._inbox.put(decode_envelope(message))
                except EnvelopeError:
                    self.dropped += 1
        except Exception:
            pass
        self._closed = True

    def send(self, envelope: dict) -> None:
        if self._closed:
            raise TransportClosed("websocket closed")
        try:
            self._conn.send(encode_envelope(envelope))
        except EnvelopeError:
            raise
        except Exception as exc:
            self._closed = True
            raise TransportClosed(str(exc)) from exc

    def drain(self) -> list[dict]:
        out: list[dict] = []
        while True:
            try:
                out.append(self._inbox.get_nowait())
            except queue.Empty:
                return out

    def close(self) -> None:
        self._closed = True
        try:
            self._conn.close()
        except Exception:
            pass
        self._reader.join(timeout=2.0)


# ---------------------------------------------------------------------------
# Connection state


@dataclass
class Waiter:
    """A context parked on Wait-Topic until a matching message lands."""

    topic: str
    predicate: Callable[[Any], bool]
    message: Any = None
    done: bool = False

    def matches(self, msg: Any) -> bool:
        try:
            return bool(self.predicate(msg))
        except Exception:
            return False


@dataclass
class _TopicState:
    subscribed: bool = False
    handlers: list[Callable[[Any], None]] = field(default_factory=list)
    queue: deque = field(default_factory=lambda: deque(maxlen=_QUEUE_CAP))


class BridgeConnection:
    """Engine-side bridge state: topics, waiters, and in-flight calls.

    One per execution. All mutation happens on the engine thread; the
    transport's reader thread only feeds the inbox that ``pump`` drains.
    """

    def __init__(self):
        self._transport: Optional[Transport] = None
        self._advertised: set[str] = set()
        self._topics: dict[str, _TopicState] = {}
        self._waiters: list[Waiter] = []
        self._responses: dict[str, dict] = {}
        self._response_cbs: dict[str, Callable[[dict], None]] = {}
        self._call_ids = itertools.count(1)

    # -- lifecycle ----------------------------------------------------------

    @property
    def connected(self) -> bool:
        return self._transport is not None

    def connect(self, transport_factory: Callable[[], Transport]) -> bool:
        """Attach a transport; no-op when already connected. True if new."""
        if self.connected:
            return False
        try:
            self._transport = transport_factory()
        except TransportClosed as exc:
            raise FlowSignal(BRIDGE_CONNECT_FAILED, str(exc)) from None
        return True

    def close(self) -> None:
        if self._transport is not None:
            self._transport.close()
            self._transport = None

    def _require(self) -> Transport:
        if self._transport is None:
            raise FlowSignal(BRIDGE_NOT_CONNECTED, "no bridge connection")
        return self._transport

    def _send(self, envelope: dict) -> None:
        try:
            self._require().send(envelope)
        except TransportClosed as exc:
            self._transport = None
            raise FlowSignal(BRIDGE_DISCONNECTED, str(exc)) from None

    # -- outbound ops -------------------------------------------------------

    def advertise(self, topic: str) -> None:
        if topic not in self._advertised:
            self._send({"op": "advertise", "topic": topic})
            self._advertised.add(topic)

    def publish(self, topic: str, msg: Any) -> None:
        self.advertise(topic)
        self._send({"op": "publish", "topic": topic, "msg": msg})

    def subscribe(self, topic: str, handler: Callable[[Any], None] | None = None) -> None:
        state = self._topics.setdefault(topic, _TopicState())
        if not state.subscribed:
            self._send({"op": "subscribe", "topic": topic})
            state.subscribed = True
        if handler is not None and handler not in state.handlers:
            state.handlers.append(handler)

    def unsubscribe(self, topic: str, handler: Callable[[Any], None] | None = None) -> None:
        state = self._topics.get(topic)
        if state is None:
            return
        if handler is not None and handler in state.handlers:
            state.handlers.remove(handler)
        if handler is None or not state.handlers:
            if state.subscribed:
                self._send({"op": "unsubscribe", "topic": topic})
            del self._topics[topic]

    def call(self, service: str, args: Any = None) -> str:
        call_id = f"call-{next(self._call_ids)}"
        env: dict = {"op": "call_service", "service": service, "id": call_id}
        if args is not None:
            env["args"] = args
        self._send(env)
        return call_id

    def get_param(self, name: str) -> str:
        return self.call(PARAM_GET_SERVICE, {"name": name})

    def set_param(self, name: str, value: Any) -> str:
        return self.call(PARAM_SET_SERVICE, {"name": name, "value": value})

    # -- response polling ---------------------------------------------------

    def take_response(self, call_id: str) -> Optional[dict]:
        return self._responses.pop(call_id, None)

    def on_response(self, call_id: str, callback: Callable[[dict], None]) -> None:
        early = self._responses.pop(call_id, None)
        if early is not None:
            callback(early)
        else:
            self._response_cbs[call_id] = callback

    # -- waiting on topics --------------------------------------------------

    def take_queued(self, topic: str, predicate: Callable[[Any], bool]) -> Optional[Any]:
        """Oldest queued message on ``topic`` satisfying ``predicate``."""
        state = self._topics.get(topic)
        if state is None:
            return None
        for i, msg in enumerate(state.queue):
            try:
                hit = bool(predicate(msg))
            except Exception:
                hit = False
            if hit:
                del state.queue[i]
                return msg
        return None

    def add_waiter(self, topic: str, predicate: Callable[[Any], bool]) -> Waiter:
        self.subscribe(topic)
        waiter = Waiter(topic=topic, predicate=predicate)
        self._waiters.append(waiter)
        return waiter

    def cancel_waiter(self, waiter: Waiter) -> None:
        if waiter in self._waiters:
            self._waiters.remove(waiter)

    # -- inbound processing -------------------------------------------------

    def pump(self) -> int:
        """Apply everything the transport has buffered; tick-boundary only."""
        if self._transport is None:
            return 0
        envelopes = self._transport.drain()
        for env in envelopes:
            self._apply(env)
        return len(envelopes)

    def _apply(self, env: dict) -> None:
        op = env["op"]
        if op == "publish":
            self._apply_publish(env["topic"], env.get("msg"))
        elif op == "service_response":
            call_id = env.get("id")
            if not call_id:
                return
            callback = self._response_cbs.pop(call_id, None)
            if callback is not None:
                callback(env)
            else:
                self._responses[call_id] = env
        # Other ops from the far side carry no client-side state.

    def _apply_publish(self, topic: str, msg: Any) -> None:
        state = self._topics.get(topic)
        if state is None:
            return
        for handler in list(state.handlers):
            handler(msg)
        for waiter in self._waiters:
            if waiter.topic == topic and not waiter.done and waiter.matches(msg):
                waiter.message = msg
                waiter.done = True
                self._waiters.remove(waiter)
                return
        state.queue.append(msg)
