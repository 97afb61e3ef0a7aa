"""Scriptable robot stand-in, usable in-process or as a WebSocket server.

The simulator answers the same envelope protocol a real robot endpoint
would. Behavior is driven by a persona script, a JSON document like::

    {
      "params": {"robot/name": "Bo"},
      "services": {"/custom/ping": {"result": true, "values": {"pong": 1}}},
      "steps": [
        {"on": {"type": "speak"}, "events": [
            {"delay_ms": 200, "payload": {"type": "speak_done"}}]},
        {"transcript": "I slept really well"},
        {"silence": true}
      ]
    }

Steps are consumed strictly in order: each incoming command takes the
first unconsumed step whose ``on`` pattern is a subset of the command.
A step without ``on`` applies to listen commands, which keeps dialogue
scripts down to a list of transcripts. Commands no step claims fall back
to defaults: acting commands get their done event after a fixed delay,
and a listen with nothing scripted hears silence, so an exhausted script
produces NoSpeech rather than a hang.

Every envelope in or out is recorded with a timestamp in a traffic log
that tests can assert against as an ordered subsequence.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Optional, Union

import click

from .bridge import EnvelopeError, decode_envelope, encode_envelope, subset_match
from .clocks import VirtualClock, WallClock

DEFAULT_COMMAND_TOPIC = "/robot/command"
DEFAULT_EVENT_TOPIC = "/robot/event"
DEFAULT_ACK_DELAY_MS = 100
DEFAULT_LISTEN_DELAY_MS = 300

#: Unscripted acting commands are acknowledged with these events.
DEFAULT_ACKS = {
    "speak": "speak_done",
    "tts": "tts_done",
    "play_animation": "animation_done",
    "play_audio": "audio_done",
    "look_at": "lookat_done",
}

PARAM_GET_SERVICE = "/rosapi/get_param"
PARAM_SET_SERVICE = "/rosapi/set_param"


@dataclass
class Step:
    on: dict
    events: list[tuple[float, dict]]
    consumed: bool = False


class PersonaScript:
    """Validated persona document with the sugar expanded away."""

    def __init__(self, doc: Optional[dict] = None):
        doc = doc or {}
        if not isinstance(doc, dict):
            raise ValueError("persona script must be a JSON object")
        self.command_topic = doc.get("command_topic", DEFAULT_COMMAND_TOPIC)
        self.event_topic = doc.get("event_topic", DEFAULT_EVENT_TOPIC)
        self.ack_delay_ms = float(doc.get("ack_delay_ms", DEFAULT_ACK_DELAY_MS))
        self.listen_delay_ms = float(doc.get("listen_delay_ms", DEFAULT_LISTEN_DELAY_MS))
        self.params = dict(doc.get("params", {}))
        self.services = dict(doc.get("services", {}))
        self.steps = [self._parse_step(i, raw) for i, raw in enumerate(doc.get("steps", []))]

    @classmethod
    def from_file(cls, path) -> "PersonaScript":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    def _parse_step(self, index: int, raw: Any) -> Step:
        if isinstance(raw, str):
            raw = {"transcript": raw}
        if not isinstance(raw, dict):
            raise ValueError(f"steps[{index}]: expected an object or transcript string")
        on = raw.get("on", {"type": "listen"})
        if not isinstance(on, dict):
            raise ValueError(f"steps[{index}]: 'on' must be an object")
        delay = float(raw.get("delay_ms", self.listen_delay_ms))
        events: list[tuple[float, dict]] = []
        if "transcript" in raw:
            events.append((delay, {"type": "transcript", "text": str(raw["transcript"])}))
        elif raw.get("silence"):
            events.append((delay, {"type": "silence"}))
        for j, ev in enumerate(raw.get("events", [])):
            if not isinstance(ev, dict) or "payload" not in ev:
                raise ValueError(f"steps[{index}].events[{j}]: expected {{delay_ms, payload}}")
            events.append((float(ev.get("delay_ms", 0)), ev["payload"]))
        if not events:
            raise ValueError(f"steps[{index}]: no transcript, silence, or events")
        return Step(on=on, events=events)

    def fresh_steps(self) -> list[Step]:
        return [Step(on=s.on, events=list(s.events)) for s in self.steps]


# ---------------------------------------------------------------------------
# Traffic log

#: Client-to-simulator direction marker.
IN = ">"
#: Simulator-to-client direction marker.
OUT = "<"


@dataclass(frozen=True)
class TrafficEntry:
    direction: str
    timestamp_ms: float
    envelope: dict

    def line(self) -> str:
        return f"{self.timestamp_ms:10.1f} {self.direction} {json.dumps(self.envelope, sort_keys=True)}"


class TrafficLog:
    def __init__(self):
        self.entries: list[TrafficEntry] = []
        self._lock = threading.Lock()

    def record(self, direction: str, timestamp_ms: float, envelope: dict) -> None:
        with self._lock:
            self.entries.append(TrafficEntry(direction, timestamp_ms, envelope))

    def lines(self) -> list[str]:
        with self._lock:
            return [e.line() for e in self.entries]

    def dump(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.lines():
                fh.write(line + "\n")

    def __len__(self) -> int:
        return len(self.entries)


def assert_log(
    log: TrafficLog, expected: Iterable[Union[dict, tuple[str, dict]]]
) -> None:
    """Check the log contains the expected traffic as an ordered subsequence.

    Each expected item is an envelope subset pattern, optionally wrapped as
    (direction, pattern). Extra traffic between matches is fine.
    """
    entries = list(log.entries)
    pos = 0
    for i, want in enumerate(expected):
        direction = None
        if isinstance(want, tuple):
            direction, want = want
        found = False
        while pos < len(entries):
            entry = entries[pos]
            pos += 1
            if direction is not None and entry.direction != direction:
                continue
            if subset_match(want, entry.envelope):
                found = True
                break
        if not found:
            seen = "\n".join(e.line() for e in entries)
            raise AssertionError(
                f"expected[{i}] {want!r} (direction {direction or 'any'}) "
                f"not found in order; log was:\n{seen}"
            )


# ---------------------------------------------------------------------------
# The simulator


class SimRobot:
    """One robot endpoint for one client connection."""

    def __init__(
        self,
        script: Union[None, dict, PersonaScript] = None,
        clock: Union[None, VirtualClock, WallClock] = None,
    ):
        if not isinstance(script, PersonaScript):
            script = PersonaScript(script)
        self.script = script
        self.clock = clock or WallClock()
        self.params: dict = dict(script.params)
        self.log = TrafficLog()
        self.steps = script.fresh_steps()
        self._send_fns: list[Callable[[dict], None]] = []
        self._subscriptions: set[str] = set()
        self._advertised: set[str] = set()
        self._lock = threading.RLock()

    # -- wiring -------------------------------------------------------------

    def attach(self, send: Callable[[dict], None]) -> None:
        with self._lock:
            self._send_fns.append(send)

    def detach(self, send: Callable[[dict], None]) -> None:
        with self._lock:
            if send in self._send_fns:
                self._send_fns.remove(send)

    def _emit(self, envelope: dict) -> None:
        with self._lock:
            self.log.record(OUT, self.clock.now_ms(), envelope)
            targets = list(self._send_fns)
        for send in targets:
            try:
                send(envelope)
            except Exception:
                pass

    # -- inbound ------------------------------------------------------------

    def handle(self, envelope: dict) -> None:
        with self._lock:
            self.log.record(IN, self.clock.now_ms(), envelope)
        op = envelope.get("op")
        if op == "advertise":
            with self._lock:
                self._advertised.add(envelope["topic"])
        elif op == "subscribe":
            with self._lock:
                self._subscriptions.add(envelope["topic"])
        elif op == "unsubscribe":
            with self._lock:
                self._subscriptions.discard(envelope["topic"])
        elif op == "publish":
            if envelope["topic"] == self.script.command_topic:
                self._on_command(envelope.get("msg"))
        elif op == "call_service":
            self._on_service(envelope)

    # -- commands -----------------------------------------------------------

    def _on_command(self, command: Any) -> None:
        step = self._claim_step(command)
        if step is not None:
            for delay_ms, payload in step.events:
                self._schedule_event(delay_ms, payload)
            return
        kind = command.get("type") if isinstance(command, dict) else None
        if kind == "listen":
            self._schedule_event(self.script.listen_delay_ms, {"type": "silence"})
        elif kind in DEFAULT_ACKS:
            self._schedule_event(self.script.ack_delay_ms, {"type": DEFAULT_ACKS[kind]})
        # Fire-and-forget commands need no reply.

    def _claim_step(self, command: Any) -> Optional[Step]:
        with self._lock:
            for step in self.steps:
                if not step.consumed and subset_match(step.on, command):
                    step.consumed = True
                    return step
        return None

    def _schedule_event(self, delay_ms: float, payload: dict) -> None:
        self.clock.schedule(delay_ms, lambda: self._publish_event(payload))

    def _publish_event(self, payload: dict) -> None:
        topic = self.script.event_topic
        with self._lock:
            wanted = topic in self._subscriptions
        if wanted:
            self._emit({"op": "publish", "topic": topic, "msg": payload})

    # -- services -----------------------------------------------------------

    def _on_service(self, envelope: dict) -> None:
        service = envelope["service"]
        args = envelope.get("args") or {}
        canned = self.script.services.get(service)
        if canned is not None:
            result, values = bool(canned.get("result", True)), canned.get("values", {})
        elif service == PARAM_GET_SERVICE:
            result, values = True, {"value": self.params.get(args.get("name"))}
        elif service == PARAM_SET_SERVICE:
            self.params[args.get("name")] = args.get("value")
            result, values = True, {}
        elif service == "/sim/echo":
            result, values = True, args
        elif service == "/sim/sum":
            numbers = args.get("values", [])
            if isinstance(numbers, list) and all(
                isinstance(n, (int, float)) and not isinstance(n, bool) for n in numbers
            ):
                result, values = True, {"sum": sum(numbers)}
            else:
                result, values = False, {"error": "values must be a list of numbers"}
        else:
            result, values = False, {"error": f"unknown service {service!r}"}
        response = {
            "op": "service_response",
            "service": service,
            "result": result,
            "values": values,
        }
        if "id" in envelope:
            response["id"] = envelope["id"]
        self._emit(response)


# ---------------------------------------------------------------------------
# Standalone server


def serve(
    host: str = "127.0.0.1",
    port: int = 9090,
    script: Union[None, dict, PersonaScript] = None,
    log_dir: Optional[str] = None,
):
    """WebSocket server; each connection gets its own scripted robot."""
    from websockets.sync.server import serve as ws_serve

    if not isinstance(script, PersonaScript):
        script = PersonaScript(script)
    counter = threading.Lock()
    connection_ids = iter(range(1, 1 << 30))

    def handler(conn):
        sim = SimRobot(script, clock=WallClock())

        def send(envelope: dict) -> None:
            conn.send(encode_envelope(envelope))

        sim.attach(send)
        try:
            for message in conn:
                try:
                    sim.handle(decode_envelope(message))
                except EnvelopeError:
                    continue
        finally:
            sim.detach(send)
            if log_dir:
                with counter:
                    n = next(connection_ids)
                sim.log.dump(f"{log_dir}/traffic-{n}.log")

    return ws_serve(handler, host, port)


@click.command(name="sim-robot")
@click.option("--host", default="127.0.0.1", show_default=True, help="bind address")
@click.option("--port", default=9090, show_default=True, help="bind port")
@click.option("--script", "script_path", type=click.Path(exists=True, dir_okay=False), default=None, help="persona script JSON")
@click.option("--log-dir", type=click.Path(file_okay=False), default=None, help="write per-connection traffic logs here")
def main(host: str, port: int, script_path: Optional[str], log_dir: Optional[str]):
    """Run the robot simulator as a WebSocket endpoint."""
    script = PersonaScript.from_file(script_path) if script_path else PersonaScript()
    server = serve(host, port, script, log_dir)
    click.echo(f"simulated robot listening on ws://{host}:{port}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()


if __name__ == "__main__":
    main()
