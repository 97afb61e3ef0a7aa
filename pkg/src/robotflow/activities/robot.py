"""Robot-facing activities and the command adapter.

Every robot block turns into plain bridge traffic: publish one command
message, then (for acting blocks) wait for the robot's done event. The
mapping from block to wire message lives in a :class:`RobotAdapter`
config, not in code, so pointing the same flow at a robot with a
different message vocabulary means swapping a JSON file.

Placeholders in command templates come in two forms. A string that is
exactly ``"{level}"`` is replaced by the raw option value, keeping
numbers as numbers on the wire. A string that merely contains
placeholders, like ``"say {text} now"``, gets plain text substitution.
"""

from __future__ import annotations

import json
import re
from typing import Any, Optional

from ..errors import (
    GRAMMAR_ERROR,
    ROBOT_INVALID_OPTION,
    SPEAK_TIMEOUT,
    FlowSignal,
    GrammarError,
)
from ..grammar import NO_SPEECH, PromptTable, match_prompts
from .base import RUNNING, Activity, OptionSpec

DEFAULT_ADAPTER_CONFIG: dict = {
    "command_topic": "/robot/command",
    "event_topic": "/robot/event",
    "transcript_event": "transcript",
    "silence_event": "silence",
    "actions": {
        "speak": {"command": {"type": "speak", "text": "{text}"}, "done_event": "speak_done"},
        "tts": {
            "command": {"type": "tts", "text": "{text}", "voice": "{voice}"},
            "done_event": "tts_done",
        },
        "listen": {"command": {"type": "listen"}},
        "animation": {
            "command": {"type": "play_animation", "name": "{name}"},
            "done_event": "animation_done",
        },
        "audio": {
            "command": {"type": "play_audio", "source": "{source}"},
            "done_event": "audio_done",
        },
        "volume": {"command": {"type": "set_volume", "level": "{level}"}},
        "lookat": {
            "command": {"type": "look_at", "x": "{x}", "y": "{y}", "z": "{z}"},
            "done_event": "lookat_done",
        },
        "lightring": {"command": {"type": "light_ring", "r": "{r}", "g": "{g}", "b": "{b}"}},
    },
}

_EXACT_PLACEHOLDER = re.compile(r"^\{([A-Za-z_][A-Za-z0-9_]*)\}$")
_EMBEDDED_PLACEHOLDER = re.compile(r"\{([A-Za-z_][A-Za-z0-9_]*)\}")


class RobotAdapter:
    """Command vocabulary for one robot: topics plus per-action templates."""

    def __init__(self, config: Optional[dict] = None):
        merged = dict(DEFAULT_ADAPTER_CONFIG)
        actions = dict(DEFAULT_ADAPTER_CONFIG["actions"])
        if config:
            merged.update(config)
            if "actions" in config:
                actions.update(config["actions"])
        merged["actions"] = actions
        self.config = merged

    @classmethod
    def from_file(cls, path) -> "RobotAdapter":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh))

    @property
    def command_topic(self) -> str:
        return self.config["command_topic"]

    @property
    def event_topic(self) -> str:
        return self.config["event_topic"]

    @property
    def transcript_event(self) -> str:
        return self.config["transcript_event"]

    @property
    def silence_event(self) -> str:
        return self.config["silence_event"]

    def _action(self, name: str) -> dict:
        action = self.config["actions"].get(name)
        if action is None:
            raise FlowSignal(ROBOT_INVALID_OPTION, f"adapter has no action {name!r}")
        return action

    def command(self, name: str, params: dict) -> Any:
        return _fill(self._action(name)["command"], params)

    def done_event(self, name: str) -> Optional[str]:
        return self._action(name).get("done_event")


def _fill(template: Any, params: dict) -> Any:
    if isinstance(template, dict):
        return {k: _fill(v, params) for k, v in template.items()}
    if isinstance(template, list):
        return [_fill(v, params) for v in template]
    if isinstance(template, str):
        exact = _EXACT_PLACEHOLDER.match(template)
        if exact:
            name = exact.group(1)
            if name not in params:
                raise FlowSignal(ROBOT_INVALID_OPTION, f"missing option {name!r}")
            return params[name]

        def sub(m: re.Match) -> str:
            name = m.group(1)
            if name not in params:
                raise FlowSignal(ROBOT_INVALID_OPTION, f"missing option {name!r}")
            return str(params[name])

        return _EMBEDDED_PLACEHOLDER.sub(sub, template)
    return template


def _require_number(options: dict, name: str, lo: float, hi: float, label: str) -> list[str]:
    value = options.get(name)
    if value is None:
        return []
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return [f"{label}: option {name!r} must be a number"]
    if not lo <= value <= hi:
        return [f"{label}: option {name!r} must be between {lo:g} and {hi:g}"]
    return []


class _RobotCommand(Activity):
    """Publish one adapter command, then wait for its done event."""

    action = ""
    timeout_signal = ""  # falls back to ~Robot.<action>.timeout

    def params(self) -> dict:
        return dict(self.node.options)

    def start(self):
        adapter = self.runtime.adapter
        bridge = self.runtime.bridge
        command = adapter.command(self.action, self.params())
        done = adapter.done_event(self.action)
        if done is not None:
            # Register interest before the command goes out so the done
            # event can never slip past.
            bridge.subscribe(adapter.event_topic)
            self._waiter = bridge.add_waiter(
                adapter.event_topic,
                lambda m: isinstance(m, dict) and m.get("type") == done,
            )
        bridge.publish(adapter.command_topic, command)
        if done is None:
            return None
        self._timeout = self.opt("timeout_ms")
        self._started = self.runtime.now_ms()
        return RUNNING

    def update(self):
        if self._waiter.done:
            return self.finish(self._waiter.message)
        if self._timeout is not None:
            if self.runtime.now_ms() - self._started + 1e-9 >= float(self._timeout):
                self.cancel()
                name = self.timeout_signal or f"~Robot.{self.action}.timeout"
                raise FlowSignal(name, f"robot never finished {self.action!r}")
        return RUNNING

    def finish(self, event: Any):
        return None

    def cancel(self):
        waiter = getattr(self, "_waiter", None)
        if waiter is not None:
            self.runtime.bridge.cancel_waiter(waiter)


class RobotSpeak(_RobotCommand):
    """Says a line and waits until the robot reports it finished."""

    type_name = "Robot-Speak"
    ez = True
    action = "speak"
    timeout_signal = SPEAK_TIMEOUT
    option_schema = (
        OptionSpec("text", "string", required=True, description="what to say"),
        OptionSpec("timeout_ms", "number", description="give up waiting for speak_done"),
    )

    def params(self):
        return {"text": str(self.opt("text", ""))}


class RobotTts(_RobotCommand):
    """Low-level speech synthesis with an explicit voice."""

    type_name = "Robot-TTS"
    action = "tts"
    option_schema = (
        OptionSpec("text", "string", required=True, description="exact text to synthesize"),
        OptionSpec("voice", "string", default="default", description="voice preset"),
        OptionSpec("timeout_ms", "number", description="give up waiting for tts_done"),
    )

    def params(self):
        return {"text": str(self.opt("text", "")), "voice": str(self.opt("voice", "default"))}


class RobotAnimation(_RobotCommand):
    """Plays a named animation to completion."""

    type_name = "Robot-Animation"
    ez = True
    action = "animation"
    option_schema = (
        OptionSpec("name", "string", required=True, description="animation to play"),
        OptionSpec("timeout_ms", "number"),
    )

    def params(self):
        return {"name": str(self.opt("name", ""))}


class RobotAudio(_RobotCommand):
    """Plays an audio clip to completion."""

    type_name = "Robot-Audio"
    ez = True
    action = "audio"
    option_schema = (
        OptionSpec("source", "string", required=True, description="clip name or URL"),
        OptionSpec("timeout_ms", "number"),
    )

    def params(self):
        return {"source": str(self.opt("source", ""))}


class RobotLookAt(_RobotCommand):
    """Turns toward a point in robot space and waits for arrival."""

    type_name = "Robot-LookAt"
    ez = True
    action = "lookat"
    option_schema = (
        OptionSpec("x", "number", required=True),
        OptionSpec("y", "number", required=True),
        OptionSpec("z", "number", required=True),
        OptionSpec("timeout_ms", "number"),
    )

    def params(self):
        out = {}
        for axis in ("x", "y", "z"):
            value = self.opt(axis)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise FlowSignal(ROBOT_INVALID_OPTION, f"look-at {axis} must be a number")
            out[axis] = value
        return out


class RobotVolume(Activity):
    """Sets output volume (0 to 100); fire-and-forget."""

    type_name = "Robot-Volume"
    ez = True
    option_schema = (OptionSpec("level", "number", required=True, description="0 to 100"),)

    def start(self):
        level = self.opt("level")
        if isinstance(level, bool) or not isinstance(level, (int, float)) or not 0 <= level <= 100:
            raise FlowSignal(ROBOT_INVALID_OPTION, f"volume level {level!r} out of range")
        adapter = self.runtime.adapter
        self.runtime.bridge.publish(adapter.command_topic, adapter.command("volume", {"level": level}))
        return None

    @classmethod
    def check_extra(cls, options):
        return _require_number(options, "level", 0, 100, "Robot-Volume")


class RobotLightRing(Activity):
    """Sets the light ring color (RGB, each 0 to 255); fire-and-forget."""

    type_name = "Robot-LightRing"
    ez = True
    option_schema = (
        OptionSpec("r", "number", required=True, description="0 to 255"),
        OptionSpec("g", "number", required=True, description="0 to 255"),
        OptionSpec("b", "number", required=True, description="0 to 255"),
    )

    def start(self):
        params = {}
        for channel in ("r", "g", "b"):
            value = self.opt(channel)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 <= value <= 255:
                raise FlowSignal(
                    ROBOT_INVALID_OPTION, f"light ring {channel} must be between 0 and 255"
                )
            params[channel] = value
        adapter = self.runtime.adapter
        self.runtime.bridge.publish(adapter.command_topic, adapter.command("lightring", params))
        return None

    @classmethod
    def check_extra(cls, options):
        problems = []
        for channel in ("r", "g", "b"):
            problems.extend(_require_number(options, channel, 0, 255, "Robot-LightRing"))
        return problems


def _compile_prompts(activity: Activity) -> PromptTable:
    try:
        return PromptTable.from_options(activity.opt("prompts") or [], activity.runtime.rule_set)
    except GrammarError as exc:
        raise FlowSignal(GRAMMAR_ERROR, str(exc)) from None


class _ListenMixin:
    """Start a listen window and classify what comes back."""

    def _begin_listen(self):
        runtime = self.runtime
        adapter = runtime.adapter
        bridge = runtime.bridge
        kinds = (adapter.transcript_event, adapter.silence_event)
        bridge.subscribe(adapter.event_topic)
        self._listen_waiter = bridge.add_waiter(
            adapter.event_topic,
            lambda m: isinstance(m, dict) and m.get("type") in kinds,
        )
        bridge.publish(adapter.command_topic, adapter.command("listen", {}))
        self._listen_started = runtime.now_ms()

    def _listen_outcome(self, table: PromptTable) -> Optional[str]:
        """Prompt name, a reserved sentinel, or None while still waiting."""
        waiter = self._listen_waiter
        if waiter.done:
            event = waiter.message
            if event.get("type") == self.runtime.adapter.silence_event:
                return NO_SPEECH
            text = str(event.get("text", ""))
            self.runtime.notepad["transcript"] = text
            return match_prompts(table, text)
        timeout = float(self.opt("timeout_ms", 8000))
        if self.runtime.now_ms() - self._listen_started + 1e-9 >= timeout:
            self.runtime.bridge.cancel_waiter(waiter)
            return NO_SPEECH
        return None

    def cancel(self):
        waiter = getattr(self, "_listen_waiter", None)
        if waiter is not None:
            self.runtime.bridge.cancel_waiter(waiter)


class RobotEasyListen(_ListenMixin, Activity):
    """Listens once and reports which prompt matched.

    The result is the matching prompt's name, "NoParse" for speech that
    matched nothing, or "NoSpeech" for silence (explicit or timed out).
    The raw transcript lands in ``notepad.transcript``.
    """

    type_name = "Robot-Easy-Listen"
    ez = True
    option_schema = (
        OptionSpec("prompts", "prompts", required=True, description="named patterns to match"),
        OptionSpec("timeout_ms", "number", default=8000, description="silence window"),
    )

    def start(self):
        self._table = _compile_prompts(self)
        self._begin_listen()
        return RUNNING

    def update(self):
        outcome = self._listen_outcome(self._table)
        return RUNNING if outcome is None else outcome


class RobotInteraction(_ListenMixin, Activity):
    """Asks a question and listens, reprompting on failure.

    ``max_reprompts`` caps the total number of listen attempts. When an
    attempt yields NoParse or NoSpeech and attempts remain, one of the
    ``backups`` lines (seeded-random choice) is spoken and the robot
    listens again. With no backups configured the first sentinel comes
    back immediately.
    """

    type_name = "Robot-Interaction"
    ez = True
    option_schema = (
        OptionSpec("text", "string", required=True, description="the question to ask"),
        OptionSpec("prompts", "prompts", required=True, description="named patterns to match"),
        OptionSpec("backups", "list", description="reprompt lines, one chosen at random"),
        OptionSpec("max_reprompts", "number", default=3, description="total listen attempts"),
        OptionSpec("timeout_ms", "number", default=8000, description="silence window per attempt"),
    )

    def start(self):
        self._table = _compile_prompts(self)
        self._attempts = 0
        self._speak(str(self.opt("text", "")))
        return RUNNING

    def _speak(self, text: str):
        runtime = self.runtime
        adapter = runtime.adapter
        done = adapter.done_event("speak")
        runtime.bridge.subscribe(adapter.event_topic)
        self._speak_waiter = runtime.bridge.add_waiter(
            adapter.event_topic,
            lambda m: isinstance(m, dict) and m.get("type") == done,
        )
        runtime.bridge.publish(adapter.command_topic, adapter.command("speak", {"text": text}))
        self._phase = "speaking"

    def update(self):
        if self._phase == "speaking":
            if not self._speak_waiter.done:
                return RUNNING
            self._attempts += 1
            self._begin_listen()
            self._phase = "listening"
            return RUNNING

        outcome = self._listen_outcome(self._table)
        if outcome is None:
            return RUNNING
        if outcome not in (NO_SPEECH, "NoParse"):
            return outcome
        backups = self.opt("backups") or []
        if not backups or self._attempts >= int(self.opt("max_reprompts", 3)):
            return outcome
        self._speak(str(self.runtime.rng.choice(backups)))
        return RUNNING

    def cancel(self):
        super().cancel()
        waiter = getattr(self, "_speak_waiter", None)
        if waiter is not None:
            self.runtime.bridge.cancel_waiter(waiter)


ROBOT_TYPES = (
    RobotSpeak,
    RobotTts,
    RobotEasyListen,
    RobotInteraction,
    RobotAnimation,
    RobotAudio,
    RobotVolume,
    RobotLookAt,
    RobotLightRing,
)
