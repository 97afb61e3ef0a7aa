"""Tick engine: contexts, transition resolution, and exception dispatch.

An execution advances on a frame-counted virtual clock. Each tick:

1. the clock moves one frame (firing any in-process simulator events),
2. deferred thunks run (async evals, async call results),
3. the bridge inbox is drained and applied,
4. every live context gets exactly one slot, in creation order.

Within a slot, a context either updates its running activity or chains:
complete an activity, stringify the result, follow the matching
transition, start the next activity, and keep going while activities
finish instantly. Chains are budgeted per slot; a chain that exhausts the
budget while revisiting a node is a loop and raises
``~Flow.Engine.loopLimit``, while one that is simply long yields the rest
of its work to the next tick.

Contexts form call stacks. A Sub-Flow activity pushes a child context and
suspends its own frame; the child runs its slots until an End activity
finishes the frame, at which point the result lands in the parent's
notepad and the parent resumes on the following tick. Exception dispatch
walks the same stack: candidate names (suffix-drop of the thrown name)
are checked against the failing activity's outbound transitions, then
against Catch activities on that frame's page, before popping to the
caller with the Sub-Flow node as the new failing activity.

Starting an execution is itself a full slot pass at tick zero, so entry
activities and everything they chain into run before the clock first
advances.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Optional, Union

from .bridge import BridgeConnection, Transport
from .clocks import VirtualClock
from .errors import (
    ENGINE_LOAD_ERROR,
    ENGINE_LOOP_LIMIT,
    ENGINE_NO_TRANSITION,
    ENGINE_ACTIVITY_ERROR,
    BRIDGE_CONNECT_FAILED,
    FlowFormatError,
    FlowSchemaError,
    FlowSignal,
)
from .model import Flow, ActivityNode, Transition, errors_only, load, stringify_result, validate_flow

DEFAULT_FRAME_RATE = 20
DEFAULT_CHAIN_LIMIT = 1000
DEFAULT_MAX_TICKS = 100_000


def resolve_transition(flow: Flow, activity_id: str, result: str) -> Optional[Transition]:
    """The transition a result string selects: exact label first, then the
    unnamed transition as the else branch, else None."""
    unnamed = None
    for tr in flow.outgoing(activity_id):
        if tr.label == result:
            return tr
        if tr.label == "" and unnamed is None:
            unnamed = tr
    return unnamed


def suffix_candidates(name: str) -> list[str]:
    """Handler names that can catch ``name``, most specific first.

    "~A.B.C" yields ["~A.B.C", "~A.B", "~A", "~"]; the bare tilde catches
    everything.
    """
    if not name.startswith("~"):
        raise ValueError(f"exception name {name!r} must start with '~'")
    parts = name[1:].split(".") if len(name) > 1 else []
    out = ["~" + ".".join(parts[:i]) for i in range(len(parts), 0, -1)]
    out.append("~")
    return out


def format_trace_event(event: dict) -> str:
    return (
        f"tick={event['tick']} ctx={event['contextId']} act={event['activityId']} "
        f"event={event['event']} result={event['result']}"
    )


# ---------------------------------------------------------------------------
# Flow sources


FlowSource = Callable[[str], Flow]


class DirectoryFlowSource:
    """Loads ``<name>.flow`` (or ``<name>.ezflow``) files from one directory."""

    EXTENSIONS = (".flow", ".ezflow")

    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)

    def path_for(self, name: str) -> Optional[Path]:
        for ext in self.EXTENSIONS:
            path = self.root / f"{name}{ext}"
            if path.is_file():
                return path
        return None

    def __call__(self, name: str) -> Flow:
        path = self.path_for(name)
        if path is None:
            raise FileNotFoundError(f"no flow file for {name!r} in {self.root}")
        return load(path)


def make_flow_source(source: Union[None, dict, FlowSource, str, Path]) -> Optional[FlowSource]:
    if source is None or callable(source):
        return source
    if isinstance(source, dict):
        flows = dict(source)

        def from_dict(name: str) -> Flow:
            try:
                return flows[name]
            except KeyError:
                raise FileNotFoundError(f"no flow named {name!r}") from None

        return from_dict
    return DirectoryFlowSource(source)


# ---------------------------------------------------------------------------
# Contexts


class Context:
    """One stack frame: a program counter into a flow page plus a notepad."""

    def __init__(
        self,
        ctx_id: str,
        flow: Flow,
        parent: Optional["Context"] = None,
        call_node: Optional[ActivityNode] = None,
        result_key: str = "result",
    ):
        self.id = ctx_id
        self.flow = flow
        self.parent = parent
        self.call_node = call_node
        self.result_key = result_key
        self.notepad: dict = {}
        self.child: Optional[Context] = None
        self.alive = True
        self.finished = False
        self.result: Any = None
        self.pending: Optional[tuple[str, Any]] = None
        self.current_node: Optional[ActivityNode] = None
        self.current_instance = None

    def root(self) -> "Context":
        ctx = self
        while ctx.parent is not None:
            ctx = ctx.parent
        return ctx

    def depth(self) -> int:
        n, ctx = 0, self
        while ctx.parent is not None:
            n, ctx = n + 1, ctx.parent
        return n


@dataclass
class RunResult:
    status: str  # "completed" | "failed" | "stopped" | "max-ticks"
    result: Any
    error: Optional[str]
    ticks: int

    @property
    def ok(self) -> bool:
        return self.status == "completed"


# ---------------------------------------------------------------------------
# Activity-facing facade


class ActivityRuntime:
    """Everything an activity may touch, scoped to one context."""

    def __init__(self, execution: "Execution", ctx: Context):
        self._exe = execution
        self._ctx = ctx

    # scopes
    @property
    def environment(self) -> dict:
        return self._exe.environment

    @property
    def blackboard(self) -> dict:
        return self._exe.blackboard

    @property
    def notepad(self) -> dict:
        return self._ctx.notepad

    # services
    @property
    def bridge(self) -> BridgeConnection:
        return self._exe.bridge

    @property
    def adapter(self):
        return self._exe.adapter

    @property
    def rule_set(self):
        return self._exe.rules_for(self._ctx.flow)

    @property
    def rng(self) -> random.Random:
        return self._exe.rng

    def now_ms(self) -> float:
        return self._exe.clock.now_ms()

    @property
    def frame_ms(self) -> float:
        return self._exe.clock.frame_ms

    def eval(self, source: str) -> Any:
        from .expressions import evaluate

        return evaluate(source, self._exe.environment, self._exe.blackboard, self._ctx.notepad)

    def stringify(self, value: Any) -> str:
        return stringify_result(value)

    def defer(self, fn: Callable[[], None]) -> None:
        self._exe.defer(fn)

    def log(self, message: str) -> None:
        self._exe.log(message)

    def connect_bridge(self) -> bool:
        if self._exe.transport_factory is None:
            raise FlowSignal(BRIDGE_CONNECT_FAILED, "no bridge endpoint configured")
        return self._exe.bridge.connect(self._exe.transport_factory)

    def finish_frame(self, result: Any) -> None:
        self._ctx.finished = True
        self._ctx.result = result

    def call_flow(self, name: str, args: Optional[dict] = None, result_key: str = "result") -> None:
        self._exe.push_frame(self._ctx, name, args, result_key)

    def interrupt_siblings(self) -> int:
        return self._exe.interrupt_siblings(self._ctx)


# ---------------------------------------------------------------------------
# Execution


class Execution:
    """One run of one flow: the context stacks, scopes, clock, and bridge."""

    def __init__(
        self,
        flow: Flow,
        *,
        registry=None,
        flows: Union[None, dict, FlowSource, str, Path] = None,
        frame_rate: int = DEFAULT_FRAME_RATE,
        seed: int = 0,
        transport_factory: Optional[Callable[[], Transport]] = None,
        bridge_desc: str = "",
        flow_path: str = "",
        clock: Optional[VirtualClock] = None,
        chain_limit: int = DEFAULT_CHAIN_LIMIT,
        adapter=None,
        validate: bool = True,
    ):
        if registry is None:
            from .activities import default_registry

            registry = default_registry()
        if adapter is None:
            from .activities.robot import RobotAdapter

            adapter = RobotAdapter()
        self.flow = flow
        self.registry = registry
        self.adapter = adapter
        self.clock = clock or VirtualClock(frame_rate)
        self.rng = random.Random(seed)
        self.bridge = BridgeConnection()
        self.transport_factory = transport_factory
        self.chain_limit = max(1, chain_limit)
        self.blackboard: dict = {}
        self.environment: dict = {
            "frameRate": self.clock.frame_rate,
            "seed": seed,
            "bridge": bridge_desc,
            "flowPath": str(flow_path),
            "startTime": 0.0,
        }
        self.status = "idle"
        self.result: Any = None
        self.error: Optional[str] = None
        self.contexts: list[Context] = []
        self.logs: list[tuple[int, str]] = []
        self._order: list[Context] = []
        self._listeners: list[Callable[[dict], None]] = []
        self._deferred: list[Callable[[], None]] = []
        self._resolver = make_flow_source(flows)
        self._flow_cache: dict[str, Flow] = {flow.name: flow}
        self._rule_cache: dict[str, Any] = {}
        if validate:
            problems = errors_only(validate_flow(flow, registry))
            if problems:
                listing = "; ".join(d.message for d in problems)
                raise FlowSchemaError(f"flow {flow.name!r} is invalid: {listing}")

    # -- observation --------------------------------------------------------

    @property
    def tick(self) -> int:
        return self.clock.tick

    def add_listener(self, fn: Callable[[dict], None]) -> None:
        self._listeners.append(fn)

    def _emit(self, ctx: Context, node: ActivityNode, event: str, result: str) -> None:
        if not self._listeners:
            return
        payload = {
            "tick": self.clock.tick,
            "contextId": ctx.id,
            "activityId": node.id,
            "event": event,
            "result": result,
        }
        for fn in self._listeners:
            fn(payload)

    def log(self, message: str) -> None:
        self.logs.append((self.clock.tick, message))

    # -- deferred work ------------------------------------------------------

    def defer(self, fn: Callable[[], None]) -> None:
        self._deferred.append(fn)

    # -- frames -------------------------------------------------------------

    def _new_context(
        self,
        flow: Flow,
        parent: Optional[Context],
        call_node: Optional[ActivityNode],
        result_key: str = "result",
    ) -> Context:
        ctx = Context(f"ctx{len(self.contexts)}", flow, parent, call_node, result_key)
        self.contexts.append(ctx)
        self._order.append(ctx)
        if parent is not None:
            parent.child = ctx
        return ctx

    def rules_for(self, flow: Flow):
        """Parsed rule set for a flow page, cached per flow name."""
        cached = self._rule_cache.get(flow.name)
        if cached is None:
            from .grammar import RuleSet

            cached = RuleSet.parse(flow.rules) if flow.rules else RuleSet()
            self._rule_cache[flow.name] = cached
        return cached

    def resolve_flow(self, name: str) -> Flow:
        cached = self._flow_cache.get(name)
        if cached is not None:
            return cached
        if self._resolver is None:
            raise FlowSignal(ENGINE_LOAD_ERROR, f"no flow source to resolve {name!r}")
        try:
            flow = self._resolver(name)
        except FileNotFoundError as exc:
            raise FlowSignal(ENGINE_LOAD_ERROR, str(exc)) from None
        except FlowFormatError as exc:
            raise FlowSignal(ENGINE_LOAD_ERROR, f"flow {name!r}: {exc}") from None
        problems = errors_only(validate_flow(flow, self.registry))
        if problems:
            raise FlowSignal(
                ENGINE_LOAD_ERROR, f"flow {name!r} is invalid: {problems[0].message}"
            )
        self._flow_cache[name] = flow
        return flow

    def push_frame(
        self, parent: Context, name: str, args: Optional[dict], result_key: str
    ) -> Context:
        flow = self.resolve_flow(name)
        entries = flow.entries()
        if not entries:
            raise FlowSignal(ENGINE_LOAD_ERROR, f"flow {name!r} has no entry activity")
        child = self._new_context(flow, parent, parent.current_node, result_key)
        if args:
            child.notepad.update(args)
        # Sub-flow calls always enter at the first entry; parallel entries
        # are a root-level feature.
        child.pending = ("start", entries[0])
        return child

    def interrupt_siblings(self, ctx: Context) -> int:
        my_root = ctx.root()
        killed = 0
        for other in list(self._order):
            if other.alive and other.root() is not my_root:
                self._kill(other)
                killed += 1
        return killed

    def _kill(self, ctx: Context) -> None:
        if not ctx.alive:
            return
        ctx.alive = False
        ctx.child = None
        if ctx.current_instance is not None:
            try:
                ctx.current_instance.cancel()
            except Exception:
                pass
            ctx.current_instance = None

    # -- lifecycle ----------------------------------------------------------

    def start(self, args: Optional[dict] = None) -> None:
        """Tick zero: spawn a root context per entry and run their slots."""
        if self.status != "idle":
            raise RuntimeError(f"execution already {self.status}")
        self.status = "running"
        entries = self.flow.entries()
        if not entries:
            self._fail(ENGINE_LOAD_ERROR)
            return
        for node in entries:
            ctx = self._new_context(self.flow, None, None)
            if args:
                ctx.notepad.update(args)
            ctx.pending = ("start", node)
        self._run_slots()
        self._check_done()

    def step(self) -> None:
        """Advance one tick."""
        if self.status != "running":
            return
        self.clock.advance()
        deferred, self._deferred = self._deferred, []
        for fn in deferred:
            fn()
        self.bridge.pump()
        self._run_slots()
        self._check_done()

    def run(self, max_ticks: int = DEFAULT_MAX_TICKS, args: Optional[dict] = None) -> RunResult:
        if self.status == "idle":
            self.start(args)
        while self.status == "running" and self.clock.tick < max_ticks:
            self.step()
        if self.status == "running":
            self.status = "max-ticks"
            for ctx in list(self._order):
                self._kill(ctx)
            self._order.clear()
        self.bridge.close()
        return RunResult(self.status, self.result, self.error, self.clock.tick)

    def stop(self) -> None:
        if self.status in ("idle", "running"):
            for ctx in list(self._order):
                self._kill(ctx)
            self._order.clear()
            self.status = "stopped"
        self.bridge.close()

    def _fail(self, name: str) -> None:
        self.status = "failed"
        self.error = name
        for ctx in list(self._order):
            self._kill(ctx)
        self._order.clear()

    def _check_done(self) -> None:
        if self.status == "running" and not self._order:
            self.status = "completed"

    # -- the slot machine ---------------------------------------------------

    def _run_slots(self) -> None:
        i = 0
        while i < len(self._order):
            ctx = self._order[i]
            i += 1
            if ctx.alive and not ctx.finished and ctx.child is None:
                self._advance(ctx)
            if self.status != "running":
                break
        self._order = [c for c in self._order if c.alive and not c.finished]

    def _advance(self, ctx: Context) -> None:
        starts = 0
        start_counts: Counter = Counter()

        if ctx.pending is not None:
            action, ctx.pending = ctx.pending, None
        elif ctx.current_instance is not None:
            action = ("update", None)
        else:
            return

        while action is not None and ctx.alive and not ctx.finished:
            kind, payload = action
            action = None

            if kind == "start":
                node: ActivityNode = payload
                if starts >= self.chain_limit:
                    if any(count >= 2 for count in start_counts.values()):
                        # A cycle burned the whole budget. Any handler found
                        # runs on the next tick with a fresh budget, so a
                        # handler that loops back cannot wedge this tick.
                        handler = self._dispatch(ctx, node, ENGINE_LOOP_LIMIT)
                        if handler is not None:
                            ctx.pending = handler
                        break
                    # A long but progressing chain: finish it next tick.
                    ctx.pending = ("start", node)
                    break
                starts += 1
                start_counts[node.id] += 1
                try:
                    instance = self.registry.get(node.type)(node, ActivityRuntime(self, ctx))
                except Exception as exc:
                    action = self._dispatch(ctx, node, ENGINE_ACTIVITY_ERROR, str(exc))
                    continue
                ctx.current_node = node
                ctx.current_instance = instance
                action = self._call(ctx, node, instance.start, "start")

            elif kind == "update":
                node = ctx.current_node
                action = self._call(ctx, node, ctx.current_instance.update, "update")

            elif kind == "complete":
                # A suspended frame resuming after its child returned.
                node = ctx.current_node
                ctx.current_instance = None
                self._emit(ctx, node, "complete", stringify_result(payload))
                action = ("resolve", (node, payload))

            elif kind == "resolve":
                node, result = payload
                tr = resolve_transition(ctx.flow, node.id, stringify_result(result))
                if tr is None:
                    action = self._dispatch(
                        ctx,
                        node,
                        ENGINE_NO_TRANSITION,
                        f"no transition for result {stringify_result(result)!r}",
                    )
                else:
                    action = ("start", ctx.flow.activity(tr.target))

        if ctx.finished:
            self._return_frame(ctx)

    def _call(self, ctx: Context, node: ActivityNode, fn, phase: str):
        """Run start/update, translating outcomes into the next action."""
        from .activities.base import RUNNING

        try:
            result = fn()
        except FlowSignal as sig:
            ctx.current_instance = None
            return self._dispatch(ctx, node, sig.name, sig.message)
        except Exception as exc:
            ctx.current_instance = None
            return self._dispatch(ctx, node, ENGINE_ACTIVITY_ERROR, f"{type(exc).__name__}: {exc}")
        if ctx.finished:
            ctx.current_instance = None
            self._emit(ctx, node, "complete", stringify_result(result))
            return None
        if result is RUNNING:
            self._emit(ctx, node, phase, "")
            return None
        ctx.current_instance = None
        self._emit(ctx, node, "complete", stringify_result(result))
        return ("resolve", (node, result))

    def _return_frame(self, ctx: Context) -> None:
        ctx.current_instance = None
        parent = ctx.parent
        if parent is None:
            self.result = ctx.result
            return
        parent.child = None
        parent.notepad[ctx.result_key] = ctx.result
        parent.pending = ("complete", ctx.result)

    # -- exception dispatch -------------------------------------------------

    def _dispatch(self, ctx: Context, node: ActivityNode, name: str, message: str = ""):
        """Walk the frame stack for a handler; kill frames passed over.

        Returns the next chain action when the handler lands in ``ctx``
        itself, else None (the handler frame resumes next tick, or the
        execution fails).
        """
        self._emit(ctx, node, "throw", name)
        candidates = suffix_candidates(name)
        frame: Optional[Context] = ctx
        fnode: Optional[ActivityNode] = node
        while frame is not None and fnode is not None:
            target = self._find_handler(frame, fnode, candidates)
            if target is not None:
                frame.notepad["exception"] = name
                self._pop_until(ctx, frame)
                frame.child = None
                frame.current_instance = None
                if frame is ctx:
                    return ("start", target)
                frame.pending = ("start", target)
                return None
            fnode = frame.call_node
            frame = frame.parent
        self._fail(name)
        return None

    @staticmethod
    def _find_handler(
        frame: Context, fnode: ActivityNode, candidates: list[str]
    ) -> Optional[ActivityNode]:
        outgoing = frame.flow.outgoing(fnode.id)
        catches = frame.flow.catches()
        for cand in candidates:
            for tr in outgoing:
                if tr.label == cand:
                    return frame.flow.activity(tr.target)
            for catch in catches:
                if catch.name == cand:
                    return catch
        return None

    def _pop_until(self, ctx: Context, frame: Context) -> None:
        walk = ctx
        while walk is not frame and walk is not None:
            self._kill(walk)
            walk = walk.parent


# ---------------------------------------------------------------------------
# Convenience runner


def run_flow(
    flow: Flow,
    *,
    args: Optional[dict] = None,
    flows: Union[None, dict, FlowSource, str, Path] = None,
    registry=None,
    frame_rate: int = DEFAULT_FRAME_RATE,
    seed: int = 0,
    transport_factory: Optional[Callable[[], Transport]] = None,
    bridge_desc: str = "",
    flow_path: str = "",
    clock: Optional[VirtualClock] = None,
    chain_limit: int = DEFAULT_CHAIN_LIMIT,
    adapter=None,
    max_ticks: int = DEFAULT_MAX_TICKS,
    trace: Optional[Callable[[dict], None]] = None,
) -> RunResult:
    execution = Execution(
        flow,
        registry=registry,
        flows=flows,
        frame_rate=frame_rate,
        seed=seed,
        transport_factory=transport_factory,
        bridge_desc=bridge_desc,
        flow_path=flow_path,
        clock=clock,
        chain_limit=chain_limit,
        adapter=adapter,
    )
    if trace is not None:
        execution.add_listener(trace)
    return execution.run(max_ticks=max_ticks, args=args)
