"""Editor backend: flow files over HTTP, plus one live run at a time.

Routes:

    GET  /api/flows            names of every flow in the directory
    GET  /api/flows/{name}     one flow document
    PUT  /api/flows/{name}     save a document (422 with diagnostics if invalid)
    GET  /api/palette          activity catalog with ez flags and option schemas
    POST /api/run/{name}       start executing (409 while something else runs);
                               body may override args/seed/realtime/script/
                               frame_rate/bridge for this run
    POST /api/stop             stop the current execution
    GET  /api/status           current/last run state
    WS   /api/events           {tick, contextId, activityId, event, result} stream

Executions run on a worker thread; the event socket fans trace records out
to every connected client. Control records use the same five keys with
``event`` set to "run-start" or "run-end" so one shape covers the stream.
"""

from __future__ import annotations

import asyncio
import functools
import queue
import threading
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, WebSocket
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .activities import default_registry
from .activities.robot import RobotAdapter
from .bridge import InProcessTransport, WebSocketTransport
from .clocks import VirtualClock
from .engine import DEFAULT_FRAME_RATE, DEFAULT_MAX_TICKS, DirectoryFlowSource, Execution
from .errors import FlowFormatError, FlowSchemaError
from .model import dumps, errors_only, flow_from_dict, load, validate_flow
from .sim import PersonaScript, SimRobot


class EventHub:
    """Fans engine events out to every attached consumer queue."""

    def __init__(self):
        self._clients: list[queue.Queue] = []
        self._lock = threading.Lock()

    def attach(self) -> queue.Queue:
        q: queue.Queue = queue.Queue()
        with self._lock:
            self._clients.append(q)
        return q

    def detach(self, q: queue.Queue) -> None:
        with self._lock:
            if q in self._clients:
                self._clients.remove(q)

    def publish(self, event: dict) -> None:
        with self._lock:
            clients = list(self._clients)
        for q in clients:
            q.put(event)


def _control_event(tick: int, event: str, result: str) -> dict:
    return {"tick": tick, "contextId": "", "activityId": "", "event": event, "result": result}


class RunManager:
    """Owns the single live execution and its worker thread."""

    def __init__(
        self,
        source: DirectoryFlowSource,
        hub: EventHub,
        *,
        bridge: str = "sim",
        script: Optional[PersonaScript] = None,
        frame_rate: int = DEFAULT_FRAME_RATE,
        adapter: Optional[RobotAdapter] = None,
        registry=None,
        realtime: bool = True,
        max_ticks: int = DEFAULT_MAX_TICKS,
    ):
        self.source = source
        self.hub = hub
        self.bridge = bridge
        self.script = script or PersonaScript()
        self.frame_rate = frame_rate
        self.adapter = adapter or RobotAdapter()
        self.registry = registry or default_registry()
        self.realtime = realtime
        self.max_ticks = max_ticks
        self._lock = threading.Lock()
        self._thread: Optional[threading.Thread] = None
        self._stop = threading.Event()
        self._execution: Optional[Execution] = None
        self._flow_name: Optional[str] = None

    # -- observation ---------------------------------------------------------

    @property
    def running(self) -> bool:
        thread = self._thread
        return thread is not None and thread.is_alive()

    def status(self) -> dict:
        execution = self._execution
        return {
            "running": self.running,
            "flow": self._flow_name,
            "status": execution.status if execution else "idle",
            "result": execution.result if execution else None,
            "error": execution.error if execution else None,
            "ticks": execution.tick if execution else 0,
        }

    # -- control -------------------------------------------------------------

    def start(
        self,
        name: str,
        *,
        args: Optional[dict] = None,
        seed: int = 0,
        realtime: Optional[bool] = None,
        script: Optional[dict] = None,
        frame_rate: Optional[int] = None,
        bridge: Optional[str] = None,
    ) -> Execution:
        with self._lock:
            if self.running:
                raise RuntimeError("an execution is already running")
            flow = self.source(name)  # FileNotFoundError -> 404 upstream

            clock = VirtualClock(int(frame_rate) if frame_rate else self.frame_rate)
            endpoint = bridge or self.bridge
            if endpoint == "sim":
                persona = PersonaScript(script) if script is not None else self.script
                sim = SimRobot(persona, clock=clock)
                factory = lambda: InProcessTransport(sim)
            else:
                factory = lambda: WebSocketTransport(endpoint)

            execution = Execution(
                flow,
                registry=self.registry,
                flows=self.source,
                seed=seed,
                transport_factory=factory,
                bridge_desc=endpoint,
                flow_path=str(self.source.path_for(name) or ""),
                clock=clock,
                adapter=self.adapter,
            )
            execution.add_listener(self.hub.publish)
            self._execution = execution
            self._flow_name = name
            self._stop.clear()
            pace = self.realtime if realtime is None else realtime
            self._thread = threading.Thread(
                target=self._drive, args=(execution, args, pace), daemon=True
            )
            self._thread.start()
            return execution

    def stop(self) -> bool:
        if not self.running:
            return False
        self._stop.set()
        thread = self._thread
        if thread is not None:
            thread.join(timeout=5.0)
        return True

    def _drive(self, execution: Execution, args: Optional[dict], pace: bool) -> None:
        frame_s = 1.0 / execution.clock.frame_rate
        self.hub.publish(_control_event(0, "run-start", self._flow_name or ""))
        try:
            execution.start(args)
            while (
                execution.status == "running"
                and execution.tick < self.max_ticks
                and not self._stop.is_set()
            ):
                if pace:
                    time.sleep(frame_s)
                execution.step()
            if execution.status == "running":
                execution.stop()
                if not self._stop.is_set():
                    execution.status = "max-ticks"
        except Exception as exc:  # an engine bug must not wedge the server
            execution.status = "failed"
            execution.error = f"internal: {exc}"
        finally:
            execution.bridge.close()
            self.hub.publish(
                _control_event(execution.tick, "run-end", execution.error or execution.status)
            )


def create_app(
    flow_dir,
    *,
    bridge: str = "sim",
    script: Optional[PersonaScript] = None,
    frame_rate: int = DEFAULT_FRAME_RATE,
    adapter: Optional[RobotAdapter] = None,
    registry=None,
    realtime: bool = True,
    max_ticks: int = DEFAULT_MAX_TICKS,
) -> FastAPI:
    root = Path(flow_dir)
    root.mkdir(parents=True, exist_ok=True)
    source = DirectoryFlowSource(root)
    registry = registry or default_registry()
    hub = EventHub()
    runs = RunManager(
        source,
        hub,
        bridge=bridge,
        script=script,
        frame_rate=frame_rate,
        adapter=adapter,
        registry=registry,
        realtime=realtime,
        max_ticks=max_ticks,
    )

    app = FastAPI(title="robotflow editor backend")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.runs = runs
    app.state.hub = hub

    @app.get("/api/flows")
    def list_flows():
        names = sorted(
            {p.stem for ext in DirectoryFlowSource.EXTENSIONS for p in root.glob(f"*{ext}")}
        )
        return {"flows": names}

    @app.get("/api/flows/{name}")
    def get_flow(name: str):
        path = source.path_for(name)
        if path is None:
            return JSONResponse({"error": f"no flow named {name!r}"}, status_code=404)
        try:
            return load(path).to_dict()
        except FlowFormatError as exc:
            return JSONResponse({"error": str(exc)}, status_code=500)

    @app.put("/api/flows/{name}")
    def put_flow(name: str, document: dict):
        document = dict(document)
        document.setdefault("name", name)
        document["name"] = name  # the path segment is authoritative
        try:
            flow = flow_from_dict(document)
        except FlowFormatError as exc:
            return JSONResponse(
                {"ok": False, "diagnostics": [{"level": "error", "code": "format",
                                              "where": "-", "message": str(exc)}]},
                status_code=422,
            )
        diagnostics = validate_flow(flow, registry)
        payload = [
            {"level": d.level, "code": d.code, "where": d.where, "message": d.message}
            for d in diagnostics
        ]
        if errors_only(diagnostics):
            return JSONResponse({"ok": False, "diagnostics": payload}, status_code=422)
        path = source.path_for(name)
        if path is None:
            path = root / (f"{name}.ezflow" if flow.ez else f"{name}.flow")
        path.write_text(dumps(flow), encoding="utf-8")
        return {"ok": True, "diagnostics": payload}

    @app.get("/api/palette")
    def palette():
        return {"types": registry.catalog()}

    @app.post("/api/run/{name}")
    def start_run(name: str, body: Optional[dict] = None):
        body = body or {}
        try:
            runs.start(
                name,
                args=body.get("args"),
                seed=int(body.get("seed", 0)),
                realtime=body.get("realtime"),
                script=body.get("script"),
                frame_rate=body.get("frame_rate"),
                bridge=body.get("bridge"),
            )
        except RuntimeError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except FileNotFoundError as exc:
            return JSONResponse({"error": str(exc)}, status_code=404)
        except (FlowFormatError, FlowSchemaError) as exc:
            return JSONResponse({"error": str(exc)}, status_code=422)
        return {"ok": True, "flow": name}

    @app.post("/api/stop")
    def stop_run():
        return {"ok": True, "stopped": runs.stop()}

    @app.get("/api/status")
    def status():
        return runs.status()

    @app.websocket("/api/events")
    async def events(ws: WebSocket):
        await ws.accept()
        q = hub.attach()
        loop = asyncio.get_running_loop()
        take = functools.partial(q.get, True, 0.25)
        try:
            while True:
                try:
                    event = await loop.run_in_executor(None, take)
                except queue.Empty:
                    continue
                await ws.send_json(event)
        except Exception:
            pass
        finally:
            hub.detach(q)

    return app
