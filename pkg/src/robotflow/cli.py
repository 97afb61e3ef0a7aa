"""Command line front door: run, validate, and serve flows.

Exit codes follow the usual convention: 0 for a completed run (or a clean
validation), 1 when the flow fails to validate or the execution fails,
and 2 for usage problems such as missing files.
"""

from __future__ import annotations

import json
import sys
import time
from pathlib import Path
from typing import Optional

import click

from .activities.robot import RobotAdapter
from .bridge import InProcessTransport, WebSocketTransport
from .clocks import VirtualClock
from .engine import (
    DEFAULT_CHAIN_LIMIT,
    DEFAULT_FRAME_RATE,
    DEFAULT_MAX_TICKS,
    Execution,
    format_trace_event,
)
from .errors import FlowFormatError, FlowSchemaError
from .model import load, validate_flow
from .sim import PersonaScript, SimRobot


def _parse_arg(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise click.BadParameter(f"expected KEY=VALUE, got {text!r}")
    key, raw = text.split("=", 1)
    try:
        return key, json.loads(raw)
    except json.JSONDecodeError:
        return key, raw


@click.group()
@click.version_option(package_name="robotflow")
def main():
    """Author, check, and run robot interaction flows."""


@main.command()
@click.argument("path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--bridge", default="sim", show_default=True,
              help="'sim' for the built-in robot, or a ws:// endpoint")
@click.option("--sim", "force_sim", is_flag=True,
              help="use the built-in robot even if --bridge names an endpoint")
@click.option("--script", "script_path", type=click.Path(exists=True, dir_okay=False),
              help="persona script for the built-in robot")
@click.option("--adapter", "adapter_path", type=click.Path(exists=True, dir_okay=False),
              help="robot command vocabulary (JSON)")
@click.option("--fps", default=DEFAULT_FRAME_RATE, show_default=True, help="ticks per second")
@click.option("--seed", default=0, show_default=True, help="random seed")
@click.option("--arg", "args", multiple=True, metavar="KEY=VALUE",
              help="seed a notepad value (VALUE parsed as JSON when possible)")
@click.option("--trace", "trace_path", type=click.Path(dir_okay=False),
              help="write one trace line per activity event here")
@click.option("--max-ticks", default=DEFAULT_MAX_TICKS, show_default=True)
@click.option("--chain-limit", default=DEFAULT_CHAIN_LIMIT, show_default=True,
              help="zero-duration activity starts allowed per context per tick")
@click.option("--realtime/--fast", default=None,
              help="pace ticks against the wall clock (default: only for ws bridges)")
@click.option("--quiet", is_flag=True, help="suppress the summary line")
def run(path: Path, bridge: str, force_sim: bool, script_path: Optional[str],
        adapter_path: Optional[str], fps: int, seed: int, args: tuple[str, ...],
        trace_path: Optional[str], max_ticks: int, chain_limit: int,
        realtime: Optional[bool], quiet: bool):
    """Run the flow in PATH until it completes or fails."""
    try:
        flow = load(path)
    except FlowFormatError as exc:
        click.echo(f"{path}: {exc}", err=True)
        sys.exit(1)

    notepad_args = dict(_parse_arg(a) for a in args)
    adapter = RobotAdapter.from_file(adapter_path) if adapter_path else RobotAdapter()
    clock = VirtualClock(fps)

    if force_sim or bridge == "sim":
        persona = PersonaScript.from_file(script_path) if script_path else PersonaScript()
        sim = SimRobot(persona, clock=clock)
        transport_factory = lambda: InProcessTransport(sim)
        pace = bool(realtime)
    else:
        transport_factory = lambda: WebSocketTransport(bridge)
        pace = realtime if realtime is not None else True

    try:
        execution = Execution(
            flow,
            flows=path.parent,
            frame_rate=fps,
            seed=seed,
            transport_factory=transport_factory,
            bridge_desc=bridge,
            flow_path=str(path),
            clock=clock,
            chain_limit=chain_limit,
            adapter=adapter,
        )
    except FlowSchemaError as exc:
        click.echo(f"{path}: {exc}", err=True)
        sys.exit(1)

    trace_file = open(trace_path, "w", encoding="utf-8") if trace_path else None
    if trace_file is not None:
        execution.add_listener(lambda e: trace_file.write(format_trace_event(e) + "\n"))

    frame_s = 1.0 / fps
    try:
        execution.start(notepad_args)
        while execution.status == "running" and execution.tick < max_ticks:
            if pace:
                time.sleep(frame_s)
            execution.step()
        if execution.status == "running":
            execution.stop()
            execution.status = "max-ticks"
    finally:
        execution.bridge.close()
        if trace_file is not None:
            trace_file.close()

    for tick, message in execution.logs:
        click.echo(f"[tick {tick}] {message}")
    if not quiet:
        click.echo(
            f"status={execution.status} result={execution.result!r} "
            f"error={execution.error or ''} ticks={execution.tick}"
        )
    sys.exit(0 if execution.status == "completed" else 1)


@main.command()
@click.argument("paths", nargs=-1, required=True,
                type=click.Path(exists=True, dir_okay=False, path_type=Path))
def validate(paths: tuple[Path, ...]):
    """Check flow files; print one tab-separated diagnostic per line."""
    from .activities import default_registry

    registry = default_registry()
    failed = False
    for path in paths:
        try:
            flow = load(path)
        except FlowFormatError as exc:
            click.echo(f"{path}\terror\tformat\t-\t{exc}")
            failed = True
            continue
        for diag in validate_flow(flow, registry):
            click.echo(f"{path}\t{diag.line()}")
            if diag.level == "error":
                failed = True
    sys.exit(1 if failed else 0)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--dir", "flow_dir", default="flows", show_default=True,
              type=click.Path(file_okay=False), help="directory of .flow files")
@click.option("--bridge", default="sim", show_default=True,
              help="'sim' for the built-in robot, or a ws:// endpoint")
@click.option("--script", "script_path", type=click.Path(exists=True, dir_okay=False),
              help="persona script for the built-in robot")
def serve(host: str, port: int, flow_dir: str, bridge: str, script_path: Optional[str]):
    """Serve the editor API over HTTP."""
    import uvicorn

    from .server import create_app

    persona = PersonaScript.from_file(script_path) if script_path else None
    app = create_app(flow_dir, bridge=bridge, script=persona)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
