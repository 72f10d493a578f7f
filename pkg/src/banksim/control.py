"""Live run control: a simulation thread fed by a command queue, the
HTTP + WebSocket service around it, and the command-line entry point.

Commands never touch the world mid-step.  They queue up and drain at
step boundaries, where parameter changes go through the same scheduling
path as config-file event_schedule entries.  A steered run can therefore
be reproduced exactly by writing the acked (step, path, value) triples
into a config's event_schedule and running it headless.
"""

from __future__ import annotations

import argparse
import asyncio
import itertools
import json
import queue
import sys
import threading
import time
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
from fastapi import FastAPI, HTTPException, Response, WebSocket
from starlette.websockets import WebSocketDisconnect

from .engine import (
    InvalidParamPath,
    SchemaError,
    World,
    batch_run,
    experiment_config,
    list_experiments,
    load_config,
)
from .ledger import CorruptLog, replay

COMMAND_KINDS = {"set_param", "pause", "resume", "step", "snapshot", "stop"}
TERMINAL_STATES = {"finished", "stopped", "failed"}


def _messages_schema() -> dict:
    text = resources.files("banksim.schemas").joinpath(
        "control_messages.schema.json").read_text()
    return json.loads(text)


_MESSAGES_SCHEMA = _messages_schema()
_COMMAND_VALIDATOR = jsonschema.Draft202012Validator(
    {"$ref": "#/$defs/command", "$defs": _MESSAGES_SCHEMA["$defs"]})


def validate_command(payload: dict) -> str | None:
    """Schema-check one inbound command; returns an error string or None."""
    errors = list(_COMMAND_VALIDATOR.iter_errors(payload))
    if errors:
        return errors[0].message
    return None


@dataclass
class Command:
    id: int
    kind: str
    path: str | None = None
    value: int | None = None
    steps: int | None = None
    result: dict | None = None
    _done: threading.Event = field(default_factory=threading.Event, repr=False)

    def wait(self, timeout: float | None = None) -> dict | None:
        if not self._done.wait(timeout):
            return None
        return self.result


class SimulationRunner:
    """Owns a World and the single thread allowed to mutate it.

    Listeners (the push side of the socket service) are called from the
    runner thread with already-serializable dicts; a listener that raises
    is dropped rather than allowed to stall the run.
    """

    def __init__(self, world: World, *, throttle: float = 0.0,
                 start_paused: bool = False) -> None:
        self.world = world
        self.throttle = throttle
        self.paused = start_paused
        self.run_state = "paused" if start_paused else "running"
        self.error = ""
        self._commands: queue.Queue[Command] = queue.Queue()
        self._ids = itertools.count()
        self._budget = 0
        self._budget_ack: Command | None = None
        self._stop = False
        self._pending: dict[tuple[int, str], Command] = {}
        self._listeners: list = []
        self._listeners_lock = threading.Lock()
        self._thread = threading.Thread(target=self._loop,
                                        name="banksim-runner", daemon=True)

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> "SimulationRunner":
        self._thread.start()
        return self

    def join(self, timeout: float | None = None) -> None:
        self._thread.join(timeout)

    @property
    def alive(self) -> bool:
        return self._thread.is_alive()

    def state(self) -> dict:
        return {"run_state": self.run_state, "step": self.world.step,
                "total_steps": self.world.total_steps, "error": self.error}

    # -- the command side ------------------------------------------------------

    def submit(self, kind: str, **fields) -> Command:
        if kind not in COMMAND_KINDS:
            raise ValueError(f"unknown command {kind!r}")
        cmd = Command(next(self._ids), kind, **fields)
        if self.run_state in TERMINAL_STATES and not self.alive:
            # the loop is gone; answer directly (the world is quiescent)
            if kind == "snapshot":
                self._finish(cmd, status="done", state=self.world.state_summary(),
                             row=self.world.series[-1])
            else:
                self._finish(cmd, status="expired")
            return cmd
        self._commands.put(cmd)
        return cmd

    def add_listener(self, fn) -> None:
        with self._listeners_lock:
            self._listeners.append(fn)

    def remove_listener(self, fn) -> None:
        with self._listeners_lock:
            if fn in self._listeners:
                self._listeners.remove(fn)

    # -- runner internals --------------------------------------------------------

    def _notify(self, message: dict) -> None:
        with self._listeners_lock:
            listeners = list(self._listeners)
        for fn in listeners:
            try:
                fn(message)
            except Exception:
                self.remove_listener(fn)

    def _finish(self, cmd: Command, **payload) -> None:
        cmd.result = {"type": "ack", "id": cmd.id, "command": cmd.kind, **payload}
        cmd._done.set()
        self._notify(cmd.result)

    def _emit_status(self) -> None:
        message = {"type": "status", "run_state": self.run_state,
                   "step": self.world.step}
        if self.error:
            message["error"] = self.error
        self._notify(message)

    def _handle(self, cmd: Command) -> None:
        if cmd.kind == "pause":
            self.paused = True
            self._budget = 0
            self.run_state = "paused"
            self._finish(cmd, status="done")
            self._emit_status()
        elif cmd.kind == "resume":
            self.paused = False
            self.run_state = "running"
            self._finish(cmd, status="done")
            self._emit_status()
        elif cmd.kind == "step":
            if not self.paused:
                self._finish(cmd, status="rejected",
                             error="step only applies while paused")
                return
            self._budget += cmd.steps or 1
            if self._budget_ack is not None:
                self._finish(self._budget_ack, status="superseded")
            self._budget_ack = cmd
        elif cmd.kind == "snapshot":
            self._finish(cmd, status="done", state=self.world.state_summary(),
                         row=self.world.series[-1])
        elif cmd.kind == "stop":
            self._stop = True
            self._finish(cmd, status="done")
        elif cmd.kind == "set_param":
            target = self.world.step + 1
            try:
                self.world.schedule_param(target, cmd.path, cmd.value,
                                          source="command")
            except InvalidParamPath as e:
                self._finish(cmd, status="rejected", error=str(e))
                return
            displaced = self._pending.pop((target, cmd.path), None)
            if displaced is not None:
                self._finish(displaced, status="superseded",
                             applied_step=target, path=displaced.path,
                             value=displaced.value)
            self._pending[(target, cmd.path)] = cmd

    def _drain(self) -> None:
        while True:
            try:
                cmd = self._commands.get_nowait()
            except queue.Empty:
                return
            self._handle(cmd)

    def _resolve_applied(self) -> None:
        step = self.world.step
        for key in [k for k in self._pending if k[0] == step]:
            cmd = self._pending.pop(key)
            self._finish(cmd, status="applied", applied_step=step,
                         path=cmd.path, value=cmd.value)
        if self._budget == 0 and self._budget_ack is not None:
            self._finish(self._budget_ack, status="done", applied_step=step)
            self._budget_ack = None

    def _expire_leftovers(self) -> None:
        for cmd in self._pending.values():
            self._finish(cmd, status="expired")
        self._pending.clear()
        if self._budget_ack is not None:
            self._finish(self._budget_ack, status="expired")
            self._budget_ack = None
        while True:
            try:
                cmd = self._commands.get_nowait()
            except queue.Empty:
                break
            if cmd.kind == "snapshot":
                self._handle(cmd)
            else:
                self._finish(cmd, status="expired")

    def _loop(self) -> None:
        self._emit_status()
        while not self._stop:
            if self.world.step >= self.world.total_steps:
                self.run_state = "finished"
                break
            if self.paused and self._budget == 0:
                self._handle(self._commands.get())  # block; a command wakes us
                continue
            self._drain()
            if self._stop or (self.paused and self._budget == 0):
                continue
            seen = len(self.world.events)
            try:
                row = self.world.run_step()
            except Exception as e:  # noqa: BLE001 - report, don't unwind a thread
                self.error = f"{type(e).__name__}: {e}"
                self.run_state = "failed"
                break
            if self._budget:
                self._budget -= 1
            self._resolve_applied()
            self._notify({"type": "snapshot", "row": row,
                          "events": self.world.events[seen:]})
            if self.throttle:
                time.sleep(self.throttle)
        if self._stop and self.run_state not in ("failed", "finished"):
            self.run_state = "stopped"
        self._expire_leftovers()
        self._emit_status()


# -- HTTP / WebSocket service ------------------------------------------------------


def build_app(runner: SimulationRunner) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app):
        yield
        if runner.alive:
            runner.submit("stop")
            runner.join(timeout=5)

    app = FastAPI(title="banksim control service", lifespan=lifespan)

    @app.get("/")
    def index():
        return {"service": "banksim", "endpoints": [
            "/state", "/config", "/events", "/series", "/schema/config",
            "/schema/messages", "/command (POST)", "/stream (websocket)"]}

    @app.get("/state")
    def state():
        return dict(runner.state(), summary=runner.world.state_summary())

    @app.get("/config")
    def config():
        return runner.world.config

    @app.get("/schema/config")
    def schema_config():
        from .engine import _schema
        return _schema()

    @app.get("/schema/messages")
    def schema_messages():
        return _MESSAGES_SCHEMA

    @app.get("/events")
    def events(since: int = 0, kind: str | None = None, limit: int = 1000):
        found = runner.world.events[since:]
        if kind is not None:
            found = [e for e in found if e["kind"] == kind]
        return {"total": len(runner.world.events), "events": found[:limit]}

    @app.get("/series")
    def series(format: str = "json"):
        world = runner.world
        if format == "csv":
            import io
            buf = io.StringIO()
            world.export_series(buf)
            return Response(buf.getvalue(), media_type="text/csv")
        if format != "json":
            raise HTTPException(400, f"unknown format {format!r}")
        return {"columns": world.csv_columns(), "rows": list(world.series)}

    @app.post("/command")
    def command(payload: dict, wait: float = 0.0):
        problem = validate_command(payload)
        if problem is not None:
            raise HTTPException(422, problem)
        fields = {k: v for k, v in payload.items() if k != "command"}
        cmd = runner.submit(payload["command"], **fields)
        if wait:
            result = cmd.wait(timeout=wait)
            if result is not None:
                return result
        return {"type": "ack", "id": cmd.id, "command": cmd.kind,
                "status": "queued"} if cmd.result is None else cmd.result

    @app.websocket("/stream")
    async def stream(ws: WebSocket):
        await ws.accept()
        loop = asyncio.get_running_loop()
        inbox: asyncio.Queue = asyncio.Queue()

        def listener(message: dict) -> None:
            loop.call_soon_threadsafe(inbox.put_nowait, message)

        async def forward() -> None:
            while True:
                await ws.send_json(await inbox.get())

        async def watch_disconnect() -> None:
            # an idle run sends nothing, so a send error would never surface
            # a gone client; reading (and discarding) inbound frames notices
            # the close immediately and lets server shutdown proceed
            while True:
                frame = await ws.receive()
                if frame["type"] == "websocket.disconnect":
                    return

        runner.add_listener(listener)
        try:
            # catch-up first: late joiners replay the whole visible history.
            # A step finishing between this snapshot and the first queued
            # message can appear in both; consumers key rows on row["step"].
            world = runner.world
            await ws.send_json({
                "type": "hello",
                "columns": world.csv_columns(),
                "history": list(world.series),
                "events_seen": len(world.events),
                "state": world.state_summary(),
                "run_state": runner.run_state,
            })
            done, pending = await asyncio.wait(
                {asyncio.create_task(forward()),
                 asyncio.create_task(watch_disconnect())},
                return_when=asyncio.FIRST_COMPLETED)
            for task in pending:
                task.cancel()
            for task in done:
                task.exception()  # a send error just ends the session
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            runner.remove_listener(listener)

    return app


# -- command line ---------------------------------------------------------------------

_SWEEP_ALIASES = {
    "R": "reserve_requirement",
    "C": "capital_requirement",
    "rate": "base_rate",
    "dividend": "dividend_rate",
}


def _resolve_config(name_or_path: str) -> dict:
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        return load_config(path)
    if name_or_path in list_experiments():
        return experiment_config(name_or_path)
    raise SchemaError("$", f"no such config file or packaged scenario: "
                           f"{name_or_path} (packaged: {', '.join(list_experiments())})")


def _apply_overrides(cfg: dict, args) -> dict:
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    if getattr(args, "steps", None) is not None:
        cfg["steps"] = args.steps
    return cfg


def parse_sweep(spec: str) -> tuple[str, list[int]]:
    """Parse ``path=v1,v2,...``.

    Short aliases expand (R -> reserve_requirement, C -> capital_requirement,
    rate -> base_rate, dividend -> dividend_rate) and fractional values are
    converted to the parameter's native unit: per-mil for policy ratios,
    basis points for base_rate.  ``R=0.05,0.10`` means 50 and 100 per-mil.
    """
    path, eq, values = spec.partition("=")
    if not eq or not values:
        raise ValueError(f"sweep spec must look like path=v1,v2 (got {spec!r})")
    scope, _, name = path.rpartition(".")
    name = _SWEEP_ALIASES.get(name, name)
    full = f"{scope}.{name}" if scope else name
    unit = 10_000 if name == "base_rate" else 1_000
    out = []
    for text in values.split(","):
        text = text.strip()
        if "." in text or "e" in text.lower():
            out.append(round(float(text) * unit))
        else:
            out.append(int(text))
    return full, out


def _open_out(target: str):
    if target == "-":
        return sys.stdout, False
    return open(target, "w", newline=""), True


def cmd_run(args) -> int:
    cfg = _apply_overrides(_resolve_config(args.config), args)
    audit_handle = open(args.audit, "w") if args.audit else None
    try:
        world = World(cfg, audit_sink=audit_handle)
        world.run()
    finally:
        if audit_handle:
            audit_handle.close()
    if args.summary:
        json.dump(world.state_summary(), sys.stdout, indent=2)
        sys.stdout.write("\n")
        if args.out != "-":
            with open(args.out, "w", newline="") as fh:
                world.export_series(fh)
        return 0
    out, close = _open_out(args.out)
    try:
        world.export_series(out)
    finally:
        if close:
            out.close()
    return 0


_BATCH_COLUMNS = ["cell", "seed", "steps", "system_narrow", "system_broad",
                  "system_loans", "defaults", "denials", "insolvencies", "error"]


def cmd_batch(args) -> int:
    cfg = _apply_overrides(_resolve_config(args.config), args)
    sweep: dict[str, list[int]] = {}
    for spec in args.sweep:
        path, values = parse_sweep(spec)
        sweep[path] = values
    rows = batch_run(cfg, sweep, steps=args.steps)
    columns = ["cell", "seed", *sweep, *_BATCH_COLUMNS[2:]]
    out, close = _open_out(args.out)
    try:
        import csv as _csv
        writer = _csv.writer(out, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([row.get(c, "") for c in columns])
    finally:
        if close:
            out.close()
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    cfg = _apply_overrides(_resolve_config(args.config), args)
    world = World(cfg)
    runner = SimulationRunner(world, throttle=args.throttle,
                              start_paused=args.paused).start()
    app = build_app(runner)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_inspect(args) -> int:
    with open(args.audit) as fh:
        system = replay(fh)
    report = {
        "postings": system.seq,
        "last_step": system.step,
        "banks": {
            name: {
                "assets": book.form_totals[0],
                "liabilities": book.form_totals[1],
                "capital": book.form_totals[2],
                "ledgers": {n: l.total for n, l in book.ledgers.items()},
            }
            for name, book in system.books.items()
        },
    }
    if args.json:
        json.dump(report, sys.stdout, indent=2)
        sys.stdout.write("\n")
        return 0
    print(f"postings {report['postings']}, last step {report['last_step']}")
    for name, info in report["banks"].items():
        print(f"{name}: assets {info['assets']} = liabilities "
              f"{info['liabilities']} + capital {info['capital']}")
        parts = [f"{n} {t}" for n, t in info["ledgers"].items() if t]
        if parts:
            print("  " + " | ".join(parts))
    return 0


def cli_main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="banksim",
        description="Deterministic double-entry banking simulator")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("run", help="run a config to completion, export the series")
    p.add_argument("config", help="config file or packaged scenario name")
    p.add_argument("--steps", type=int, help="override the configured horizon")
    p.add_argument("--seed", type=int, help="override the configured seed")
    p.add_argument("--out", default="-", help="CSV destination ('-' = stdout)")
    p.add_argument("--audit", help="also write the full posting log here")
    p.add_argument("--summary", action="store_true",
                   help="print a JSON state summary instead of the CSV")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("batch", help="sweep parameters over a config")
    p.add_argument("config")
    p.add_argument("--sweep", action="append", required=True,
                   metavar="PATH=V1,V2",
                   help="repeatable; aliases R/C/rate/dividend; fractional "
                        "values convert to per-mil (base_rate: basis points)")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="-")
    p.set_defaults(fn=cmd_batch)

    p = sub.add_parser("serve", help="run behind the HTTP/WebSocket service")
    p.add_argument("config")
    p.add_argument("--steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8707)
    p.add_argument("--paused", action="store_true",
                   help="start paused; advance with step/resume commands")
    p.add_argument("--throttle", type=float, default=0.0,
                   help="seconds to sleep between steps")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("inspect", help="rebuild balance sheets from an audit log")
    p.add_argument("audit")
    p.add_argument("--json", action="store_true")
    p.set_defaults(fn=cmd_inspect)

    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except SchemaError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except CorruptLog as e:
        print(f"audit log rejected: {e}", file=sys.stderr)
        return 3
    except (ValueError, InvalidParamPath) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(cli_main())
