"""Control-layer tests: the runner thread, command acks, the HTTP and
WebSocket service, and the command-line interface."""

import copy
import io
import json

import jsonschema
import pytest
from fastapi.testclient import TestClient

from banksim.control import (
    SimulationRunner,
    _MESSAGES_SCHEMA,
    build_app,
    cli_main,
    parse_sweep,
    validate_command,
)
from banksim.engine import World

_SERVER_MESSAGE = jsonschema.Draft202012Validator(
    {"$ref": "#/$defs/server_message", "$defs": _MESSAGES_SCHEMA["$defs"]})


def tiny_cfg(steps=6, **extra):
    cfg = {
        "schema_version": 1,
        "seed": 13,
        "steps": steps,
        "banks": [{"name": "first"}],
        "agents": {
            "savers": [{"count": 1, "bank": "first", "endowment": 1_000}],
            "borrowers": [{"count": 2, "bank": "first", "principal": 50,
                           "periods": 120}],
        },
    }
    cfg.update(extra)
    return cfg


def finished_runner(runner, timeout=10):
    runner.join(timeout)
    assert not runner.alive, "runner did not finish in time"
    return runner


class TestCommandValidation:
    def test_plain_commands_accepted(self):
        for kind in ("pause", "resume", "snapshot", "stop"):
            assert validate_command({"command": kind}) is None

    def test_set_param_needs_path_and_value(self):
        assert validate_command({"command": "set_param"}) is not None
        assert validate_command(
            {"command": "set_param", "path": "base_rate", "value": 300}) is None

    def test_step_needs_count(self):
        assert validate_command({"command": "step"}) is not None
        assert validate_command({"command": "step", "steps": 3}) is None

    def test_unknown_command_rejected(self):
        assert validate_command({"command": "warp"}) is not None

    def test_extra_keys_rejected(self):
        assert validate_command({"command": "pause", "why": "because"}) is not None


class TestRunner:
    def test_runs_to_completion(self):
        runner = SimulationRunner(World(tiny_cfg())).start()
        finished_runner(runner)
        assert runner.run_state == "finished"
        assert runner.world.step == 6

    def test_start_paused_and_step(self):
        runner = SimulationRunner(World(tiny_cfg()), start_paused=True).start()
        assert runner.world.step == 0
        ack = runner.submit("step", steps=2).wait(5)
        assert ack["status"] == "done"
        assert ack["applied_step"] == 2
        assert runner.world.step == 2
        assert runner.run_state == "paused"
        runner.submit("resume")
        finished_runner(runner)
        assert runner.run_state == "finished"

    def test_set_param_applies_next_step(self):
        runner = SimulationRunner(World(tiny_cfg()), start_paused=True).start()
        pending = runner.submit("set_param", path="base_rate", value=900)
        runner.submit("step", steps=1).wait(5)
        ack = pending.wait(5)
        assert ack["status"] == "applied"
        assert ack["applied_step"] == 1
        assert runner.world.cb.base_rate_bp == 900
        changes = [e for e in runner.world.events if e["kind"] == "param_change"]
        assert changes == [{"step": 1, "kind": "param_change",
                            "path": "base_rate", "value": 900,
                            "source": "command"}]
        runner.submit("stop")
        finished_runner(runner)

    def test_second_write_supersedes_first(self):
        runner = SimulationRunner(World(tiny_cfg()), start_paused=True).start()
        first = runner.submit("set_param", path="base_rate", value=300)
        second = runner.submit("set_param", path="base_rate", value=700)
        runner.submit("step", steps=1).wait(5)
        assert first.wait(5)["status"] == "superseded"
        assert second.wait(5)["status"] == "applied"
        assert runner.world.cb.base_rate_bp == 700
        runner.submit("stop")
        finished_runner(runner)

    def test_bad_param_rejected(self):
        runner = SimulationRunner(World(tiny_cfg()), start_paused=True).start()
        ack = runner.submit("set_param", path="gravity", value=1).wait(5)
        assert ack["status"] == "rejected"
        assert "unknown parameter" in ack["error"]
        runner.submit("stop")
        finished_runner(runner)

    def test_snapshot_while_paused(self):
        runner = SimulationRunner(World(tiny_cfg()), start_paused=True).start()
        ack = runner.submit("snapshot").wait(5)
        assert ack["status"] == "done"
        assert ack["state"]["step"] == 0
        assert ack["row"]["step"] == 0
        runner.submit("stop")
        finished_runner(runner)

    def test_stop_expires_pending_params(self):
        runner = SimulationRunner(World(tiny_cfg()), start_paused=True).start()
        pending = runner.submit("set_param", path="base_rate", value=400)
        runner.submit("stop")
        finished_runner(runner)
        assert runner.run_state == "stopped"
        assert pending.wait(5)["status"] == "expired"

    def test_commands_after_finish(self):
        runner = SimulationRunner(World(tiny_cfg(steps=2))).start()
        finished_runner(runner)
        assert runner.submit("pause").wait(5)["status"] == "expired"
        snap = runner.submit("snapshot").wait(5)
        assert snap["status"] == "done"
        assert snap["state"]["step"] == 2

    def test_step_rejected_while_running(self):
        runner = SimulationRunner(World(tiny_cfg()), start_paused=True).start()
        runner.submit("resume").wait(5)
        ack = runner.submit("step", steps=1).wait(5)
        # either it raced the finish line or it was refused while running
        assert ack["status"] in ("rejected", "expired")
        finished_runner(runner)

    def test_listener_messages_validate(self):
        messages = []
        runner = SimulationRunner(World(tiny_cfg(steps=3)))
        runner.add_listener(messages.append)
        runner.start()
        finished_runner(runner)
        kinds = [m["type"] for m in messages]
        assert kinds[0] == "status"
        assert kinds[-1] == "status"
        assert kinds.count("snapshot") == 3
        assert messages[-1]["run_state"] == "finished"
        for message in messages:
            _SERVER_MESSAGE.validate(message)

    def test_snapshot_messages_carry_step_events(self):
        messages = []
        runner = SimulationRunner(World(tiny_cfg(steps=2)))
        runner.add_listener(messages.append)
        runner.start()
        finished_runner(runner)
        first = next(m for m in messages if m["type"] == "snapshot")
        assert first["row"]["step"] == 1
        assert {e["kind"] for e in first["events"]} == {"grant"}

    def test_broken_listener_dropped_not_fatal(self):
        def bomb(message):
            raise RuntimeError("boom")

        runner = SimulationRunner(World(tiny_cfg(steps=3)))
        runner.add_listener(bomb)
        runner.start()
        finished_runner(runner)
        assert runner.run_state == "finished"
        assert bomb not in runner._listeners

    def test_steered_run_replays_as_schedule(self):
        # live steering and a config event_schedule are the same mechanism,
        # so the exported series must match byte for byte
        steered = World(tiny_cfg())
        runner = SimulationRunner(steered, start_paused=True).start()
        ack = runner.submit("set_param", path="base_rate", value=550)
        runner.submit("step", steps=6).wait(10)
        finished_runner(runner)
        applied = ack.wait(5)
        assert applied["status"] == "applied"

        cfg = tiny_cfg()
        cfg["event_schedule"] = [{"step": applied["applied_step"],
                                  "path": applied["path"],
                                  "value": applied["value"]}]
        scripted = World(cfg)
        scripted.run()

        live, script = io.StringIO(), io.StringIO()
        steered.export_series(live)
        scripted.export_series(script)
        assert live.getvalue() == script.getvalue()


@pytest.fixture()
def service():
    runner = SimulationRunner(World(tiny_cfg()), start_paused=True).start()
    client = TestClient(build_app(runner))
    try:
        yield client, runner
    finally:
        runner.submit("stop")
        runner.join(5)


class TestHttpService:
    def test_index_lists_endpoints(self, service):
        client, _ = service
        body = client.get("/").json()
        assert "/stream (websocket)" in body["endpoints"]

    def test_state(self, service):
        client, _ = service
        body = client.get("/state").json()
        assert body["run_state"] == "paused"
        assert body["step"] == 0
        assert body["summary"]["banks"][0]["bank"] == "first"

    def test_config_roundtrip(self, service):
        client, runner = service
        assert client.get("/config").json() == runner.world.config

    def test_schemas_served(self, service):
        client, _ = service
        assert client.get("/schema/config").json()["$id"] == "banksim/config/v1"
        assert client.get("/schema/messages").json()["$id"] == "banksim/control/v1"

    def test_series_json_and_csv_agree(self, service):
        client, runner = service
        body = client.get("/series").json()
        assert body["columns"] == runner.world.csv_columns()
        assert [r["step"] for r in body["rows"]] == [0]
        csv_text = client.get("/series", params={"format": "csv"}).text
        buf = io.StringIO()
        runner.world.export_series(buf)
        assert csv_text == buf.getvalue()
        assert client.get("/series", params={"format": "xml"}).status_code == 400

    def test_command_schema_enforced(self, service):
        client, _ = service
        r = client.post("/command", json={"command": "set_param"})
        assert r.status_code == 422
        r = client.post("/command", json={"command": "warp"})
        assert r.status_code == 422

    def test_command_wait_resolves(self, service):
        client, runner = service
        r = client.post("/command", params={"wait": 5},
                        json={"command": "snapshot"})
        body = r.json()
        assert body["status"] == "done"
        assert body["state"]["step"] == 0
        _SERVER_MESSAGE.validate(body)

    def test_queued_command_acks_later(self, service):
        client, runner = service
        r = client.post("/command",
                        json={"command": "set_param", "path": "base_rate",
                              "value": 333})
        assert r.json()["status"] == "queued"
        r = client.post("/command", params={"wait": 5},
                        json={"command": "step", "steps": 1})
        assert r.json()["status"] == "done"
        found = client.get("/events", params={"kind": "param_change"}).json()
        assert found["events"] == [{"step": 1, "kind": "param_change",
                                    "path": "base_rate", "value": 333,
                                    "source": "command"}]
        assert runner.world.cb.base_rate_bp == 333

    def test_events_since_and_total(self, service):
        client, _ = service
        client.post("/command", params={"wait": 5},
                    json={"command": "step", "steps": 2})
        all_events = client.get("/events").json()
        assert all_events["total"] == len(all_events["events"])
        tail = client.get("/events", params={"since": all_events["total"]}).json()
        assert tail["events"] == []
        assert tail["total"] == all_events["total"]

    def test_stream_hello_then_snapshots(self, service):
        client, runner = service
        with client.websocket_connect("/stream") as ws:
            hello = ws.receive_json()
            _SERVER_MESSAGE.validate(hello)
            assert hello["type"] == "hello"
            assert hello["columns"] == runner.world.csv_columns()
            assert [r["step"] for r in hello["history"]] == [0]
            assert hello["run_state"] == "paused"

            client.post("/command", params={"wait": 5},
                        json={"command": "step", "steps": 1})
            seen_snapshot = None
            for _ in range(10):
                message = ws.receive_json()
                _SERVER_MESSAGE.validate(message)
                if message["type"] == "snapshot":
                    seen_snapshot = message
                    break
            assert seen_snapshot is not None
            assert seen_snapshot["row"]["step"] == 1

    def test_stream_detaches_on_disconnect(self, service):
        client, runner = service
        with client.websocket_connect("/stream") as ws:
            ws.receive_json()
            assert runner._listeners
        deadline = 50
        while runner._listeners and deadline:
            deadline -= 1
        assert not runner._listeners


class TestSweepParsing:
    def test_aliases_and_fractions(self):
        assert parse_sweep("R=0.05,100") == ("reserve_requirement", [50, 100])
        assert parse_sweep("north.C=0.08") == ("north.capital_requirement", [80])
        assert parse_sweep("rate=0.05,200") == ("base_rate", [500, 200])
        assert parse_sweep("dividend=25") == ("dividend_rate", [25])

    def test_plain_paths_untouched(self):
        assert parse_sweep("reserve_requirement=100") == (
            "reserve_requirement", [100])

    def test_malformed_spec(self):
        with pytest.raises(ValueError):
            parse_sweep("base_rate")
        with pytest.raises(ValueError):
            parse_sweep("base_rate=")


class TestCli:
    def test_run_packaged_scenario_to_file(self, tmp_path):
        out = tmp_path / "series.csv"
        code = cli_main(["run", "credit_cycle", "--steps", "3",
                         "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("step,base_rate_bp,first_narrow")
        assert len(lines) == 5

    def test_run_config_file_with_overrides(self, tmp_path, capsys):
        path = tmp_path / "run.json"
        path.write_text(json.dumps(tiny_cfg()))
        code = cli_main(["run", str(path), "--steps", "2", "--seed", "5"])
        assert code == 0
        rows = capsys.readouterr().out.splitlines()
        assert len(rows) == 4

    def test_audit_and_inspect_agree(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(tiny_cfg(steps=4)))
        audit = tmp_path / "postings.log"
        assert cli_main(["run", str(cfg_path), "--summary",
                         "--audit", str(audit)]) == 0
        summary = json.loads(capsys.readouterr().out)
        assert cli_main(["inspect", str(audit), "--json"]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["postings"] == summary["postings"]
        assert report["last_step"] == 4
        bank = report["banks"]["first"]
        assert bank["assets"] == bank["liabilities"] + bank["capital"]

    def test_inspect_rejects_truncated_log(self, tmp_path):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(tiny_cfg(steps=2)))
        audit = tmp_path / "postings.log"
        cli_main(["run", str(cfg_path), "--out", str(tmp_path / "s.csv"),
                  "--audit", str(audit)])
        lines = audit.read_text().splitlines(keepends=True)
        del lines[-2]
        audit.write_text("".join(lines))
        assert cli_main(["inspect", str(audit)]) == 3

    def test_batch_csv(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(tiny_cfg()))
        code = cli_main(["batch", str(cfg_path), "--steps", "2",
                         "--sweep", "rate=200,400"])
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].split(",")[:3] == ["cell", "seed", "base_rate"]
        assert len(lines) == 3

    def test_bad_config_exit_code(self, capsys):
        assert cli_main(["run", "nonsense"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_bad_sweep_exit_code(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.json"
        cfg_path.write_text(json.dumps(tiny_cfg()))
        assert cli_main(["batch", str(cfg_path), "--sweep", "rate"]) == 1
