import json
import time

import numpy as np
import pytest

pytest.importorskip("httpx")
from fastapi.testclient import TestClient

from magworm.scenario import parse_scenario
from magworm.teleop import create_app, replay_hash


@pytest.fixture()
def client(tmp_path):
    scenario = parse_scenario("tank-teleop")
    app = create_app(scenario, rt_factor=0.2,
                     log_path=str(tmp_path / "command_log.json"))
    with TestClient(app) as c:
        c.app_state_scenario = scenario
        yield c


def _recv_until(ws, kind, limit=200):
    for _ in range(limit):
        msg = json.loads(ws.receive_text())
        if msg["type"] == kind:
            return msg
    raise AssertionError(f"no {kind} message within {limit} messages")


def test_handshake_and_idle_paused(client):
    with client.websocket_connect("/ws") as ws:
        scene = json.loads(ws.receive_text())
        assert scene["type"] == "scene"
        assert scene["id"] == "tank"
        assert scene["sdf_mesh"]
        role = json.loads(ws.receive_text())
        assert role == {"type": "role", "controlling": True}
        frame = _recv_until(ws, "frame")
        assert frame["paused"] is True  # engine idles paused with no resume yet
        assert frame["t"] == 0.0


def test_command_ack_and_latency_within_two_frames(client):
    with client.websocket_connect("/ws") as ws:
        _recv_until(ws, "role")
        ws.send_text(json.dumps({"type": "resume", "seq": 1}))
        _recv_until(ws, "ack")
        target = [0.005, 0.002, -0.017]
        ws.send_text(json.dumps({"type": "set_magnet", "seq": 2,
                                 "pos": target, "axis": [-1, 0, 0]}))
        ack = _recv_until(ws, "ack")
        assert ack["seq"] == 2
        frames_after = 0
        deadline = time.time() + 5.0
        while time.time() < deadline:
            msg = json.loads(ws.receive_text())
            if msg["type"] != "frame":
                continue
            frames_after += 1
            if np.allclose(msg["magnet"]["pos"], target):
                break
        else:
            raise AssertionError("pose never reflected")
        assert frames_after <= 2


def test_malformed_command_keeps_connection(client):
    with client.websocket_connect("/ws") as ws:
        _recv_until(ws, "role")
        ws.send_text("{broken json")
        err = _recv_until(ws, "err")
        assert "malformed" in err["msg"]
        ws.send_text(json.dumps({"type": "warp", "seq": 9}))
        err = _recv_until(ws, "err")
        assert "unknown command" in err["msg"]
        # still alive
        ws.send_text(json.dumps({"type": "pause", "seq": 10}))
        ack = _recv_until(ws, "ack")
        assert ack["seq"] == 10


def test_second_client_is_read_only(client):
    with client.websocket_connect("/ws") as ws1:
        _recv_until(ws1, "role")
        with client.websocket_connect("/ws") as ws2:
            scene = json.loads(ws2.receive_text())
            assert scene["type"] == "scene"
            role = json.loads(ws2.receive_text())
            assert role["controlling"] is False
            ws2.send_text(json.dumps({"type": "set_magnet", "seq": 1,
                                      "pos": [0, 0, -0.017], "axis": [-1, 0, 0]}))
            err = _recv_until(ws2, "err")
            assert "read-only" in err["msg"]


def test_record_replay_roundtrip(client, tmp_path):
    session = client.app.state.session
    with client.websocket_connect("/ws") as ws:
        _recv_until(ws, "role")
        ws.send_text(json.dumps({"type": "record", "seq": 1, "on": True}))
        _recv_until(ws, "ack")
        ws.send_text(json.dumps({"type": "resume", "seq": 2}))
        _recv_until(ws, "ack")
        time.sleep(0.35)
        ws.send_text(json.dumps({"type": "set_magnet", "seq": 3,
                                 "pos": [0.004, 0.001, -0.017], "axis": [-1, 0, 0]}))
        _recv_until(ws, "ack")
        time.sleep(0.35)
        ws.send_text(json.dumps({"type": "set_magnet", "seq": 4,
                                 "pos": [0.008, -0.002, -0.017], "axis": [0, -1, 0]}))
        _recv_until(ws, "ack")
        time.sleep(0.3)
        ws.send_text(json.dumps({"type": "pause", "seq": 5}))
        _recv_until(ws, "ack")
        ws.send_text(json.dumps({"type": "record", "seq": 6, "on": False}))
        _recv_until(ws, "ack")
    deadline = time.time() + 3.0
    while session.last_log is None and time.time() < deadline:
        time.sleep(0.02)
    assert session.last_log is not None
    log = client.get("/command-log").json()
    assert log["final_step"] > 0
    assert len(log["commands"]) == 2
    assert all(c["step"] <= log["final_step"] for c in log["commands"])

    resp = client.post("/replay", json=log)
    assert resp.status_code == 200, resp.text
    assert resp.json()["hash"] == log["hash"]


def test_replay_rejects_wrong_scenario(client):
    bad = {"scenario": "some-other", "final_step": 10, "commands": [],
           "record_stride": 1000}
    resp = client.post("/replay", json=bad)
    assert resp.status_code == 400


def test_replay_hash_deterministic_standalone(tmp_path):
    scenario = parse_scenario("tank-teleop")
    log = {"scenario": "tank-teleop", "record_stride": 1000,
           "final_step": 3000,
           "commands": [{"step": 500, "position": [0.004, 0.0, -0.017],
                         "axis": [-1, 0, 0]}]}
    h1 = replay_hash(scenario, log)
    h2 = replay_hash(scenario, log)
    assert h1 == h2 and len(h1) == 64


def test_frame_timestamps_monotone(client):
    with client.websocket_connect("/ws") as ws:
        _recv_until(ws, "role")
        ws.send_text(json.dumps({"type": "resume", "seq": 1}))
        times = []
        deadline = time.time() + 3.0
        while len(times) < 8 and time.time() < deadline:
            msg = json.loads(ws.receive_text())
            if msg["type"] == "frame":
                times.append(msg["t"])
        assert len(times) >= 2
        assert all(t2 >= t1 for t1, t2 in zip(times, times[1:]))
