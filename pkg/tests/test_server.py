import json

import numpy as np
import pytest
from starlette.testclient import TestClient

from handguide.server import create_app

from conftest import FIXTURES

SINGLE = str(FIXTURES / "single_joint" / "chain.json")


def collect_until(ws, wanted: str, limit: int = 400):
    """Read frames until a message of the wanted type arrives."""
    seen = []
    for _ in range(limit):
        msg = json.loads(ws.receive_text())
        seen.append(msg)
        if msg["type"] == wanted:
            return msg, seen
    raise AssertionError(f"no {wanted!r} message within {limit} frames: "
                         f"{[m['type'] for m in seen[-10:]]}")


def test_websocket_session_round_trip():
    app = create_app(default_chain=SINGLE, rate=50.0)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            chain_msg, _ = collect_until(ws, "chain")
            assert chain_msg["name"] == "single_joint"
            ws.send_text(json.dumps({"type": "mode", "value": "link_guidance"}))
            ws.send_text(json.dumps(
                {"type": "hand", "t": 0.0, "pos": [1.0, 0.0, 0.0], "grasp": True}))
            highlight, _ = collect_until(ws, "highlight")
            assert highlight["link"] == 1
            start_target, _ = collect_until(ws, "target")  # grasp start, no motion yet
            assert start_target["angles"] == [0.0]
            ws.send_text(json.dumps(
                {"type": "hand", "t": 0.05, "pos": [0.995, 0.0998, 0.0],
                 "grasp": True}))
            target, _ = collect_until(ws, "target")
            assert target["angles"][0] == pytest.approx(0.1, abs=1e-3)
            # the clock keeps broadcasting controller states that chase the target
            state, _ = collect_until(ws, "state")
            assert len(state["angles"]) == 1


def test_websocket_reports_protocol_errors():
    app = create_app(default_chain=SINGLE, rate=20.0)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            collect_until(ws, "state")
            ws.send_text("this is not json")
            err, _ = collect_until(ws, "error")
            assert "JSON" in err["msg"]
            ws.send_text(json.dumps({"type": "bogus"}))
            err, _ = collect_until(ws, "error")
            assert "bogus" in err["msg"]


def test_websocket_newline_batched_frames():
    app = create_app(default_chain=SINGLE, rate=20.0)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            collect_until(ws, "chain")
            batch = "\n".join([
                json.dumps({"type": "mode", "value": "link_guidance"}),
                json.dumps({"type": "hand", "t": 0.0, "pos": [1.0, 0, 0],
                            "grasp": False}),
            ])
            ws.send_text(batch)
            highlight, _ = collect_until(ws, "highlight")
            assert highlight["link"] == 1
