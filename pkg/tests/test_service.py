"""Session service: wire round trips, session isolation, error surfaces."""

from __future__ import annotations

import json
import socket

import pytest
from hypothesis import given
from hypothesis import strategies as st

from execgym.envs import make_env, resolve_backend
from execgym.errors import ProtocolError
from execgym.service.protocol import (
    PROTOCOL_VERSION,
    SessionMessage,
    decode_message,
    encode_message,
)
from execgym.service.server import SessionService


@pytest.fixture(scope="module")
def service():
    backend = resolve_backend("local")

    def builder(env_name, params):
        return make_env(env_name, backend=backend, exec_timeout=20.0)

    svc = SessionService(builder, port=0, http_port=0, max_sessions=4, idle_timeout=600.0)
    svc.start()
    yield svc
    svc.stop()


def send(service, *docs):
    host, port = service.address
    out = []
    with socket.create_connection((host, port), timeout=60) as sock:
        f = sock.makefile("rwb")
        for doc in docs:
            f.write((json.dumps(doc) + "\n").encode())
            f.flush()
            out.append(json.loads(f.readline()))
    return out if len(out) > 1 else out[0]


def msg(op, session_id=None, **params):
    doc = {"v": PROTOCOL_VERSION, "op": op, "params": params}
    if session_id:
        doc["session_id"] = session_id
    return doc


class TestWireCodec:
    @given(
        st.sampled_from(["create", "reset", "step", "close", "info"]),
        st.none() | st.text(min_size=1, max_size=16, alphabet="abcdef0123456789"),
        st.dictionaries(st.text(min_size=1, max_size=8), st.integers() | st.text(max_size=8), max_size=4),
    )
    def test_round_trip_identity(self, op, session_id, params):
        message = SessionMessage(op=op, session_id=session_id, params=params)
        assert decode_message(encode_message(message)) == message

    def test_unknown_fields_ignored(self):
        line = json.dumps({"v": "1.0", "op": "info", "params": {}, "future_field": 1})
        assert decode_message(line).op == "info"

    def test_missing_version_rejected(self):
        with pytest.raises(ProtocolError):
            decode_message(json.dumps({"op": "info", "params": {}}))

    def test_unknown_major_rejected(self):
        with pytest.raises(ProtocolError):
            decode_message(json.dumps({"v": "2.0", "op": "info", "params": {}}))

    def test_truncated_frame_rejected(self):
        with pytest.raises(ProtocolError):
            decode_message('{"v": "1.0", "op": "in')


class TestSessions:
    def test_create_step_close_over_tcp(self, service):
        created = send(service, msg("create", env="sql", index=0))
        assert created["ok"] is True
        sid = created["result"]["session_id"]
        assert created["result"]["query"]

        stepped = send(service, msg("step", sid, action="SELECT count(*) FROM channel"))
        assert stepped["ok"] is True
        assert stepped["result"]["observation"]["text"] == "[(5,)]"
        assert stepped["result"]["done"] is False

        submitted = send(service, msg("step", sid, action="submit"))
        assert submitted["result"]["done"] is True
        assert submitted["result"]["reward"] == 1.0

        closed = send(service, msg("close", sid))
        assert closed["result"]["closed"] is True

    def test_bogus_session_keeps_connection_alive(self, service):
        responses = send(
            service,
            msg("step", "deadbeef", action="echo hi"),
            msg("create", env="sql", index=0),
        )
        assert responses[0]["ok"] is False
        assert responses[0]["error"]["type"] == "session_not_found"
        assert responses[1]["ok"] is True
        send(service, msg("close", responses[1]["result"]["session_id"]))

    def test_step_after_close_is_session_not_found(self, service):
        created = send(service, msg("create", env="sql", index=0))
        sid = created["result"]["session_id"]
        send(service, msg("close", sid))
        response = send(service, msg("step", sid, action="SELECT 1"))
        assert response["error"]["type"] == "session_not_found"

    def test_malformed_line_is_protocol_error(self, service):
        host, port = service.address
        with socket.create_connection((host, port), timeout=30) as sock:
            f = sock.makefile("rwb")
            f.write(b"this is not json\n")
            f.flush()
            response = json.loads(f.readline())
            assert response["error"]["type"] == "protocol_error"
            # connection survives
            f.write((json.dumps(msg("create", env="sql", index=0)) + "\n").encode())
            f.flush()
            created = json.loads(f.readline())
            assert created["ok"] is True
        send(service, msg("close", created["result"]["session_id"]))

    def test_session_isolation(self, service):
        a = send(service, msg("create", env="sql", index=0))["result"]["session_id"]
        b = send(service, msg("create", env="sql", index=1))["result"]["session_id"]
        send(service, msg("step", a, action="SELECT count(*) FROM channel"))
        response = send(service, msg("step", b, action="SELECT name FROM channel ORDER BY name"))
        # session b sees only its own statement's output
        assert "Harbor TV" in response["result"]["observation"]["text"]
        info_a = send(service, msg("info", a))
        assert info_a["result"]["done"] is False
        send(service, msg("close", a))
        send(service, msg("close", b))

    def test_reset_out_of_range_is_bounds_error(self, service):
        created = send(service, msg("create", env="sql"))
        sid = created["result"]["session_id"]
        response = send(service, msg("reset", sid, index=999))
        assert response["error"]["type"] == "bounds_error"
        send(service, msg("close", sid))

    def test_http_endpoint_carries_one_message_per_request(self, service):
        import httpx

        host, port = service.http_address
        with httpx.Client(base_url=f"http://{host}:{port}", timeout=60) as client:
            created = client.post("/", json=msg("create", env="sql", index=0)).json()
            assert created["ok"] is True
            sid = created["result"]["session_id"]
            stepped = client.post("/", json=msg("step", sid, action="SELECT 1")).json()
            assert stepped["result"]["observation"]["text"] == "[(1,)]"
            client.post("/", json=msg("close", sid))

    def test_session_limit_rejected_with_typed_error(self, service):
        sids = [
            send(service, msg("create", env="sql"))["result"]["session_id"] for _ in range(4)
        ]
        rejected = send(service, msg("create", env="sql"))
        assert rejected["ok"] is False
        assert rejected["error"]["type"] == "infrastructure_error"
        for sid in sids:
            send(service, msg("close", sid))
