from __future__ import annotations

import socket

import pytest

from artifact import ARTIFACT_NAME_HEADER, OPERATION_NAME_HEADER, GatewayArtifact, SetHeader, operation
from artifact.endpoints import VarClient, VarStoreServer
from artifact.errors import UnknownVariableError

from conftest import wait_until


@pytest.fixture
def store():
    server = VarStoreServer()
    yield server
    server.stop()


class _WireClient:
    """Raw socket client asserting the exact bytes of the protocol."""

    def __init__(self, server: VarStoreServer):
        self.sock = socket.create_connection((server.host, server.port), timeout=5)
        self.sock.settimeout(5)
        self.buffer = b""

    def send(self, line: str) -> None:
        self.sock.sendall(line.encode() + b"\n")

    def recv_line(self) -> bytes:
        while b"\n" not in self.buffer:
            self.buffer += self.sock.recv(256)
        line, self.buffer = self.buffer.split(b"\n", 1)
        return line

    def close(self) -> None:
        self.sock.close()


def test_wire_protocol_is_bit_exact(store):
    wire = _WireClient(store)
    try:
        wire.send("READ counter")
        assert wire.recv_line() == b"ERR unknown-variable counter"

        wire.send("WRITE counter 5")
        assert wire.recv_line() == b"OK"

        wire.send("READ counter")
        assert wire.recv_line() == b"VALUE counter 0 5"

        wire.send("WRITE counter 6")
        assert wire.recv_line() == b"OK"
        wire.send("READ counter")
        assert wire.recv_line() == b"VALUE counter 1 6"

        wire.send("SUB counter")
        assert wire.recv_line() == b"OK"
        store.write("counter", 7)
        assert wire.recv_line() == b"VALUE counter 2 7"

        wire.send("SUB ghost")
        assert wire.recv_line() == b"ERR unknown-variable ghost"

        wire.send("NOPE")
        assert wire.recv_line() == b"ERR bad-request NOPE"
    finally:
        wire.close()


def test_client_read_write_subscribe(store):
    client = VarClient(store.host, store.port)
    try:
        with pytest.raises(UnknownVariableError):
            client.read("nosuch")
        client.write("speed", 1.5)
        assert client.read("speed") == (1.5, 0)
        client.write("speed", "fast mode")
        assert client.read("speed") == ("fast mode", 1)

        client.write("rpm", 0)
        sub = client.subscribe("rpm")
        for i in range(1, 6):
            store.write("rpm", i)
        got = [sub.poll(2.0) for _ in range(5)]
        assert got == [(1, 1), (2, 2), (3, 3), (4, 4), (5, 5)]
    finally:
        client.close()


def test_subscribe_unknown_variable(store):
    client = VarClient(store.host, store.port)
    try:
        with pytest.raises(UnknownVariableError):
            client.subscribe("ghost")
    finally:
        client.close()


def test_subscription_stream_equals_write_log(store):
    client = VarClient(store.host, store.port)
    try:
        client.write("x", 0)
        sub = client.subscribe("x")
        writes = [3, 1, 4, 1, 5, 9, 2, 6]
        for value in writes:
            store.write("x", value)
        stream = [sub.poll(2.0) for _ in range(len(writes))]
        assert [value for value, _ in stream] == writes
        assert [version for _, version in stream] == list(range(1, len(writes) + 1))
    finally:
        client.close()


class _MirrorGateway(GatewayArtifact):
    @operation
    def var_changed(self, value):
        self.update_property("mirrored", value)


def test_sync_route_mirrors_variable_into_property(env, store):
    store.write("counter", 0)
    aid = env.runtime.make_artifact("main", "mirror", _MirrorGateway, [])
    gateway = env.runtime.lookup(aid)
    env.gateways.append(gateway)
    route = env.engine.define_route(
        f"vars:{store.host}:{store.port}/counter?mode=subscribe",
        [SetHeader(ARTIFACT_NAME_HEADER, "mirror"), SetHeader(OPERATION_NAME_HEADER, "var_changed")],
        "artifact:mirror",
    )
    gateway.attach_route(route, engine=env.engine)
    gateway.start_listening()

    store.write("counter", 42)
    assert wait_until(lambda: gateway.property_value("mirrored", None) == 42)
    store.write("counter", 43)
    assert wait_until(lambda: gateway.property_value("mirrored", None) == 43)


def test_read_mode_consumer_emits_on_version_change(env, store):
    store.write("level", 10)
    route = env.engine.define_route(
        f"vars:{store.host}:{store.port}/level?mode=read", [], "mq:levels"
    )
    tap = env.broker.subscribe("levels")
    env.engine.start_route(route)
    first = tap.poll(2.0)
    assert first is not None and first.body == "10"
    assert tap.poll(0.2) is None  # same version is not re-emitted
    store.write("level", 11)
    second = tap.poll(2.0)
    assert second is not None and second.body == "11"
