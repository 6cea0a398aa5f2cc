"""Simulated industrial variable server: named variables over line-framed TCP.

Wire protocol (one request or response per LF-terminated line):

    request                  response
    READ <name>              VALUE <name> <version> <value>  |  ERR <reason>
    WRITE <name> <value>     OK  |  ERR <reason>
    SUB <name>               OK  |  ERR <reason>

After a successful SUB the server pushes an unsolicited
``VALUE <name> <version> <value>`` line for every committed write, in version
order. Writes auto-create variables at version 0; reads and subscriptions on
unknown names fail. Values are rendered as canonical wire text and parsed
back as int, then float, then text.

The "vars:" endpoint scheme is `vars:<host>:<port>/<name>?mode=read|subscribe|write`.
"""
from __future__ import annotations

import logging
import threading
import time

from ..errors import UnknownVariableError, VarStoreProtocolError
from ..messages import Message
from ..routing import Component, Consumer, MessageQueue, Producer, Route
from ..uri import EndpointUri
from ..values import Value, render_value
from .tcp import LineServer, ServerConnection, shutdown_socket, tcp_connect

log = logging.getLogger(__name__)

_WAKE = object()

VAR_NAME_HEADER = "var.name"
VAR_VERSION_HEADER = "var.version"


def parse_wire_value(text: str) -> Value:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


class _Var:
    __slots__ = ("value", "version")

    def __init__(self, value: Value, version: int):
        self.value = value
        self.version = version


class VarStoreServer:
    """In-memory variable store served over the wire protocol above."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._vars: dict[str, _Var] = {}
        self._subs: dict[str, list[ServerConnection]] = {}
        self._lock = threading.Lock()
        self.server = LineServer(host, port, handler=self._handle, name="varstore")
        self.host, self.port = self.server.host, self.server.port

    # -- local API (used by tests and in-process writers) ----------------------

    def write(self, name: str, value: Value) -> int:
        """Commit a write and push it to subscribers; returns the new version."""
        with self._lock:
            var = self._vars.get(name)
            if var is None:
                var = _Var(value, 0)
                self._vars[name] = var
            else:
                var.value = value
                var.version += 1
            version = var.version
            subscribers = list(self._subs.get(name, ()))
            line = f"VALUE {name} {version} {render_value(value)}"
            for conn in subscribers:
                try:
                    conn.send_line(line)
                except Exception:
                    self._drop_sub(name, conn)
        return version

    def read(self, name: str) -> tuple[Value, int]:
        with self._lock:
            var = self._vars.get(name)
            if var is None:
                raise UnknownVariableError(name)
            return var.value, var.version

    def _drop_sub(self, name: str, conn: ServerConnection) -> None:
        subs = self._subs.get(name)
        if subs and conn in subs:
            subs.remove(conn)

    # -- protocol ---------------------------------------------------------------

    def _handle(self, conn: ServerConnection, line: str) -> None:
        parts = line.split(" ", 2)
        command = parts[0] if parts else ""
        try:
            if command == "READ" and len(parts) == 2:
                try:
                    value, version = self.read(parts[1])
                except UnknownVariableError:
                    conn.send_line(f"ERR unknown-variable {parts[1]}")
                    return
                conn.send_line(f"VALUE {parts[1]} {version} {render_value(value)}")
            elif command == "WRITE" and len(parts) == 3:
                self.write(parts[1], parse_wire_value(parts[2]))
                conn.send_line("OK")
            elif command == "SUB" and len(parts) == 2:
                name = parts[1]
                with self._lock:
                    if name not in self._vars:
                        conn.send_line(f"ERR unknown-variable {name}")
                        return
                    self._subs.setdefault(name, []).append(conn)
                conn.send_line("OK")
            else:
                conn.send_line(f"ERR bad-request {command or '<empty>'}")
        except Exception:
            log.exception("varstore request failed: %r", line)

    def stop(self) -> None:
        self.server.stop()


class VarSubscription:
    """Ordered stream of (value, version) pushes for one variable."""

    def __init__(self, name: str):
        self.name = name
        self.queue: MessageQueue = MessageQueue(1024, f"vars-sub:{name}")

    def poll(self, timeout: float = 0.0):
        item = self.queue.get(timeout=timeout)
        return item if isinstance(item, tuple) else None

    def wake(self) -> None:
        self.queue.force_put(_WAKE)


class VarClient:
    """Protocol client; one outstanding request at a time.

    Subscribed names should not also be read through the same client: READ
    responses and subscription pushes share the VALUE line format.
    """

    def __init__(self, host: str, port: int, timeout: float = 5.0):
        self._timeout = timeout
        self._sock = tcp_connect(host, port, timeout=timeout)
        self._request_lock = threading.Lock()
        self._state_lock = threading.Lock()
        self._responses: MessageQueue = MessageQueue(64, "vars-client-responses")
        self._subs: dict[str, list[VarSubscription]] = {}
        self._pending_read: str | None = None
        self._closed = False
        self._reader = threading.Thread(
            target=self._read_loop, name=f"vars-client-{host}:{port}", daemon=True
        )
        self._reader.start()

    def _read_loop(self) -> None:
        buffer = b""
        try:
            while not self._closed:
                chunk = self._sock.recv(4096)
                if not chunk:
                    break
                buffer += chunk
                while b"\n" in buffer:
                    raw, buffer = buffer.split(b"\n", 1)
                    self._on_line(raw.rstrip(b"\r").decode("utf-8", errors="replace"))
        except OSError:
            pass
        finally:
            self._responses.close()

    def _on_line(self, line: str) -> None:
        if line.startswith("VALUE "):
            parts = line.split(" ", 3)
            if len(parts) != 4:
                log.warning("malformed VALUE line: %r", line)
                return
            _, name, version, raw = parts
            record = (name, parse_wire_value(raw), int(version))
            with self._state_lock:
                solicited = self._pending_read == name
                subs = list(self._subs.get(name, ()))
            if solicited:
                self._responses.put(record)
            else:
                for sub in subs:
                    sub.queue.put((record[1], record[2]))
        else:
            self._responses.put(line)

    def _request(self, line: str, read_name: str | None = None):
        with self._request_lock:
            with self._state_lock:
                self._pending_read = read_name
            try:
                self._sock.sendall(line.encode("utf-8") + b"\n")
                response = self._responses.get(timeout=self._timeout)
            finally:
                with self._state_lock:
                    self._pending_read = None
            if response is None:
                raise VarStoreProtocolError(f"no response to {line!r}")
            return response

    def read(self, name: str) -> tuple[Value, int]:
        response = self._request(f"READ {name}", read_name=name)
        if isinstance(response, tuple):
            return response[1], response[2]
        if "unknown-variable" in str(response):
            raise UnknownVariableError(name)
        raise VarStoreProtocolError(f"unexpected response {response!r}")

    def write(self, name: str, value: Value) -> None:
        response = self._request(f"WRITE {name} {render_value(value)}")
        if response != "OK":
            raise VarStoreProtocolError(f"write rejected: {response!r}")

    def subscribe(self, name: str) -> VarSubscription:
        sub = VarSubscription(name)
        with self._state_lock:
            self._subs.setdefault(name, []).append(sub)
        try:
            response = self._request(f"SUB {name}")
        except Exception:
            self._drop(sub)
            raise
        if response != "OK":
            self._drop(sub)
            if "unknown-variable" in str(response):
                raise UnknownVariableError(name)
            raise VarStoreProtocolError(f"subscribe rejected: {response!r}")
        return sub

    def _drop(self, sub: VarSubscription) -> None:
        with self._state_lock:
            subs = self._subs.get(sub.name, [])
            if sub in subs:
                subs.remove(sub)

    def close(self) -> None:
        self._closed = True
        shutdown_socket(self._sock)


# ---------------------------------------------------------------------------
# "vars:" endpoint component


def _split_var_path(uri: EndpointUri) -> tuple[str, int, str]:
    authority, sep, name = uri.path.partition("/")
    if not sep or not name:
        raise ValueError(f"vars endpoint needs <host>:<port>/<name>, got {uri.path!r}")
    host, sep, port = authority.rpartition(":")
    if not sep or not host:
        raise ValueError(f"vars endpoint needs host:port, got {authority!r}")
    return host, int(port), name


class _VarSubscribeConsumer(Consumer):
    def __init__(self, client: VarClient, sub: VarSubscription, name: str):
        self._client = client
        self._sub = sub
        self._name = name

    def poll(self, timeout: float) -> Message | None:
        record = self._sub.poll(timeout)
        if record is None:
            return None
        value, version = record
        return Message(
            headers={VAR_NAME_HEADER: self._name, VAR_VERSION_HEADER: version},
            body=[value],
        )

    def wake(self) -> None:
        self._sub.wake()

    def close(self) -> None:
        self._client.close()


class _VarReadConsumer(Consumer):
    """Polls the current value and emits it once per version change."""

    def __init__(self, client: VarClient, name: str):
        self._client = client
        self._name = name
        self._last_version: int | None = None
        self._wake = threading.Event()

    def poll(self, timeout: float) -> Message | None:
        deadline = time.monotonic() + timeout
        while True:
            try:
                value, version = self._client.read(self._name)
            except UnknownVariableError:
                value, version = None, None
            if version is not None and version != self._last_version:
                self._last_version = version
                return Message(
                    headers={VAR_NAME_HEADER: self._name, VAR_VERSION_HEADER: version},
                    body=[value],
                )
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                return None
            self._wake.wait(min(remaining, 0.02))
            self._wake.clear()

    def wake(self) -> None:
        self._wake.set()

    def close(self) -> None:
        self._client.close()


class _VarWriteProducer(Producer):
    def __init__(self, client: VarClient, name: str):
        self._client = client
        self._name = name

    def send(self, message: Message) -> None:
        body = message.body
        if isinstance(body, list) and len(body) == 1:
            value = body[0]
        else:
            value = body
        self._client.write(self._name, value)

    def close(self) -> None:
        self._client.close()


class VarsComponent(Component):
    def validate(self, uri: EndpointUri, side: str) -> None:
        _split_var_path(uri)
        mode = uri.param("mode", "subscribe" if side == "source" else "write")
        if side == "source" and mode not in ("read", "subscribe"):
            raise ValueError(f"vars source mode must be read or subscribe, got {mode!r}")
        if side == "sink" and mode != "write":
            raise ValueError(f"vars sink mode must be write, got {mode!r}")

    def create_consumer(self, uri: EndpointUri, route: Route) -> Consumer:
        host, port, name = _split_var_path(uri)
        mode = uri.param("mode", "subscribe")
        client = VarClient(host, port)
        if mode == "read":
            return _VarReadConsumer(client, name)
        sub = client.subscribe(name)
        return _VarSubscribeConsumer(client, sub, name)

    def create_producer(self, uri: EndpointUri, route: Route) -> Producer:
        host, port, name = _split_var_path(uri)
        return _VarWriteProducer(VarClient(host, port), name)
