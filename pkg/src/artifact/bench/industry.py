"""Interoperability demo: variable server, topic broker and a TCP robot.

A gateway mirrors a numeric variable from the variable server into an
observable property. An agent surrogate focused on that property reacts to
each change by publishing a sensor reading on a broker topic and commanding a
simulated cargo robot over newline-framed TCP (`MOVE <dest>` answered by
`AT <dest>`). A second surrogate subscribes to the sensor topic and logs the
shared values. The demo log records the causal chain with timestamps.
"""
from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass

from ..endpoints import VarClient, VarStoreServer
from ..endpoints.tcp import LineServer
from ..gateway import GatewayArtifact
from ..messages import ARTIFACT_NAME_HEADER, OPERATION_NAME_HEADER, OpRequest
from ..routefile import RouteFileEntry
from ..routing import SetHeader
from ..runtime import CallbackObserver, operation
from ..values import Value, render_value
from .config import ScenarioConfig
from .scenarios import BenchEnv, _apply_extra_routes

log = logging.getLogger(__name__)

SENSOR_TOPIC = "factory/sensor"
COUNTER_VAR = "counter"


@dataclass(frozen=True)
class DemoEvent:
    ts: float
    kind: str
    detail: Value

    def __str__(self) -> str:
        return f"{self.ts:10.4f}  {self.kind:<16} {render_value(self.detail)}"


class DemoLog:
    """Append-only, thread-safe event log proving the causal chain order."""

    def __init__(self):
        self._lock = threading.Lock()
        self._events: list[DemoEvent] = []
        self._t0 = time.monotonic()

    def add(self, kind: str, detail: Value) -> None:
        with self._lock:
            self._events.append(DemoEvent(time.monotonic() - self._t0, kind, detail))

    def events(self, kind: str | None = None) -> list[DemoEvent]:
        with self._lock:
            if kind is None:
                return list(self._events)
            return [ev for ev in self._events if ev.kind == kind]

    def count(self, kind: str) -> int:
        return len(self.events(kind))

    def wait_for(self, kind: str, count: int, timeout: float) -> bool:
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            if self.count(kind) >= count:
                return True
            time.sleep(0.01)
        return False


class RobotSimulator:
    """Scripted cargo robot speaking a 2-command line protocol."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self.server = LineServer(host, port, handler=self._handle, name="robot-sim")
        self.host, self.port = self.server.host, self.server.port

    def _handle(self, conn, line: str) -> None:
        if line.startswith("MOVE "):
            conn.send_line("AT " + line[5:])
        else:
            conn.send_line("ERR unknown-command")

    def drop_connections(self) -> int:
        return self.server.drop_connections()

    def stop(self) -> None:
        self.server.stop()


class MirrorGateway(GatewayArtifact):
    """Keeps an observable property equal to the subscribed variable."""

    @operation
    def counter_changed(self, value):
        self.update_property(COUNTER_VAR, value)


class RobotGateway(GatewayArtifact):
    """Sends MOVE commands outward; logs AT confirmations inbound."""

    def configure(self, demo_log: DemoLog) -> None:
        self._demo_log = demo_log

    @operation
    def robot_reply(self, line):
        self._demo_log.add("robot_at", line)
        self.update_property("last_reply", line)


class SensorCommander:
    """Agent surrogate: acts on the mirrored counter by publishing a sensor
    reading and commanding the robot, once per observed change."""

    def __init__(self, sensor: GatewayArtifact, robot: RobotGateway, demo_log: DemoLog):
        self._sensor = sensor
        self._robot = robot
        self._log = demo_log
        self.observer = CallbackObserver(on_change=self._on_change)

    def _on_change(self, artifact_id, name, value, version):
        if name != COUNTER_VAR:
            return
        self._log.add("counter_observed", value)
        self._sensor.send_msg(OpRequest("sensor", "reading", [value]))
        destination = f"station-{render_value(value)}"
        self._robot.send_msg(OpRequest("robot", "move", [f"MOVE {destination}"]))
        self._log.add("move_sent", destination)


class SharedValueConsumer:
    """Second surrogate: receives the shared sensor values from the broker."""

    def __init__(self, subscription, demo_log: DemoLog):
        self._sub = subscription
        self._log = demo_log
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name="sensor-consumer", daemon=True)
        self._thread.start()

    def _run(self) -> None:
        while not self._stop.is_set():
            message = self._sub.poll(0.05)
            if message is not None:
                self._log.add("sensor_pub", message.body)

    def stop(self) -> None:
        self._stop.set()
        self._thread.join(timeout=5)


def run_industry_demo(
    cfg: ScenarioConfig,
    writes: int = 5,
    fault_after_write: int | None = None,
    extra_routes: list[RouteFileEntry] | None = None,
) -> DemoLog:
    """Run the full chain for `writes` counter increments and return the log.

    Raises RuntimeError when the servers or routes fail to come up.
    """
    demo_log = DemoLog()
    vars_server = VarStoreServer()
    robot_sim = RobotSimulator()
    env = BenchEnv()
    client: VarClient | None = None
    consumer: SharedValueConsumer | None = None
    try:
        # The variable must exist before the sync route subscribes to it.
        vars_server.write(COUNTER_VAR, 0)

        ws = env.runtime.default_workspace
        mirror = env.runtime.lookup(env.runtime.make_artifact(ws, "plc", MirrorGateway, []))
        sensor = env.runtime.lookup(env.runtime.make_artifact(ws, "sensor", GatewayArtifact, []))
        robot = env.runtime.lookup(env.runtime.make_artifact(ws, "robot", RobotGateway, []))
        robot.configure(demo_log)
        env.gateways.extend([mirror, sensor, robot])

        vars_uri = f"vars:{vars_server.host}:{vars_server.port}/{COUNTER_VAR}?mode=subscribe"
        tcp_uri = f"tcp:{robot_sim.host}:{robot_sim.port}?role=client"
        sync = env.engine.define_route(
            vars_uri,
            [SetHeader(ARTIFACT_NAME_HEADER, "plc"),
             SetHeader(OPERATION_NAME_HEADER, "counter_changed")],
            "artifact:plc",
        )
        publish = env.engine.define_route("artifact:sensor", [], f"mq:{SENSOR_TOPIC}")
        commands = env.engine.define_route("artifact:robot", [], tcp_uri)
        replies = env.engine.define_route(
            tcp_uri,
            [SetHeader(ARTIFACT_NAME_HEADER, "robot"),
             SetHeader(OPERATION_NAME_HEADER, "robot_reply")],
            "artifact:robot",
        )
        mirror.attach_route(sync, engine=env.engine)
        sensor.attach_route(publish, engine=env.engine)
        robot.attach_route(commands, engine=env.engine)
        robot.attach_route(replies)

        tap = env.broker.subscribe(SENSOR_TOPIC)
        consumer = SharedValueConsumer(tap, demo_log)

        try:
            mirror.start_listening()
            sensor.start_listening()
            robot.start_listening()
        except Exception as exc:
            raise RuntimeError(f"demo startup failed: {exc}") from exc
        _apply_extra_routes(env, extra_routes)

        commander = SensorCommander(sensor, robot, demo_log)
        env.runtime.focus(commander.observer, mirror.id)

        client = VarClient(vars_server.host, vars_server.port)
        for i in range(1, writes + 1):
            demo_log.add("write", i)
            client.write(COUNTER_VAR, i)
            if fault_after_write == i:
                if not demo_log.wait_for("robot_at", i, timeout=10.0):
                    raise RuntimeError(f"robot never confirmed move {i}")
                dropped = robot_sim.drop_connections()
                demo_log.add("fault_injected", f"dropped {dropped} connection(s)")
                # continue only once the command link re-established, so the
                # fault lands between exchanges rather than mid-frame
                if not robot_sim.server.wait_for_connection(timeout=10.0):
                    raise RuntimeError("robot link did not re-establish")

        budget = 10.0 + writes * 0.5
        demo_log.wait_for("sensor_pub", writes, timeout=budget)
        demo_log.wait_for("robot_at", writes, timeout=budget)
        return demo_log
    finally:
        if consumer is not None:
            consumer.stop()
        if client is not None:
            client.close()
        env.close()
        vars_server.stop()
        robot_sim.stop()
