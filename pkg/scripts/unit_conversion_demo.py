#!/usr/bin/env python3
"""Walk through the two temperature-conversion routes.

A gateway artifact "s1" serves channel "hub". One route converts its outgoing
readings from Celsius to Fahrenheit text and publishes them to a broker
topic; the mirror route tags inbound topic messages with the target artifact
and operation, converts back, and invokes `temp` on the gateway.
"""
from __future__ import annotations

from artifact import (
    ARTIFACT_NAME_HEADER,
    OPERATION_NAME_HEADER,
    GatewayArtifact,
    Message,
    OpRequest,
    SetHeader,
    Transform,
    operation,
    parse_expr,
)
from artifact.bench.scenarios import BenchEnv


class TempSensor(GatewayArtifact):
    @operation
    def temp(self, value):
        self.update_property("temp", value)
        print(f"  temp() invoked with {value!r}")


def main() -> None:
    env = BenchEnv()
    try:
        aid = env.runtime.make_artifact("main", "s1", TempSensor, ["hub"])
        sensor = env.runtime.lookup(aid)
        env.gateways.append(sensor)

        outbound = env.engine.define_route(
            "artifact:hub",
            [Transform(parse_expr("(request.body[0] * 1.8 + 32).toString()"))],
            "mq:temps",
        )
        inbound = env.engine.define_route(
            "mq:temps",
            [
                SetHeader(ARTIFACT_NAME_HEADER, "s1"),
                SetHeader(OPERATION_NAME_HEADER, "temp"),
                Transform(parse_expr("[ (request.body[0].toString() - 32) / 1.8 ]")),
            ],
            "artifact:hub",
        )
        sensor.attach_route(outbound, engine=env.engine)
        sensor.attach_route(inbound)
        tap = env.broker.subscribe("temps")
        sensor.start_listening()

        print("sending a 100.0 degC reading from s1 ...")
        sensor.send_msg(OpRequest("s1", "temp", [100.0]))
        published = tap.poll(2.0)
        print(f"  broker topic received payload {published.body!r}")

        print("injecting '212' from the broker side ...")
        env.broker.publish("temps", Message(body="212"))
        import time

        time.sleep(0.2)
        print(f"  property temp is now {sensor.property_value('temp')!r}")
    finally:
        env.close()


if __name__ == "__main__":
    main()
