"""Endpoint components registered by URI scheme.

`standard_components` wires the full set for one runtime: "artifact:" (gateway
queues), "mq:" (in-process topic broker), "tcp:" (newline-framed TCP),
"vars:" (variable-server client) and "timer:" (periodic source).
"""
from __future__ import annotations

from ..gateway import ArtifactComponent, gateway_channels
from ..routing import ComponentRegistry
from ..runtime import Runtime
from .broker import MqComponent, Subscription, TopicBroker
from .tcp import LineServer, TcpComponent, tcp_connect
from .timer import TimerComponent
from .varstore import VarClient, VarsComponent, VarStoreServer, VarSubscription

__all__ = [
    "LineServer",
    "MqComponent",
    "Subscription",
    "TcpComponent",
    "TimerComponent",
    "TopicBroker",
    "VarClient",
    "VarsComponent",
    "VarStoreServer",
    "VarSubscription",
    "standard_components",
    "tcp_connect",
]


def standard_components(runtime: Runtime, broker: TopicBroker | None = None) -> ComponentRegistry:
    """Component registry with every built-in scheme registered."""
    registry = ComponentRegistry()
    registry.register("artifact", ArtifactComponent(gateway_channels(runtime)))
    registry.register("mq", MqComponent(broker if broker is not None else TopicBroker()))
    registry.register("tcp", TcpComponent())
    registry.register("vars", VarsComponent())
    registry.register("timer", TimerComponent())
    return registry
