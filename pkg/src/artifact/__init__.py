"""Artifact environment runtime bridged to protocol endpoints by routes.

Passive artifacts live in workspaces and expose atomically executed
operations, versioned observable properties and signals. Gateway artifacts
own message queues and routes; an EIP-style engine moves messages between
endpoint components (in-process topic broker, newline-framed TCP, variable
server, timers) with inline header/body transformations.
"""
from .errors import ArtifactError
from .exprlang import eval_expr, format_expr, parse_expr
from .gateway import (
    ArtifactComponent,
    ChannelRegistry,
    DeadLettered,
    DispatchOutcome,
    Forwarded,
    GatewayArtifact,
    InvokedSelf,
    gateway_channels,
)
from .messages import ARTIFACT_NAME_HEADER, OPERATION_NAME_HEADER, Message, OpRequest
from .routing import (
    ComponentRegistry,
    DeadLetter,
    DeadLetterQueue,
    MessageQueue,
    Processor,
    Route,
    RouteStatus,
    RoutingEngine,
    SetHeader,
    Transform,
    process,
)
from .runtime import (
    Artifact,
    ArtifactId,
    CallbackObserver,
    LinkRef,
    ObservableProperty,
    OpResult,
    Runtime,
    Signal,
    WorkspaceId,
    operation,
)
from .uri import EndpointUri, format_endpoint_uri, parse_endpoint_uri
from .values import Value, render_value

__all__ = [
    "ARTIFACT_NAME_HEADER",
    "OPERATION_NAME_HEADER",
    "Artifact",
    "ArtifactComponent",
    "ArtifactError",
    "ArtifactId",
    "CallbackObserver",
    "ChannelRegistry",
    "ComponentRegistry",
    "DeadLetter",
    "DeadLetterQueue",
    "DeadLettered",
    "DispatchOutcome",
    "EndpointUri",
    "Forwarded",
    "GatewayArtifact",
    "InvokedSelf",
    "LinkRef",
    "Message",
    "MessageQueue",
    "ObservableProperty",
    "OpRequest",
    "OpResult",
    "Processor",
    "Route",
    "RouteStatus",
    "RoutingEngine",
    "Runtime",
    "SetHeader",
    "Signal",
    "Transform",
    "Value",
    "WorkspaceId",
    "eval_expr",
    "format_endpoint_uri",
    "format_expr",
    "gateway_channels",
    "operation",
    "parse_endpoint_uri",
    "parse_expr",
    "process",
    "render_value",
]

__version__ = "0.1.0"
