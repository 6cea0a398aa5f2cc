"""Timer source: emits one message per period with a contiguous tick index."""
from __future__ import annotations

import threading
import time

from ..errors import UnsupportedEndpointRoleError
from ..messages import Message
from ..routing import Component, Consumer, Route
from ..uri import EndpointUri


class _TimerConsumer(Consumer):
    def __init__(self, name: str, period_s: float):
        self._name = name
        self._period = period_s
        self._index = 0
        self._next_due: float | None = None
        self._wake = threading.Event()

    def poll(self, timeout: float) -> Message | None:
        if self._next_due is None:
            self._next_due = time.monotonic()
        deadline = time.monotonic() + timeout
        while True:
            now = time.monotonic()
            if now >= self._next_due:
                message = Message(
                    headers={"timer.name": self._name, "timer.tick": self._index},
                    body=[self._index],
                )
                self._index += 1
                self._next_due += self._period
                return message
            if now >= deadline:
                return None
            wait = min(self._next_due, deadline) - now
            if wait > 0:
                self._wake.wait(wait)
                self._wake.clear()

    def wake(self) -> None:
        self._wake.set()


class TimerComponent(Component):
    def validate(self, uri: EndpointUri, side: str) -> None:
        if side == "sink":
            raise UnsupportedEndpointRoleError("timer: cannot be a route sink")
        raw = uri.param("period_ms")
        if raw is None:
            raise ValueError("timer endpoint needs period_ms: timer:<name>?period_ms=<n>")
        try:
            period = int(raw)
        except ValueError:
            raise ValueError(f"period_ms must be an integer, got {raw!r}") from None
        if period < 1:
            raise ValueError(f"period_ms must be >= 1, got {period}")

    def create_consumer(self, uri: EndpointUri, route: Route) -> Consumer:
        self.validate(uri, "source")
        return _TimerConsumer(uri.path, int(uri.param("period_ms")) / 1000.0)
