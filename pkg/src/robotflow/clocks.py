"""Time sources for the engine and the robot simulator.

The engine never reads the wall clock. It advances a :class:`VirtualClock`
one frame at a time, so a run's timing depends only on the frame rate and
the tick count. That is what makes traces reproducible byte for byte and
lets a 10,000-activity run finish in milliseconds of real time.

The standalone simulator process serves real WebSocket clients and has no
tick loop to piggyback on, so it uses :class:`WallClock` with thread
timers instead. Both expose the same small surface: ``now_ms`` and
``schedule``.
"""

from __future__ import annotations

import heapq
import itertools
import threading
import time
from typing import Callable


class VirtualClock:
    """Frame-counted clock. ``advance`` moves one frame and fires due callbacks."""

    def __init__(self, frame_rate: int = 20):
        if frame_rate <= 0:
            raise ValueError("frame rate must be positive")
        self.frame_rate = frame_rate
        self.tick = 0
        self._queue: list[tuple[float, int, Callable[[], None]]] = []
        self._seq = itertools.count()

    @property
    def frame_ms(self) -> float:
        return 1000.0 / self.frame_rate

    def now_ms(self) -> float:
        return self.tick * self.frame_ms

    def schedule(self, delay_ms: float, fn: Callable[[], None]) -> None:
        due = self.now_ms() + max(0.0, delay_ms)
        heapq.heappush(self._queue, (due, next(self._seq), fn))

    def fire_due(self) -> int:
        """Run every callback whose due time has arrived; returns how many ran."""
        fired = 0
        while self._queue and self._queue[0][0] <= self.now_ms() + 1e-9:
            _, _, fn = heapq.heappop(self._queue)
            fn()
            fired += 1
        return fired

    def advance(self) -> None:
        self.tick += 1
        self.fire_due()


class WallClock:
    """Real time. ``schedule`` uses daemon timers so shutdown never blocks."""

    def __init__(self):
        self._origin = time.monotonic()

    def now_ms(self) -> float:
        return (time.monotonic() - self._origin) * 1000.0

    def schedule(self, delay_ms: float, fn: Callable[[], None]) -> None:
        timer = threading.Timer(max(0.0, delay_ms) / 1000.0, fn)
        timer.daemon = True
        timer.start()
