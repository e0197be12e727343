# app/services/engine.py
import heapq
import logging
from typing import Callable, Dict, List, Optional, TextIO, Tuple

import numpy as np

from ..config import settings
from ..exceptions import EventHandlerError, SchedulingError
from ..models.events import KIND_RANK, EventKind, SimEvent

logger = logging.getLogger(__name__)

Handler = Callable[[SimEvent], None]

# Stable ids keep each concern's stream independent of the others.
RNG_STREAMS: Dict[str, int] = {
    "mobility": 0,
    "traffic": 1,
    "service": 2,
    "measurement": 3,
}


class RngStreams:
    """One numpy Generator per concern, all derived from the run seed"""

    def __init__(self, seed: int):
        self.seed = seed
        self._streams: Dict[str, np.random.Generator] = {}

    def get(self, concern: str) -> np.random.Generator:
        if concern not in RNG_STREAMS:
            raise KeyError(f"Unknown random stream '{concern}'")
        stream = self._streams.get(concern)
        if stream is None:
            stream = np.random.default_rng([self.seed, RNG_STREAMS[concern]])
            self._streams[concern] = stream
        return stream


class EventEngine:
    """Virtual clock plus a heap ordered by (time, kind rank, insertion sequence)"""

    def __init__(self, trace: Optional[TextIO] = None):
        self.now = 0.0
        self._heap: List[Tuple[float, int, int, SimEvent]] = []
        self._seq = 0
        self._handlers: Dict[EventKind, Handler] = {}
        self._trace = trace
        self.dispatched = 0
        self.cancelled = 0

    def __len__(self) -> int:
        return len(self._heap)

    def register(self, kind: EventKind, handler: Handler) -> None:
        self._handlers[kind] = handler

    def schedule(self, event: SimEvent) -> SimEvent:
        """Queue an event; the returned event doubles as its cancellation handle"""
        if event.fire_time < self.now:
            raise SchedulingError(
                f"Cannot schedule {event.kind.value} at {event.fire_time} before now={self.now}"
            )
        event.seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (event.fire_time, KIND_RANK[event.kind], event.seq, event))
        return event

    def schedule_at(self, fire_time: float, kind: EventKind, **payload: int) -> SimEvent:
        return self.schedule(SimEvent(fire_time=fire_time, kind=kind, payload=payload))

    def schedule_in(self, delay: float, kind: EventKind, **payload: int) -> SimEvent:
        return self.schedule_at(self.now + delay, kind, **payload)

    def cancel(self, handle: SimEvent) -> None:
        # Lazy deletion: the entry stays in the heap and is skipped on pop
        if not handle.cancelled:
            handle.cancelled = True
            self.cancelled += 1

    def run_until(self, t_end: float) -> float:
        if t_end < self.now:
            raise SchedulingError(f"run_until({t_end}) is before now={self.now}")

        heap = self._heap
        while heap and heap[0][0] <= t_end:
            _, _, _, event = heapq.heappop(heap)
            if event.cancelled:
                continue
            self.now = event.fire_time
            self.dispatched += 1
            if self._trace is not None:
                self._write_trace(event)
            handler = self._handlers.get(event.kind)
            if handler is None:
                continue
            try:
                handler(event)
            except Exception as e:
                logger.error(f"Aborting run: handler for {event.describe()} raised {e!r}")
                raise EventHandlerError(event, e) from e

        self.now = t_end
        return self.now

    def _write_trace(self, event: SimEvent) -> None:
        ids = "\t".join(f"{k}={v}" for k, v in event.payload.items())
        line = f"{format(event.fire_time, settings.TRACE_FLOAT_FORMAT)}\t{event.kind.value}"
        self._trace.write(f"{line}\t{ids}\n" if ids else f"{line}\n")
