from dataclasses import dataclass, field
from enum import Enum
from typing import Dict


class EventKind(str, Enum):
    FRAME_SEND = "FrameSend"
    UPLINK_ARRIVAL = "UplinkArrival"
    SERVICE_COMPLETE = "ServiceComplete"
    DOWNLINK_ARRIVAL = "DownlinkArrival"
    MOBILITY_TICK = "MobilityTick"
    MEASUREMENT_REPORT_TICK = "MeasurementReportTick"
    LOAD_REPORT_TICK = "LoadReportTick"
    HANDOFF_COMPLETE = "HandoffComplete"
    METRICS_FLUSH = "MetricsFlush"


# Completions free queue slots before same-instant arrivals; ticks run last.
KIND_RANK: Dict[EventKind, int] = {
    EventKind.SERVICE_COMPLETE: 0,
    EventKind.UPLINK_ARRIVAL: 1,
    EventKind.DOWNLINK_ARRIVAL: 2,
    EventKind.HANDOFF_COMPLETE: 3,
    EventKind.FRAME_SEND: 4,
    EventKind.MOBILITY_TICK: 5,
    EventKind.MEASUREMENT_REPORT_TICK: 6,
    EventKind.LOAD_REPORT_TICK: 7,
    EventKind.METRICS_FLUSH: 8,
}


@dataclass
class SimEvent:
    fire_time: float
    kind: EventKind
    payload: Dict[str, int] = field(default_factory=dict)
    seq: int = -1  # assigned by the engine
    cancelled: bool = False

    def describe(self) -> str:
        ids = " ".join(f"{k}={v}" for k, v in self.payload.items())
        return f"{self.kind.value}@{self.fire_time:.6f}[{ids}]"
