from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Tuple


class JobOutcome(str, Enum):
    DELIVERED = "Delivered"
    MEC_MOBILITY_DISCARD = "MecMobilityDiscard"
    QUEUE_OVERFLOW = "QueueOverflow"
    RADIO_OUTAGE = "RadioOutage"
    HANDOFF_INTERRUPTION = "HandoffInterruption"
    UNFINISHED = "Unfinished"  # still queued or in flight when the run ended


@dataclass
class FrameJob:
    """One offloaded frame, from uplink send to result delivery."""

    job_id: int
    ue_id: int
    sent_at: float
    uplink_bytes: int
    result_bytes: int
    origin_sector: Optional[int] = None
    mec_id: Optional[int] = None
    uplink_arrived_at: Optional[float] = None
    service_start: Optional[float] = None
    service_end: Optional[float] = None
    downlink_sector: Optional[int] = None
    downlink_sent_at: Optional[float] = None
    delivered_at: Optional[float] = None
    uplink_sinr_db: Optional[float] = None
    downlink_sinr_db: Optional[float] = None
    outcome: JobOutcome = JobOutcome.UNFINISHED

    @property
    def finished(self) -> bool:
        return self.outcome is not JobOutcome.UNFINISHED


@dataclass(frozen=True)
class LoadReport:
    mec_id: int
    queue_metric: float  # estimated max queuing time, seconds
    timestamp: float
    app_metadata: Tuple[str, ...] = field(default_factory=tuple)
