from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Optional, Tuple


class DecisionReason(str, Enum):
    SIGNAL_ONLY = "SignalOnly"
    COMPUTE_AWARE = "ComputeAware"


@dataclass(frozen=True)
class SectorMeasurement:
    sector_id: int
    rsrq: float  # dB
    rsrp: float  # dBm


@dataclass(frozen=True)
class MeasurementReport:
    ue_id: int
    serving_sector: int
    samples: Tuple[SectorMeasurement, ...]  # sorted by sector id
    timestamp: float
    app_info: Tuple[str, ...] = ("mar-offload",)

    def sample_for(self, sector_id: int) -> Optional[SectorMeasurement]:
        for sample in self.samples:
            if sample.sector_id == sector_id:
                return sample
        return None

    @property
    def serving(self) -> SectorMeasurement:
        sample = self.sample_for(self.serving_sector)
        if sample is None:
            raise ValueError(f"Report for UE {self.ue_id} lacks its serving sector")
        return sample


@dataclass
class HandoffDecision:
    ue_id: int
    source: int
    target: int
    decided_at: float
    reason: DecisionReason
    executed: bool = False
    f_source: Optional[float] = None
    f_target: Optional[float] = None

    def __post_init__(self):
        if self.source == self.target:
            raise ValueError("A handoff needs distinct source and target sectors")


@dataclass
class A3State:
    """Per-UE entry times of neighbours currently satisfying the A3 condition."""

    entered_at: Dict[int, float] = field(default_factory=dict)

    def reset(self) -> None:
        self.entered_at.clear()
