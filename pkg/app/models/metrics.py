from dataclasses import dataclass
from pydantic import BaseModel
from typing import Dict, List, Optional

from .jobs import JobOutcome


@dataclass(frozen=True)
class PacketRecord:
    """Ledger row: a finished (or unfinished) job plus derived delays."""

    job_id: int
    ue_id: int
    origin_sector: Optional[int]
    mec_id: Optional[int]
    outcome: JobOutcome
    sent_at: float
    uplink_arrived_at: Optional[float]
    service_start: Optional[float]
    service_end: Optional[float]
    delivered_at: Optional[float]
    uplink_bytes: int
    result_bytes: int
    uplink_sinr_db: Optional[float]
    downlink_sinr_db: Optional[float]
    uplink_tx_delay: Optional[float]
    queue_wait: Optional[float]
    service_time: Optional[float]
    downlink_tx_delay: Optional[float]
    experienced_delay: Optional[float]

    @property
    def transmitted_uplink(self) -> bool:
        return self.uplink_tx_delay is not None


@dataclass(frozen=True)
class HandoffRecord:
    time: float
    ue: int
    source: int
    target: int
    algorithm: str
    reason: str
    f_source: Optional[float]
    f_target: Optional[float]


class RunSummary(BaseModel):
    algorithm: str
    seed: int
    jobs_sent: int
    delivered: int
    mean_delay: Optional[float] = None
    median_delay: Optional[float] = None
    p95_delay: Optional[float] = None
    p99_delay: Optional[float] = None
    outlier_excluded_mean_delay: Optional[float] = None
    outlier_excluded_median_delay: Optional[float] = None
    mad_jitter: Optional[float] = None
    uplink_std_jitter: Optional[float] = None
    downlink_std_jitter: Optional[float] = None
    mean_uplink_tx_delay: Optional[float] = None
    mean_downlink_tx_delay: Optional[float] = None
    mean_uplink_sinr_db: Optional[float] = None
    mean_downlink_sinr_db: Optional[float] = None
    ul_tx_mbps: float = 0.0
    dl_rx_mbps: float = 0.0
    mec_processed: int = 0
    handoffs: int = 0
    loss_ratios: Dict[str, float] = {}
    unfinished: int = 0
    full_impairment_fraction: Optional[float] = None
    impairment_histogram: List[float] = []
    oracle_live_cost: Optional[float] = None
    oracle_optimal_cost: Optional[float] = None

    def flat(self) -> Dict[str, object]:
        """Single-level dict for one CSV row"""
        row = self.dict(exclude={"loss_ratios", "impairment_histogram"})
        for outcome in JobOutcome:
            if outcome in (JobOutcome.DELIVERED, JobOutcome.UNFINISHED):
                continue
            row[f"loss_{outcome.value}"] = self.loss_ratios.get(outcome.value, 0.0)
        for i, fraction in enumerate(self.impairment_histogram):
            row[f"impairment_bin_{i}"] = fraction
        return row
