from dataclasses import dataclass
from enum import Enum
from typing import Tuple


@dataclass(frozen=True)
class Sector:
    sector_id: int
    site_id: int
    mec_id: int
    position: Tuple[float, float]
    height: float
    azimuth_deg: float


@dataclass(frozen=True)
class LinkSample:
    ue_id: int
    sector_id: int
    path_loss: float  # dB
    rsrp: float  # dBm per resource element
    rsrq: float  # dB, clamped to the reporting range
    sinr: float  # dB
    timestamp: float


@dataclass(frozen=True)
class LinkCalibration:
    link_efficiency: float
    uplink_base_latency: float
    downlink_base_latency: float
    uplink_bandwidth: float  # Hz
    downlink_bandwidth: float  # Hz


class LinkDirection(str, Enum):
    UPLINK = "up"
    DOWNLINK = "down"
