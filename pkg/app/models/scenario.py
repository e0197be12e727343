# app/models/scenario.py
from pydantic import BaseModel, Field, validator, root_validator
from typing import List, Optional, Tuple
from enum import Enum

from ..config import settings


class HandoffAlgorithm(str, Enum):
    COMP_HO = "comp-ho"
    A2A4_RSRQ = "a2a4"
    A3_RSRP = "a3"
    NO_HO = "noho"


class MobilityModel(str, Enum):
    RANDOM_WAYPOINT = "rwp"
    GAUSS_MARKOV = "gauss-markov"
    STATIC = "static"


class MecDeployment(str, Enum):
    SECTOR = "sector"  # one MEC per sector
    SITE = "site"  # the three sectors of a site share one MEC


def _split_list(v):
    if isinstance(v, str):
        return [item.strip() for item in v.split(",") if item.strip()]
    return v


def _split_pairs(v):
    if isinstance(v, str):
        pairs = []
        for item in _split_list(v):
            left, sep, right = item.partition(":")
            if not sep:
                raise ValueError(f"'{item}' is not an a:b pair")
            pairs.append((left.strip(), right.strip()))
        return pairs
    return v


def _blank_to_none(v):
    if isinstance(v, str) and not v.strip():
        return None
    return v


class LayoutParams(BaseModel):
    n_sites: int = 18
    isd: float = 350.0  # meters
    area_width: float = 1800.0
    area_height: float = 1300.0
    site_height: float = 45.0
    mec_deployment: MecDeployment = MecDeployment.SECTOR

    @validator("n_sites")
    def n_sites_must_be_positive(cls, v):
        if v < 1:
            raise ValueError("At least one site is required")
        return v

    @validator("isd", "area_width", "area_height", "site_height")
    def lengths_must_be_positive(cls, v):
        if v <= 0:
            raise ValueError("Lengths must be positive")
        return v


class RadioParams(BaseModel):
    carrier_frequency: float = 3.55e9  # Hz
    bandwidth: float = 20e6  # Hz
    tx_power_dbm: float = 46.0
    ue_tx_power_dbm: float = 23.0
    uplink_target_snr_db: float = 20.0  # open-loop power control target at the serving sector
    noise_figure_db: float = 9.0
    antenna_max_gain_db: float = 0.0
    antenna_beamwidth_deg: float = 65.0
    antenna_front_to_back_db: float = 25.0
    ue_height: float = 1.5
    ul_dl_capacity_ratio: float = 12.0  # downlink capacity per unit of uplink capacity
    outage_sinr_db: float = -6.0

    # Calibration against the testbed medians
    uplink_base_latency: float = 0.028  # scheduling and core latency; the rest is serialization
    calibration_sinr_db: float = 20.0
    calibration_uplink_bytes: int = 12000
    calibration_downlink_bytes: int = 60
    uplink_target_delay: float = 0.032
    downlink_target_delay: float = 0.002

    @validator("bandwidth", "carrier_frequency", "ul_dl_capacity_ratio", "antenna_beamwidth_deg")
    def must_be_positive(cls, v):
        if v <= 0:
            raise ValueError("Must be positive")
        return v

    @validator("tx_power_dbm", "ue_tx_power_dbm", "uplink_target_snr_db", "noise_figure_db", "antenna_max_gain_db")
    def power_must_be_finite(cls, v):
        if v != v or v in (float("inf"), float("-inf")):
            raise ValueError("Powers must be finite")
        return v

    @root_validator(skip_on_failure=True)
    def calibration_must_be_feasible(cls, values):
        if values["uplink_target_delay"] <= values["uplink_base_latency"]:
            raise ValueError("uplink_target_delay must exceed uplink_base_latency")
        if values["downlink_target_delay"] <= 0:
            raise ValueError("downlink_target_delay must be positive")
        return values


class MobilityParams(BaseModel):
    model: MobilityModel = MobilityModel.RANDOM_WAYPOINT
    speed: float = 2.0  # m/s
    pause_time: float = 0.0
    tick: float = 0.01
    stationary_start: bool = True
    gm_alpha: float = 0.85
    gm_speed_std_ratio: float = 0.3
    gm_dir_std: float = 0.3  # rad
    trajectory_interval: float = 0.1

    @validator("speed", "pause_time", "gm_speed_std_ratio", "gm_dir_std")
    def must_not_be_negative(cls, v):
        if v < 0:
            raise ValueError("Must not be negative")
        return v

    @validator("tick", "trajectory_interval")
    def interval_must_be_positive(cls, v):
        if v <= 0:
            raise ValueError("Intervals must be positive")
        return v

    @validator("gm_alpha")
    def alpha_must_be_unit(cls, v):
        if not 0 <= v <= 1:
            raise ValueError("gm_alpha must be between 0 and 1")
        return v


class MecParams(BaseModel):
    capacity: int = 64  # max resident jobs per server
    n_queues: int = 1
    service_time: float = 0.02  # seconds per frame
    service_jitter: float = 0.0  # uniform +/- fraction of service_time
    load_report_interval: float = 0.1
    load_report_latency: float = 0.002

    @validator("capacity", "n_queues")
    def count_must_be_positive(cls, v):
        if v < 1:
            raise ValueError("Must be at least 1")
        return v

    @validator("service_time", "load_report_interval")
    def period_must_be_positive(cls, v):
        if v <= 0:
            raise ValueError("Must be positive")
        return v

    @validator("service_jitter")
    def jitter_must_be_fraction(cls, v):
        if not 0 <= v < 1:
            raise ValueError("service_jitter must be in [0, 1)")
        return v

    @validator("load_report_latency")
    def latency_must_not_be_negative(cls, v):
        if v < 0:
            raise ValueError("Must not be negative")
        return v


class A2A4Params(BaseModel):
    serving_rsrq_threshold: int = 30
    neighbour_rsrq_offset: int = 1


class A3Params(BaseModel):
    time_to_trigger: float = 0.256
    hysteresis: float = 3.0  # dB

    @validator("time_to_trigger")
    def ttt_must_not_be_negative(cls, v):
        if v < 0:
            raise ValueError("time_to_trigger must not be negative")
        return v


class HandoffParams(BaseModel):
    algorithm: HandoffAlgorithm = HandoffAlgorithm.COMP_HO
    theta: int = 30  # RSRQ index
    delta: float = 5.0  # F units
    w_s: float = 1.0  # per dB
    w_q: float = 100.0  # per second
    a2a4: A2A4Params = Field(default_factory=A2A4Params)
    a3: A3Params = Field(default_factory=A3Params)
    handoff_execution_time: float = 0.05
    measurement_interval: float = 0.2
    probe_floor_dbm: float = -110.0
    overload_trigger: Optional[float] = None  # seconds of queue on the serving MEC
    homogeneous_fallback: Optional[float] = None  # max load spread, seconds

    _blank = validator("overload_trigger", "homogeneous_fallback", pre=True, allow_reuse=True)(_blank_to_none)

    @validator("theta")
    def index_must_be_in_range(cls, v):
        if not 0 <= v <= 34:
            raise ValueError("RSRQ index must be between 0 and 34")
        return v

    @validator("delta", "w_s", "w_q", "handoff_execution_time")
    def must_not_be_negative(cls, v):
        if v < 0:
            raise ValueError("Must not be negative")
        return v

    @validator("measurement_interval")
    def interval_must_be_positive(cls, v):
        if v <= 0:
            raise ValueError("measurement_interval must be positive")
        return v


class MetricsParams(BaseModel):
    impairment_table: List[Tuple[float, float]] = [(0.05, 1.0), (0.25, 0.5), (0.5, 0.0)]
    flush_interval: float = 1.0

    _pairs = validator("impairment_table", pre=True, allow_reuse=True)(_split_pairs)

    @validator("impairment_table")
    def table_must_be_monotone(cls, table):
        if not table:
            raise ValueError("Impairment table needs at least one knot")
        delays = [d for d, _ in table]
        scores = [s for _, s in table]
        if any(b <= a for a, b in zip(delays, delays[1:])):
            raise ValueError("Impairment knots must have increasing delays")
        if any(b > a for a, b in zip(scores, scores[1:])):
            raise ValueError("Impairment scores must be non-increasing")
        if any(not 0 <= s <= 1 for s in scores):
            raise ValueError("Impairment scores must be between 0 and 1")
        return table


class Scenario(BaseModel):
    layout: LayoutParams = Field(default_factory=LayoutParams)
    radio: RadioParams = Field(default_factory=RadioParams)
    mobility: MobilityParams = Field(default_factory=MobilityParams)
    mec: MecParams = Field(default_factory=MecParams)
    handoff: HandoffParams = Field(default_factory=HandoffParams)
    metrics: MetricsParams = Field(default_factory=MetricsParams)

    n_ues: int = 50
    fps: float = 20.0
    sim_time: float = 30.0
    warmup: float = 2.0
    uplink_bytes: int = 12000
    result_bytes: int = 60
    ue_positions: Optional[List[Tuple[float, float]]] = None
    seeds: List[int] = [1, 2, 3]
    output_dir: str = settings.DEFAULT_OUTPUT_DIR

    _pairs = validator("ue_positions", pre=True, allow_reuse=True)(
        lambda v: _split_pairs(_blank_to_none(v))
    )
    _seeds = validator("seeds", pre=True, allow_reuse=True)(_split_list)

    @validator("n_ues", "uplink_bytes", "result_bytes")
    def count_must_be_positive(cls, v):
        if v < 1:
            raise ValueError("Must be at least 1")
        return v

    @validator("fps", "sim_time")
    def must_be_positive(cls, v):
        if v <= 0:
            raise ValueError("Must be positive")
        return v

    @validator("seeds")
    def seeds_must_not_be_empty(cls, v):
        if not v:
            raise ValueError("At least one seed is required")
        return v

    @root_validator(skip_on_failure=True)
    def check_consistency(cls, values):
        if not 0 <= values["warmup"] < values["sim_time"]:
            raise ValueError("warmup must be in [0, sim_time)")
        positions = values.get("ue_positions")
        if positions is not None and len(positions) != values["n_ues"]:
            raise ValueError("ue_positions must list exactly n_ues positions")
        return values

    @property
    def frame_period(self) -> float:
        return 1.0 / self.fps

    @property
    def stats_window(self) -> float:
        return self.sim_time - self.warmup

    def with_algorithm(self, algorithm: HandoffAlgorithm) -> "Scenario":
        return self.copy(update={"handoff": self.handoff.copy(update={"algorithm": algorithm})})
