# app/services/radio.py
import math
import logging
from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..models.radio import LinkCalibration, LinkDirection, LinkSample, Sector
from ..models.scenario import RadioParams
from .geometry import Layout

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT = 299_792_458.0
THERMAL_NOISE_DBM_HZ = -174.0
SUBCARRIER_SPACING = 15e3  # Hz
RB_BANDWIDTH = 180e3  # Hz
SUBCARRIERS_PER_RB = 12
RB_OCCUPANCY = 0.9  # share of the channel carrying resource blocks

RSRQ_MIN_DB = -19.5
RSRQ_MAX_DB = -3.0
RSRQ_MAX_INDEX = 34


def db_to_linear(db):
    return np.power(10.0, np.asarray(db, dtype=float) / 10.0)


def linear_to_db(linear):
    return 10.0 * np.log10(linear)


@dataclass(frozen=True)
class LinkMatrices:
    """UE x sector radio state, all in dB / dBm"""

    path_loss: np.ndarray
    coupling: np.ndarray  # antenna gain minus path loss
    rsrp: np.ndarray
    rsrq: np.ndarray
    sinr: np.ndarray

    @property
    def n_ues(self) -> int:
        return self.sinr.shape[0]


class RadioService:
    @staticmethod
    def wavelength(params: RadioParams) -> float:
        return SPEED_OF_LIGHT / params.carrier_frequency

    @staticmethod
    def breakpoint_distance(params: RadioParams, site_height: float) -> float:
        return 4.0 * site_height * params.ue_height / RadioService.wavelength(params)

    @staticmethod
    def path_loss_db(distance, params: RadioParams, site_height: float = 45.0):
        """
        Dual-slope line-of-sight loss

        Free space (exponent 2) from the 1 m reference up to the breakpoint, exponent 4
        beyond it. Accepts a scalar or an array of 3D distances in meters.
        """
        d = np.maximum(np.asarray(distance, dtype=float), 1.0)
        reference = 20.0 * math.log10(4.0 * math.pi / RadioService.wavelength(params))
        r_bp = RadioService.breakpoint_distance(params, site_height)
        near = reference + 20.0 * np.log10(d)
        far = reference + 20.0 * math.log10(r_bp) + 40.0 * np.log10(d / r_bp)
        loss = np.where(d <= r_bp, near, far)
        return float(loss) if loss.ndim == 0 else loss

    @staticmethod
    def antenna_gain_db(offset_deg, params: RadioParams):
        """Parabolic sector pattern capped at the front-to-back ratio"""
        phi = (np.asarray(offset_deg, dtype=float) + 180.0) % 360.0 - 180.0
        attenuation = np.minimum(
            12.0 * (phi / params.antenna_beamwidth_deg) ** 2, params.antenna_front_to_back_db
        )
        return params.antenna_max_gain_db - attenuation

    @staticmethod
    def n_resource_blocks(params: RadioParams) -> int:
        return max(1, int(round(RB_OCCUPANCY * params.bandwidth / RB_BANDWIDTH)))

    @staticmethod
    def reference_signal_power_dbm(params: RadioParams) -> float:
        n_re = SUBCARRIERS_PER_RB * RadioService.n_resource_blocks(params)
        return params.tx_power_dbm - 10.0 * math.log10(n_re)

    @staticmethod
    def noise_dbm(bandwidth: float, params: RadioParams) -> float:
        return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth) + params.noise_figure_db

    @staticmethod
    def sinr_db(rx_mw: np.ndarray, noise_mw: float) -> np.ndarray:
        """Per-link SINR when every other column of rx_mw is a co-channel interferer"""
        total = rx_mw.sum(axis=1, keepdims=True) + noise_mw
        return linear_to_db(rx_mw / (total - rx_mw))

    @staticmethod
    def rsrq_db(rx_mw: np.ndarray, noise_mw: float) -> np.ndarray:
        """
        N * RSRP / RSSI under full load, clamped to the reporting range

        With every sector transmitting on all resource elements the RSSI over N
        resource blocks is 12 * N * (sum of received RE powers + RE noise).
        """
        total = rx_mw.sum(axis=1, keepdims=True) + noise_mw
        rsrq = linear_to_db(rx_mw / (SUBCARRIERS_PER_RB * total))
        return np.clip(rsrq, RSRQ_MIN_DB, RSRQ_MAX_DB)

    @staticmethod
    def link_matrices(ue_xy: np.ndarray, layout: Layout, params: RadioParams) -> LinkMatrices:
        """Path loss, RSRP, RSRQ and downlink SINR for every UE-sector pair"""
        ue_xy = np.atleast_2d(np.asarray(ue_xy, dtype=float))
        positions, azimuths = layout.sector_arrays()
        dx = ue_xy[:, None, 0] - positions[None, :, 0]
        dy = ue_xy[:, None, 1] - positions[None, :, 1]
        dz = layout.site_height - params.ue_height
        distance = np.sqrt(dx * dx + dy * dy + dz * dz)

        path_loss = RadioService.path_loss_db(distance, params, layout.site_height)
        bearing = np.degrees(np.arctan2(dy, dx))
        gain = RadioService.antenna_gain_db(bearing - azimuths[None, :], params)
        coupling = gain - path_loss
        rsrp = RadioService.reference_signal_power_dbm(params) + coupling

        rx_mw = db_to_linear(rsrp)
        noise_mw = float(db_to_linear(RadioService.noise_dbm(SUBCARRIER_SPACING, params)))
        return LinkMatrices(
            path_loss=path_loss,
            coupling=coupling,
            rsrp=rsrp,
            rsrq=RadioService.rsrq_db(rx_mw, noise_mw),
            sinr=RadioService.sinr_db(rx_mw, noise_mw),
        )

    @staticmethod
    def link_sample(
        ue_pos: Tuple[float, float],
        sector: Sector,
        layout: Layout,
        params: RadioParams,
        ue_id: int = 0,
        timestamp: float = 0.0,
    ) -> LinkSample:
        links = RadioService.link_matrices(np.array([ue_pos]), layout, params)
        s = sector.sector_id
        return LinkSample(
            ue_id=ue_id,
            sector_id=s,
            path_loss=float(links.path_loss[0, s]),
            rsrp=float(links.rsrp[0, s]),
            rsrq=float(links.rsrq[0, s]),
            sinr=float(links.sinr[0, s]),
            timestamp=timestamp,
        )

    @staticmethod
    def uplink_noise_dbm(params: RadioParams) -> float:
        return RadioService.noise_dbm(params.bandwidth / (1.0 + params.ul_dl_capacity_ratio), params)

    @staticmethod
    def uplink_tx_power_dbm(coupling_db, params: RadioParams):
        """
        Open-loop power control with full path-loss compensation

        The UE aims its serving sector at uplink_target_snr_db over the uplink noise
        and never exceeds its maximum power.
        """
        wanted = params.uplink_target_snr_db + RadioService.uplink_noise_dbm(params) - np.asarray(coupling_db)
        return np.minimum(wanted, params.ue_tx_power_dbm)

    @staticmethod
    def uplink_sinr_db(
        coupling: np.ndarray,
        ue_id: int,
        sector_id: int,
        transmitting: Mapping[int, Sequence[int]],
        params: RadioParams,
    ) -> float:
        """
        Uplink SINR of one UE at its serving sector

        transmitting maps each sector to the UEs whose uplink is currently on the
        air towards it. A sector schedules one UE per resource at a time, so every
        other busy sector adds the mean power its transmitting UEs deliver here.
        """
        own_tx = RadioService.uplink_tx_power_dbm(coupling[ue_id, sector_id], params)
        signal = float(db_to_linear(own_tx + coupling[ue_id, sector_id]))
        interference = 0.0
        for other in sorted(transmitting):
            ues = [u for u in transmitting[other] if u != ue_id]
            if other == sector_id or not ues:
                continue
            tx = RadioService.uplink_tx_power_dbm(coupling[ues, other], params)
            interference += float(np.mean(db_to_linear(tx + coupling[ues, sector_id])))
        noise = float(db_to_linear(RadioService.uplink_noise_dbm(params)))
        return float(linear_to_db(signal / (noise + interference)))

    @staticmethod
    def rsrq_index(rsrq_db: float) -> int:
        """Map dB onto the 0..34 reporting scale; half-steps round up"""
        index = math.floor(2.0 * (rsrq_db + 19.5) + 0.5)
        return int(min(max(index, 0), RSRQ_MAX_INDEX))

    @staticmethod
    def rsrq_from_index(index: int) -> float:
        return RSRQ_MIN_DB + index / 2.0

    @staticmethod
    def calibrate(params: RadioParams) -> LinkCalibration:
        """
        Solve the link efficiency and downlink base latency so a lone UE at the
        calibration SINR reproduces the measured uplink and downlink medians
        """
        up_bw = params.bandwidth / (1.0 + params.ul_dl_capacity_ratio)
        down_bw = params.bandwidth - up_bw
        spectral = math.log2(1.0 + 10.0 ** (params.calibration_sinr_db / 10.0))

        serialization_up = params.uplink_target_delay - params.uplink_base_latency
        efficiency = params.calibration_uplink_bytes * 8.0 / (serialization_up * up_bw * spectral)

        serialization_down = params.calibration_downlink_bytes * 8.0 / (efficiency * down_bw * spectral)
        down_base = max(params.downlink_target_delay - serialization_down, 0.0)

        calibration = LinkCalibration(
            link_efficiency=efficiency,
            uplink_base_latency=params.uplink_base_latency,
            downlink_base_latency=down_base,
            uplink_bandwidth=up_bw,
            downlink_bandwidth=down_bw,
        )
        logger.debug(f"Link calibration: {calibration}")
        return calibration

    @staticmethod
    def tx_delay(
        payload_bytes: int,
        sinr_db: float,
        n_active: int,
        direction: LinkDirection,
        calibration: LinkCalibration,
        outage_sinr_db: float = -6.0,
    ) -> Optional[float]:
        """
        Transmission delay of one packet under per-sector processor sharing

        Returns None when the link is in outage.
        """
        if n_active < 1:
            raise ValueError("n_active counts the sender and must be at least 1")
        if sinr_db < outage_sinr_db:
            return None

        if direction == LinkDirection.UPLINK:
            base, bandwidth = calibration.uplink_base_latency, calibration.uplink_bandwidth
        else:
            base, bandwidth = calibration.downlink_base_latency, calibration.downlink_bandwidth

        rate = calibration.link_efficiency * bandwidth * math.log2(1.0 + 10.0 ** (sinr_db / 10.0))
        return base + payload_bytes * 8.0 * n_active / rate

    @staticmethod
    def sinr_map(layout: Layout, params: RadioParams, resolution: float = 10.0) -> pd.DataFrame:
        """Best-server SINR over a regular grid covering the area"""
        xs = np.arange(0.0, layout.area.width + resolution / 2, resolution)
        ys = np.arange(0.0, layout.area.height + resolution / 2, resolution)
        grid_x, grid_y = np.meshgrid(xs, ys)
        points = np.column_stack([grid_x.ravel(), grid_y.ravel()])

        sinr = RadioService.link_matrices(points, layout, params).sinr
        best = np.argmax(sinr, axis=1)
        return pd.DataFrame(
            {
                "x": points[:, 0],
                "y": points[:, 1],
                "best_sector": best,
                "sinr_db": sinr[np.arange(len(points)), best],
            }
        )


class AirInterface:
    """UEs with a packet on the air, per direction and sector"""

    def __init__(self, n_sectors: int):
        self._on_air: Dict[LinkDirection, List[Counter]] = {
            direction: [Counter() for _ in range(n_sectors)] for direction in LinkDirection
        }

    def start(self, direction: LinkDirection, sector_id: int, ue_id: int) -> None:
        self._on_air[direction][sector_id][ue_id] += 1

    def finish(self, direction: LinkDirection, sector_id: int, ue_id: int) -> None:
        packets = self._on_air[direction][sector_id]
        if packets[ue_id] < 1:
            raise RuntimeError(f"UE {ue_id} has no {direction.value}link packet on the air in sector {sector_id}")
        packets[ue_id] -= 1
        if packets[ue_id] == 0:
            del packets[ue_id]

    def transmitting(self, direction: LinkDirection, sector_id: int) -> List[int]:
        return sorted(self._on_air[direction][sector_id])

    def n_active(self, direction: LinkDirection, sector_id: int, ue_id: int) -> int:
        """UEs sharing the sector's link once ue_id sends, counting ue_id itself"""
        packets = self._on_air[direction][sector_id]
        return len(packets) + (0 if ue_id in packets else 1)

    def on_air(self, direction: LinkDirection) -> int:
        """Packets currently in flight in one direction, over all sectors"""
        return sum(sum(packets.values()) for packets in self._on_air[direction])

    def uplinks(self) -> Dict[int, List[int]]:
        return {
            sector_id: sorted(packets)
            for sector_id, packets in enumerate(self._on_air[LinkDirection.UPLINK])
            if packets
        }


# Initialize the global service
radio_service = RadioService()
