# app/services/handoff.py
import logging
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..models.events import EventKind, SimEvent
from ..models.handoff import (
    A3State,
    DecisionReason,
    HandoffDecision,
    MeasurementReport,
    SectorMeasurement,
)
from ..models.jobs import LoadReport
from ..models.scenario import HandoffAlgorithm, HandoffParams
from .engine import EventEngine
from .radio import RadioService

logger = logging.getLogger(__name__)


class HandoffService:
    """Measurement reports and the four handoff policies"""

    @staticmethod
    def build_report(
        ue_id: int,
        serving_sector: int,
        rsrq_row: np.ndarray,
        rsrp_row: np.ndarray,
        probe_floor_dbm: float,
        timestamp: float,
    ) -> MeasurementReport:
        """Report every sector above the reporting floor, always including the serving one"""
        samples = tuple(
            SectorMeasurement(sector_id=s, rsrq=float(rsrq_row[s]), rsrp=float(rsrp_row[s]))
            for s in range(len(rsrq_row))
            if s == serving_sector or rsrp_row[s] > probe_floor_dbm
        )
        return MeasurementReport(
            ue_id=ue_id, serving_sector=serving_sector, samples=samples, timestamp=timestamp
        )

    @staticmethod
    def score_f(rsrq_db: float, queue_metric: float, w_s: float, w_q: float) -> float:
        return w_s * rsrq_db - w_q * queue_metric

    @staticmethod
    def _best_neighbour(report: MeasurementReport, key) -> Optional[SectorMeasurement]:
        best = None
        for sample in report.samples:  # sorted by id, so ties keep the lowest id
            if sample.sector_id == report.serving_sector:
                continue
            if best is None or key(sample) > key(best):
                best = sample
        return best

    @staticmethod
    def comp_ho_decide(
        report: MeasurementReport,
        loads: Mapping[int, LoadReport],
        params: HandoffParams,
    ) -> Optional[HandoffDecision]:
        """
        Computation-aware decision for one UE

        loads maps sector id to the last load report received for that sector's MEC.
        The gate opens when the serving RSRQ index drops below theta (or, with
        overload_trigger set, when the serving MEC is overloaded). Every candidate is
        scored once with F = w_s * rsrq - w_q * queue_metric and the UE moves to the
        best one if it beats the serving sector by more than delta.
        """
        serving = report.serving
        serving_load = loads.get(report.serving_sector)
        if serving_load is None:
            logger.debug(f"UE {report.ue_id}: no load report for serving sector {report.serving_sector} yet")
            return None

        gate_open = RadioService.rsrq_index(serving.rsrq) < params.theta
        if not gate_open and params.overload_trigger is not None:
            gate_open = serving_load.queue_metric >= params.overload_trigger
        if not gate_open:
            return None

        candidates: List[Tuple[SectorMeasurement, LoadReport]] = []
        for sample in report.samples:
            if sample.sector_id == report.serving_sector:
                candidates.append((sample, serving_load))
                continue
            load = loads.get(sample.sector_id)
            if load is None:
                logger.debug(f"UE {report.ue_id}: skipping sector {sample.sector_id}, no load report")
                continue
            candidates.append((sample, load))

        if params.homogeneous_fallback is not None:
            metrics = [load.queue_metric for _, load in candidates]
            if max(metrics) - min(metrics) <= params.homogeneous_fallback:
                return HandoffService.a2a4_decide(report, params)

        best: Optional[SectorMeasurement] = None
        best_f = f_serving = 0.0
        for sample, load in candidates:
            f = HandoffService.score_f(sample.rsrq, load.queue_metric, params.w_s, params.w_q)
            if sample.sector_id == report.serving_sector:
                f_serving = f
            if best is None or f > best_f:
                best, best_f = sample, f

        if best is None or best.sector_id == report.serving_sector:
            return None
        if best_f - f_serving <= params.delta:
            return None
        return HandoffDecision(
            ue_id=report.ue_id,
            source=report.serving_sector,
            target=best.sector_id,
            decided_at=report.timestamp,
            reason=DecisionReason.COMPUTE_AWARE,
            f_source=f_serving,
            f_target=best_f,
        )

    @staticmethod
    def a2a4_decide(report: MeasurementReport, params: HandoffParams) -> Optional[HandoffDecision]:
        serving_index = RadioService.rsrq_index(report.serving.rsrq)
        if serving_index >= params.a2a4.serving_rsrq_threshold:
            return None
        best = HandoffService._best_neighbour(report, key=lambda s: s.rsrq)
        if best is None:
            return None
        if RadioService.rsrq_index(best.rsrq) <= serving_index + params.a2a4.neighbour_rsrq_offset:
            return None
        return HandoffDecision(
            ue_id=report.ue_id,
            source=report.serving_sector,
            target=best.sector_id,
            decided_at=report.timestamp,
            reason=DecisionReason.SIGNAL_ONLY,
        )

    @staticmethod
    def a3_decide(report: MeasurementReport, params: HandoffParams, state: A3State) -> Optional[HandoffDecision]:
        """
        Fire once a neighbour's RSRP has exceeded the serving RSRP plus hysteresis for
        at least time_to_trigger; a lapse resets that neighbour's timer
        """
        now = report.timestamp
        threshold = report.serving.rsrp + params.a3.hysteresis
        seen = set()
        for sample in report.samples:
            if sample.sector_id == report.serving_sector:
                continue
            seen.add(sample.sector_id)
            if sample.rsrp > threshold:
                state.entered_at.setdefault(sample.sector_id, now)
            else:
                state.entered_at.pop(sample.sector_id, None)
        for sector_id in [s for s in state.entered_at if s not in seen]:
            del state.entered_at[sector_id]

        ready = [
            report.sample_for(s)
            for s, entered in sorted(state.entered_at.items())
            if now - entered >= params.a3.time_to_trigger
        ]
        if not ready:
            return None
        best = ready[0]
        for sample in ready[1:]:
            if sample.rsrp > best.rsrp:
                best = sample
        return HandoffDecision(
            ue_id=report.ue_id,
            source=report.serving_sector,
            target=best.sector_id,
            decided_at=now,
            reason=DecisionReason.SIGNAL_ONLY,
        )

    @staticmethod
    def decide(
        report: MeasurementReport,
        loads: Mapping[int, LoadReport],
        params: HandoffParams,
        state: A3State,
    ) -> Optional[HandoffDecision]:
        algorithm = params.algorithm
        if algorithm == HandoffAlgorithm.COMP_HO:
            return HandoffService.comp_ho_decide(report, loads, params)
        if algorithm == HandoffAlgorithm.A2A4_RSRQ:
            return HandoffService.a2a4_decide(report, params)
        if algorithm == HandoffAlgorithm.A3_RSRP:
            return HandoffService.a3_decide(report, params, state)
        return None


class AttachmentTable:
    """Which sector serves each UE, who is mid-handoff, and how many UEs each sector serves"""

    def __init__(self, n_ues: int, sector_mec: Sequence[int]):
        self.sector_mec = list(sector_mec)
        self.serving: List[Optional[int]] = [None] * n_ues
        self.pending: Dict[int, HandoffDecision] = {}
        self.attached = [0] * len(self.sector_mec)

    @property
    def n_sectors(self) -> int:
        return len(self.sector_mec)

    def attach(self, ue_id: int, sector_id: int) -> None:
        if self.serving[ue_id] is not None:
            raise RuntimeError(f"UE {ue_id} is already attached to sector {self.serving[ue_id]}")
        self.serving[ue_id] = sector_id
        self.attached[sector_id] += 1

    def detach(self, ue_id: int) -> int:
        sector_id = self.serving[ue_id]
        if sector_id is None:
            raise RuntimeError(f"UE {ue_id} is not attached")
        self.serving[ue_id] = None
        self.attached[sector_id] -= 1
        return sector_id

    def in_handoff(self, ue_id: int) -> bool:
        return ue_id in self.pending

    def mec_of_ue(self, ue_id: int) -> Optional[int]:
        sector_id = self.serving[ue_id]
        return None if sector_id is None else self.sector_mec[sector_id]


class HandoffExecutor:
    """Carries out decisions: detach now, attach to the target after the execution time"""

    def __init__(self, engine: EventEngine, table: AttachmentTable, execution_time: float):
        self.engine = engine
        self.table = table
        self.execution_time = execution_time
        self.executed: List[HandoffDecision] = []

    def execute(self, decision: HandoffDecision, now: float) -> Tuple[bool, Optional[SimEvent]]:
        """
        Returns whether the handoff started and the scheduled completion event, which
        is None when the execution time is zero and the UE switched immediately
        """
        ue = decision.ue_id
        if decision.executed:
            logger.warning(f"UE {ue}: decision {decision.source}->{decision.target} already executed")
            return False, None
        if self.table.in_handoff(ue):
            logger.debug(f"UE {ue}: rejecting handoff to {decision.target}, already mid-handoff")
            return False, None
        if not 0 <= decision.target < self.table.n_sectors:
            logger.warning(f"UE {ue}: target sector {decision.target} does not exist, handoff aborted")
            return False, None
        if self.table.serving[ue] != decision.source:
            logger.warning(
                f"UE {ue}: decision source {decision.source} is stale (serving {self.table.serving[ue]})"
            )
            return False, None

        self.table.detach(ue)
        decision.executed = True
        self.executed.append(decision)
        logger.debug(
            f"t={now:.3f} UE {ue}: handoff {decision.source}->{decision.target} ({decision.reason.value})"
        )

        if self.execution_time <= 0.0:
            self.table.attach(ue, decision.target)
            return True, None

        self.table.pending[ue] = decision
        event = self.engine.schedule_at(
            now + self.execution_time, EventKind.HANDOFF_COMPLETE, ue=ue, sector=decision.target
        )
        return True, event

    def complete(self, ue_id: int) -> int:
        decision = self.table.pending.pop(ue_id)
        self.table.attach(ue_id, decision.target)
        return decision.target


# Initialize the global service
handoff_service = HandoffService()
