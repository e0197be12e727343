# app/services/simulation.py
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional, TextIO, Tuple

import numpy as np

from ..models.events import EventKind, SimEvent
from ..models.handoff import A3State
from ..models.jobs import FrameJob, JobOutcome, LoadReport
from ..models.metrics import HandoffRecord, PacketRecord, RunSummary
from ..models.radio import LinkDirection
from ..models.scenario import HandoffAlgorithm, MobilityModel, Scenario
from .engine import EventEngine, RngStreams
from .geometry import geometry_service
from .handoff import AttachmentTable, HandoffExecutor, HandoffService
from .mec import MecService
from .mobility import MobilityService
from .oracle import OUTAGE_PENALTY, OracleService
from .radio import AirInterface, RadioService
from .statistics import StatisticsService

logger = logging.getLogger(__name__)


@dataclass
class RunResult:
    algorithm: HandoffAlgorithm
    seed: int
    records: List[PacketRecord]
    handoffs: List[HandoffRecord]
    summary: RunSummary
    trajectories: List[Tuple[float, int, float, float]] = field(default_factory=list)
    dispatched: int = 0


class Simulation:
    """
    One self-contained run: a scenario, an algorithm and a seed

    All state (event queue, radio links, MEC queues, attachments) belongs to the
    instance, so runs can be executed side by side in separate processes.
    """

    def __init__(
        self,
        scenario: Scenario,
        seed: int,
        trace: Optional[TextIO] = None,
        record_trajectories: bool = False,
        oracle_snapshot: int = 0,
    ):
        self.scenario = scenario
        self.seed = seed
        self.algorithm = scenario.handoff.algorithm
        self.record_trajectories = record_trajectories
        self.oracle_snapshot = oracle_snapshot

        self.rng = RngStreams(seed)
        self.layout = geometry_service.build_layout(scenario.layout)
        self.calibration = RadioService.calibrate(scenario.radio)
        self.engine = EventEngine(trace)

        n_ues = scenario.n_ues
        self.states = MobilityService.initial_states(
            scenario.mobility, n_ues, self.layout.area, self.rng.get("mobility"), scenario.ue_positions
        )
        self._refresh_links()

        self.table = AttachmentTable(n_ues, [s.mec_id for s in self.layout.sectors])
        self.air = AirInterface(len(self.layout.sectors))
        self.executor = HandoffExecutor(self.engine, self.table, scenario.handoff.handoff_execution_time)
        self.servers = MecService.build_servers(
            self.layout.n_mecs,
            scenario.mec.capacity,
            scenario.mec.service_time,
            scenario.mec.n_queues,
            self._service_time_sampler(),
        )

        self.loads: Dict[int, LoadReport] = {}
        self._loads_in_flight: Deque[Tuple[float, List[LoadReport]]] = deque()
        self.a3_states = [A3State() for _ in range(n_ues)]
        self.measurement_events: List[Optional[SimEvent]] = [None] * n_ues
        self.jobs: List[FrameJob] = []
        self.handoff_records: List[HandoffRecord] = []
        self.trajectories: List[Tuple[float, int, float, float]] = []
        self.frame_offsets: List[float] = []

        self.engine.register(EventKind.FRAME_SEND, self._on_frame_send)
        self.engine.register(EventKind.UPLINK_ARRIVAL, self._on_uplink_arrival)
        self.engine.register(EventKind.SERVICE_COMPLETE, self._on_service_complete)
        self.engine.register(EventKind.DOWNLINK_ARRIVAL, self._on_downlink_arrival)
        self.engine.register(EventKind.MOBILITY_TICK, self._on_mobility_tick)
        self.engine.register(EventKind.MEASUREMENT_REPORT_TICK, self._on_measurement_tick)
        self.engine.register(EventKind.LOAD_REPORT_TICK, self._on_load_report_tick)
        self.engine.register(EventKind.HANDOFF_COMPLETE, self._on_handoff_complete)
        self.engine.register(EventKind.METRICS_FLUSH, self._on_metrics_flush)

    def _service_time_sampler(self):
        mec = self.scenario.mec
        if mec.service_jitter <= 0:
            return None
        stream = self.rng.get("service")
        return lambda: mec.service_time * (1.0 + mec.service_jitter * stream.uniform(-1.0, 1.0))

    def _refresh_links(self) -> None:
        positions = np.array([s.position for s in self.states], dtype=float)
        self.links = RadioService.link_matrices(positions, self.layout, self.scenario.radio)

    def uplink_sinr(self, ue: int, sector: int) -> float:
        return RadioService.uplink_sinr_db(
            self.links.coupling, ue, sector, self.air.uplinks(), self.scenario.radio
        )

    def _initial_schedule(self) -> None:
        scenario = self.scenario
        for ue in range(scenario.n_ues):
            self.table.attach(ue, int(np.argmax(self.links.sinr[ue])))

        traffic = self.rng.get("traffic")
        self.frame_offsets = [float(traffic.uniform(0.0, scenario.frame_period)) for _ in range(scenario.n_ues)]
        for ue, offset in enumerate(self.frame_offsets):
            self.engine.schedule_at(offset, EventKind.FRAME_SEND, ue=ue, frame=0)

        if scenario.mobility.model != MobilityModel.STATIC:
            self.engine.schedule_at(scenario.mobility.tick, EventKind.MOBILITY_TICK, tick=1)
        if self.record_trajectories:
            self._record_positions(0.0)

        if self.algorithm != HandoffAlgorithm.NO_HO:
            measurement = self.rng.get("measurement")
            interval = scenario.handoff.measurement_interval
            for ue in range(scenario.n_ues):
                phase = float(measurement.uniform(0.0, interval))
                self.measurement_events[ue] = self.engine.schedule_at(
                    phase, EventKind.MEASUREMENT_REPORT_TICK, ue=ue
                )

        self.engine.schedule_at(0.0, EventKind.LOAD_REPORT_TICK)
        self.engine.schedule_at(scenario.metrics.flush_interval, EventKind.METRICS_FLUSH)

    # Traffic and MEC

    def _on_frame_send(self, event: SimEvent) -> None:
        scenario = self.scenario
        now = self.engine.now
        ue, frame = event.payload["ue"], event.payload["frame"]

        next_time = self.frame_offsets[ue] + (frame + 1) * scenario.frame_period
        if next_time <= scenario.sim_time:
            self.engine.schedule_at(next_time, EventKind.FRAME_SEND, ue=ue, frame=frame + 1)

        job = FrameJob(
            job_id=len(self.jobs),
            ue_id=ue,
            sent_at=now,
            uplink_bytes=scenario.uplink_bytes,
            result_bytes=scenario.result_bytes,
        )
        self.jobs.append(job)

        sector = self.table.serving[ue]
        if sector is None:
            job.outcome = JobOutcome.HANDOFF_INTERRUPTION
            return

        job.origin_sector = sector
        job.mec_id = self.layout.mec_of(sector)
        job.uplink_sinr_db = self.uplink_sinr(ue, sector)
        delay = RadioService.tx_delay(
            job.uplink_bytes,
            job.uplink_sinr_db,
            self.air.n_active(LinkDirection.UPLINK, sector, ue),
            LinkDirection.UPLINK,
            self.calibration,
            scenario.radio.outage_sinr_db,
        )
        if delay is None:
            job.outcome = JobOutcome.RADIO_OUTAGE
            return
        self.air.start(LinkDirection.UPLINK, sector, ue)
        self.engine.schedule_at(now + delay, EventKind.UPLINK_ARRIVAL, job=job.job_id)

    def _on_uplink_arrival(self, event: SimEvent) -> None:
        job = self.jobs[event.payload["job"]]
        job.uplink_arrived_at = self.engine.now
        self.air.finish(LinkDirection.UPLINK, job.origin_sector, job.ue_id)
        server = self.servers[job.mec_id]
        result = server.enqueue(job, self.engine.now)
        if result.completes_at is not None:
            self.engine.schedule_at(
                result.completes_at, EventKind.SERVICE_COMPLETE, mec=server.mec_id, queue=result.queue_index, job=job.job_id
            )

    def _on_service_complete(self, event: SimEvent) -> None:
        now = self.engine.now
        server = self.servers[event.payload["mec"]]
        queue_index = event.payload["queue"]
        job, next_completion = server.complete_service(queue_index, now)
        if job.job_id != event.payload["job"]:
            raise RuntimeError(f"MEC {server.mec_id} completed job {job.job_id}, expected {event.payload['job']}")
        if next_completion is not None:
            head = server.queues[queue_index][0]
            self.engine.schedule_at(
                next_completion, EventKind.SERVICE_COMPLETE, mec=server.mec_id, queue=queue_index, job=head.job_id
            )

        discard = MecService.result_outcome(job, self.table.mec_of_ue(job.ue_id))
        if discard is not None:
            job.outcome = discard
            return

        sector = self.table.serving[job.ue_id]
        job.downlink_sinr_db = float(self.links.sinr[job.ue_id, sector])
        delay = RadioService.tx_delay(
            job.result_bytes,
            job.downlink_sinr_db,
            self.air.n_active(LinkDirection.DOWNLINK, sector, job.ue_id),
            LinkDirection.DOWNLINK,
            self.calibration,
            self.scenario.radio.outage_sinr_db,
        )
        if delay is None:
            job.outcome = JobOutcome.RADIO_OUTAGE
            return
        job.downlink_sector = sector
        job.downlink_sent_at = now
        self.air.start(LinkDirection.DOWNLINK, sector, job.ue_id)
        self.engine.schedule_at(now + delay, EventKind.DOWNLINK_ARRIVAL, job=job.job_id)

    def _on_downlink_arrival(self, event: SimEvent) -> None:
        job = self.jobs[event.payload["job"]]
        job.delivered_at = self.engine.now
        self.air.finish(LinkDirection.DOWNLINK, job.downlink_sector, job.ue_id)
        job.outcome = JobOutcome.DELIVERED

    # Mobility and radio

    def _on_mobility_tick(self, event: SimEvent) -> None:
        mobility = self.scenario.mobility
        tick = event.payload["tick"]
        rng = self.rng.get("mobility")
        area = self.layout.area
        self.states = [MobilityService.step(s, mobility.tick, mobility, area, rng) for s in self.states]
        self._refresh_links()

        if self.record_trajectories:
            every = max(1, int(round(mobility.trajectory_interval / mobility.tick)))
            if tick % every == 0:
                self._record_positions(self.engine.now)

        next_time = (tick + 1) * mobility.tick
        if next_time <= self.scenario.sim_time:
            self.engine.schedule_at(next_time, EventKind.MOBILITY_TICK, tick=tick + 1)

    def _record_positions(self, now: float) -> None:
        self.trajectories.extend((now, s.ue_id, s.x, s.y) for s in self.states)

    # Handoff

    def _loads_by_sector(self, now: float) -> Dict[int, LoadReport]:
        while self._loads_in_flight and self._loads_in_flight[0][0] <= now:
            _, reports = self._loads_in_flight.popleft()
            for report in reports:
                self.loads[report.mec_id] = report
        return {
            sector.sector_id: self.loads[sector.mec_id]
            for sector in self.layout.sectors
            if sector.mec_id in self.loads
        }

    def _on_measurement_tick(self, event: SimEvent) -> None:
        params = self.scenario.handoff
        now = self.engine.now
        ue = event.payload["ue"]
        self.measurement_events[ue] = self.engine.schedule_at(
            now + params.measurement_interval, EventKind.MEASUREMENT_REPORT_TICK, ue=ue
        )

        serving = self.table.serving[ue]
        if serving is None:
            return
        report = HandoffService.build_report(
            ue, serving, self.links.rsrq[ue], self.links.rsrp[ue], params.probe_floor_dbm, now
        )
        loads = self._loads_by_sector(now) if self.algorithm == HandoffAlgorithm.COMP_HO else {}
        decision = HandoffService.decide(report, loads, params, self.a3_states[ue])
        if decision is None:
            return

        started, _ = self.executor.execute(decision, now)
        if not started:
            return
        self.a3_states[ue].reset()
        self.handoff_records.append(
            HandoffRecord(
                time=now,
                ue=ue,
                source=decision.source,
                target=decision.target,
                algorithm=self.algorithm.value,
                reason=decision.reason.value,
                f_source=decision.f_source,
                f_target=decision.f_target,
            )
        )
        # measurements restart once the UE is attached to the target
        self.engine.cancel(self.measurement_events[ue])
        self.measurement_events[ue] = self.engine.schedule_at(
            now + params.handoff_execution_time + params.measurement_interval,
            EventKind.MEASUREMENT_REPORT_TICK,
            ue=ue,
        )

    def _on_handoff_complete(self, event: SimEvent) -> None:
        self.executor.complete(event.payload["ue"])

    def _on_load_report_tick(self, event: SimEvent) -> None:
        mec = self.scenario.mec
        now = self.engine.now
        reports = [server.report_load(now) for server in self.servers]
        self._loads_in_flight.append((now + mec.load_report_latency, reports))
        self.engine.schedule_at(now + mec.load_report_interval, EventKind.LOAD_REPORT_TICK)

    def _on_metrics_flush(self, event: SimEvent) -> None:
        now = self.engine.now
        delivered = sum(1 for j in self.jobs if j.outcome == JobOutcome.DELIVERED)
        logger.debug(
            f"[{self.algorithm.value} seed {self.seed}] t={now:.1f}s jobs={len(self.jobs)} "
            f"delivered={delivered} handoffs={len(self.handoff_records)} events={self.engine.dispatched}"
        )
        self.engine.schedule_at(now + self.scenario.metrics.flush_interval, EventKind.METRICS_FLUSH)

    # Results

    def _packet_record(self, job: FrameJob, t_end: float) -> PacketRecord:
        def upto(t: Optional[float]) -> Optional[float]:
            return t if t is not None and t <= t_end else None

        arrived = upto(job.uplink_arrived_at)
        start = upto(job.service_start)
        end = upto(job.service_end)
        delivered = job.delivered_at if job.outcome == JobOutcome.DELIVERED else None
        downlink_sent = job.downlink_sent_at if delivered is not None else None
        return PacketRecord(
            job_id=job.job_id,
            ue_id=job.ue_id,
            origin_sector=job.origin_sector,
            mec_id=job.mec_id,
            outcome=job.outcome,
            sent_at=job.sent_at,
            uplink_arrived_at=arrived,
            service_start=start,
            service_end=end,
            delivered_at=delivered,
            uplink_bytes=job.uplink_bytes,
            result_bytes=job.result_bytes,
            uplink_sinr_db=job.uplink_sinr_db,
            downlink_sinr_db=job.downlink_sinr_db,
            uplink_tx_delay=arrived - job.sent_at if arrived is not None else None,
            queue_wait=start - arrived if start is not None and arrived is not None else None,
            service_time=end - start if end is not None and start is not None else None,
            downlink_tx_delay=delivered - downlink_sent if delivered is not None else None,
            experienced_delay=delivered - job.sent_at if delivered is not None else None,
        )

    def oracle_costs(self) -> Tuple[float, float]:
        """
        Live versus optimal total delay for the first UEs at the current instant

        Each UE-MEC cost is the uplink transmission delay through that MEC's best
        sector plus the MEC's current queue metric.
        """
        k = min(self.oracle_snapshot, self.scenario.n_ues)
        now = self.engine.now
        n_mecs = self.layout.n_mecs
        matrix = np.full((k, n_mecs), OUTAGE_PENALTY)
        for ue in range(k):
            for mec in range(n_mecs):
                sectors = [s.sector_id for s in self.layout.sectors if s.mec_id == mec]
                best = max(sectors, key=lambda s: self.uplink_sinr(ue, s))
                delay = RadioService.tx_delay(
                    self.scenario.uplink_bytes,
                    self.uplink_sinr(ue, best),
                    self.air.n_active(LinkDirection.UPLINK, best, ue),
                    LinkDirection.UPLINK,
                    self.calibration,
                    self.scenario.radio.outage_sinr_db,
                )
                queue = self.servers[mec].report_load(now).queue_metric
                matrix[ue, mec] = (OUTAGE_PENALTY if delay is None else delay) + queue

        live = []
        for ue in range(k):
            pending = self.table.pending.get(ue)
            sector = pending.target if pending is not None else self.table.serving[ue]
            live.append(self.layout.mec_of(sector))
        optimal = OracleService.oracle_assign(matrix, [self.scenario.mec.capacity] * n_mecs)
        return OracleService.assignment_cost(matrix, live), optimal.total_cost

    def run(self) -> RunResult:
        scenario = self.scenario
        logger.info(f"Starting run: algorithm={self.algorithm.value} seed={self.seed} ues={scenario.n_ues}")
        self._initial_schedule()
        self.engine.run_until(scenario.sim_time)

        records = [self._packet_record(job, scenario.sim_time) for job in self.jobs]
        summary = StatisticsService.summarize(
            records,
            self.handoff_records,
            self.algorithm.value,
            self.seed,
            scenario.warmup,
            scenario.sim_time,
            scenario.metrics.impairment_table,
        )
        if self.oracle_snapshot > 0:
            live, optimal = self.oracle_costs()
            summary = summary.copy(update={"oracle_live_cost": live, "oracle_optimal_cost": optimal})

        logger.info(
            f"Finished run: algorithm={self.algorithm.value} seed={self.seed} "
            f"events={self.engine.dispatched} delivered={summary.delivered}/{summary.jobs_sent} "
            f"handoffs={summary.handoffs}"
        )
        return RunResult(
            algorithm=self.algorithm,
            seed=self.seed,
            records=records,
            handoffs=self.handoff_records,
            summary=summary,
            trajectories=self.trajectories,
            dispatched=self.engine.dispatched,
        )


def run_simulation(
    scenario: Scenario,
    seed: int,
    trace: Optional[TextIO] = None,
    record_trajectories: bool = False,
    oracle_snapshot: int = 0,
) -> RunResult:
    return Simulation(scenario, seed, trace, record_trajectories, oracle_snapshot).run()
