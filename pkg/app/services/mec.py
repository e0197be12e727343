# app/services/mec.py
import logging
from collections import deque
from dataclasses import dataclass
from typing import Callable, Deque, List, Optional, Tuple

from ..models.jobs import FrameJob, JobOutcome, LoadReport

logger = logging.getLogger(__name__)

APP_METADATA = ("mar-offload",)


@dataclass(frozen=True)
class EnqueueResult:
    accepted: bool
    queue_index: Optional[int] = None
    completes_at: Optional[float] = None  # set when the job went straight into service


class MecServer:
    """
    Edge server with n FIFO queues sharing one capacity bound

    Service is non-preemptive; the job at the head of each queue is the one being
    served. The server never schedules events itself: callers receive completion
    times and own the event queue.
    """

    def __init__(
        self,
        mec_id: int,
        capacity: int,
        service_time: float,
        n_queues: int = 1,
        draw_service_time: Optional[Callable[[], float]] = None,
    ):
        if capacity < 1 or n_queues < 1:
            raise ValueError("capacity and n_queues must be at least 1")
        self.mec_id = mec_id
        self.capacity = capacity
        self.service_time = service_time
        self.queues: List[Deque[FrameJob]] = [deque() for _ in range(n_queues)]
        self._draw_service_time = draw_service_time or (lambda: service_time)
        self.accepted = 0
        self.overflows = 0
        self.processed = 0

    @property
    def resident(self) -> int:
        return sum(len(q) for q in self.queues)

    def shortest_queue(self) -> int:
        lengths = [len(q) for q in self.queues]
        return lengths.index(min(lengths))

    def _start(self, job: FrameJob, now: float) -> float:
        job.service_start = now
        job.service_end = now + self._draw_service_time()
        return job.service_end

    def enqueue(self, job: FrameJob, now: float) -> EnqueueResult:
        if self.resident >= self.capacity:
            job.outcome = JobOutcome.QUEUE_OVERFLOW
            self.overflows += 1
            logger.debug(f"MEC {self.mec_id} full ({self.capacity}); job {job.job_id} overflowed")
            return EnqueueResult(accepted=False)

        index = self.shortest_queue()
        queue = self.queues[index]
        queue.append(job)
        self.accepted += 1
        if len(queue) == 1:
            return EnqueueResult(accepted=True, queue_index=index, completes_at=self._start(job, now))
        return EnqueueResult(accepted=True, queue_index=index)

    def complete_service(self, queue_index: int, now: float) -> Tuple[FrameJob, Optional[float]]:
        """
        Pop the finished head job and start the next one

        Returns the finished job and, if another job was waiting, its completion time.
        """
        queue = self.queues[queue_index]
        if not queue:
            raise RuntimeError(f"MEC {self.mec_id} queue {queue_index} completed with nothing in service")
        job = queue.popleft()
        self.processed += 1
        if queue:
            return job, self._start(queue[0], now)
        return job, None

    def report_load(self, now: float) -> LoadReport:
        """Estimated max queuing time: jobs in the shortest queue times the service time"""
        shortest = min(len(q) for q in self.queues)
        return LoadReport(
            mec_id=self.mec_id,
            queue_metric=shortest * self.service_time,
            timestamp=now,
            app_metadata=APP_METADATA,
        )

    def residents(self) -> List[FrameJob]:
        return [job for queue in self.queues for job in queue]


class MecService:
    @staticmethod
    def build_servers(
        n_mecs: int,
        capacity: int,
        service_time: float,
        n_queues: int = 1,
        draw_service_time: Optional[Callable[[], float]] = None,
    ) -> List[MecServer]:
        """Every server shares one service-time distribution"""
        return [
            MecServer(mec_id, capacity, service_time, n_queues, draw_service_time)
            for mec_id in range(n_mecs)
        ]

    @staticmethod
    def result_outcome(job: FrameJob, current_mec: Optional[int]) -> Optional[JobOutcome]:
        """
        Decide whether a processed result can go back to its UE

        A UE whose serving MEC changed (or who is between cells) since the upload
        never sees the result. Returns the discard outcome, or None to deliver.
        """
        if current_mec is None or current_mec != job.mec_id:
            return JobOutcome.MEC_MOBILITY_DISCARD
        return None


# Initialize the global service
mec_service = MecService()
