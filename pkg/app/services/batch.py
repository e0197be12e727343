# app/services/batch.py
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import pandas as pd

from ..config import settings
from ..models.metrics import RunSummary
from ..models.scenario import HandoffAlgorithm, Scenario
from .export import ExportService
from .geometry import geometry_service
from .radio import RadioService
from .scenario_loader import SWEEP_AXES
from .simulation import run_simulation
from .statistics import StatisticsService

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunOptions:
    trace: bool = False
    trajectories: bool = False
    oracle_snapshot: int = 0
    workers: int = 1


@dataclass(frozen=True)
class RunTask:
    scenario: Scenario
    seed: int
    run_dir: Path
    options: RunOptions


def run_name(algorithm: HandoffAlgorithm, seed: int) -> str:
    return f"{algorithm.value}-seed{seed}"


def execute_task(task: RunTask) -> RunSummary:
    """Run one simulation and write its ledgers; only the summary travels back"""
    task.run_dir.mkdir(parents=True, exist_ok=True)
    trace = open(task.run_dir / "trace.tsv", "w") if task.options.trace else None
    try:
        result = run_simulation(
            task.scenario,
            task.seed,
            trace=trace,
            record_trajectories=task.options.trajectories,
            oracle_snapshot=task.options.oracle_snapshot,
        )
    finally:
        if trace is not None:
            trace.close()
    ExportService.write_run(task.run_dir, result.records, result.handoffs, result.summary, result.trajectories)
    return result.summary


class BatchService:
    """Algorithm x seed batches and one-axis sweeps"""

    @staticmethod
    def tasks(
        scenario: Scenario,
        algorithms: Sequence[HandoffAlgorithm],
        seeds: Sequence[int],
        runs_dir: Path,
        options: RunOptions,
    ) -> List[RunTask]:
        return [
            RunTask(scenario.with_algorithm(algorithm), seed, runs_dir / run_name(algorithm, seed), options)
            for algorithm in algorithms
            for seed in seeds
        ]

    @staticmethod
    def execute(tasks: Sequence[RunTask], workers: int) -> List[RunSummary]:
        if workers <= 1 or len(tasks) <= 1:
            return [execute_task(task) for task in tasks]
        logger.info(f"Running {len(tasks)} simulations on {workers} worker processes")
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(execute_task, tasks))

    @staticmethod
    def run_batch(
        scenario: Scenario,
        algorithms: Sequence[HandoffAlgorithm],
        seeds: Sequence[int],
        out_dir: Path,
        options: Optional[RunOptions] = None,
    ) -> List[RunSummary]:
        """
        Every algorithm on every seed, then run_summary.csv and comparison.csv

        The comparison is produced only after all runs completed.
        """
        options = options or RunOptions(workers=settings.MAX_WORKERS)
        tasks = BatchService.tasks(scenario, algorithms, seeds, out_dir / "runs", options)
        logger.info(f"Batch of {len(tasks)} runs: {[a.value for a in algorithms]} x seeds {list(seeds)}")
        summaries = BatchService.execute(tasks, options.workers)

        comparison = StatisticsService.compare_algorithms(summaries)
        ExportService.write_batch(out_dir, summaries, comparison)
        BatchService.log_comparison(comparison)
        return summaries

    @staticmethod
    def run_sweep(
        scenario_for_value,
        axis: str,
        values: Sequence[str],
        algorithms: Sequence[HandoffAlgorithm],
        seeds: Sequence[int],
        out_dir: Path,
        options: Optional[RunOptions] = None,
    ) -> pd.DataFrame:
        """
        One batch per axis value; scenario_for_value maps a value string to its Scenario

        Returns the sweep table (one row per value x algorithm x seed), also written
        to sweep.csv.
        """
        if axis not in SWEEP_AXES:
            raise KeyError(axis)
        options = options or RunOptions(workers=settings.MAX_WORKERS)
        rows = []
        for value in values:
            scenario = scenario_for_value(value)
            value_dir = out_dir / "sweep" / f"{axis}={value}"
            value_dir.mkdir(parents=True, exist_ok=True)
            logger.info(f"Sweep {axis}={value}")
            for summary in BatchService.run_batch(scenario, algorithms, seeds, value_dir, options):
                rows.append({"axis": axis, "value": value, **summary.flat()})
        table = pd.DataFrame(rows)
        ExportService.write_csv(table, out_dir / "sweep.csv")
        return table

    @staticmethod
    def write_sinr_map(scenario: Scenario, out_dir: Path) -> Path:
        layout = geometry_service.build_layout(scenario.layout)
        frame = RadioService.sinr_map(layout, scenario.radio)
        return ExportService.write_csv(frame, out_dir / "sinr_map.csv")

    @staticmethod
    def log_comparison(comparison: Dict) -> None:
        for name, entry in comparison["algorithms"].items():
            mean, low, high = entry["outlier_excluded_mean_delay"]
            if mean is None:
                logger.info(f"{name:>8}: no delivered packets")
                continue
            logger.info(
                f"{name:>8}: outlier-excluded mean delay {mean * 1e3:.1f} ms "
                f"[{low * 1e3:.1f}, {high * 1e3:.1f}] over {entry['runs']} run(s)"
            )
        for c in comparison["comparisons"]:
            improvement = c.get("outlier_excluded_mean_delay_improvement")
            if improvement is not None:
                logger.info(f"{c['algorithm']} vs {c['baseline']}: {improvement:+.1%} delay improvement")


def seeds_for(count: Optional[int], base: Optional[int], configured: Sequence[int]) -> List[int]:
    """Seeds from --seeds/--seed-base, or the scenario's own list"""
    if count is None and base is None:
        return list(configured)
    if count is None:
        count = len(configured)
    if count < 1:
        raise ValueError("--seeds must be at least 1")
    start = 1 if base is None else base
    return list(range(start, start + count))


def algorithms_for(choice: str) -> Tuple[HandoffAlgorithm, ...]:
    if choice == "all":
        return tuple(HandoffAlgorithm)
    return (HandoffAlgorithm(choice),)


# Initialize the global service
batch_service = BatchService()
