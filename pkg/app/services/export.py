# app/services/export.py
import os
import math
import shutil
import logging
import tempfile
from contextlib import contextmanager
from dataclasses import asdict, fields
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence

import pandas as pd

from ..exceptions import ExportError
from ..models.jobs import JobOutcome
from ..models.metrics import HandoffRecord, PacketRecord, RunSummary
from ..models.scenario import HandoffAlgorithm, Scenario
from .scenario_loader import echo_scenario
from .statistics import COMPARED_METRICS

logger = logging.getLogger(__name__)

SCHEMA_VERSION = "v1"
FLOAT_FORMAT = "%.6g"

PACKET_COLUMNS = [f.name for f in fields(PacketRecord)]
HANDOFF_COLUMNS = [f.name for f in fields(HandoffRecord)]
TRAJECTORY_COLUMNS = ["time", "ue", "x", "y"]
ALGORITHM_ORDER = [a.value for a in HandoffAlgorithm]


def _none_if_nan(value: Any) -> Any:
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _ordered(summaries: Sequence[RunSummary]) -> List[RunSummary]:
    def key(s: RunSummary):
        rank = ALGORITHM_ORDER.index(s.algorithm) if s.algorithm in ALGORITHM_ORDER else len(ALGORITHM_ORDER)
        return rank, s.algorithm, s.seed

    return sorted(summaries, key=key)


class ExportService:
    """CSV ledgers, summaries and comparison tables"""

    @staticmethod
    def write_csv(frame: pd.DataFrame, path: Path) -> Path:
        try:
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
        except OSError as e:
            raise ExportError(f"Cannot write {path}: {e.strerror or e}") from e
        logger.debug(f"Wrote {len(frame)} rows to {path}")
        return path

    @staticmethod
    def write_text(text: str, path: Path) -> Path:
        try:
            Path(path).write_text(text)
        except OSError as e:
            raise ExportError(f"Cannot write {path}: {e.strerror or e}") from e
        return path

    @staticmethod
    def packets_frame(records: Sequence[PacketRecord]) -> pd.DataFrame:
        rows = []
        for record in records:
            row = asdict(record)
            row["outcome"] = record.outcome.value
            rows.append(row)
        return pd.DataFrame(rows, columns=PACKET_COLUMNS)

    @staticmethod
    def handoffs_frame(handoffs: Sequence[HandoffRecord]) -> pd.DataFrame:
        return pd.DataFrame([asdict(h) for h in handoffs], columns=HANDOFF_COLUMNS)

    @staticmethod
    def trajectories_frame(rows) -> pd.DataFrame:
        return pd.DataFrame(list(rows), columns=TRAJECTORY_COLUMNS)

    @staticmethod
    def summary_frame(summaries: Sequence[RunSummary]) -> pd.DataFrame:
        return pd.DataFrame([s.flat() for s in _ordered(summaries)])

    @staticmethod
    def comparison_frame(comparison: Dict[str, Any]) -> pd.DataFrame:
        """One row per algorithm: mean and CI bounds per metric, plus the reference's improvement"""
        improvements = {c["baseline"]: c for c in comparison["comparisons"]}
        rows = []
        for name in sorted(comparison["algorithms"], key=lambda a: (ALGORITHM_ORDER.index(a) if a in ALGORITHM_ORDER else 99, a)):
            entry = comparison["algorithms"][name]
            row: Dict[str, Any] = {"algorithm": name, "runs": entry["runs"]}
            for metric in COMPARED_METRICS:
                mean, low, high = entry[metric]
                row[f"{metric}_mean"] = mean
                row[f"{metric}_ci_low"] = low
                row[f"{metric}_ci_high"] = high
            for metric in COMPARED_METRICS:
                row[f"{metric}_improvement"] = improvements.get(name, {}).get(f"{metric}_improvement")
            rows.append(row)
        return pd.DataFrame(rows)

    @staticmethod
    def load_packets(path: Path) -> List[PacketRecord]:
        frame = pd.read_csv(path)
        records = []
        for row in frame.to_dict(orient="records"):
            values = {k: _none_if_nan(v) for k, v in row.items()}
            values["outcome"] = JobOutcome(values["outcome"])
            for column in ("job_id", "ue_id", "uplink_bytes", "result_bytes"):
                values[column] = int(values[column])
            for column in ("origin_sector", "mec_id"):
                if values[column] is not None:
                    values[column] = int(values[column])
            records.append(PacketRecord(**values))
        return records

    @staticmethod
    def load_handoffs(path: Path) -> List[HandoffRecord]:
        frame = pd.read_csv(path)
        handoffs = []
        for row in frame.to_dict(orient="records"):
            values = {k: _none_if_nan(v) for k, v in row.items()}
            for column in ("ue", "source", "target"):
                values[column] = int(values[column])
            handoffs.append(HandoffRecord(**values))
        return handoffs

    @staticmethod
    def write_run(
        run_dir: Path,
        records: Sequence[PacketRecord],
        handoffs: Sequence[HandoffRecord],
        summary: RunSummary,
        trajectories: Optional[Sequence] = None,
    ) -> None:
        run_dir.mkdir(parents=True, exist_ok=True)
        ExportService.write_csv(ExportService.packets_frame(records), run_dir / "packets.csv")
        ExportService.write_csv(ExportService.handoffs_frame(handoffs), run_dir / "handoffs.csv")
        ExportService.write_csv(ExportService.summary_frame([summary]), run_dir / "summary.csv")
        if trajectories:
            ExportService.write_csv(ExportService.trajectories_frame(trajectories), run_dir / "trajectories.csv")

    @staticmethod
    def write_scenario(scenario: Scenario, out_dir: Path) -> Path:
        return ExportService.write_text(echo_scenario(scenario), out_dir / "scenario.env")

    @staticmethod
    def write_batch(
        out_dir: Path,
        summaries: Sequence[RunSummary],
        comparison: Optional[Dict[str, Any]] = None,
    ) -> None:
        ExportService.write_csv(ExportService.summary_frame(summaries), out_dir / "run_summary.csv")
        if comparison is not None:
            ExportService.write_csv(ExportService.comparison_frame(comparison), out_dir / "comparison.csv")
        ExportService.write_text(f"{SCHEMA_VERSION}\n", out_dir / "SCHEMA_VERSION")


@contextmanager
def staged_output(out_dir: Path) -> Iterator[Path]:
    """
    Write into a hidden sibling directory and move it into place only on success

    Entries already in out_dir with the same names are replaced; anything else in
    out_dir is left alone. On failure the staging directory is removed.
    """
    out_dir = Path(out_dir)
    parent = out_dir.resolve().parent
    try:
        parent.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=f".{out_dir.name}-", dir=parent))
    except OSError as e:
        raise ExportError(f"Cannot create output directory under {parent}: {e.strerror or e}") from e

    try:
        yield staging
    except BaseException:
        shutil.rmtree(staging, ignore_errors=True)
        raise

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for entry in sorted(staging.iterdir()):
            target = out_dir / entry.name
            if target.is_dir():
                shutil.rmtree(target)
            os.replace(entry, target)
    except OSError as e:
        raise ExportError(f"Cannot move results into {out_dir}: {e.strerror or e}") from e
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    logger.info(f"Results written to {out_dir}")


# Initialize the global service
export_service = ExportService()
