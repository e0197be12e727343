# app/services/statistics.py
import math
import logging
from collections import Counter
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.stats as stats

from ..models.jobs import JobOutcome
from ..models.metrics import HandoffRecord, PacketRecord, RunSummary
from ..models.radio import LinkDirection
from ..models.scenario import HandoffAlgorithm

logger = logging.getLogger(__name__)

IMPAIRMENT_BINS = 10

# Metrics compared across algorithms, and whether lower is better
COMPARED_METRICS: Dict[str, bool] = {
    "outlier_excluded_mean_delay": True,
    "mean_delay": True,
    "median_delay": True,
    "mad_jitter": True,
    "mec_processed": False,
    "handoffs": True,
    "full_impairment_fraction": True,
    "mean_uplink_sinr_db": False,
    "mean_uplink_tx_delay": True,
}

LOSS_OUTCOMES = [o for o in JobOutcome if o not in (JobOutcome.DELIVERED, JobOutcome.UNFINISHED)]


def _mean(values: Sequence[float]) -> Optional[float]:
    return float(np.mean(values)) if len(values) else None


class StatisticsService:
    """Per-run statistics over the packet ledger and comparisons across seeds"""

    @staticmethod
    def mad_jitter(delays: Sequence[float]) -> float:
        if len(delays) == 0:
            raise ValueError("mad_jitter needs at least one sample")
        x = np.asarray(delays, dtype=float)
        return float(np.median(np.abs(x - np.median(x))))

    @staticmethod
    def outlier_excluded(samples: Sequence[float]) -> Tuple[np.ndarray, bool]:
        """
        Samples within one (population) standard deviation of the mean

        Returns the retained samples and whether the filter had to fall back to the
        raw samples because nothing was retained.
        """
        x = np.asarray(samples, dtype=float)
        if len(x) < 2:
            raise ValueError("outlier exclusion needs at least two samples")
        mean, std = x.mean(), x.std()
        retained = x[np.abs(x - mean) <= std]
        if len(retained) == 0:
            logger.warning(f"All {len(x)} samples fell outside one standard deviation; using the raw mean")
            return x, True
        return retained, False

    @staticmethod
    def outlier_excluded_mean(samples: Sequence[float]) -> float:
        retained, _ = StatisticsService.outlier_excluded(samples)
        return float(retained.mean())

    @staticmethod
    def throughput(records: Sequence[PacketRecord], direction: LinkDirection, window: float) -> float:
        """Mbps sent on the uplink, or received on the downlink, over the window"""
        if window <= 0:
            raise ValueError("window must be positive")
        if direction == LinkDirection.UPLINK:
            total = sum(r.uplink_bytes for r in records if r.transmitted_uplink)
        else:
            total = sum(r.result_bytes for r in records if r.outcome == JobOutcome.DELIVERED)
        return total * 8.0 / window / 1e6

    @staticmethod
    def impairment_scores(delays: Sequence[float], table: Sequence[Tuple[float, float]]) -> np.ndarray:
        knots = np.asarray(table, dtype=float)
        return np.interp(np.asarray(delays, dtype=float), knots[:, 0], knots[:, 1])

    @staticmethod
    def impairment_score(delay: float, table: Sequence[Tuple[float, float]]) -> float:
        return float(StatisticsService.impairment_scores([delay], table)[0])

    @staticmethod
    def impairment_distribution(scores: np.ndarray) -> Tuple[Optional[float], List[float]]:
        """Fraction at full impairment and the score histogram over [0, 1]"""
        if len(scores) == 0:
            return None, [0.0] * IMPAIRMENT_BINS
        counts, _ = np.histogram(scores, bins=IMPAIRMENT_BINS, range=(0.0, 1.0))
        return float(np.mean(scores <= 0.0)), [float(c) / len(scores) for c in counts]

    @staticmethod
    def summarize(
        records: Sequence[PacketRecord],
        handoffs: Sequence[HandoffRecord],
        algorithm: str,
        seed: int,
        warmup: float,
        sim_time: float,
        impairment_table: Sequence[Tuple[float, float]],
    ) -> RunSummary:
        """
        Aggregate one run's ledgers

        Only jobs sent at or after the warm-up count, and handoffs decided at or after
        it. Everything here is recomputable from the exported ledgers.
        """
        window = sim_time - warmup
        records = [r for r in records if r.sent_at >= warmup]
        outcomes = Counter(r.outcome for r in records)
        jobs_sent = len(records)

        delivered = [r for r in records if r.outcome == JobOutcome.DELIVERED]
        delays = np.array([r.experienced_delay for r in delivered], dtype=float)
        ul_delays = [r.uplink_tx_delay for r in records if r.uplink_tx_delay is not None]
        dl_delays = [r.downlink_tx_delay for r in records if r.downlink_tx_delay is not None]

        summary: Dict[str, Any] = {
            "algorithm": algorithm,
            "seed": seed,
            "jobs_sent": jobs_sent,
            "delivered": len(delivered),
            "mec_processed": sum(1 for r in records if r.service_end is not None),
            "handoffs": sum(1 for h in handoffs if h.time >= warmup),
            "unfinished": outcomes[JobOutcome.UNFINISHED],
            "ul_tx_mbps": StatisticsService.throughput(records, LinkDirection.UPLINK, window),
            "dl_rx_mbps": StatisticsService.throughput(records, LinkDirection.DOWNLINK, window),
            "mean_uplink_tx_delay": _mean(ul_delays),
            "mean_downlink_tx_delay": _mean(dl_delays),
            "uplink_std_jitter": float(np.std(ul_delays)) if ul_delays else None,
            "downlink_std_jitter": float(np.std(dl_delays)) if dl_delays else None,
            "mean_uplink_sinr_db": _mean([r.uplink_sinr_db for r in records if r.uplink_sinr_db is not None]),
            "mean_downlink_sinr_db": _mean(
                [r.downlink_sinr_db for r in records if r.downlink_sinr_db is not None]
            ),
            "loss_ratios": {
                o.value: (outcomes[o] / jobs_sent if jobs_sent else 0.0) for o in LOSS_OUTCOMES
            },
        }

        if len(delays):
            p50, p95, p99 = np.quantile(delays, [0.5, 0.95, 0.99])
            summary.update(
                mean_delay=float(delays.mean()),
                median_delay=float(p50),
                p95_delay=float(p95),
                p99_delay=float(p99),
                mad_jitter=StatisticsService.mad_jitter(delays),
            )
            if len(delays) >= 2:
                retained, _ = StatisticsService.outlier_excluded(delays)
                summary.update(
                    outlier_excluded_mean_delay=float(retained.mean()),
                    outlier_excluded_median_delay=float(np.median(retained)),
                )
        else:
            logger.warning(f"{algorithm} seed {seed}: no delivered packets in the statistics window")

        scores = StatisticsService.impairment_scores(delays, impairment_table)
        full, histogram = StatisticsService.impairment_distribution(scores)
        summary.update(full_impairment_fraction=full, impairment_histogram=histogram)
        return RunSummary(**summary)

    @staticmethod
    def mean_confidence_interval(values: Sequence[float], confidence_level: float = 0.95) -> Tuple[float, float, float]:
        """Mean and Student-t interval across independent runs"""
        x = np.asarray(values, dtype=float)
        mean = float(x.mean())
        if len(x) < 2 or float(x.std()) == 0.0:
            return mean, mean, mean
        half = stats.t.ppf(1 - (1 - confidence_level) / 2, len(x) - 1) * stats.sem(x)
        return mean, mean - float(half), mean + float(half)

    @staticmethod
    def calculate_relative_improvement(baseline: float, candidate: float, lower_is_better: bool = True) -> float:
        """Fractional improvement of candidate over baseline, e.g. 0.4 for 40% better"""
        if baseline == 0:
            return 0.0 if candidate == 0 else (-math.inf if lower_is_better else math.inf)
        change = (candidate - baseline) / abs(baseline)
        return -change if lower_is_better else change

    @staticmethod
    def compare_algorithms(
        summaries: Sequence[RunSummary],
        reference: str = HandoffAlgorithm.COMP_HO.value,
        confidence_level: float = 0.95,
    ) -> Dict[str, Any]:
        """
        Per-algorithm means with confidence intervals across seeds, and the
        reference algorithm's relative improvement over every other algorithm
        """
        by_algorithm: Dict[str, List[RunSummary]] = {}
        for s in summaries:
            by_algorithm.setdefault(s.algorithm, []).append(s)

        result: Dict[str, Any] = {"algorithms": {}, "comparisons": []}
        for name, runs in by_algorithm.items():
            entry: Dict[str, Any] = {"runs": len(runs)}
            for metric in COMPARED_METRICS:
                values = [getattr(r, metric) for r in runs if getattr(r, metric) is not None]
                if not values:
                    logger.warning(f"{name}: no values for {metric}")
                    entry[metric] = (None, None, None)
                    continue
                entry[metric] = StatisticsService.mean_confidence_interval(values, confidence_level)
            result["algorithms"][name] = entry

        if reference not in result["algorithms"]:
            return result
        ref = result["algorithms"][reference]
        for name, entry in result["algorithms"].items():
            if name == reference:
                continue
            comparison: Dict[str, Any] = {"algorithm": reference, "baseline": name}
            for metric, lower_is_better in COMPARED_METRICS.items():
                ref_mean, base_mean = ref[metric][0], entry[metric][0]
                if ref_mean is None or base_mean is None:
                    comparison[f"{metric}_improvement"] = None
                    continue
                comparison[f"{metric}_improvement"] = StatisticsService.calculate_relative_improvement(
                    base_mean, ref_mean, lower_is_better
                )
            result["comparisons"].append(comparison)
        return result


# Initialize the global service
statistics_service = StatisticsService()
