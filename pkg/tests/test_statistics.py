import math

import numpy as np
import pytest

from app.exceptions import ConfigurationError
from app.models.jobs import JobOutcome
from app.models.metrics import HandoffRecord, PacketRecord, RunSummary
from app.models.radio import LinkDirection
from app.services.scenario_loader import load_scenario
from app.services.statistics import IMPAIRMENT_BINS, StatisticsService

TABLE = [(0.05, 1.0), (0.25, 0.5), (0.5, 0.0)]


def _record(job_id, sent_at, delay=None, outcome=JobOutcome.DELIVERED, uplink=0.03):
    delivered = outcome == JobOutcome.DELIVERED
    return PacketRecord(
        job_id=job_id,
        ue_id=0,
        origin_sector=0,
        mec_id=0,
        outcome=outcome,
        sent_at=sent_at,
        uplink_arrived_at=sent_at + uplink if uplink is not None else None,
        service_start=sent_at + uplink if delivered else None,
        service_end=sent_at + uplink + 0.02 if delivered else None,
        delivered_at=sent_at + delay if delivered else None,
        uplink_bytes=12000,
        result_bytes=60,
        uplink_sinr_db=20.0,
        downlink_sinr_db=20.0 if delivered else None,
        uplink_tx_delay=uplink,
        queue_wait=0.0 if delivered else None,
        service_time=0.02 if delivered else None,
        downlink_tx_delay=delay - uplink - 0.02 if delivered else None,
        experienced_delay=delay if delivered else None,
    )


def _summary(algorithm, seed, delay, handoffs=0):
    return RunSummary(
        algorithm=algorithm,
        seed=seed,
        jobs_sent=10,
        delivered=10,
        mean_delay=delay,
        median_delay=delay,
        outlier_excluded_mean_delay=delay,
        mad_jitter=0.001,
        mec_processed=10,
        handoffs=handoffs,
        full_impairment_fraction=0.0,
        mean_uplink_sinr_db=20.0,
        mean_uplink_tx_delay=0.03,
    )


def test_mad_jitter_of_constant_is_zero():
    assert StatisticsService.mad_jitter([0.05] * 10) == 0.0


def test_mad_jitter_small_sample():
    assert StatisticsService.mad_jitter([1.0, 2.0, 3.0, 4.0, 100.0]) == pytest.approx(1.0)


def test_mad_jitter_resists_a_single_outlier():
    samples = list(range(1, 100))
    clean = StatisticsService.mad_jitter(samples)
    dirty = StatisticsService.mad_jitter(samples + [1e6])
    assert abs(dirty - clean) / clean < 0.05


def test_mad_jitter_needs_samples():
    with pytest.raises(ValueError):
        StatisticsService.mad_jitter([])


def test_outlier_exclusion_drops_far_samples():
    samples = [0.05] * 20 + [1.0]
    retained, fell_back = StatisticsService.outlier_excluded(samples)
    assert not fell_back
    assert len(retained) == 20
    assert StatisticsService.outlier_excluded_mean(samples) == pytest.approx(0.05)


def test_outlier_exclusion_keeps_constant_samples():
    retained, fell_back = StatisticsService.outlier_excluded([0.25, 0.25, 0.25])
    assert len(retained) == 3
    assert not fell_back


def test_outlier_exclusion_keeps_two_point_samples():
    # both points sit exactly one population std from the mean
    retained, _ = StatisticsService.outlier_excluded([0.0, 1.0])
    assert len(retained) == 2


def test_outlier_exclusion_needs_two_samples():
    with pytest.raises(ValueError):
        StatisticsService.outlier_excluded([1.0])


@pytest.mark.parametrize(
    "delay, score",
    [(0.0, 1.0), (0.05, 1.0), (0.15, 0.75), (0.25, 0.5), (0.375, 0.25), (0.5, 0.0), (3.0, 0.0)],
)
def test_impairment_score_interpolates(delay, score):
    assert StatisticsService.impairment_score(delay, TABLE) == pytest.approx(score)


@pytest.mark.parametrize("table", ["", "0.1:1.0,0.1:0.5", "0.1:0.5,0.2:0.8", "0.1:1.5"])
def test_bad_impairment_tables(table):
    with pytest.raises(ConfigurationError) as info:
        load_scenario(None, {"METRICS_IMPAIRMENT_TABLE": table})
    assert info.value.diagnostics[0].startswith("override: METRICS_IMPAIRMENT_TABLE: ")


def test_impairment_distribution():
    full, histogram = StatisticsService.impairment_distribution(np.array([0.0, 0.0, 0.55, 1.0]))
    assert full == pytest.approx(0.5)
    assert len(histogram) == IMPAIRMENT_BINS
    assert sum(histogram) == pytest.approx(1.0)
    assert histogram[0] == pytest.approx(0.5)
    assert histogram[-1] == pytest.approx(0.25)


def test_impairment_distribution_empty():
    full, histogram = StatisticsService.impairment_distribution(np.array([]))
    assert full is None
    assert histogram == [0.0] * IMPAIRMENT_BINS


def test_throughput():
    records = [_record(i, 1.0 + i * 0.05, delay=0.06) for i in range(10)]
    records.append(_record(10, 1.5, outcome=JobOutcome.RADIO_OUTAGE, uplink=None))
    up = StatisticsService.throughput(records, LinkDirection.UPLINK, 2.0)
    down = StatisticsService.throughput(records, LinkDirection.DOWNLINK, 2.0)
    assert up == pytest.approx(10 * 12000 * 8 / 2.0 / 1e6)
    assert down == pytest.approx(10 * 60 * 8 / 2.0 / 1e6)


def test_summarize_applies_warmup():
    records = [_record(0, 0.5, delay=5.0)] + [_record(i, 1.0 + i * 0.05, delay=0.06) for i in range(1, 11)]
    records.append(_record(11, 2.0, outcome=JobOutcome.QUEUE_OVERFLOW))
    handoffs = [
        HandoffRecord(0.5, 0, 0, 1, "a3", "SignalOnly", None, None),
        HandoffRecord(1.5, 0, 1, 0, "a3", "SignalOnly", None, None),
    ]
    summary = StatisticsService.summarize(records, handoffs, "a3", 7, 1.0, 3.0, TABLE)
    assert summary.jobs_sent == 11
    assert summary.delivered == 10
    assert summary.mean_delay == pytest.approx(0.06)
    assert summary.mad_jitter == pytest.approx(0.0)
    assert summary.handoffs == 1
    assert summary.mec_processed == 10
    assert summary.loss_ratios["QueueOverflow"] == pytest.approx(1 / 11)
    assert summary.full_impairment_fraction == 0.0
    assert summary.impairment_histogram[-1] == pytest.approx(1.0)


def test_summarize_without_deliveries():
    records = [_record(i, 1.0, outcome=JobOutcome.RADIO_OUTAGE, uplink=None) for i in range(3)]
    summary = StatisticsService.summarize(records, [], "noho", 1, 0.0, 2.0, TABLE)
    assert summary.delivered == 0
    assert summary.mean_delay is None
    assert summary.full_impairment_fraction is None
    assert summary.loss_ratios["RadioOutage"] == pytest.approx(1.0)


def test_flat_summary_spreads_nested_fields():
    summary = StatisticsService.summarize([_record(0, 1.0, delay=0.06)], [], "a3", 1, 0.0, 2.0, TABLE)
    row = summary.flat()
    assert "loss_ratios" not in row
    assert row["loss_QueueOverflow"] == 0.0
    assert "loss_Unfinished" not in row
    assert f"impairment_bin_{IMPAIRMENT_BINS - 1}" in row


def test_confidence_interval():
    mean, low, high = StatisticsService.mean_confidence_interval([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    # t(0.975, 2) * 1 / sqrt(3)
    assert high - mean == pytest.approx(4.302653 / math.sqrt(3), rel=1e-4)
    assert low == pytest.approx(2 * mean - high)


def test_confidence_interval_single_run():
    assert StatisticsService.mean_confidence_interval([0.5]) == (0.5, 0.5, 0.5)


def test_relative_improvement():
    assert StatisticsService.calculate_relative_improvement(0.1, 0.06) == pytest.approx(0.4)
    assert StatisticsService.calculate_relative_improvement(100, 120, lower_is_better=False) == pytest.approx(0.2)
    assert StatisticsService.calculate_relative_improvement(0, 0) == 0.0


def test_compare_algorithms():
    summaries = [
        _summary("comp-ho", 1, 0.06),
        _summary("comp-ho", 2, 0.08),
        _summary("a3", 1, 0.10),
        _summary("a3", 2, 0.10),
    ]
    comparison = StatisticsService.compare_algorithms(summaries)
    assert comparison["algorithms"]["comp-ho"]["runs"] == 2
    mean, low, high = comparison["algorithms"]["comp-ho"]["outlier_excluded_mean_delay"]
    assert mean == pytest.approx(0.07)
    assert low < mean < high
    [entry] = comparison["comparisons"]
    assert entry["baseline"] == "a3"
    assert entry["outlier_excluded_mean_delay_improvement"] == pytest.approx(0.3)


def test_compare_without_reference_has_no_comparisons():
    comparison = StatisticsService.compare_algorithms([_summary("a3", 1, 0.1)])
    assert comparison["comparisons"] == []


def _brute_median(values):
    ordered = sorted(values)
    mid = len(ordered) // 2
    return ordered[mid] if len(ordered) % 2 else (ordered[mid - 1] + ordered[mid]) / 2


@pytest.mark.parametrize("seed", range(100))
def test_mad_and_outlier_mean_match_plain_python(seed):
    rng = np.random.default_rng(seed)
    samples = [float(v) for v in rng.lognormal(-3.0, 0.8, size=int(rng.integers(2, 60)))]

    center = _brute_median(samples)
    assert StatisticsService.mad_jitter(samples) == _brute_median([abs(v - center) for v in samples])

    mean = sum(samples) / len(samples)
    std = (sum((v - mean) ** 2 for v in samples) / len(samples)) ** 0.5
    kept = [v for v in samples if abs(v - mean) <= std] or samples
    assert StatisticsService.outlier_excluded_mean(samples) == pytest.approx(sum(kept) / len(kept), rel=1e-12)
