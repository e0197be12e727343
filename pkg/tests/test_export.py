import io

import numpy as np
import pandas as pd
import pytest

from app.exceptions import ExportError
from app.models.jobs import JobOutcome
from app.models.scenario import HandoffAlgorithm, MobilityParams
from app.services.batch import RunOptions, batch_service
from app.services.export import (
    HANDOFF_COLUMNS,
    PACKET_COLUMNS,
    SCHEMA_VERSION,
    ExportService,
    staged_output,
)
from app.services.simulation import run_simulation
from app.services.statistics import StatisticsService

from .conftest import tiny_scenario


@pytest.fixture
def result():
    return run_simulation(tiny_scenario().with_algorithm(HandoffAlgorithm.A2A4_RSRQ), 5, record_trajectories=True)


def test_run_ledgers_have_fixed_columns(tmp_path, result):
    ExportService.write_run(tmp_path, result.records, result.handoffs, result.summary, result.trajectories)
    packets = pd.read_csv(tmp_path / "packets.csv")
    handoffs = pd.read_csv(tmp_path / "handoffs.csv")
    assert list(packets.columns) == PACKET_COLUMNS
    assert list(handoffs.columns) == HANDOFF_COLUMNS
    assert len(packets) == len(result.records)
    assert set(packets["outcome"]) <= {o.value for o in JobOutcome}
    trajectories = pd.read_csv(tmp_path / "trajectories.csv")
    assert list(trajectories.columns) == ["time", "ue", "x", "y"]
    assert trajectories["ue"].nunique() == 6


def test_empty_handoff_ledger_still_has_header(tmp_path):
    result = run_simulation(tiny_scenario().with_algorithm(HandoffAlgorithm.NO_HO), 1)
    ExportService.write_run(tmp_path, result.records, result.handoffs, result.summary)
    assert (tmp_path / "handoffs.csv").read_text().strip() == ",".join(HANDOFF_COLUMNS)
    assert not (tmp_path / "trajectories.csv").exists()


def test_summary_recomputes_from_ledgers(tmp_path, result):
    scenario = tiny_scenario()
    ExportService.write_run(tmp_path, result.records, result.handoffs, result.summary)
    records = ExportService.load_packets(tmp_path / "packets.csv")
    handoffs = ExportService.load_handoffs(tmp_path / "handoffs.csv")
    again = StatisticsService.summarize(
        records, handoffs, "a2a4", 5, scenario.warmup, scenario.sim_time, scenario.metrics.impairment_table
    )
    original = result.summary
    assert again.jobs_sent == original.jobs_sent
    assert again.delivered == original.delivered
    assert again.handoffs == original.handoffs
    assert again.mec_processed == original.mec_processed
    assert again.loss_ratios == original.loss_ratios
    for metric in ("mean_delay", "median_delay", "mad_jitter", "p95_delay"):
        if getattr(original, metric) is None:
            assert getattr(again, metric) is None
        else:
            assert getattr(again, metric) == pytest.approx(getattr(original, metric), rel=1e-4)


def test_same_seed_gives_byte_identical_outputs(tmp_path):
    scenario = tiny_scenario()
    algorithms = [HandoffAlgorithm.COMP_HO, HandoffAlgorithm.A3_RSRP]
    for name in ("first", "second"):
        batch_service.run_batch(scenario, algorithms, [1, 2], tmp_path / name, RunOptions(trace=True))

    first = sorted(p.relative_to(tmp_path / "first") for p in (tmp_path / "first").rglob("*") if p.is_file())
    second = sorted(p.relative_to(tmp_path / "second") for p in (tmp_path / "second").rglob("*") if p.is_file())
    assert first == second
    for relative in first:
        assert (tmp_path / "first" / relative).read_bytes() == (tmp_path / "second" / relative).read_bytes()


def test_batch_writes_schema_version_and_tables(tmp_path):
    summaries = batch_service.run_batch(
        tiny_scenario(), list(HandoffAlgorithm), [1, 2], tmp_path, RunOptions()
    )
    assert len(summaries) == 8
    assert (tmp_path / "SCHEMA_VERSION").read_text() == f"{SCHEMA_VERSION}\n"
    table = pd.read_csv(tmp_path / "run_summary.csv")
    assert len(table) == 8
    assert list(table["algorithm"]) == ["comp-ho"] * 2 + ["a2a4"] * 2 + ["a3"] * 2 + ["noho"] * 2
    comparison = pd.read_csv(tmp_path / "comparison.csv")
    assert list(comparison["algorithm"]) == ["comp-ho", "a2a4", "a3", "noho"]
    # the reference row carries no improvement over itself
    assert pd.isna(comparison.loc[0, "outlier_excluded_mean_delay_improvement"])
    assert not pd.isna(comparison.loc[1, "outlier_excluded_mean_delay_improvement"])


def test_unwritable_path_raises_export_error(tmp_path):
    missing = tmp_path / "no" / "such" / "dir" / "x.csv"
    with pytest.raises(ExportError) as info:
        ExportService.write_csv(pd.DataFrame({"a": [1]}), missing)
    assert str(missing) in str(info.value)


def test_staged_output_moves_results_on_success(tmp_path):
    out = tmp_path / "results"
    out.mkdir()
    (out / "keep.txt").write_text("old")
    (out / "runs").mkdir()
    (out / "runs" / "stale.csv").write_text("stale")

    with staged_output(out) as staging:
        (staging / "runs").mkdir()
        (staging / "runs" / "fresh.csv").write_text("fresh")
        (staging / "SCHEMA_VERSION").write_text("v1\n")

    assert (out / "keep.txt").read_text() == "old"
    assert not (out / "runs" / "stale.csv").exists()
    assert (out / "runs" / "fresh.csv").read_text() == "fresh"
    assert [p.name for p in tmp_path.iterdir()] == ["results"]


def test_staged_output_leaves_nothing_on_failure(tmp_path):
    out = tmp_path / "results"
    with pytest.raises(RuntimeError):
        with staged_output(out) as staging:
            (staging / "partial.csv").write_text("x")
            raise RuntimeError("run aborted")
    assert not out.exists()
    assert list(tmp_path.iterdir()) == []


@pytest.mark.parametrize("seed", range(100))
def test_identical_inputs_give_byte_identical_run_exports(tmp_path, seed):
    rng = np.random.default_rng(seed)
    algorithm = list(HandoffAlgorithm)[seed % len(HandoffAlgorithm)]
    scenario = tiny_scenario(
        n_ues=int(rng.integers(2, 9)),
        fps=float(rng.choice([20.0, 30.0, 50.0])),
        mobility=MobilityParams(speed=float(rng.uniform(0.5, 15.0))),
        sim_time=1.0,
        warmup=0.2,
    ).with_algorithm(algorithm)

    traces = []
    for name in ("first", "second"):
        trace = io.StringIO()
        result = run_simulation(scenario, seed, trace=trace, record_trajectories=True)
        ExportService.write_run(tmp_path / name, result.records, result.handoffs, result.summary, result.trajectories)
        traces.append(trace.getvalue())

    assert traces[0] == traces[1]
    files = sorted(p.name for p in (tmp_path / "first").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "second").iterdir())
    for name in files:
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()
