"""CSV artifact shapes, seed derivation, and reproducibility."""
from __future__ import annotations

import io

import pytest

from topomon.experiment import (
    CSV_HEADER,
    SUMMARY_HEADER,
    EmptySweep,
    pooled,
    run_experiment,
    run_sweep,
)
from topomon.metrics import ConfusionCounts
from topomon.simulation import ExperimentConfig


def tiny(**kw) -> ExperimentConfig:
    base = dict(
        nodes=10,
        monitors=2,
        variability_s=0.0,
        duration_ms=9_000,
        probe_every_ms=3_000,
        scheduling_mode="fixed",
        f_init=3,
        adaptive=False,
        seed=1,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def test_run_writes_header_and_one_row_per_probe():
    raw = io.StringIO()
    report = run_experiment(tiny(), raw=raw)
    lines = raw.getvalue().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 1 + len(report.samples) == 4
    first = lines[1].split(",")
    assert first[:4] == ["0", "0", "1", "3000"]
    assert first[7] == "1.000000"  # honest world: exact
    assert first[8] == "1.000000"


def test_pooled_counts_sum_probes():
    report = run_experiment(tiny())
    want = ConfusionCounts(0, 0, 0)
    for s in report.samples:
        want = want + ConfusionCounts(s.tp, s.fp, s.fn)
    assert report.totals == want == pooled(report.samples)
    assert report.precision == 1.0 and report.recall == 1.0


def test_sweep_shape_and_seed_derivation():
    raw, summary = io.StringIO(), io.StringIO()
    report = run_sweep(
        [10.0, 0.0], [0, 20], 2, base=tiny(seed=100), raw=raw, summary=summary
    )
    raw_lines = raw.getvalue().splitlines()
    assert raw_lines[0] == CSV_HEADER
    assert len(raw_lines) == 1 + 2 * 2 * 2  # vars x pcts x repeats, one row per run
    seeds = [int(ln.split(",")[2]) for ln in raw_lines[1:]]
    assert seeds == [100, 101] * 4
    assert [ln.split(",")[0] for ln in raw_lines[1:]] == ["10"] * 4 + ["0"] * 4
    sm = summary.getvalue().splitlines()
    assert sm[0] == SUMMARY_HEADER
    assert len(sm) == 1 + 4
    assert len(report.cells) == 4 and len(report.runs) == 8
    assert report.ok


def test_summary_reports_one_decimal_percentages():
    summary = io.StringIO()
    run_sweep([0.0], [0], 1, base=tiny(), summary=summary)
    row = summary.getvalue().splitlines()[1].split(",")
    assert row == ["0", "0", "100.0", "100.0"]


def test_sweep_is_byte_identical_across_invocations():
    def go():
        raw, summary = io.StringIO(), io.StringIO()
        run_sweep([0.0, 10.0], [0, 30], 2, base=tiny(), raw=raw, summary=summary)
        return raw.getvalue(), summary.getvalue()

    assert go() == go()


@pytest.mark.parametrize(
    "vars_,pcts,repeats",
    [([], [0], 1), ([1.0], [], 1), ([1.0], [0], 0)],
)
def test_degenerate_grids_are_rejected(vars_, pcts, repeats):
    with pytest.raises(EmptySweep):
        run_sweep(vars_, pcts, repeats)


def test_failed_runs_are_collected_not_raised():
    bad = tiny(probe_every_ms=10_000_000)  # fails validation inside World
    raw, summary = io.StringIO(), io.StringIO()
    report = run_sweep([0.0], [0], 2, base=bad, raw=raw, summary=summary)
    assert not report.ok
    assert len(report.failures) == 2 and report.runs == []
    assert report.cells[0].runs == 0
    assert len(raw.getvalue().splitlines()) == 1  # header only
    assert summary.getvalue().splitlines()[1] == "0,0,,"  # undefined ratios stay blank
