import numpy as np
import pytest

from kahler.report import (
    ReportRecord,
    bound_record,
    criterion_summary,
    exit_code,
    read_report,
    refinement_trend,
    trend_record,
    write_report,
)

RESOLUTIONS = [64, 128, 256, 512]


def test_second_order_trend():
    errors = [3.0 * n**-2.0 for n in RESOLUTIONS]
    trend = refinement_trend(RESOLUTIONS, errors)
    assert trend.order == pytest.approx(2.0)
    assert trend.residual == pytest.approx(0.0, abs=1e-12)
    assert not trend.converged
    assert trend_record("e", 1, "error", RESOLUTIONS, errors, 1.8).passed
    assert not trend_record("e", 1, "error", RESOLUTIONS, errors, 2.5).passed


def test_converged_trend_passes():
    record = trend_record("e", 5, "distance", RESOLUTIONS, [0.0, 1e-14, 0.0, 0.0], 0.9)
    assert record.passed
    assert record.slope is None


def test_single_resolution_is_informational():
    record = trend_record("e", 7, "kappa", [64], [1e-3], 1.8)
    assert record.passed is None
    assert record.status == "INFO"
    with pytest.raises(ValueError):
        refinement_trend([64, 128], [1.0])


def test_bound_records():
    assert bound_record("e", 2, "defect", 1e-9, 1e-8).passed
    assert not bound_record("e", 2, "defect", 1e-7, 1e-8).passed
    assert bound_record("e", 10, "margin", -1e-9, -1e-6, above=True).passed
    record = bound_record("e", 10, "margin", [0.1, -0.2], [0.0, -0.3], above=True)
    assert record.passed
    assert record.values == [0.1, -0.2]
    assert record.threshold == [0.0, -0.3]
    assert not bound_record("e", 10, "margin", [0.1, -0.2], 0.0, above=True).passed


def test_criterion_summary():
    records = [
        bound_record("a", 1, "x", 0.0, 1.0),
        bound_record("b", 1, "y", 2.0, 1.0),
        trend_record("c", 2, "z", [64], [1e-3], 1.8),
        bound_record("d", 3, "w", 0.5, 1.0),
    ]
    summary = criterion_summary(records, {1: "one", 2: "two", 3: "three", 4: "four"})
    status = {r.criterion: r.status for r in summary}
    assert status == {1: "FAIL", 2: "INFO", 3: "PASS", 4: "FAIL"}
    assert summary[0].message == "failing: b:y"
    assert exit_code(records + summary) == 1
    assert exit_code(records[2:]) == 0


def test_report_file(tmp_path):
    records = [
        ReportRecord("e", "order", [np.float64(1.5), np.inf], criterion=3, passed=np.bool_(True)),
        bound_record("e", 4, "defect", 0.25, 1.0),
    ]
    filename = str(tmp_path / "report.json")
    write_report(records, filename, 11)
    back = read_report(filename)
    assert [r.seed for r in back] == [11, 11]
    assert back[0].values == [1.5, "inf"]
    assert back[0].passed is True
    assert back[1].status == "PASS"
    assert back[1].threshold == 1.0
