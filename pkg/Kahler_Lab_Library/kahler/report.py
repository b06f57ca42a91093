"""Report records, refinement trends and report.json."""

import json
import logging

import numpy as np

from .conventions import LOGNAME
from . import csv_writer

_log = logging.getLogger(LOGNAME)

# errors at or below this level count as converged
TREND_FLOOR = 1e-12
RESIDUAL_WARNING = 0.5

ACCEPTANCE = "acceptance"


class ReportRecord(object):
    """One measured quantity, optionally tied to an acceptance criterion.

    ``passed`` is None when the quantity is informational or could not be
    evaluated, e.g. a refinement trend on a single resolution.
    """

    __slots__ = [
        "experiment",
        "criterion",
        "quantity",
        "values",
        "resolutions",
        "slope",
        "residual",
        "threshold",
        "passed",
        "seed",
        "message",
    ]

    def __init__(
        self,
        experiment,
        quantity,
        values,
        criterion=None,
        resolutions=None,
        slope=None,
        residual=None,
        threshold=None,
        passed=None,
        message=None,
    ):
        self.experiment = experiment
        self.criterion = criterion
        self.quantity = quantity
        self.values = values
        self.resolutions = resolutions
        self.slope = slope
        self.residual = residual
        self.threshold = threshold
        self.passed = passed
        self.seed = None
        self.message = message

    @property
    def status(self):
        if self.passed is None:
            return "INFO"
        return "PASS" if self.passed else "FAIL"

    def to_dict(self):
        return {name: _plain(getattr(self, name)) for name in self.__slots__}

    def __repr__(self):
        return "ReportRecord({}, {}, {})".format(self.experiment, self.quantity, self.status)


def _plain(value):
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


class Trend(object):
    """Least-squares fit of log(error) against log(resolution); ``order`` = -slope."""

    __slots__ = ["order", "residual", "converged"]

    def __init__(self, order, residual, converged):
        self.order = order
        self.residual = residual
        self.converged = converged


def refinement_trend(resolutions, errors):
    resolutions = np.asarray(resolutions, dtype=float)
    errors = np.abs(np.asarray(errors, dtype=float))
    if len(resolutions) != len(errors):
        raise ValueError("resolutions and errors differ in length")
    if np.all(errors <= TREND_FLOOR):
        return Trend(None, 0.0, True)
    if len(resolutions) < 2:
        return Trend(None, None, False)
    logs = np.log(np.maximum(errors, TREND_FLOOR))
    coefficients, residual, _, _, _ = np.polyfit(np.log(resolutions), logs, 1, full=True)
    residual = float(residual[0]) if len(residual) else 0.0
    if residual > RESIDUAL_WARNING:
        _log.warning("refinement trend fit residual %.3f, errors %s", residual, errors)
    return Trend(float(-coefficients[0]), residual, False)


def trend_record(experiment, criterion, quantity, resolutions, errors, threshold):
    """Record of an error sequence whose order must reach ``threshold``."""
    trend = refinement_trend(resolutions, errors)
    if trend.converged:
        passed = True
    elif trend.order is None:
        passed = None
    else:
        passed = trend.order >= threshold
    return ReportRecord(
        experiment,
        quantity,
        list(errors),
        criterion=criterion,
        resolutions=list(resolutions),
        slope=trend.order,
        residual=trend.residual,
        threshold=threshold,
        passed=passed,
    )


def bound_record(experiment, criterion, quantity, value, threshold, above=False, resolutions=None):
    """value <= threshold, or value >= threshold when ``above``; both may be sequences."""
    values = np.atleast_1d(np.asarray(value, dtype=float))
    limits = np.broadcast_to(np.asarray(threshold, dtype=float), values.shape)
    passed = bool(np.all(values >= limits) if above else np.all(values <= limits))
    single = np.ndim(value) == 0
    return ReportRecord(
        experiment,
        quantity,
        float(values[0]) if single else list(values),
        criterion=criterion,
        resolutions=resolutions,
        threshold=float(limits[0]) if np.ndim(threshold) == 0 else list(limits),
        passed=passed,
    )


def criterion_summary(records, criteria):
    """One acceptance record per criterion id: PASS iff every evaluated record for it passes."""
    summary = []
    for criterion in sorted(criteria):
        related = [r for r in records if r.criterion == criterion and r.quantity != ACCEPTANCE]
        evaluated = [r for r in related if r.passed is not None]
        if not related:
            passed, message = False, "no experiment in the configuration covers this criterion"
        elif not evaluated:
            passed, message = None, "no record could be evaluated"
        else:
            passed = all(r.passed for r in evaluated)
            failing = sorted({r.experiment + ":" + r.quantity for r in evaluated if not r.passed})
            message = "failing: " + ", ".join(failing) if failing else None
        summary.append(
            ReportRecord(
                "all",
                ACCEPTANCE,
                criteria[criterion],
                criterion=criterion,
                passed=passed,
                message=message,
            )
        )
    return summary


def exit_code(records):
    return 1 if any(r.passed is False for r in records) else 0


def write_report(records, filename, seed):
    for r in records:
        r.seed = seed
    with open(filename, "w") as f:
        json.dump([r.to_dict() for r in records], f, indent=2)
    _log.info("wrote %d records to %s", len(records), filename)


def read_report(filename):
    with open(filename) as f:
        data = json.load(f)
    records = []
    for item in data:
        r = ReportRecord(item["experiment"], item["quantity"], item["values"])
        for name in ReportRecord.__slots__:
            setattr(r, name, item.get(name))
        records.append(r)
    return records


def write_trend_csv(record, csvfile):
    writer = csv_writer.CSVWriter(csvfile, ["resolution", "error"], [csv_writer.INT, csv_writer.DOUBLE])
    writer.writeheader()
    writer.writecolumns({"resolution": record.resolutions, "error": record.values})
