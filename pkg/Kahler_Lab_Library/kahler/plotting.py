"""Static SVG figures; the data behind every figure is also written as CSV."""

import logging

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as p
import numpy as np

from .conventions import LOGNAME

_log = logging.getLogger(LOGNAME)

NUMBER_OF_PLOT_COLORS = 12


def _colors(count):
    return p.cm.Paired(np.linspace(0, 1, max(count, NUMBER_OF_PLOT_COLORS)))


def _save(figure, filename):
    figure.savefig(filename, format="svg")
    p.close(figure)
    _log.info("wrote %s", filename)


def plot_measures(measures, filename, title=None):
    """Step histograms of one-dimensional measures given as {label: EmpiricalMeasure}."""
    figure, axis = p.subplots()
    colors = _colors(len(measures))
    for cnt, (label, measure) in enumerate(measures.items()):
        if measure.k != 1:
            raise ValueError("Only one-dimensional measures can be drawn as histograms")
        edges = measure.edges[0]
        density = measure.weights / np.diff(edges) / np.sum(measure.weights)
        axis.stairs(density, edges, label=label, color=colors[cnt * 2 % len(colors)])
    axis.set_xlabel("velocity")
    axis.set_ylabel("normalized density")
    if title:
        figure.suptitle(title, fontsize=12)
    axis.legend(loc="upper right", shadow=True, fontsize="x-small")
    _save(figure, filename)


def plot_measure_2d(measure, filename, title=None):
    figure, axis = p.subplots()
    e1, e2 = measure.edges
    mesh = axis.pcolormesh(e1, e2, measure.weights.T, shading="flat")
    figure.colorbar(mesh, ax=axis)
    axis.set_xlabel("velocity 1")
    axis.set_ylabel("velocity 2")
    if title:
        figure.suptitle(title, fontsize=12)
    _save(figure, filename)


def plot_range(range_set, filename, reference=None, title=None, max_points=20000):
    """Point cloud with its hull (k = 2) or the interval (k = 1); ``reference`` is drawn dashed."""
    figure, axis = p.subplots()
    if range_set.k == 1:
        axis.plot([range_set.lo, range_set.hi], [0.0, 0.0], "b+-", label="range")
        if reference is not None:
            axis.plot([reference.lo, reference.hi], [0.1, 0.1], "rx--", label="reference")
        axis.set_ylim([-1.0, 1.0])
    else:
        points = range_set.points
        if points is not None:
            step = max(1, len(points) // max_points)
            axis.plot(points[::step, 0], points[::step, 1], ",", color="grey")
        hull = np.concatenate([range_set.vertices, range_set.vertices[:1]])
        axis.plot(hull[:, 0], hull[:, 1], "b-", label="hull")
        if reference is not None:
            ref = np.concatenate([reference.vertices, reference.vertices[:1]])
            axis.plot(ref[:, 0], ref[:, 1], "r--", label="reference")
        axis.set_aspect("equal")
    if title:
        figure.suptitle(title, fontsize=12)
    axis.legend(loc="upper right", shadow=True, fontsize="x-small")
    _save(figure, filename)


def plot_curves(times, curves, filename, ylabel, title=None):
    """Curves over t given as {label: values}; entries may be (times, values) pairs."""
    figure, axis = p.subplots()
    colors = _colors(len(curves))
    for cnt, (label, values) in enumerate(curves.items()):
        x = times
        if isinstance(values, tuple):
            x, values = values
        axis.plot(x, values, "-", label=label, color=colors[cnt * 2 % len(colors)])
    axis.set_xlabel("t")
    axis.set_ylabel(ylabel)
    if title:
        figure.suptitle(title, fontsize=12)
    axis.legend(loc="upper right", shadow=True, fontsize="x-small")
    _save(figure, filename)


def plot_trend(record, filename):
    """log-log refinement plot of a trend record."""
    figure, axis = p.subplots()
    errors = np.maximum(np.abs(np.asarray(record.values, dtype=float)), 1e-300)
    axis.loglog(record.resolutions, errors, "rx-", label=record.quantity)
    axis.set_xlabel("resolution")
    axis.set_ylabel("error")
    order = "n/a" if record.slope is None else "{:.2f}".format(record.slope)
    figure.suptitle("{}: order {} [{}]".format(record.quantity, order, record.status), fontsize=12)
    axis.legend(loc="upper right", shadow=True, fontsize="x-small")
    _save(figure, filename)
