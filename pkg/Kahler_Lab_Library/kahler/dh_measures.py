"""Pushforward measures of omega_t^n/n! under the velocity map, velocity ranges and moment images."""

import logging

import numpy as np
from scipy import interpolate, spatial

from .conventions import (
    LOGNAME,
    ManifoldKind,
    CompatibilityException,
    IncompatibleMeasureException,
)
from .flows import check_commuting, hamiltonian
from . import csv_writer

_log = logging.getLogger(LOGNAME)

DEFAULT_BINS = 256
SUBDIVISIONS = 4
SLICE_DIRECTIONS = 16
COVERAGE_LATTICE = 1024


class EmpiricalMeasure(object):
    """Histogram on R^k: ``edges`` holds one edge array per axis, ``weights`` the bin masses."""

    __slots__ = ["k", "edges", "weights", "mass"]

    def __init__(self, edges, weights, mass=None):
        self.edges = [np.asarray(e, dtype=float) for e in edges]
        self.k = len(self.edges)
        self.weights = np.asarray(weights, dtype=float)
        if np.any(self.weights < 0.0):
            raise IncompatibleMeasureException("negative bin weight")
        self.mass = float(np.sum(self.weights)) if mass is None else float(mass)

    def centers(self):
        return [0.5 * (e[1:] + e[:-1]) for e in self.edges]

    def widths(self):
        return [np.diff(e) for e in self.edges]

    def cdf(self):
        """Normalized CDF at the edges (k = 1)."""
        return np.concatenate([[0.0], np.cumsum(self.weights)]) / np.sum(self.weights)


def _default_edges(values, bins):
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo <= 1e-12 * max(1.0, abs(lo)):
        # unit span with the value in the middle of a bin
        offset = 0.5 / bins if bins % 2 == 0 else 0.0
        return 0.5 * (lo + hi) + (np.arange(bins + 1) - 0.5 * bins) / bins + offset
    return np.linspace(lo, hi, bins + 1)


def _cell_pushforward(manifold, velocity, density, edges, subdivisions):
    """Bin masses when velocity is linear and the density uniform on each sub-cell."""
    m = manifold.m
    fine = np.linspace(0.0, 1.0, manifold.resolution * subdivisions + 1)
    v = interpolate.CubicSpline(m, velocity)(fine)
    primitive = interpolate.CubicSpline(m, density).antiderivative()(fine)
    masses = np.diff(primitive)
    masses *= manifold.integrate(density) / np.sum(masses)
    lo = np.minimum(v[:-1], v[1:])[:, None]
    hi = np.maximum(v[:-1], v[1:])[:, None]
    width = hi - lo
    flat = width <= 0.0
    e = edges[None, :]
    below = np.where(
        flat,
        (lo < e).astype(float),
        np.clip((e - lo) / np.where(flat, 1.0, width), 0.0, 1.0),
    )
    below[:, -1] = np.where(flat[:, 0], (lo[:, 0] <= edges[-1]).astype(float), below[:, -1])
    return np.diff(masses @ below)


def _node_edges(edges, values, bins):
    return _default_edges(values, bins) if edges is None else np.asarray(edges, dtype=float)


def pushforward(path, t, bins=DEFAULT_BINS, edges=None, subdivisions=SUBDIVISIONS):
    """Histogram of the velocity (or gradient) at time t weighted by omega_t^n/n!.

    For two-parameter paths ``t`` is a pair and ``edges`` a pair of edge arrays.
    """
    if bins is None or bins < 1:
        raise IncompatibleMeasureException("pushforward needs at least one bin")
    manifold = path.manifold
    if path.parameters == 2:
        return _pushforward_pair(path, t, bins, edges, subdivisions)
    i = path.index(t)
    velocity = path.velocities[i]
    density = path.densities[i]
    edges = _node_edges(edges, velocity, bins)
    mass = manifold.integrate(density)
    if manifold.kind == ManifoldKind.CP1:
        weights = _cell_pushforward(manifold, velocity, density, edges, subdivisions)
    else:
        weights, _ = np.histogram(
            np.ravel(velocity), bins=edges, weights=np.ravel(manifold.node_measure(density))
        )
    _log.debug("pushforward at t = %g: mass %.9f, binned %.9f", t, mass, np.sum(weights))
    return EmpiricalMeasure([edges], weights, mass)


def _pushforward_pair(path, t, bins, edges, subdivisions):
    manifold = path.manifold
    i, j = path.index(t[0]), path.index(t[1], axis=1)
    g = path.velocities[i, j]
    density = path.densities[i, j]
    if edges is None:
        edges = (None, None)
    edges = [_node_edges(edges[a], g[a], bins) for a in range(2)]
    if _is_split(path, g, i, j):
        forms = path.forms[i, j]
        first, second = manifold.factors
        w1 = _cell_pushforward(first, g[0][:, 0], forms[0][:, 0] + 1.0, edges[0], subdivisions)
        w2 = _cell_pushforward(second, g[1][0, :], forms[1][0, :] + 1.0, edges[1], subdivisions)
        return EmpiricalMeasure(edges, np.outer(w1, w2), manifold.integrate(density))
    weights, _, _ = np.histogram2d(
        np.ravel(g[0]),
        np.ravel(g[1]),
        bins=edges,
        weights=np.ravel(manifold.node_measure(density)),
    )
    return EmpiricalMeasure(edges, weights, manifold.integrate(density))


def _is_split(path, g, i, j):
    if path.manifold.kind != ManifoldKind.PRODUCT or path.forms is None:
        return False
    forms = path.forms[i, j]
    tol = path.manifold.tolerance * max(1.0, float(np.max(np.abs(g))))
    return (
        np.max(np.abs(forms[2])) <= tol
        and np.max(np.ptp(g[0], axis=1)) <= tol
        and np.max(np.ptp(g[1], axis=0)) <= tol
        and np.max(np.ptp(forms[0], axis=1)) <= tol
        and np.max(np.ptp(forms[1], axis=0)) <= tol
    )


def uniform_reference(edges, mass):
    """Uniform measure of the given mass on the box spanned by the edges."""
    if isinstance(edges, np.ndarray) and edges.ndim == 1:
        edges = [edges]
    edges = [np.asarray(e, dtype=float) for e in edges]
    weights = np.ones(())
    for e in edges:
        weights = np.multiply.outer(weights, np.diff(e) / (e[-1] - e[0]))
    return EmpiricalMeasure(edges, mass * weights, mass)


def _coarsen(fine, coarse_edges):
    """Sum the weights of a refined 1-D measure into the coarse bins."""
    positions = np.searchsorted(fine.edges[0], coarse_edges)
    matched = positions < len(fine.edges[0])
    matched[matched] = np.isclose(fine.edges[0][positions[matched]], coarse_edges[matched], rtol=0.0, atol=1e-12)
    if not np.all(matched):
        return None
    cumulative = np.concatenate([[0.0], np.cumsum(fine.weights)])
    return np.diff(cumulative[positions])


def measure_distance(a, b):
    """Sup-distance of normalized CDFs (k = 1) or its maximum over fixed directions (k = 2)."""
    if a.k != b.k:
        raise IncompatibleMeasureException("measures live in different dimensions")
    if a.k == 1:
        return _interval_distance(a, b)
    return _sliced_distance(a, b)


def _interval_distance(a, b):
    ea, eb = a.edges[0], b.edges[0]
    if len(ea) == len(eb) and np.allclose(ea, eb, rtol=0.0, atol=1e-12):
        wa, wb = a.weights, b.weights
    elif len(ea) > len(eb) and _coarsen(a, eb) is not None:
        wa, wb = _coarsen(a, eb), b.weights
    elif len(eb) > len(ea) and _coarsen(b, ea) is not None:
        wa, wb = a.weights, _coarsen(b, ea)
    else:
        raise IncompatibleMeasureException("measures have no common bin refinement")
    ca = np.cumsum(wa) / np.sum(wa)
    cb = np.cumsum(wb) / np.sum(wb)
    return float(np.max(np.abs(ca - cb)))


def _projected_cdf(positions, weights, support):
    index = np.searchsorted(support, positions)
    return np.cumsum(np.bincount(index, weights=weights, minlength=len(support))) / np.sum(weights)


def _sliced_distance(a, b):
    grids = []
    for measure in (a, b):
        c1, c2 = np.meshgrid(*measure.centers(), indexing="ij")
        grids.append((np.ravel(c1), np.ravel(c2), np.ravel(measure.weights)))
    distance = 0.0
    for d in range(SLICE_DIRECTIONS):
        angle = np.pi * d / SLICE_DIRECTIONS
        direction = (np.cos(angle), np.sin(angle))
        projected = [np.round(x * direction[0] + y * direction[1], 12) for x, y, _ in grids]
        support = np.union1d(np.unique(projected[0]), np.unique(projected[1]))
        ca = _projected_cdf(projected[0], grids[0][2], support)
        cb = _projected_cdf(projected[1], grids[1][2], support)
        distance = max(distance, float(np.max(np.abs(ca - cb))))
    return distance


def support_interval(measure):
    """Closed hull of the bins with positive weight."""
    if measure.k == 1:
        occupied = np.flatnonzero(measure.weights > 0.0)
        e = measure.edges[0]
        return RangeSet.interval(e[occupied[0]], e[occupied[-1] + 1], cell=float(np.max(np.diff(e))))
    occupied = np.argwhere(measure.weights > 0.0)
    corners = []
    for i, j in occupied:
        for di in (0, 1):
            for dj in (0, 1):
                corners.append((measure.edges[0][i + di], measure.edges[1][j + dj]))
    return RangeSet.from_points(np.array(corners))


# -- ranges -------------------------------------------------------------------


class RangeSet(object):
    """Interval [lo, hi] (k = 1) or point cloud with its convex hull (k = 2).

    ``cell`` is the largest gap between consecutive distinct coordinates of
    the cloud and serves as the resolution unit of Hausdorff comparisons.
    """

    __slots__ = ["k", "lo", "hi", "points", "vertices", "hull_defect", "coverage_defect", "cell", "gauge"]

    def __init__(self, k):
        self.k = k
        self.lo = self.hi = None
        self.points = self.vertices = None
        self.hull_defect = 0.0
        self.coverage_defect = 0.0
        self.cell = 0.0
        self.gauge = None

    @staticmethod
    def interval(lo, hi, cell=0.0):
        r = RangeSet(1)
        r.lo, r.hi = float(lo), float(hi)
        if r.lo > r.hi:
            raise CompatibilityException("interval with lo > hi")
        r.cell = float(cell)
        return r

    @staticmethod
    def from_points(points):
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            values = np.unique(points)
            cell = float(np.max(np.diff(values))) if len(values) > 1 else 0.0
            return RangeSet.interval(values[0], values[-1], cell)
        r = RangeSet(2)
        r.points = points
        r.cell = max(_largest_gap(points[:, 0]), _largest_gap(points[:, 1]))
        r.vertices, equations = _hull(points)
        if equations is not None:
            outside = points @ equations[:, :2].T + equations[:, 2]
            r.hull_defect = float(max(0.0, np.max(outside)))
        r.coverage_defect = _coverage_defect(points, r.vertices, equations, r.cell)
        return r


def _largest_gap(values):
    values = np.unique(values)
    return float(np.max(np.diff(values))) if len(values) > 1 else 0.0


def _hull(points):
    """Hull vertices (counterclockwise) and facet equations; degenerate clouds have no equations."""
    unique = np.unique(points, axis=0)
    if len(unique) == 1:
        return unique, None
    centered = unique - unique.mean(axis=0)
    if np.linalg.matrix_rank(centered, tol=1e-12 * max(1.0, float(np.max(np.abs(centered))))) < 2:
        axis = np.linalg.svd(centered)[2][0]
        along = centered @ axis
        return unique[[int(np.argmin(along)), int(np.argmax(along))]], None
    hull = spatial.ConvexHull(unique)
    return unique[hull.vertices], hull.equations


def _coverage_defect(points, vertices, equations, cell):
    """max distance from hull points to the cloud, sampled on a lattice inside the hull."""
    if equations is None:
        if len(vertices) == 1:
            return 0.0
        length = float(np.linalg.norm(vertices[1] - vertices[0]))
        count = int(min(COVERAGE_LATTICE, max(2, np.ceil(2.0 * length / max(cell, 1e-300)))))
        lattice = vertices[0] + np.linspace(0.0, 1.0, count)[:, None] * (vertices[1] - vertices[0])
    else:
        lo, hi = points.min(axis=0), points.max(axis=0)
        spacing = max(0.5 * cell, float(np.max(hi - lo)) / COVERAGE_LATTICE)
        axes = [np.arange(lo[a], hi[a] + 0.5 * spacing, spacing) for a in range(2)]
        grid = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=1)
        inside = np.all(grid @ equations[:, :2].T + equations[:, 2] <= 1e-12, axis=1)
        lattice = np.concatenate([grid[inside], vertices])
    distance, _ = spatial.cKDTree(points).query(lattice)
    return float(np.max(distance))


def set_A(path, t):
    """Range of the velocity (k = 1) or gradient cloud (k = 2) at time t."""
    if path.parameters == 2:
        i, j = path.index(t[0]), path.index(t[1], axis=1)
        g = path.velocities[i, j]
        return RangeSet.from_points(np.stack([np.ravel(g[0]), np.ravel(g[1])], axis=1))
    return RangeSet.from_points(np.ravel(path.velocities[path.index(t)]))


def set_B(source, node, times=None, limits=None):
    """Range of t -> u_dot_t(x) over the sampled times, closed with optional endpoint limits.

    ``source`` is a path or an array of velocities with time on the leading axis.
    """
    velocities = source.velocities if hasattr(source, "velocities") else np.asarray(source)
    if times is not None and hasattr(source, "times"):
        velocities = velocities[[source.index(t) for t in times]]
    if isinstance(node, (int, np.integer)):
        node = (node,)
    trajectory = velocities[(slice(None),) + tuple(node)]
    if limits is not None:
        trajectory = np.concatenate([np.asarray(trajectory, dtype=float), np.ravel(limits)])
    if trajectory.ndim == 2 and trajectory.shape[-1] == 2:
        return RangeSet.from_points(trajectory)
    return RangeSet.from_points(np.ravel(trajectory))


def _point_polygon_distance(point, vertices):
    if len(vertices) == 1:
        return float(np.linalg.norm(point - vertices[0]))
    if len(vertices) > 2:
        edges = np.roll(vertices, -1, axis=0) - vertices
        cross = edges[:, 0] * (point[1] - vertices[:, 1]) - edges[:, 1] * (point[0] - vertices[:, 0])
        if np.all(cross >= -1e-12) or np.all(cross <= 1e-12):
            return 0.0
        starts, stops = vertices, np.roll(vertices, -1, axis=0)
    else:
        starts, stops = vertices[:1], vertices[1:]
    direction = stops - starts
    length2 = np.sum(direction**2, axis=1)
    s = np.clip(np.sum((point - starts) * direction, axis=1) / np.where(length2 > 0, length2, 1.0), 0.0, 1.0)
    nearest = starts + s[:, None] * direction
    return float(np.min(np.linalg.norm(point - nearest, axis=1)))


def hausdorff(a, b):
    """Hausdorff distance of two intervals or two convex hulls."""
    if a.k != b.k:
        raise CompatibilityException("range sets of different dimension")
    if a.k == 1:
        return max(abs(a.lo - b.lo), abs(a.hi - b.hi))
    forward = max(_point_polygon_distance(p, b.vertices) for p in a.vertices)
    backward = max(_point_polygon_distance(p, a.vertices) for p in b.vertices)
    return max(forward, backward)


def moment_image(fields, omega=None, stride=1):
    """Image of (H_1, ..., H_k) over the grid, shifted so that the first node maps to 0.

    The shift is stored in ``gauge``; Hamiltonians themselves are mean-zero.
    """
    fields = tuple(fields)
    check_commuting(fields)
    manifold = fields[0].manifold
    if omega is None:
        omega = manifold.reference
    hamiltonians = [hamiltonian(f, omega).values for f in fields]
    sample = (slice(None, None, stride),) * len(manifold.shape)
    offsets = [-float(np.ravel(h)[0]) for h in hamiltonians]
    columns = [np.ravel(h[sample]) + o for h, o in zip(hamiltonians, offsets)]
    points = columns[0] if len(columns) == 1 else np.stack(columns, axis=1)
    image = RangeSet.from_points(points)
    image.gauge = offsets
    _log.info(
        "moment image of %d fields: hull defect %.3e, coverage defect %.3e",
        len(fields),
        image.hull_defect,
        image.coverage_defect,
    )
    return image


# -- export -------------------------------------------------------------------


def write_measure_csv(measure, csvfile):
    if measure.k == 1:
        e = measure.edges[0]
        names = ["lo", "hi", "weight"]
        columns = {"lo": e[:-1], "hi": e[1:], "weight": measure.weights}
    else:
        e1, e2 = measure.edges
        i, j = np.meshgrid(np.arange(len(e1) - 1), np.arange(len(e2) - 1), indexing="ij")
        i, j = np.ravel(i), np.ravel(j)
        names = ["lo1", "hi1", "lo2", "hi2", "weight"]
        columns = {
            "lo1": e1[i],
            "hi1": e1[i + 1],
            "lo2": e2[j],
            "hi2": e2[j + 1],
            "weight": np.ravel(measure.weights),
        }
    writer = csv_writer.CSVWriter(csvfile, names, [csv_writer.DOUBLE] * len(names))
    writer.writeheader()
    writer.writecolumns(columns)


def write_hull_csv(range_set, csvfile):
    if range_set.k == 1:
        vertices = np.array([[range_set.lo], [range_set.hi]])
        writer = csv_writer.CSVWriter(csvfile, ["x"], [csv_writer.DOUBLE])
        writer.writeheader()
        writer.writecolumns({"x": vertices[:, 0]})
        return
    writer = csv_writer.CSVWriter(csvfile, ["vertex"], [csv_writer.VECTOR2D])
    writer.writeheader()
    writer.writecolumns({"vertex": range_set.vertices})
