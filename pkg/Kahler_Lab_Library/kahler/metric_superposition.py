"""Negatively curved conformal metrics g |dtau|^2 on planar domains and their superpositions.

Curvature <= -a is tested as Delta log g >= a g with Delta = d^2/dtau dtaubar.
Metrics may carry their Wirtinger jet (g_tau, g_tautaubar); curvature is then
evaluated from the jet, otherwise by a five-point Laplacian.
"""

import logging

import numpy as np

from .conventions import (
    LOGNAME,
    DEFAULT_RELATIVE_TOLERANCE,
    TAU_LAPLACE_FACTOR,
    CompatibilityException,
    PositivityException,
    PreconditionException,
    SampleException,
)

_log = logging.getLogger(LOGNAME)

DISK_MARGIN = 4

HALF_PLANE_RIGHT = "right"
HALF_PLANE_LEFT = "left"
STRIP = "strip"


class PlanarGrid(object):
    """Uniform grid over a box in the tau plane; ``mask`` marks nodes where minima are taken."""

    def __init__(self, x, y, domain, margin=DISK_MARGIN):
        self.x, self.y = np.meshgrid(x, y, indexing="ij")
        self.step = float(x[1] - x[0])
        self.tau = self.x + 1j * self.y
        self.domain = domain
        self.mask = self.__interior(domain, margin)

    @staticmethod
    def __interior(domain, margin):
        inner = domain.copy()
        for _ in range(margin):
            shrunk = inner.copy()
            shrunk[1:, :] &= inner[:-1, :]
            shrunk[:-1, :] &= inner[1:, :]
            shrunk[:, 1:] &= inner[:, :-1]
            shrunk[:, :-1] &= inner[:, 1:]
            shrunk[0, :] = shrunk[-1, :] = False
            shrunk[:, 0] = shrunk[:, -1] = False
            inner = shrunk
        return inner

    @property
    def shape(self):
        return self.x.shape


def make_disk_grid(resolution=256, radius=1.0, margin=DISK_MARGIN):
    axis = np.linspace(-radius, radius, resolution)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    grid = PlanarGrid(axis, axis, x**2 + y**2 < radius**2, margin)
    grid.radius = radius
    return grid


def make_strip_grid(bounds, resolution=256, margin=DISK_MARGIN):
    """Grid over {t0 < Re tau < t1}; metrics on it depend on Re tau only."""
    t0, t1 = bounds
    x = np.linspace(t0, t1, resolution)
    width = 0.5 * (t1 - t0)
    y = np.linspace(-width, width, resolution)
    xx, _ = np.meshgrid(x, y, indexing="ij")
    grid = PlanarGrid(x, y, (xx > t0) & (xx < t1), margin)
    grid.bounds = (t0, t1)
    return grid


class ConformalMetric(object):
    __slots__ = ["grid", "values", "jet"]

    def __init__(self, grid, values, jet=None):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise CompatibilityException("metric does not match the grid")
        bad = np.argwhere(grid.domain & ~(values > 0))
        if bad.size:
            location = tuple(int(i) for i in bad[0])
            raise PositivityException("metric is not positive at node {}".format(location), location)
        self.grid = grid
        self.values = values
        self.jet = jet

    def scaled(self, factor):
        jet = None if self.jet is None else tuple(factor * j for j in self.jet)
        return ConformalMetric(self.grid, factor * self.values, jet)


def poincare_metric(grid, amplitude=1.0, radius=1.0):
    """c 4 R^2 / (R^2 - |tau|^2)^2 with Delta log g = g / (2 c)."""
    c, R2 = amplitude, radius**2
    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(grid.domain, R2 - np.abs(grid.tau) ** 2, np.nan)
        g = 4.0 * c * R2 / w**2
        g_tau = 8.0 * c * R2 * np.conj(grid.tau) / w**3
        g_tautaubar = 8.0 * c * R2 * (R2 + 2.0 * np.abs(grid.tau) ** 2) / w**4
    return ConformalMetric(grid, g, (g_tau, g_tautaubar))


def poincare_family(grid, amplitudes, radii):
    return [poincare_metric(grid, c, R) for c, R in zip(amplitudes, radii)]


def random_family(grid, rng, size=10, amplitudes=(1.0, 3.0), radii=(1.0, 2.0)):
    """Scaled Poincare members with weights; returns (family, weights, a) with a = min 1/(2c)."""
    c = rng.uniform(amplitudes[0], amplitudes[1], size)
    R = rng.uniform(radii[0], radii[1], size)
    weights = rng.uniform(0.5, 2.0, size)
    return poincare_family(grid, c, R), weights, float(np.min(1.0 / (2.0 * c)))


def hyperbolic_density(kind, bounds, t):
    """Complete metric rho |dtau|^2 of curvature -1 (Delta log rho = rho) on a half plane or strip."""
    t = np.asarray(t, dtype=float)
    if kind == HALF_PLANE_RIGHT:
        return 0.5 / (t - bounds[0]) ** 2
    if kind == HALF_PLANE_LEFT:
        return 0.5 / (bounds[1] - t) ** 2
    if kind == STRIP:
        t0, t1 = bounds
        width = t1 - t0
        return (np.pi**2 / (2.0 * width**2)) / np.sin(np.pi * (t - t0) / width) ** 2
    raise ValueError("Unknown hyperbolic domain: " + str(kind))


def strip_metric(grid, scale=1.0):
    """scale * hyperbolic density of the strip of the grid, with its jet."""
    t0, t1 = grid.bounds
    k = np.pi / (t1 - t0)
    A = scale * 0.5 * k**2
    with np.errstate(divide="ignore", invalid="ignore"):
        s = np.where(grid.domain, k * (grid.x - t0), np.nan)
        sin, cos = np.sin(s), np.cos(s)
        rho = A / sin**2
        first = -2.0 * A * k * cos / sin**3
        second = 2.0 * A * k**2 * (1.0 / sin**2 + 3.0 * cos**2 / sin**4)
    return ConformalMetric(grid, rho, (0.5 * first + 0j, TAU_LAPLACE_FACTOR * second))


class Margin(object):
    __slots__ = ["field", "minimum", "constant"]

    def __init__(self, field, minimum, constant):
        self.field = field
        self.minimum = minimum
        self.constant = constant


def log_laplacian(metric):
    """Delta log g from the jet, or by the five-point stencil on the masked nodes."""
    grid = metric.grid
    g = metric.values
    if metric.jet is not None:
        g_tau, g_tautaubar = metric.jet
        return g_tautaubar / g - np.abs(g_tau) ** 2 / g**2
    log_g = np.full(grid.shape, np.nan)
    log_g[grid.domain] = np.log(g[grid.domain])
    result = np.full(grid.shape, np.nan)
    h = grid.step
    result[1:-1, 1:-1] = TAU_LAPLACE_FACTOR * (
        log_g[2:, 1:-1] + log_g[:-2, 1:-1] + log_g[1:-1, 2:] + log_g[1:-1, :-2] - 4.0 * log_g[1:-1, 1:-1]
    ) / h**2
    return result


def curvature_margin(metric, a):
    """Delta log g - a g on the grid and its minimum over the masked interior."""
    field = log_laplacian(metric) - a * metric.values
    mask = metric.grid.mask
    if not np.any(mask):
        raise SampleException("grid has no interior nodes")
    return Margin(field, float(np.min(field[mask])), a)


def superpose(family, weights):
    """g = sum nu_a g_a, jets added when every member carries one."""
    family = list(family)
    weights = np.asarray(weights, dtype=float)
    if len(family) != len(weights) or not family:
        raise CompatibilityException("family and weights differ in length")
    if np.any(weights < 0.0):
        raise CompatibilityException("superposition weights must be nonnegative")
    grid = family[0].grid
    for member in family[1:]:
        if member.grid is not grid:
            raise CompatibilityException("family members live on different grids")
    values = sum(w * m.values for w, m in zip(weights, family))
    jet = None
    if all(m.jet is not None for m in family):
        jet = tuple(sum(w * m.jet[i] for w, m in zip(weights, family)) for i in range(2))
    return ConformalMetric(grid, values, jet)


def member_inequality(metric, a):
    """Delta g - a g^2 - |dg|^2 / g, which equals g (Delta log g - a g) for smooth g."""
    if metric.jet is None:
        return metric.values * curvature_margin(metric, a).field
    g_tau, g_tautaubar = metric.jet
    return g_tautaubar - a * metric.values**2 - np.abs(g_tau) ** 2 / metric.values


def cauchy_margins(family, weights):
    """Minima of g int |dg_a|^2/g_a dnu - |dg|^2 and C int g_a^2 dnu - g^2 over the mask."""
    total = superpose(family, weights)
    mask = total.grid.mask
    C = float(np.sum(weights))
    g_tau = total.jet[0]
    gradient = total.values * sum(w * np.abs(m.jet[0]) ** 2 / m.values for w, m in zip(weights, family)) - np.abs(g_tau) ** 2
    square = C * sum(w * m.values**2 for w, m in zip(weights, family)) - total.values**2
    return float(np.min(gradient[mask])), float(np.min(square[mask]))


class PropResult(object):
    __slots__ = ["margin", "constant", "member_margins", "member_inequalities", "cauchy", "relative"]


def prop_check(family, weights, a, tolerance=DEFAULT_RELATIVE_TOLERANCE):
    """Delta log g >= (a/C) g for g = sum nu_a g_a, given Delta log g_a >= a g_a memberwise."""
    family = list(family)
    weights = np.asarray(weights, dtype=float)
    result = PropResult()
    result.member_margins = []
    result.member_inequalities = []
    for index, member in enumerate(family):
        margin = curvature_margin(member, a)
        scale = a * float(np.max(member.values[member.grid.mask]))
        if margin.minimum < -tolerance * max(1.0, scale):
            raise PreconditionException(
                "member {} has curvature margin {:.6g} against a = {:.6g}".format(
                    index, margin.minimum, a
                ),
                member=index,
                margin=margin.minimum,
            )
        result.member_margins.append(margin.minimum)
        result.member_inequalities.append(
            float(np.min(member_inequality(member, a)[member.grid.mask]))
        )
    C = float(np.sum(weights))
    total = superpose(family, weights)
    result.constant = a / C
    margin = curvature_margin(total, result.constant)
    result.margin = margin.minimum
    mask = total.grid.mask
    result.relative = float(np.min(margin.field[mask] / (result.constant * total.values[mask])))
    result.cauchy = cauchy_margins(family, weights) if total.jet is not None else None
    _log.debug("superposition margin %.3e against a/C = %.6g", result.margin, result.constant)
    return result
