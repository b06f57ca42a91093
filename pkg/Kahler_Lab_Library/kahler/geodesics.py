"""Geodesic paths in the space of Kaehler potentials.

Paths come from three sources:

    induced   omega_t = F_t^* omega for the flow of a holomorphic field, energy gauge
    toric     linear interpolation of symplectic potentials on CP^1 (Legendre transform)
    manual    arbitrary potentials supplied by the caller, velocities by central differences

All time derivatives are real-time derivatives, see kahler.conventions for
the factors relating them to derivatives in tau.
"""

import json
import logging
import os

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, interpolate, optimize

from .conventions import (
    LOGNAME,
    DEFAULT_RELATIVE_TOLERANCE,
    TAU_LAPLACE_FACTOR,
    ManifoldKind,
    Provenance,
    VelocityMethod,
    CompatibilityException,
    ConvexityException,
    ExactnessException,
    PositivityException,
    TimeNodeException,
    UnsupportedFieldException,
)
from .flows import check_commuting, exactness_check, flow, pullback
from .grid_calculus import (
    MetricDensity,
    ScalarField,
    SymplecticPotential,
    make_cp1,
    make_torus,
)
from . import csv_reader, csv_writer

_log = logging.getLogger(LOGNAME)

ENERGY_CLOSED = "closed"
ENERGY_SEGMENT = "segment"

CONVEXITY_SAMPLES = 4097
BUNDLE_MANIFEST = "manifest.json"


class GeodesicPath(object):
    """Potentials u_t on a uniform time grid with their velocities and densities.

    ``times`` is a 1-D array for one-parameter paths and a pair of 1-D arrays
    for two-parameter paths; ``velocities`` then holds the gradient with the
    parameter index on the axis after the time axes. ``densities`` are top
    densities of omega_t against the reference form of the manifold. Product
    paths also carry ``forms``, the (a11, a22, a12) components of
    omega_t - omega_ref.
    """

    def __init__(
        self,
        manifold,
        times,
        potentials,
        velocities,
        densities,
        provenance,
        velocity_method,
        gauge=None,
        base=None,
        forms=None,
        field=None,
        potential=None,
        direction=None,
    ):
        self.manifold = manifold
        self.times = times
        self.potentials = np.asarray(potentials, dtype=float)
        self.velocities = np.asarray(velocities, dtype=float)
        self.densities = np.asarray(densities, dtype=float)
        self.provenance = provenance
        self.velocity_method = velocity_method
        self.gauge = gauge if gauge is not None else {"kind": "energy-zero"}
        self.base = base if base is not None else manifold.reference
        self.forms = forms
        self.field = field
        self.potential = potential
        self.direction = direction

    @property
    def parameters(self):
        return 2 if isinstance(self.times, tuple) else 1

    @property
    def step(self):
        if self.parameters == 2:
            return tuple(_uniform_step(t) for t in self.times)
        return _uniform_step(self.times)

    def index(self, t, axis=0):
        times = self.times[axis] if self.parameters == 2 else self.times
        hits = np.flatnonzero(np.isclose(times, t, rtol=0.0, atol=1e-9 * max(1.0, abs(t))))
        if not hits.size:
            raise TimeNodeException("t = {} is not a node of the time grid".format(t))
        return int(hits[0])

    def interior_index(self, t):
        i = self.index(t)
        if i == 0 or i == len(self.times) - 1:
            raise TimeNodeException("t = {} is a boundary node of the time grid".format(t))
        return i

    def potential_at(self, i):
        return ScalarField(self.manifold, self.potentials[i])

    def velocity_at(self, i):
        return ScalarField(self.manifold, self.velocities[i])

    def omega_at(self, i):
        return MetricDensity(self.manifold, self.densities[i])

    def form_at(self, i):
        return None if self.forms is None else self.forms[i]


def _uniform_step(times):
    times = np.asarray(times, dtype=float)
    if times.size < 2:
        raise TimeNodeException("time grid has fewer than two nodes")
    steps = np.diff(times)
    if np.any(steps <= 0.0) or np.ptp(steps) > 1e-9 * steps[0]:
        raise TimeNodeException("time grid is not uniform")
    return float(steps[0])


def _as_times(times):
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.ndim != 1:
        raise TimeNodeException("time grid must be one dimensional")
    if times.size > 1 and np.any(np.diff(times) <= 0.0):
        raise TimeNodeException("time grid must be strictly increasing")
    return times


# -- energy ----------------------------------------------------------------


def _base_components(manifold, omega):
    """(b11, b22, b12) of a split product form, absolute (reference is (1, 1, 0))."""
    shape = manifold.shape
    if omega is None or omega.factors is None:
        if omega is not None and np.ptp(omega.values) > 0.0:
            raise CompatibilityException("product form is not split by factor")
        return np.stack([np.ones(shape), np.ones(shape), np.zeros(shape)])
    first, second = omega.factors
    return np.stack(
        [
            np.broadcast_to(first.values[:, None], shape),
            np.broadcast_to(second.values[None, :], shape),
            np.zeros(shape),
        ]
    )


def _mixed_determinant(x, y):
    return 0.5 * (x[0] * y[1] + x[1] * y[0] - 2.0 * x[2] * y[2])


def _energy_density(manifold, values, omega):
    """rho with E(u) = int u rho, from the symmetric formula."""
    if manifold.kind == ManifoldKind.PRODUCT:
        base = _base_components(manifold, omega)
        shifted = base + manifold.ddbar(values)
        end = _mixed_determinant(shifted, shifted)
        _check_segment_positivity(manifold, end)
        return (_mixed_determinant(base, base) + _mixed_determinant(base, shifted) + end) / 3.0
    laplacian = manifold.ddbar(values)
    _check_segment_positivity(manifold, omega.values + laplacian)
    return omega.values + 0.5 * laplacian


def aubin_yau_energy(u, omega=None, method=ENERGY_CLOSED):
    """E(u) with E(0) = 0 and dE = int udot omega_u^n / n!.

    ``closed`` is the symmetric formula 1/(n+1) sum_j int u omega^j ^ omega_u^(n-j) / n!,
    ``segment`` integrates the variational formula along s u, s in [0, 1].
    Both run on the omega-mean-zero part of u and add back c V(omega), so
    E(u + c) = E(u) + c V holds to round-off.
    """
    manifold = u.manifold
    if omega is None:
        omega = manifold.reference
    if method not in (ENERGY_CLOSED, ENERGY_SEGMENT):
        raise ValueError("Unknown energy method: " + str(method))
    volume = manifold.integrate(omega.values)
    constant = manifold.integrate(u.values * omega.values) / volume
    return constant * volume + _centred_energy(manifold, u.values - constant, omega, method)


def _centred_energy(manifold, values, omega, method):
    if method == ENERGY_CLOSED:
        return manifold.integrate(values * _energy_density(manifold, values, omega))
    if manifold.kind == ManifoldKind.PRODUCT:
        base = _base_components(manifold, omega)
        bend = manifold.ddbar(values)

        def density(s):
            shifted = base + s * bend
            return _mixed_determinant(shifted, shifted)

        return _segment_energy(manifold, values, density, 3)
    laplacian = manifold.ddbar(values)
    return _segment_energy(manifold, values, lambda s: omega.values + s * laplacian, 2)


def _segment_energy(manifold, values, density, points):
    nodes, weights = np.polynomial.legendre.leggauss(points)
    nodes = 0.5 * (nodes + 1.0)
    weights = 0.5 * weights
    total = 0.0
    for s, weight in zip(nodes, weights):
        rho = density(s)
        _check_segment_positivity(manifold, rho)
        total += weight * manifold.integrate(values * rho)
    return total


def _check_segment_positivity(manifold, rho):
    bad = np.argwhere(~(rho > 0))
    if bad.size:
        location = tuple(int(i) for i in bad[0])
        raise PositivityException(
            "omega + i ddbar u is not positive at node {}".format(location), location
        )


def _energy_gauged(manifold, u, omega):
    """u + c with E(u + c) = 0; E is affine in c with slope V(omega)."""
    energy = aubin_yau_energy(ScalarField(manifold, u), omega)
    return u - energy / manifold.integrate(omega.values)


# -- induced paths -----------------------------------------------------------


class _InducedFlow(object):
    """Potentials and velocities of omega_tau = F_tau^* omega for one field."""

    def __init__(self, field, omega, override=False):
        self.field = field
        self.omega = omega
        self.manifold = field.manifold
        self.exactness = exactness_check(field, omega)
        if not self.exactness.exact:
            if not override:
                raise ExactnessException(
                    "V -| omega is not dbar-exact, obstruction {:.6g}".format(
                        self.exactness.obstruction
                    ),
                    obstruction=self.exactness.obstruction,
                )
            _log.info(
                "building path for a non-exact field, obstruction %.3e",
                self.exactness.obstruction,
            )
        self.__splines = None

    def density(self, tau):
        return pullback(flow(self.field, tau), self.omega)

    def rho(self, density):
        """omega_tau - omega in the frame the Poisson solver expects."""
        manifold = self.manifold
        if manifold.kind != ManifoldKind.PRODUCT:
            return density.values - self.omega.values
        return _base_components(manifold, density) - _base_components(manifold, self.omega)

    def potential(self, density):
        u = self.manifold.poisson_solve(self.rho(density), project=True)
        return _energy_gauged(self.manifold, u, self.omega)

    def forms(self, density):
        if self.manifold.kind != ManifoldKind.PRODUCT:
            return None
        components = _base_components(self.manifold, density)
        components[0] -= 1.0
        components[1] -= 1.0
        return components

    def velocity(self, t, density=None):
        """d/dt u_t = 2 Re(h o F_t), or a Poisson solve when h does not exist."""
        manifold = self.manifold
        if not self.exactness.exact:
            if density is None:
                density = self.density(t)
            return _poisson_velocity(manifold, self.field.coefficient, density.values)
        flow_map = flow(self.field, t)
        h = np.real(self.exactness.h)
        if manifold.kind == ManifoldKind.TORUS:
            return 2.0 * manifold.shift(h, flow_map.real_part, flow_map.imag_part)
        splines = self.__moment_splines(h)
        if manifold.kind == ManifoldKind.CP1:
            return 2.0 * splines[0](flow_map.apply(manifold.m))
        first, second = manifold.factors
        g1 = splines[0](flow_map.factors[0].apply(first.m))
        g2 = splines[1](flow_map.factors[1].apply(second.m))
        return 2.0 * (g1[:, None] + g2[None, :] - h[0, 0])

    def __moment_splines(self, h):
        if self.__splines is None:
            manifold = self.manifold
            if manifold.kind == ManifoldKind.CP1:
                self.__splines = (interpolate.CubicSpline(manifold.m, h),)
            else:
                first, second = manifold.factors
                self.__splines = (
                    interpolate.CubicSpline(first.m, h[:, 0]),
                    interpolate.CubicSpline(second.m, h[0, :]),
                )
        return self.__splines


def _poisson_velocity(manifold, coefficient, g):
    """Velocity of the energy-gauged path when omega_t = g(x + c t) i dz^dzbar."""
    d = manifold.dbar(g)
    p = manifold.partial(g)
    rate = np.real(coefficient.real * (d + p) - 1j * coefficient.imag * (d - p))
    pdot = manifold.poisson_solve(rate, project=True)
    return pdot - manifold.integrate(pdot * g) / manifold.integrate(g)


def induced_geodesic(field, times, omega=None, override=False):
    """Canonical path u_t with omega + i ddbar u_t = F_t^* omega and E(u_t) = 0."""
    manifold = field.manifold
    if omega is None:
        omega = manifold.reference
    times = _as_times(times)
    induced = _InducedFlow(field, omega, override)
    potentials, velocities, densities, forms = [], [], [], []
    for t in times:
        density = induced.density(t)
        potentials.append(induced.potential(density))
        velocities.append(induced.velocity(t, density))
        densities.append(density.values)
        forms.append(induced.forms(density))
    _log.info("induced geodesic on %s, %d time nodes", manifold.kind, len(times))
    return GeodesicPath(
        manifold,
        times,
        potentials,
        velocities,
        densities,
        Provenance.INDUCED,
        VelocityMethod.FLOW,
        base=omega,
        forms=None if manifold.kind != ManifoldKind.PRODUCT else np.array(forms),
        field=field,
    )


def velocity_trajectory(field, times, omega=None, override=False):
    """u_dot_t for every t without Poisson solves."""
    if omega is None:
        omega = field.manifold.reference
    induced = _InducedFlow(field, omega, override)
    return np.array([induced.velocity(t) for t in _as_times(times)])


def complex_time_defect(field, t, y, omega=None):
    """sup |u_{t+iy} - u_t|; zero when Im V is Hamiltonian."""
    if omega is None:
        omega = field.manifold.reference
    induced = _InducedFlow(field, omega, override=True)
    real = induced.potential(induced.density(t))
    shifted = induced.potential(induced.density(complex(t, y)))
    return float(np.max(np.abs(shifted - real)))


# -- residuals ---------------------------------------------------------------


class Residual(object):
    __slots__ = ["field", "mean", "deviation"]

    def __init__(self, field, mean, deviation):
        self.field = field
        self.mean = mean
        self.deviation = deviation


def _centred_second_derivative(path, i, k):
    h = k * path.step
    if path.velocity_method == VelocityMethod.CENTRAL:
        u = path.potentials
        return (u[i + k] - 2.0 * u[i] + u[i - k]) / h**2
    return (path.velocities[i + k] - path.velocities[i - k]) / (2.0 * h)


def _second_derivative(path, i, richardson=False):
    """u_tt at node i; ``richardson`` combines steps h and 2h, (4 D_h - D_2h) / 3."""
    fine = _centred_second_derivative(path, i, 1)
    if not richardson:
        return fine
    if i < 2 or i > len(path.times) - 3:
        raise TimeNodeException(
            "t = {} has no step-2h stencil".format(float(path.times[i]))
        )
    return (4.0 * fine - _centred_second_derivative(path, i, 2)) / 3.0


def _gradient_inner(path, i, v, w):
    manifold = path.manifold
    if manifold.kind == ManifoldKind.PRODUCT:
        return manifold.gradient_inner(v, w, path.forms[i])
    return manifold.gradient_inner(v, w, path.densities[i])


def geodesic_residual(path, t, richardson=False):
    """c(u_t) = 1/4 u_tt - 1/4 |dbar u_dot|^2_t; the path is a geodesic iff c is constant in x."""
    i = path.interior_index(t)
    udot = path.velocities[i]
    norm = _gradient_inner(path, i, udot, udot)
    c = TAU_LAPLACE_FACTOR * (_second_derivative(path, i, richardson) - norm)
    manifold = path.manifold
    mean = manifold.mean(c, path.densities[i])
    deviation = float(np.max(np.abs(c - mean)))
    _log.debug("geodesic residual at t = %.4f: deviation %.3e", t, deviation)
    return Residual(ScalarField(manifold, c), mean, deviation)


def _gradient_numerator(manifold, v, forms):
    if manifold.kind == ManifoldKind.TORUS:
        return np.abs(manifold.dbar(v)) ** 2
    if manifold.kind == ManifoldKind.CP1:
        return manifold.psi * manifold.moment_derivative(v) ** 2
    b1, b2 = manifold.reduced_gradient(v)
    a11, a22, a12 = forms
    return (1.0 + a22) * b1**2 + (1.0 + a11) * b2**2 - 2.0 * a12 * b1 * b2


def hcmae_residual(path, t, richardson=False):
    """sup |Omega^(n+1)/(n+1)!| after the time gauge, as a density against i dtau^dtaubar ^ omega^n/n!."""
    i = path.interior_index(t)
    manifold = path.manifold
    density = path.densities[i]
    numerator = _gradient_numerator(manifold, path.velocities[i], path.form_at(i))
    top = TAU_LAPLACE_FACTOR * (_second_derivative(path, i, richardson) * density - numerator)
    gauge = manifold.integrate(top) / manifold.integrate(density)
    return float(np.max(np.abs(top - gauge * density)))


# -- several parameters --------------------------------------------------------


def multi_geodesic(fields, times1, times2, omega=None, override=False):
    """u_(t1, t2) for the flow of t1 V1 + t2 V2, energy-zero gauge."""
    fields = tuple(fields)
    if len(fields) != 2:
        raise UnsupportedFieldException("two-parameter paths take exactly two fields")
    check_commuting(fields)
    manifold = fields[0].manifold
    if omega is None:
        omega = manifold.reference
    times = (_as_times(times1), _as_times(times2))
    members = [_InducedFlow(f, omega, override) for f in fields]
    exact = all(m.exactness.exact for m in members)
    potentials, gradients, densities, forms = [], [], [], []
    for t1 in times[0]:
        row = ([], [], [], [])
        for t2 in times[1]:
            combined = _InducedFlow(fields[0].scaled(t1) + fields[1].scaled(t2), omega, override=True)
            density = combined.density(1.0)
            row[0].append(combined.potential(density))
            row[2].append(density.values)
            row[3].append(combined.forms(density))
            if exact:
                row[1].append([_composed_velocity(m, combined, 1.0) for m in members])
        potentials.append(row[0])
        gradients.append(row[1])
        densities.append(row[2])
        forms.append(row[3])
    potentials = np.array(potentials)
    if exact:
        gradients = np.array(gradients)
        method = VelocityMethod.FLOW
    else:
        steps = (_uniform_step(times[0]), _uniform_step(times[1]))
        gradients = np.stack(
            np.gradient(potentials, steps[0], steps[1], axis=(0, 1), edge_order=2), axis=2
        )
        method = VelocityMethod.CENTRAL
    _log.info("two-parameter path, %d x %d nodes", len(times[0]), len(times[1]))
    return GeodesicPath(
        manifold,
        times,
        potentials,
        gradients,
        densities,
        Provenance.INDUCED,
        method,
        base=omega,
        forms=None if manifold.kind != ManifoldKind.PRODUCT else np.array(forms),
        field=fields,
    )


def _composed_velocity(member, combined, tau):
    """2 Re(h_j o F) for the member Hamiltonian h_j and the combined flow F."""
    manifold = member.manifold
    h = np.real(member.exactness.h)
    flow_map = flow(combined.field, tau)
    if manifold.kind == ManifoldKind.TORUS:
        return 2.0 * manifold.shift(h, flow_map.real_part, flow_map.imag_part)
    if manifold.kind == ManifoldKind.CP1:
        return 2.0 * interpolate.CubicSpline(manifold.m, h)(flow_map.apply(manifold.m))
    first, second = manifold.factors
    g1 = interpolate.CubicSpline(first.m, h[:, 0])(flow_map.factors[0].apply(first.m))
    g2 = interpolate.CubicSpline(second.m, h[0, :])(flow_map.factors[1].apply(second.m))
    return 2.0 * (g1[:, None] + g2[None, :] - h[0, 0])


class MultiResidual(object):
    __slots__ = ["fields", "deviation"]

    def __init__(self, fields, deviation):
        self.fields = fields
        self.deviation = deviation


def multi_geodesic_residual(path, i, j):
    """The system 1/4 u_ab - 1/4 <dbar u_a, dbar u_b>_t at the interior node (i, j)."""
    times1, times2 = path.times
    if not (0 < i < len(times1) - 1 and 0 < j < len(times2) - 1):
        raise TimeNodeException("({}, {}) is not an interior node".format(i, j))
    h1, h2 = path.step
    manifold = path.manifold
    g = path.velocities
    second = np.empty((2, 2) + manifold.shape)
    for a in range(2):
        second[a, 0] = (g[i + 1, j, a] - g[i - 1, j, a]) / (2.0 * h1)
        second[a, 1] = (g[i, j + 1, a] - g[i, j - 1, a]) / (2.0 * h2)
    density = path.densities[i, j]
    forms = None if path.forms is None else path.forms[i, j]
    fields = np.empty_like(second)
    deviation = np.zeros((2, 2))
    for a in range(2):
        for b in range(2):
            if manifold.kind == ManifoldKind.PRODUCT:
                inner = manifold.gradient_inner(g[i, j, a], g[i, j, b], forms)
            else:
                inner = manifold.gradient_inner(g[i, j, a], g[i, j, b], density)
            c = TAU_LAPLACE_FACTOR * (0.5 * (second[a, b] + second[b, a]) - inner)
            fields[a, b] = c
            deviation[a, b] = np.max(np.abs(c - manifold.mean(c, density)))
    return MultiResidual(fields, deviation)


def line_restriction(path, direction):
    """One-parameter path t -> t * direction through the origin of a two-parameter path."""
    times1, times2 = path.times
    h1, h2 = path.step
    if abs(h1 - h2) > 1e-9 * h1:
        raise TimeNodeException("line restriction needs equal steps in both parameters")
    origin = []
    for times in (times1, times2):
        hits = np.flatnonzero(np.isclose(times, 0.0, rtol=0.0, atol=1e-9))
        if not hits.size:
            raise TimeNodeException("two-parameter grid has no t = 0 node")
        origin.append(int(hits[0]))
    d1, d2 = (int(d) for d in direction)
    if d1 == 0 and d2 == 0:
        raise TimeNodeException("line direction must be non-zero")
    steps = [
        k
        for k in range(-max(len(times1), len(times2)), max(len(times1), len(times2)) + 1)
        if 0 <= origin[0] + k * d1 < len(times1) and 0 <= origin[1] + k * d2 < len(times2)
    ]
    rows = [origin[0] + k * d1 for k in steps]
    cols = [origin[1] + k * d2 for k in steps]
    velocities = d1 * path.velocities[rows, cols, 0] + d2 * path.velocities[rows, cols, 1]
    return GeodesicPath(
        path.manifold,
        np.array(steps, dtype=float) * h1,
        path.potentials[rows, cols],
        velocities,
        path.densities[rows, cols],
        path.provenance,
        path.velocity_method,
        gauge=dict(path.gauge),
        base=path.base,
        forms=None if path.forms is None else path.forms[rows, cols],
        field=path.field,
    )


# -- toric paths ---------------------------------------------------------------


def _direction(w0, w1):
    return w1.correction - w0.correction


def _check_path_convexity(potential, t, nodes):
    abscissae = np.union1d(nodes, np.linspace(0.0, 1.0, CONVEXITY_SAMPLES)[1:-1])
    margin = potential.convexity_margin(abscissae)
    bad = np.flatnonzero(~(margin > 0))
    if bad.size:
        where = float(abscissae[bad[0]])
        raise ConvexityException(
            "w_t loses convexity at t = {:.6f}, m = {:.6f}".format(t, where), t=t, m=where
        )


def toric_geodesic(w0, w1, times, manifold=None, resolution=256, normalize=False):
    """Path of w_t = (1-t) w0 + t w1 on CP^1, Kaehler potentials by Legendre transform.

    A point with moment m under w0 sits at s = w0'(m); under w_t its moment is
    m_t = (w_t')^-1(s) and u_t = f_t(s) - f_0(s) with f + w = s m.
    """
    if manifold is None:
        manifold = make_cp1(resolution, w0)
    elif manifold.kind != ManifoldKind.CP1:
        raise CompatibilityException("toric paths live on the cp1-invariant backend")
    direction = _direction(w0, w1)
    times = _as_times(times)
    m = manifold.m
    s = manifold.s
    interior = slice(1, -1)
    mean_direction = float(direction.integ()(1.0) - direction.integ()(0.0))
    potentials, velocities, densities = [], [], []
    for t in times:
        wt = w0.shifted(direction, t)
        _check_path_convexity(wt, t, m[interior])
        mt = wt.gradient_inverse(s)
        u = np.empty_like(m)
        u[interior] = s[interior] * (mt[interior] - m[interior]) - (
            wt.value(mt[interior]) - w0.value(m[interior])
        )
        u[0] = -t * direction(0.0)
        u[-1] = -t * direction(1.0)
        density = np.empty_like(m)
        density[interior] = wt.psi_jet(mt[interior])[0] / manifold.psi[interior]
        density[0] = np.exp(-t * direction.deriv(1)(0.0))
        density[-1] = np.exp(t * direction.deriv(1)(1.0))
        udot = -direction(mt)
        if normalize:
            u = u + t * mean_direction
            udot = udot + mean_direction
        potentials.append(u)
        velocities.append(udot)
        densities.append(MetricDensity(manifold, density).values)
    if normalize:
        gauge = {"kind": "energy-zero"}
    else:
        gauge = {"kind": "affine", "offset": 0.0, "slope": -manifold.volume * mean_direction}
    _log.info("toric geodesic, %d time nodes, gauge %s", len(times), gauge["kind"])
    return GeodesicPath(
        manifold,
        times,
        potentials,
        velocities,
        densities,
        Provenance.TORIC,
        VelocityMethod.LEGENDRE,
        gauge=gauge,
        potential=w0,
        direction=direction,
    )


def extension_interval(w0, direction, tolerance=DEFAULT_RELATIVE_TOLERANCE):
    """(-T-, T+): the largest interval around 0 on which w0 + t dw stays strictly convex.

    The convexity margin is affine in t, q_t = q_0 + t m(1-m) dw'', so each
    side breaks at inf q_0 / (m(1-m) |dw''|) over the points where dw'' has the
    breaking sign.
    """
    if not isinstance(direction, Polynomial):
        direction = Polynomial(direction)
    second = direction.deriv(2)
    if not np.any(np.abs(second.coef) > tolerance):
        return -np.inf, np.inf
    forward = _breaking_time(w0, second, -1.0)
    backward = _breaking_time(w0, second, 1.0)
    _log.debug("extension interval (%.6g, %.6g)", -backward, forward)
    return -backward, forward


def _breaking_time(w0, second, sign):
    def ratio(m):
        bend = sign * m * (1.0 - m) * second(m)
        return np.where(bend > 0, w0.convexity_margin(m) / np.where(bend > 0, bend, 1.0), np.inf)

    abscissae = np.linspace(0.0, 1.0, CONVEXITY_SAMPLES)[1:-1]
    values = ratio(abscissae)
    k = int(np.argmin(values))
    if not np.isfinite(values[k]):
        return np.inf
    lo = abscissae[max(k - 1, 0)]
    hi = abscissae[min(k + 1, len(abscissae) - 1)]
    result = optimize.minimize_scalar(
        lambda m: float(ratio(np.array([m]))[0]), bounds=(lo, hi), method="bounded",
        options={"xatol": 1e-12},
    )
    return float(min(values[k], result.fun))


def max_extension_time(w0, direction, tolerance=DEFAULT_RELATIVE_TOLERANCE):
    """sup T with w0 + t dw strictly convex for all |t| < T; inf iff dw is affine."""
    lo, hi = extension_interval(w0, direction, tolerance)
    return min(-lo, hi)


# -- asymptotics ---------------------------------------------------------------


class AsymptoticSlope(object):
    __slots__ = [
        "slope",
        "ratio",
        "velocity",
        "g_star",
        "sup_norms",
        "sup_norm_spread",
        "deviation_measure",
    ]


def asymptotic_slope(field, T=20.0, eps=1e-3, sample_times=None, omega=None, override=False):
    """g(x) = lim u_t(x) / t estimated by the secant slope over [T/2, T]."""
    manifold = field.manifold
    if omega is None:
        omega = manifold.reference
    if sample_times is None:
        sample_times = np.arange(-5.0, 6.0)
    induced = _InducedFlow(field, omega, override)
    late, _ = integrate.quad_vec(induced.velocity, 0.5 * T, T, epsabs=1e-10, epsrel=1e-10)
    early, _ = integrate.quad_vec(induced.velocity, 0.0, 0.5 * T, epsabs=1e-10, epsrel=1e-10)
    result = AsymptoticSlope()
    result.slope = ScalarField(manifold, late / (0.5 * T))
    result.ratio = ScalarField(manifold, (early + late) / T)
    result.velocity = ScalarField(manifold, induced.velocity(T))
    result.g_star = float(np.max(result.velocity.values))
    result.sup_norms = np.array([np.max(np.abs(induced.velocity(t))) for t in sample_times])
    result.sup_norm_spread = float(np.ptp(result.sup_norms))
    outside = np.abs(result.slope.values - result.g_star) > eps
    measure = manifold.node_measure(omega.values)
    result.deviation_measure = float(np.sum(measure[outside])) / manifold.integrate(omega.values)
    _log.info(
        "asymptotic slope at T = %g: g* = %.9f, deviation measure %.3e",
        T,
        result.g_star,
        result.deviation_measure,
    )
    return result


# -- manual paths ---------------------------------------------------------------


def _manual_densities(manifold, base, potentials):
    if manifold.kind == ManifoldKind.PRODUCT:
        reference = _base_components(manifold, base)
        forms = np.array([reference + manifold.ddbar(u) for u in potentials])
        forms[:, 0] -= 1.0
        forms[:, 1] -= 1.0
        densities = np.array([manifold.determinant(f) for f in forms])
    else:
        forms = None
        densities = np.array([base.values + manifold.ddbar(u) for u in potentials])
    for d in densities:
        _check_segment_positivity(manifold, d)
    return densities, forms


def manual_path(manifold, times, potentials, base=None, velocities=None, gauge=None):
    """Path from caller potentials; velocities by central differences unless given."""
    times = _as_times(times)
    potentials = np.asarray(potentials, dtype=float)
    if potentials.shape != (len(times),) + manifold.shape:
        raise CompatibilityException("potentials do not match the time grid and manifold")
    if base is None:
        base = manifold.reference
    if velocities is None:
        velocities = np.gradient(potentials, times, axis=0, edge_order=2)
        method = VelocityMethod.CENTRAL
    else:
        method = VelocityMethod.FLOW
    densities, forms = _manual_densities(manifold, base, potentials)
    return GeodesicPath(
        manifold,
        times,
        potentials,
        velocities,
        densities,
        Provenance.MANUAL,
        method,
        gauge=gauge if gauge is not None else {"kind": "affine", "offset": 0.0, "slope": 0.0},
        base=base,
        forms=forms,
    )


def regauge(path, offset, slope):
    """u_t + offset + slope t; the gauge record accumulates."""
    times = path.times
    shape = (-1,) + (1,) * len(path.manifold.shape)
    gauge = {
        "kind": "affine",
        "offset": path.gauge.get("offset", 0.0) + offset,
        "slope": path.gauge.get("slope", 0.0) + slope,
    }
    shifted = GeodesicPath(
        path.manifold,
        times,
        path.potentials + offset + slope * times.reshape(shape),
        path.velocities + slope,
        path.densities,
        Provenance.MANUAL,
        path.velocity_method,
        gauge=gauge,
        base=path.base,
        forms=path.forms,
        field=path.field,
        potential=path.potential,
        direction=path.direction,
    )
    return shifted


def perturb_path(path, amplitude, profile):
    """u_t + amplitude t^2 profile; a non-geodesic control with exact velocities."""
    manifold = path.manifold
    profile = profile.values if isinstance(profile, ScalarField) else np.asarray(profile, dtype=float)
    times = path.times
    shape = (-1,) + (1,) * len(manifold.shape)
    t = times.reshape(shape)
    potentials = path.potentials + amplitude * t**2 * profile
    velocities = path.velocities + 2.0 * amplitude * t * profile
    bump = manifold.ddbar(profile)
    if manifold.kind == ManifoldKind.PRODUCT:
        forms = path.forms + amplitude * t[..., None] ** 2 * bump
        densities = np.array([manifold.determinant(f) for f in forms])
    else:
        forms = None
        densities = path.densities + amplitude * t**2 * bump
    for d in densities:
        _check_segment_positivity(manifold, d)
    return GeodesicPath(
        manifold,
        times,
        potentials,
        velocities,
        densities,
        Provenance.MANUAL,
        path.velocity_method,
        gauge=dict(path.gauge),
        base=path.base,
        forms=forms,
    )


class EnergyProfile(object):
    __slots__ = ["energies", "slope", "offset", "deviation", "residual"]


def energy_profile(path):
    """E(u_t) per node and the deviation from its least-squares affine fit."""
    energies = np.array(
        [aubin_yau_energy(path.potential_at(i), path.base) for i in range(len(path.times))]
    )
    coefficients, residual, _, _, _ = np.polyfit(path.times, energies, 1, full=True)
    profile = EnergyProfile()
    profile.energies = energies
    profile.slope, profile.offset = float(coefficients[0]), float(coefficients[1])
    profile.deviation = float(np.max(np.abs(energies - np.polyval(coefficients, path.times))))
    profile.residual = float(residual[0]) if len(residual) else 0.0
    return profile


def velocity_monotonicity(path):
    """min of u_dot_(t+h) - u_dot_t; nonnegative along geodesics (u convex in t)."""
    return float(np.min(np.diff(path.velocities, axis=0)))


# -- bundles ---------------------------------------------------------------------


def _bundle_columns(manifold):
    if manifold.kind == ManifoldKind.CP1:
        return ["m"], [manifold.m]
    if manifold.kind == ManifoldKind.TORUS:
        return ["x1", "x2"], [np.ravel(c) for c in manifold.nodes]
    raise CompatibilityException("path bundles hold one-parameter torus or cp1 paths")


def write_path_bundle(path, directory):
    """One CSV per time node plus manifest.json with grid metadata and the gauge record."""
    if path.parameters != 1:
        raise CompatibilityException("path bundles hold one-parameter paths")
    manifold = path.manifold
    names, coordinates = _bundle_columns(manifold)
    os.makedirs(directory, exist_ok=True)
    value_names = ["u", "u_dot", "density", "base", "reference"]
    files = []
    for i, t in enumerate(path.times):
        filename = "t_{:04d}.csv".format(i)
        columns = dict(zip(names, coordinates))
        columns.update(
            {
                "u": np.ravel(path.potentials[i]),
                "u_dot": np.ravel(path.velocities[i]),
                "density": np.ravel(path.densities[i]),
                "base": np.ravel(path.base.values),
                "reference": np.ravel(manifold.reference.values),
            }
        )
        with open(os.path.join(directory, filename), "w", newline="") as csvfile:
            writer = csv_writer.CSVWriter(
                csvfile, names + value_names, [csv_writer.DOUBLE] * (len(names) + len(value_names))
            )
            writer.writeheader()
            writer.writecolumns(columns)
        files.append(filename)
    manifest = {
        "kind": manifold.kind,
        "resolution": manifold.resolution,
        "times": [float(t) for t in path.times],
        "provenance": path.provenance,
        "velocity_method": path.velocity_method,
        "gauge": path.gauge,
        "files": files,
    }
    if manifold.kind == ManifoldKind.CP1:
        manifest["correction"] = [float(c) for c in manifold.potential.correction.coef]
    with open(os.path.join(directory, BUNDLE_MANIFEST), "w") as f:
        json.dump(manifest, f, indent=2)
    _log.info("wrote path bundle with %d nodes to %s", len(files), directory)


def read_path_bundle(directory):
    with open(os.path.join(directory, BUNDLE_MANIFEST)) as f:
        manifest = json.load(f)
    columns = []
    for filename in manifest["files"]:
        with open(os.path.join(directory, filename)) as csvfile:
            columns.append(csv_reader.CSVReader(csvfile))
    resolution = manifest["resolution"]
    if manifest["kind"] == ManifoldKind.CP1:
        manifold = make_cp1(resolution, SymplecticPotential(manifest["correction"]))
    elif manifest["kind"] == ManifoldKind.TORUS:
        shape = (resolution, resolution)
        manifold = make_torus(resolution, columns[0].reference.reshape(shape))
    else:
        raise CompatibilityException("unsupported bundle kind " + str(manifest["kind"]))
    shape = manifold.shape

    def stacked(name):
        return np.array([getattr(c, name).reshape(shape) for c in columns])

    return GeodesicPath(
        manifold,
        np.array(manifest["times"]),
        stacked("u"),
        stacked("u_dot"),
        stacked("density"),
        manifest["provenance"],
        manifest["velocity_method"],
        gauge=manifest["gauge"],
        base=MetricDensity(manifold, columns[0].base.reshape(shape)),
    )
