"""Monge-Ampere foliation leaves, theta along leaves and the K-energy along a path.

Leaves solve df/dtau = -V_tau(f) with V_tau -| omega_tau = i dbar u_dot_tau. For data
independent of Im tau they are traced in real time; on the cp1 backend the
leaf through the base moment mu_0 is a curve mu(t), on the torus a curve in
[0,1)^2 written as x1 + i x2.

The K-energy derivative is

    dK/dt = -int u_dot (S_t - Sbar) omega_t,   S_t omega_t = Ric(omega_t)

and kappa = K_tautaubar = 1/4 K_tt is the density of Theta against i dtau^dtaubar.
"""

import logging
import warnings

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, interpolate

from .conventions import (
    LOGNAME,
    TAU_FIRST_DERIVATIVE_FACTOR,
    TAU_LAPLACE_FACTOR,
    ManifoldKind,
    CompatibilityException,
    LeafException,
    SampleException,
    TimeNodeException,
    curvature_constant,
    leaf_curvature_constant,
)
from .metric_superposition import STRIP, hyperbolic_density

_log = logging.getLogger(LOGNAME)

DEFAULT_LEAVES = 128
KAPPA_FLOOR = 1e-10
PERIODIC_PADDING = 3
CHART_Z = "z"
CHART_ZETA = "zeta"


def _second_difference(values, h):
    """Five-point second derivative along axis 0, defined on nodes 2..-3."""
    v = values
    return (-v[4:] + 16.0 * v[3:-1] - 30.0 * v[2:-2] + 16.0 * v[1:-3] - v[:-4]) / (12.0 * h**2)


def _first_difference(values, h):
    v = values
    return (-v[4:] + 8.0 * v[3:-1] - 8.0 * v[1:-3] + v[:-4]) / (12.0 * h)


def _uniform_step(times):
    steps = np.diff(times)
    if steps.size == 0 or np.any(steps <= 0.0) or np.ptp(steps) > 1e-9 * steps[0]:
        raise TimeNodeException("time grid is not uniform")
    return float(steps[0])


# -- leaf field and tracing ------------------------------------------------------


class VectorField(object):
    """Time dependent field at one t: cp1 a(m) z d/dz, torus v(x) d/dz."""

    __slots__ = ["manifold", "t", "coefficients"]

    def __init__(self, manifold, t, coefficients):
        self.manifold = manifold
        self.t = t
        self.coefficients = coefficients


def leaf_field(path, t):
    i = path.interior_index(t)
    manifold = path.manifold
    density = path.densities[i]
    udot = path.velocities[i]
    if manifold.kind == ManifoldKind.CP1:
        coefficients = TAU_FIRST_DERIVATIVE_FACTOR * manifold.moment_derivative(udot) / density
    elif manifold.kind == ManifoldKind.TORUS:
        coefficients = TAU_FIRST_DERIVATIVE_FACTOR * manifold.dbar(udot) / density
    else:
        raise CompatibilityException("leaf fields are defined for n = 1 backends")
    return VectorField(manifold, float(path.times[i]), coefficients)


class LeafTrajectory(object):
    """Leaf through ``start``: positions and log density of omega_t along it at every path time.

    ``clipped`` marks the nodes reached after the leaf entered the boundary cell.
    """

    __slots__ = ["start", "times", "positions", "log_density", "chart", "potential", "clipped"]

    def __init__(self, start, times, positions, log_density, chart=None, potential=None, clipped=None):
        self.start = start
        self.times = times
        self.positions = positions
        self.log_density = log_density
        self.chart = chart
        self.potential = potential
        self.clipped = np.zeros(len(times), dtype=bool) if clipped is None else clipped

    @property
    def step(self):
        return _uniform_step(self.times)

    def chart_log_density(self, chart=None):
        """l(t): log density of omega_t at f(t) against the chart volume."""
        if self.potential is None:
            return self.log_density
        chart = self.chart if chart is None else chart
        return self.log_density + self.potential.chart_log_density(self.positions, chart)


class _LeafFlow(object):
    """Interpolated leaf speed over (t, x) built from a sampled path."""

    def __init__(self, path):
        if path.parameters != 1:
            raise CompatibilityException("leaves are traced on one-parameter paths")
        self.path = path
        self.manifold = manifold = path.manifold
        self.times = np.asarray(path.times, dtype=float)
        self.step = _uniform_step(self.times)
        if len(self.times) < 4:
            raise SampleException("leaf tracing needs at least four time nodes")
        hits = np.flatnonzero(np.isclose(self.times, 0.0, rtol=0.0, atol=1e-12))
        if not hits.size:
            raise TimeNodeException("leaves start at t = 0, which is not a node")
        self.origin = int(hits[0])
        if manifold.kind == ManifoldKind.CP1:
            speed = np.array(
                [
                    -manifold.psi * manifold.moment_derivative(v) / d
                    for v, d in zip(path.velocities, path.densities)
                ]
            )
            self.__speed = interpolate.RectBivariateSpline(self.times, manifold.m, speed)
            self.__log_density = interpolate.RectBivariateSpline(
                self.times, manifold.m, np.log(path.densities)
            )
        elif manifold.kind == ManifoldKind.TORUS:
            field = np.array(
                [
                    -TAU_FIRST_DERIVATIVE_FACTOR * manifold.dbar(v) / d
                    for v, d in zip(path.velocities, path.densities)
                ]
            )
            self.__speed = (
                self.__periodic(np.real(field)),
                self.__periodic(np.imag(field)),
            )
            self.__log_density = self.__periodic(np.log(path.densities))
        else:
            raise CompatibilityException("leaves are traced on n = 1 backends")

    def __periodic(self, values):
        n = self.manifold.resolution
        p = PERIODIC_PADDING
        axis = np.arange(-p, n + p) / n
        padded = np.pad(values, ((0, 0), (p, p), (p, p)), mode="wrap")
        return interpolate.RegularGridInterpolator(
            (self.times, axis, axis), padded, method="cubic", bounds_error=False, fill_value=None
        )

    def __torus_points(self, t, z):
        z = np.mod(np.real(z), 1.0) + 1j * np.mod(np.imag(z), 1.0)
        return np.stack([np.full(z.shape, t), np.real(z), np.imag(z)], axis=-1)

    def speed(self, t, x):
        if self.manifold.kind == ManifoldKind.CP1:
            return self.__speed.ev(np.full_like(x, t), np.clip(x, 0.0, 1.0))
        points = self.__torus_points(t, x)
        return self.__speed[0](points) + 1j * self.__speed[1](points)

    def log_density(self, t, x):
        if self.manifold.kind == ManifoldKind.CP1:
            return self.__log_density.ev(np.full_like(x, t), np.clip(x, 0.0, 1.0))
        return self.__log_density(self.__torus_points(t, x))

    def trace(self, starts, strict=True):
        """RK4 with step h_t/2 from t = 0 to both ends; positions at every time node."""
        starts = np.asarray(starts)
        dtype = complex if self.manifold.kind == ManifoldKind.TORUS else float
        positions = np.empty((len(self.times),) + starts.shape, dtype=dtype)
        positions[self.origin] = starts
        clipped = np.zeros(positions.shape, dtype=bool)
        for direction in (1, -1):
            x = starts.astype(dtype)
            i = self.origin
            tainted = np.zeros(starts.shape, dtype=bool)
            while 0 <= i + direction < len(self.times):
                t = self.times[i]
                h = 0.5 * direction * self.step
                for _ in range(2):
                    k1 = self.speed(t, x)
                    k2 = self.speed(t + 0.5 * h, x + 0.5 * h * k1)
                    k3 = self.speed(t + 0.5 * h, x + 0.5 * h * k2)
                    k4 = self.speed(t + h, x + h * k3)
                    x = x + h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
                    t = t + h
                i += direction
                x, hit = self.__check_region(x, self.times[i], strict)
                tainted = tainted | hit
                clipped[i] = tainted
                positions[i] = x
        return positions, clipped

    def __check_region(self, x, t, strict):
        if self.manifold.kind != ManifoldKind.CP1:
            return x, np.zeros(np.shape(x), dtype=bool)
        cell = self.manifold.step
        outside = (x < cell) | (x > 1.0 - cell)
        if not np.any(outside):
            return x, outside
        if strict:
            raise LeafException(
                "leaf enters the boundary cell at t = {:.6f}, mu = {:.6g}".format(
                    t, float(np.asarray(x)[outside][0])
                )
            )
        return np.clip(x, 0.0, 1.0), outside

    def log_densities(self, positions):
        return np.array([self.log_density(t, x) for t, x in zip(self.times, positions)])


def _chart_for(start):
    return CHART_Z if start < 0.5 else CHART_ZETA


def _leaves(flow, starts, strict):
    starts = np.atleast_1d(np.asarray(starts))
    positions, clipped = flow.trace(starts, strict)
    logs = flow.log_densities(positions)
    if clipped.any():
        warnings.warn("leaves entered the boundary cell and were clipped")
        _log.warning("leaves entered the boundary cell and were clipped")
    cp1 = flow.manifold.kind == ManifoldKind.CP1
    potential = flow.manifold.potential if cp1 else None
    leaves = []
    for k, start in enumerate(starts):
        leaves.append(
            LeafTrajectory(
                start,
                flow.times,
                positions[:, k] if cp1 else np.mod(positions[:, k].real, 1.0) + 1j * np.mod(positions[:, k].imag, 1.0),
                logs[:, k],
                _chart_for(float(start)) if cp1 else None,
                potential,
                clipped[:, k],
            )
        )
    return leaves


def trace_leaf(path, x, strict=True):
    """Leaf through x (moment value on cp1, x1 + i x2 on the torus)."""
    return _leaves(_LeafFlow(path), [x], strict)[0]


def trace_leaves(path, starts, strict=True):
    return _leaves(_LeafFlow(path), starts, strict)


def leaf_pullback_check(path, x, delta=None):
    """max_t |f_t^*(omega_t) - omega| at x, Jacobians from neighbouring leaves."""
    flow = _LeafFlow(path)
    manifold = path.manifold
    base = path.densities[flow.origin]
    if manifold.kind == ManifoldKind.CP1:
        if delta is None:
            delta = manifold.step
        starts = np.array([x - delta, x, x + delta])
        if starts[0] <= 0.0 or starts[-1] >= 1.0:
            raise LeafException("neighbour leaves of mu = {} leave the moment interval".format(x))
        positions, _ = flow.trace(starts, strict=True)
        jacobian = (positions[:, 2] - positions[:, 0]) / (2.0 * delta)
        density = np.exp(flow.log_densities(positions[:, 1:2])[:, 0])
        reference = float(interpolate.CubicSpline(manifold.m, base)(x))
        return float(np.max(np.abs(density * jacobian - reference)))
    if delta is None:
        delta = 1.0 / manifold.resolution
    x = complex(x)
    starts = np.array([x - delta, x + delta, x - 1j * delta, x + 1j * delta, x])
    positions, _ = flow.trace(starts, strict=True)
    d1 = (positions[:, 1] - positions[:, 0]) / (2.0 * delta)
    d2 = (positions[:, 3] - positions[:, 2]) / (2.0 * delta)
    jacobian = d1.real * d2.imag - d1.imag * d2.real
    density = np.exp(flow.log_densities(positions[:, 4:5])[:, 0])
    reference = float(flow.log_density(0.0, np.array([x]))[0])
    return float(np.max(np.abs(density * jacobian - np.exp(reference))))


# -- theta along a leaf ------------------------------------------------------------


class LeafTheta(object):
    __slots__ = [
        "times",
        "kappa",
        "curvature_times",
        "curvature",
        "burns_margin",
        "richardson_times",
        "curvature_richardson",
        "burns_margin_richardson",
        "dimension",
    ]


def _leaf_curvature(kappa, h, floor):
    """-1/4 (log kappa)'' / kappa where kappa > floor, nan elsewhere."""
    with np.errstate(divide="ignore", invalid="ignore"):
        log_kappa = np.where(kappa > floor, np.log(np.where(kappa > floor, kappa, 1.0)), np.nan)
        return -TAU_LAPLACE_FACTOR * _second_difference(log_kappa, h) / kappa[2:-2]


def _unclipped_window(leaf):
    """Nodes around t = 0 traced without entering the boundary cell."""
    clipped = np.asarray(leaf.clipped, dtype=bool)
    if not clipped.any():
        return slice(None)
    origin = int(np.argmin(np.abs(leaf.times)))
    bad = np.flatnonzero(clipped)
    before = bad[bad < origin]
    after = bad[bad > origin]
    return slice(
        int(before[-1]) + 1 if before.size else 0,
        int(after[0]) if after.size else len(clipped),
    )


def theta_on_leaf(leaf, stride=1, floor=KAPPA_FLOOR, dimension=1, chart=None):
    """kappa_x = 1/4 l'' on the leaf and the curvature of kappa_x |dtau|^2 where kappa_x > floor.

    kappa is reported on every node with a full five-point stencil (step
    H = stride h_t). The curvature and the Burns margin are reported on the
    nodes that also carry the stencil at step 2H, raw and
    Richardson-extrapolated against it. Clipped leaf nodes are dropped.
    """
    window = _unclipped_window(leaf)
    ell = leaf.chart_log_density(chart)[window][::stride]
    times = leaf.times[window][::stride]
    if len(ell) < 5:
        raise SampleException("theta on a leaf needs at least five time nodes")
    coarse = ell[::2]
    if len(coarse) < 9:
        raise TimeNodeException(
            "{} leaf nodes at stride {} leave no node for the step-2H curvature stencil".format(
                len(ell), stride
            )
        )
    H = stride * leaf.step
    bound = leaf_curvature_constant(dimension)
    result = LeafTheta()
    result.dimension = dimension
    result.times = times[2:-2]
    result.kappa = TAU_LAPLACE_FACTOR * _second_difference(ell, H)
    # fine curvature lives on times[4:-4], the coarse one on times[8:-8:2]
    fine = _leaf_curvature(result.kappa, H, floor)[4::2][: len(coarse) - 8]
    coarse_kappa = TAU_LAPLACE_FACTOR * _second_difference(coarse, 2.0 * H)
    coarse_curvature = _leaf_curvature(coarse_kappa, 2.0 * H, floor)
    result.curvature_times = result.richardson_times = times[::2][4:-4]
    result.curvature = fine
    result.burns_margin = -fine - bound
    result.curvature_richardson = (16.0 * fine - coarse_curvature) / 15.0
    result.burns_margin_richardson = -result.curvature_richardson - bound
    return result


def chart_independence(leaf, stride=1):
    """sup |kappa_z - kappa_zeta| along a cp1 leaf."""
    if leaf.potential is None:
        raise CompatibilityException("chart comparison needs a cp1 leaf")
    z = theta_on_leaf(leaf, stride, chart=CHART_Z).kappa
    zeta = theta_on_leaf(leaf, stride, chart=CHART_ZETA).kappa
    return float(np.max(np.abs(z - zeta)))


# -- K-energy ----------------------------------------------------------------------------


class ThetaDensity(object):
    """kappa(t) on a uniform t-grid; ``fiber`` and ``discrepancy`` when both routes ran."""

    def __init__(self, times, values, fiber=None, volume=None, dimension=1):
        self.times = np.asarray(times, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.fiber = None if fiber is None else np.asarray(fiber, dtype=float)
        self.discrepancy = None if fiber is None else float(np.max(np.abs(self.fiber - self.values)))
        self.volume = volume
        self.dimension = dimension

    @property
    def step(self):
        return _uniform_step(self.times)


def scalar_curvature_mean(manifold):
    """Sbar = 2 pi c_1 / V: 4 pi / V on CP^1, 0 on the torus."""
    if manifold.kind == ManifoldKind.CP1:
        return 4.0 * np.pi / manifold.volume
    if manifold.kind == ManifoldKind.TORUS:
        return 0.0
    raise CompatibilityException("K-energy is implemented for n = 1 backends")


def kenergy_derivative(path):
    """dK/dt at every time node."""
    manifold = path.manifold
    mean = scalar_curvature_mean(manifold)
    values = []
    for udot, density in zip(path.velocities, path.densities):
        log_density = np.log(density)
        if manifold.kind == ManifoldKind.CP1:
            # S_ref = -psi'' and Ric(omega_t) = Ric(omega_ref) - i ddbar log D
            integrand = (
                udot * manifold.psi2
                - manifold.psi * manifold.moment_derivative(udot) * manifold.moment_derivative(log_density)
                + mean * udot * density
            )
        else:
            integrand = udot * manifold.ddbar(log_density)
        values.append(manifold.integrate(integrand))
    return np.array(values)


def _fiber_sample(path, leaves):
    """Stratified start points and their omega-weights."""
    manifold = path.manifold
    flow = _LeafFlow(path)
    base = path.densities[flow.origin]
    if manifold.kind == ManifoldKind.CP1:
        starts = (np.arange(leaves) + 0.5) / leaves
        weights = 2.0 * np.pi * interpolate.CubicSpline(manifold.m, base)(starts) / leaves
        return flow, starts, weights
    side = max(2, int(round(np.sqrt(leaves))))
    axis = (np.arange(side) + 0.5) / side
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    starts = np.ravel(x1 + 1j * x2)
    weights = 2.0 * np.exp(flow.log_density(0.0, starts)) / side**2
    return flow, starts, weights


def kenergy_theta(path, leaves=DEFAULT_LEAVES):
    """kappa(t) from the second t-difference of K and, independently, as the fiber integral of kappa_x.

    ``leaves = 0`` skips the fiber integral.
    """
    manifold = path.manifold
    h = _uniform_step(path.times)
    if len(path.times) < 5:
        raise SampleException("kappa needs at least five time nodes")
    direct = TAU_LAPLACE_FACTOR * _first_difference(kenergy_derivative(path), h)
    if not leaves:
        return ThetaDensity(path.times[2:-2], direct, volume=manifold.volume, dimension=manifold.dimension)
    if leaves < 2:
        raise SampleException("leaf sample is too sparse")
    flow, starts, weights = _fiber_sample(path, leaves)
    trajectories = _leaves(flow, starts, strict=False)
    kappa = np.array(
        [TAU_LAPLACE_FACTOR * _second_difference(leaf.chart_log_density(), h) for leaf in trajectories]
    )
    fiber = weights @ kappa
    theta = ThetaDensity(path.times[2:-2], direct, fiber, manifold.volume, manifold.dimension)
    _log.info("kenergy theta: max |kappa| %.3e, fiber discrepancy %.3e", np.max(np.abs(direct)), theta.discrepancy)
    return theta


def toric_kenergy(w):
    """K(w) = 2 pi [-int log w'' + w(0) + w(1) - 2 int w] for an S^1-invariant metric on CP^1."""
    correction = w.correction
    primitive = correction.integ()
    log_margin, _ = integrate.quad(lambda m: np.log(w.convexity_margin(m)), 0.0, 1.0, limit=200)
    # int log(m(1-m)) dm = -2 and int m log m + (1-m) log(1-m) dm = -1/2
    mean_w = -0.5 + float(primitive(1.0) - primitive(0.0))
    return 2.0 * np.pi * (-2.0 - log_margin + correction(0.0) + correction(1.0) - 2.0 * mean_w)


def toric_kenergy_second(w0, direction, t):
    """d^2K/dt^2 = 2 pi int (dw'' / w_t'')^2 along w0 + t dw."""
    if not isinstance(direction, Polynomial):
        direction = Polynomial(direction)
    wt = w0.shifted(direction, t)
    second = direction.deriv(2)
    value, _ = integrate.quad(lambda m: (second(m) * wt.psi_jet(m)[0]) ** 2, 0.0, 1.0, limit=200)
    return 2.0 * np.pi * value


# -- curvature bounds ----------------------------------------------------------------


class CurvatureReport(object):
    __slots__ = ["branch", "times", "differential", "differential_min", "strip", "strip_min", "constant"]

    def __init__(self):
        self.branch = "positive"
        self.times = np.array([])
        self.differential = np.array([])
        self.differential_min = None
        self.strip = None
        self.strip_min = None
        self.constant = None


def curvature_bound_check(theta, volume=None, dimension=None, strip=None, window=None, stride=1, floor=KAPPA_FLOOR):
    """Curvature of kappa |dtau|^2 against -2/(nV).

    (i) 1/4 (log kappa)'' - (2/(nV)) kappa >= 0 nodewise;
    (ii) (nV/2) rho_S - kappa >= 0 for the hyperbolic density of the strip ``strip``.
    """
    volume = theta.volume if volume is None else volume
    dimension = theta.dimension if dimension is None else dimension
    report = CurvatureReport()
    report.constant = curvature_constant(dimension, volume)
    times = theta.times[::stride]
    kappa = theta.values[::stride]
    if window is not None:
        keep = (times >= window[0]) & (times <= window[1])
        times, kappa = times[keep], kappa[keep]
    if kappa.size == 0 or np.max(kappa) <= floor:
        report.branch = "zero"
        return report
    if len(kappa) < 5 or np.any(kappa <= floor):
        raise SampleException("kappa window needs five nodes with kappa > floor")
    h = _uniform_step(times)
    report.times = times[2:-2]
    report.differential = TAU_LAPLACE_FACTOR * _second_difference(np.log(kappa), h) - report.constant * kappa[2:-2]
    report.differential_min = float(np.min(report.differential))
    if strip is not None:
        comparison = 0.5 * dimension * volume * hyperbolic_density(STRIP, strip, times)
        report.strip = comparison - kappa
        report.strip_min = float(np.min(report.strip))
    return report


def ray_bound_check(theta, start, volume=None, dimension=None):
    """min over t > start of nV (t - start)^-2 - d^2K/dt^2."""
    volume = theta.volume if volume is None else volume
    dimension = theta.dimension if dimension is None else dimension
    keep = theta.times > start
    if not np.any(keep):
        raise SampleException("no kappa samples to the right of the ray start")
    t = theta.times[keep]
    return float(np.min(dimension * volume / (t - start) ** 2 - 4.0 * theta.values[keep]))


# -- superposition ---------------------------------------------------------------------


class SeparableTestFunction(object):
    """phi(t, m) = sum_k a_k(t) b_k(m) with polynomial factors."""

    def __init__(self, terms):
        self.terms = [(Polynomial(a), Polynomial(b)) for a, b in terms]

    def value(self, t, m, dt=0, dm=0):
        m = np.asarray(m, dtype=float)
        total = np.zeros_like(m)
        for a, b in self.terms:
            total = total + a.deriv(dt)(t) * b.deriv(dm)(m)
        return total


class SuperpositionResult(object):
    __slots__ = ["lhs", "rhs", "gap"]

    def __init__(self, lhs, rhs):
        self.lhs = lhs
        self.rhs = rhs
        self.gap = abs(lhs - rhs)


def superposition_check(path, phi, leaves=DEFAULT_LEAVES):
    """int i ddbar phi ^ Omega over the strip against the sum of its integrals over leaves.

    The strip is [t_1, t_(T-2)], where the second t-difference of u exists.
    """
    manifold = path.manifold
    if manifold.kind != ManifoldKind.CP1:
        raise CompatibilityException("superposition check runs on the cp1 backend")
    times = np.asarray(path.times, dtype=float)
    h = _uniform_step(times)
    m = manifold.m
    velocities = path.velocities
    slab = []
    for i in range(1, len(times) - 1):
        t = times[i]
        second = (velocities[i + 1] - velocities[i - 1]) / (2.0 * h)
        laplacian = manifold.psi1 * phi.value(t, m, dm=1) + manifold.psi * phi.value(t, m, dm=2)
        integrand = (
            TAU_LAPLACE_FACTOR * phi.value(t, m, dt=2) * path.densities[i]
            + TAU_LAPLACE_FACTOR * second * laplacian
            - 0.5 * manifold.psi * phi.value(t, m, dt=1, dm=1) * manifold.moment_derivative(velocities[i])
        )
        slab.append(manifold.integrate(integrand))
    strip_times = times[1:-1]
    # i dtau^dtaubar = 2 dt^dy over a unit length in y
    lhs = 2.0 * integrate.simpson(np.array(slab), x=strip_times)
    flow, starts, weights = _fiber_sample(path, leaves)
    positions, _ = flow.trace(starts, strict=False)
    ends = []
    for i in (1, len(times) - 2):
        t, mu = times[i], positions[i]
        ends.append(phi.value(t, mu, dt=1) + phi.value(t, mu, dm=1) * flow.speed(t, mu))
    rhs = float(weights @ (0.5 * (ends[1] - ends[0])))
    return SuperpositionResult(float(lhs), rhs)
