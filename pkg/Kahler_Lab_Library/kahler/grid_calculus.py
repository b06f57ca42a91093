"""Manifold backends with a discrete complex calculus.

Three backends share one interface:

    TorusManifold    N x N periodic grid on [0,1)^2, z = x1 + i x2, spectral derivatives
    CP1Manifold      S^1-invariant data on CP^1, sampled on the moment grid m_j = j/M
    ProductManifold  CP^1 x CP^1, tensor product of two moment grids

Frames of sampled forms are listed in kahler.conventions.
"""

import logging

import numpy as np
from numpy.polynomial import Polynomial
from scipy import interpolate, special

from .conventions import (
    LOGNAME,
    IDZDZBAR_AREA_FACTOR,
    DEFAULT_RELATIVE_TOLERANCE,
    MIN_RESOLUTION,
    ManifoldKind,
    ResolutionException,
    PositivityException,
    ConvexityException,
    CompatibilityException,
)
from . import csv_writer

_log = logging.getLogger(LOGNAME)

BISECTION_STEPS = 64
NEWTON_STEPS = 3


class ScalarField(object):
    __slots__ = ["manifold", "values"]

    def __init__(self, manifold, values):
        values = np.asarray(values, dtype=float)
        if values.shape != manifold.shape:
            raise CompatibilityException(
                "field shape {} does not match grid {}".format(values.shape, manifold.shape)
            )
        if not np.all(np.isfinite(values)):
            raise CompatibilityException("field has non-finite values")
        self.manifold = manifold
        self.values = values

    def mean(self):
        return self.manifold.mean(self.values)


class FormField(object):
    """Complex coefficients of a (0,1), (1,0) or (1,1) form in the backend frame.

    Product manifolds stack components on the leading axis: two for (0,1)
    forms, and (a11, a22, a12) for (1,1) forms, see ProductManifold.ddbar.
    """

    __slots__ = ["manifold", "bidegree", "coefficients"]

    def __init__(self, manifold, bidegree, coefficients):
        self.manifold = manifold
        self.bidegree = tuple(bidegree)
        self.coefficients = np.asarray(coefficients)

    def conjugate(self):
        return FormField(
            self.manifold, self.bidegree[::-1], np.conj(self.coefficients)
        )

    def is_real(self, tol=DEFAULT_RELATIVE_TOLERANCE):
        scale = max(1.0, float(np.max(np.abs(self.coefficients), initial=0.0)))
        return float(np.max(np.abs(np.imag(self.coefficients)), initial=0.0)) <= tol * scale


class MetricDensity(object):
    """Density of a Kaehler form (torus: against i dz^dzbar; cp1: against the reference form).

    On a product manifold ``values`` is the top density omega^2/2 relative to
    the reference and ``factors`` holds the density of each split factor.
    """

    __slots__ = ["manifold", "values", "factors"]

    def __init__(self, manifold, values, factors=None):
        values = np.asarray(values, dtype=float)
        if values.shape != manifold.shape:
            raise CompatibilityException(
                "density shape {} does not match grid {}".format(values.shape, manifold.shape)
            )
        bad = np.argwhere(~(values > 0))
        if bad.size:
            location = tuple(int(i) for i in bad[0])
            raise PositivityException(
                "density is not strictly positive at node {}".format(location), location
            )
        self.manifold = manifold
        self.values = values
        self.factors = factors

    @property
    def volume(self):
        return self.manifold.integrate(self.values)


class SymplecticPotential(object):
    """w(m) = m log m + (1-m) log(1-m) + h(m) on [0,1], h a polynomial correction."""

    def __init__(self, correction=None):
        if correction is None:
            correction = Polynomial([0.0])
        elif not isinstance(correction, Polynomial):
            correction = Polynomial(correction)
        self.correction = correction
        self.__d = [correction.deriv(k) for k in range(5)]
        abscissae = np.linspace(0.0, 1.0, 257)
        self.__slope_bound = float(np.max(np.abs(self.__d[1](abscissae)))) + 1.0

    @staticmethod
    def fubini_study():
        return SymplecticPotential()

    @staticmethod
    def bump(amplitude=1.0):
        """amplitude * m^2 (1-m)^2 as a correction polynomial."""
        return Polynomial([0.0, 0.0, 1.0, -2.0, 1.0]) * amplitude

    def shifted(self, direction, t):
        return SymplecticPotential(self.correction + direction * t)

    def value(self, m):
        m = np.asarray(m, dtype=float)
        return special.xlogy(m, m) + special.xlogy(1.0 - m, 1.0 - m) + self.__d[0](m)

    def gradient(self, m):
        m = np.asarray(m, dtype=float)
        with np.errstate(divide="ignore"):
            return special.logit(m) + self.__d[1](m)

    def hessian(self, m):
        m = np.asarray(m, dtype=float)
        with np.errstate(divide="ignore"):
            return 1.0 / (m * (1.0 - m)) + self.__d[2](m)

    def convexity_margin(self, m):
        """q = 1 + m(1-m) h''; w is strictly convex where q > 0."""
        m = np.asarray(m, dtype=float)
        return 1.0 + m * (1.0 - m) * self.__d[2](m)

    def psi_jet(self, m):
        """psi = 1/w'' with its first two derivatives."""
        m = np.asarray(m, dtype=float)
        p, p1, p2 = m * (1.0 - m), 1.0 - 2.0 * m, -2.0
        h2, h3, h4 = self.__d[2](m), self.__d[3](m), self.__d[4](m)
        q = 1.0 + p * h2
        q1 = p1 * h2 + p * h3
        q2 = p2 * h2 + 2.0 * p1 * h3 + p * h4
        numerator = p1 * q - p * q1
        psi = p / q
        psi1 = numerator / q**2
        psi2 = ((p2 * q - p * q2) * q - 2.0 * q1 * numerator) / q**3
        return psi, psi1, psi2

    def check_convex(self, m):
        margin = self.convexity_margin(m)
        bad = np.flatnonzero(~(margin > 0))
        if bad.size:
            where = float(np.asarray(m)[bad[0]])
            raise ConvexityException(
                "symplectic potential is not strictly convex at m = {:.6f}".format(where),
                m=where,
            )

    def gradient_inverse(self, s):
        """Solve w'(m) = s by bisection in y = logit(m), polished by Newton steps."""
        s = np.asarray(s, dtype=float)
        m = np.empty_like(s)
        m[s == -np.inf] = 0.0
        m[s == np.inf] = 1.0
        finite = np.isfinite(s)
        target = s[finite]
        lo = target - self.__slope_bound
        hi = target + self.__slope_bound
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            above = mid + self.__d[1](special.expit(mid)) - target > 0
            hi = np.where(above, mid, hi)
            lo = np.where(above, lo, mid)
        y = 0.5 * (lo + hi)
        for _ in range(NEWTON_STEPS):
            mm = special.expit(y)
            y = y - (y + self.__d[1](mm) - target) / self.convexity_margin(mm)
        m[finite] = special.expit(y)
        return m

    def chart_log_density(self, mu, chart="z"):
        """log of the chart density of the reference form, z chart or zeta = 1/z chart."""
        mu = np.asarray(mu, dtype=float)
        with np.errstate(divide="ignore"):
            log_q = np.log(self.convexity_margin(mu))
            if chart == "z":
                return 2.0 * np.log1p(-mu) - log_q - self.__d[1](mu)
            return 2.0 * np.log(mu) - log_q + self.__d[1](mu)


class Manifold(object):
    kind = None
    dimension = 1

    def __init__(self, resolution, tolerance=DEFAULT_RELATIVE_TOLERANCE):
        self.resolution = resolution
        self.tolerance = tolerance

    @property
    def shape(self):
        raise NotImplementedError

    @property
    def volume(self):
        return self.integrate(self.reference.values)

    def scalar(self, values):
        return ScalarField(self, values)

    def zeros(self):
        return np.zeros(self.shape)

    def mean(self, values, density=None):
        if density is None:
            density = self.reference.values
        return self.integrate(values * density) / self.integrate(density)

    @property
    def compatibility_tolerance(self):
        """Allowed |int rho| / V for a right-hand side that should integrate to zero."""
        return self.tolerance

    def check_compatible(self, rho, project=False):
        """rho itself, or rho minus its quadrature mean times omega when ``project``.

        ``project`` is for right-hand sides whose exact integral vanishes, such as
        a pullback minus omega, where the quadrature defect is discretization error.
        """
        rho = np.real(rho)
        total = self.integrate(rho)
        volume = self.volume
        _log.debug("compatibility defect %.3e (volume %.6f)", total, volume)
        if project:
            return rho - (total / volume) * self.reference.values
        if abs(total) > self.compatibility_tolerance * volume:
            raise CompatibilityException(
                "right-hand side integrates to {:.3e}, exceeds {:.1e} * V".format(
                    total, self.compatibility_tolerance
                )
            )
        return rho


class TorusManifold(Manifold):
    kind = ManifoldKind.TORUS

    def __init__(self, resolution, xi, tolerance=DEFAULT_RELATIVE_TOLERANCE):
        super(TorusManifold, self).__init__(resolution, tolerance)
        n = resolution
        axis = np.arange(n) / n
        self.x1, self.x2 = np.meshgrid(axis, axis, indexing="ij")
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n)
        self.kx, self.ky = np.meshgrid(k, k, indexing="ij")
        k_odd = k.copy()
        k_odd[n // 2] = 0.0
        kx_odd, ky_odd = np.meshgrid(k_odd, k_odd, indexing="ij")
        self.__dbar_symbol = 0.5 * (1j * kx_odd - ky_odd)
        self.__d_symbol = 0.5 * (1j * kx_odd + ky_odd)
        self.__laplace_symbol = -0.25 * (self.kx**2 + self.ky**2)
        self.__solve_symbol = 0.5 * (1j * self.kx - self.ky)
        self.__solve_symbol[0, 0] = 1.0
        values = xi(self.x1, self.x2) if callable(xi) else np.broadcast_to(xi, self.shape)
        self.reference = MetricDensity(self, np.array(values, dtype=float))

    @property
    def shape(self):
        return (self.resolution, self.resolution)

    @property
    def nodes(self):
        return self.x1, self.x2

    def integrate(self, density):
        density = np.asarray(density)
        return float(np.real(np.sum(density, axis=(-2, -1)))) * IDZDZBAR_AREA_FACTOR / self.resolution**2

    def __apply(self, symbol, values):
        return np.fft.ifft2(symbol * np.fft.fft2(values))

    def dbar(self, u):
        """Coefficient of dzbar: (u_x1 + i u_x2) / 2."""
        return self.__apply(self.__dbar_symbol, u)

    def partial(self, u):
        return self.__apply(self.__d_symbol, u)

    def ddbar(self, u):
        """Coefficient of i dz^dzbar: u_zzbar = Delta u / 4."""
        return np.real(self.__apply(self.__laplace_symbol, u))

    def poisson_solve(self, rho, project=False):
        rho = self.check_compatible(rho, project)
        symbol = self.__laplace_symbol.copy()
        symbol[0, 0] = 1.0
        spectrum = np.fft.fft2(rho) / symbol
        spectrum[0, 0] = 0.0
        u = np.real(np.fft.ifft2(spectrum))
        return u - self.mean(u)

    def harmonic_part(self, beta):
        return np.full(self.shape, np.mean(beta), dtype=complex)

    def dbar_solve(self, f):
        """Mean-zero h with dbar h = f dzbar; f must have zero mean."""
        spectrum = np.fft.fft2(f) / self.__solve_symbol
        spectrum[0, 0] = 0.0
        h = np.fft.ifft2(spectrum)
        return h - (self.mean(h.real) + 1j * self.mean(h.imag))

    def shift(self, values, delta1, delta2):
        """values(x + delta), exact for band-limited data."""
        phase = np.exp(1j * (self.kx * delta1 + self.ky * delta2))
        return np.real(np.fft.ifft2(np.fft.fft2(values) * phase))

    def gradient_norm_squared(self, v, density):
        return np.abs(self.dbar(v)) ** 2 / density

    def gradient_inner(self, v, w, density):
        return np.real(self.dbar(v) * np.conj(self.dbar(w))) / density

    def node_measure(self, density):
        return np.asarray(density) * IDZDZBAR_AREA_FACTOR / self.resolution**2

    def top_density(self, u):
        return self.reference.values + self.ddbar(u)


class CP1Manifold(Manifold):
    """S^1-invariant CP^1 on the moment grid; omega = dm ^ dtheta, V = 2 pi."""

    kind = ManifoldKind.CP1

    def __init__(self, resolution, potential, tolerance=DEFAULT_RELATIVE_TOLERANCE):
        super(CP1Manifold, self).__init__(resolution, tolerance)
        self.potential = potential
        self.m = np.linspace(0.0, 1.0, resolution + 1)
        self.step = 1.0 / resolution
        potential.check_convex(self.m[1:-1])
        self.psi, self.psi1, self.psi2 = potential.psi_jet(self.m)
        self.s = potential.gradient(self.m)
        weights = np.ones(resolution + 1)
        weights[1:-1:2] = 4.0
        weights[2:-1:2] = 2.0
        self.node_weights = 2.0 * np.pi * weights * self.step / 3.0
        self.reference = MetricDensity(self, np.ones(resolution + 1))

    @property
    def shape(self):
        return (self.resolution + 1,)

    @property
    def nodes(self):
        return self.m

    def integrate(self, density):
        return float(np.real(np.tensordot(np.asarray(density), self.node_weights, axes=([-1], [0]))))

    def moment_derivative(self, values, order=1, axis=0):
        return interpolate.CubicSpline(self.m, values, axis=axis)(self.m, order)

    def laplacian(self, u, axis=0):
        """L u = (psi u_m)_m, so that i ddbar u = (L u) omega."""
        spline = interpolate.CubicSpline(self.m, u, axis=axis)
        shape = [1] * np.ndim(u)
        shape[axis] = -1
        return self.psi1.reshape(shape) * spline(self.m, 1) + self.psi.reshape(shape) * spline(self.m, 2)

    def dbar(self, u):
        """Coefficient of dbar s = dzbar / zbar: psi u_m."""
        return (self.psi * self.moment_derivative(u)).astype(complex)

    def partial(self, u):
        return np.conj(self.dbar(u))

    def ddbar(self, u):
        return self.laplacian(u)

    @property
    def compatibility_tolerance(self):
        # spline Laplacian and Simpson weights are both O(h^2) near the poles
        return max(self.tolerance, self.step**2)

    def poisson_solve(self, rho, project=False):
        rho = self.check_compatible(rho, project)
        primitive = interpolate.CubicSpline(self.m, rho).antiderivative()(self.m)
        residue = primitive[-1]
        primitive = primitive - self.m * residue
        slope = np.empty_like(rho)
        slope[1:-1] = primitive[1:-1] / self.psi[1:-1]
        slope[0] = (rho[0] - residue) / self.psi1[0]
        slope[-1] = (rho[-1] - residue) / self.psi1[-1]
        u = interpolate.CubicSpline(self.m, slope).antiderivative()(self.m)
        return u - self.mean(u)

    def harmonic_part(self, beta):
        return np.zeros(self.shape, dtype=complex)

    def gradient_norm_squared(self, v, density):
        """|dbar v|^2 for omega_t = density * omega: psi v_m^2 / D."""
        return self.psi * self.moment_derivative(v) ** 2 / density

    def gradient_inner(self, v, w, density):
        return self.psi * self.moment_derivative(v) * self.moment_derivative(w) / density

    def node_measure(self, density):
        return np.asarray(density) * self.node_weights

    def top_density(self, u):
        return self.reference.values + self.ddbar(u)

    def chart_log_density(self, mu, log_density, chart="z"):
        return self.potential.chart_log_density(mu, chart) + log_density


class ProductManifold(Manifold):
    """CP^1 x CP^1 with omega = omega_1 + omega_2, n = 2, densities relative to omega^2/2."""

    kind = ManifoldKind.PRODUCT
    dimension = 2

    def __init__(self, first, second):
        super(ProductManifold, self).__init__(
            (first.resolution, second.resolution), min(first.tolerance, second.tolerance)
        )
        self.factors = (first, second)
        self.reference = MetricDensity(
            self, np.ones(self.shape), factors=(first.reference, second.reference)
        )
        self.__sqrt_psi = (
            np.sqrt(first.psi)[:, None] * np.ones(self.shape),
            np.sqrt(second.psi)[None, :] * np.ones(self.shape),
        )

    @property
    def compatibility_tolerance(self):
        return max(f.compatibility_tolerance for f in self.factors)

    @property
    def shape(self):
        return self.factors[0].shape + self.factors[1].shape

    @property
    def nodes(self):
        return np.meshgrid(self.factors[0].m, self.factors[1].m, indexing="ij")

    def integrate(self, density):
        first, second = self.factors
        inner = np.tensordot(np.asarray(density), second.node_weights, axes=([-1], [0]))
        return float(np.real(np.tensordot(inner, first.node_weights, axes=([-1], [0]))))

    def dbar(self, u):
        first, second = self.factors
        return np.stack(
            [
                first.psi[:, None] * first.moment_derivative(u, axis=0),
                second.psi[None, :] * second.moment_derivative(u, axis=1),
            ]
        ).astype(complex)

    def partial(self, u):
        return np.conj(self.dbar(u))

    def ddbar(self, u):
        """Components (a11, a22, a12) of i ddbar u in the frame ds_j / sqrt(psi_j).

        a11 = L_1 u, a22 = L_2 u, a12 = sqrt(psi_1 psi_2) u_{m1 m2}; the top
        density of omega + i ddbar u is (1 + a11)(1 + a22) - a12^2.
        """
        first, second = self.factors
        mixed = second.moment_derivative(first.moment_derivative(u, axis=0), axis=1)
        return np.stack(
            [
                first.laplacian(u, axis=0),
                second.laplacian(u, axis=1),
                self.__sqrt_psi[0] * self.__sqrt_psi[1] * mixed,
            ]
        )

    def determinant(self, components):
        a11, a22, a12 = components
        return (1.0 + a11) * (1.0 + a22) - a12**2

    def node_measure(self, density):
        first, second = self.factors
        return np.asarray(density) * np.outer(first.node_weights, second.node_weights)

    def top_density(self, u):
        return self.determinant(self.ddbar(u))

    def split(self, components):
        """Factor right-hand sides of a split (1,1) form, or CompatibilityException."""
        a11, a22, a12 = np.real(components)
        scale = max(1.0, float(np.max(np.abs(components))))
        tol = self.tolerance * scale
        if (
            np.max(np.abs(a12)) > tol
            or np.max(np.ptp(a11, axis=1)) > tol
            or np.max(np.ptp(a22, axis=0)) > tol
        ):
            raise CompatibilityException("product right-hand side is not split by factor")
        return a11[:, 0], a22[0, :]

    def poisson_solve(self, components, project=False):
        first, second = self.factors
        rho1, rho2 = self.split(components)
        return (
            first.poisson_solve(rho1, project)[:, None]
            + second.poisson_solve(rho2, project)[None, :]
        )

    def harmonic_part(self, beta):
        return np.zeros((2,) + self.shape, dtype=complex)

    def reduced_gradient(self, v):
        """sqrt(psi_j) v_{m_j}: (0,1) components of dbar v in the normalized frame."""
        first, second = self.factors
        return (
            self.__sqrt_psi[0] * first.moment_derivative(v, axis=0),
            self.__sqrt_psi[1] * second.moment_derivative(v, axis=1),
        )

    def gradient_inner(self, v, w, components):
        """<dbar v, dbar w> for omega_t = omega + form with the given (a11, a22, a12)."""
        a11, a22, a12 = components
        det = self.determinant(components)
        bv = self.reduced_gradient(v)
        bw = bv if w is v else self.reduced_gradient(w)
        return (
            (1.0 + a22) * bv[0] * bw[0]
            + (1.0 + a11) * bv[1] * bw[1]
            - a12 * (bv[0] * bw[1] + bv[1] * bw[0])
        ) / det

    def gradient_norm_squared(self, v, components):
        return self.gradient_inner(v, v, components)

    def split_density(self, first_density, second_density):
        return MetricDensity(
            self,
            np.outer(first_density.values, second_density.values),
            factors=(first_density, second_density),
        )


def make_torus(resolution, xi=1.0, tolerance=DEFAULT_RELATIVE_TOLERANCE):
    """Flat torus C / (Z + iZ) with omega = xi i dz^dzbar, V = 2 int xi dx dy."""
    if resolution < MIN_RESOLUTION or resolution & (resolution - 1):
        raise ResolutionException(
            "torus resolution must be a power of two >= {}, got {}".format(
                MIN_RESOLUTION, resolution
            )
        )
    return TorusManifold(resolution, xi, tolerance)


def make_cp1(resolution, potential=None, tolerance=DEFAULT_RELATIVE_TOLERANCE):
    if resolution < MIN_RESOLUTION or resolution % 2:
        raise ResolutionException(
            "moment grid size must be even and >= {}, got {}".format(MIN_RESOLUTION, resolution)
        )
    if potential is None:
        potential = SymplecticPotential.fubini_study()
    return CP1Manifold(resolution, potential, tolerance)


def make_product(first, second=None):
    if second is None:
        second = first
    for factor in (first, second):
        if factor.kind != ManifoldKind.CP1:
            raise CompatibilityException("product factors must be cp1-invariant manifolds")
    return ProductManifold(first, second)


def dbar(u):
    return FormField(u.manifold, (0, 1), u.manifold.dbar(u.values))


def partial(u):
    return FormField(u.manifold, (1, 0), u.manifold.partial(u.values))


def i_ddbar(u):
    return FormField(u.manifold, (1, 1), u.manifold.ddbar(u.values))


def integrate(form, manifold=None):
    if isinstance(form, (MetricDensity, ScalarField)):
        return form.manifold.integrate(form.values)
    if isinstance(form, FormField):
        if form.manifold.dimension != 1 or form.bidegree != (1, 1):
            raise CompatibilityException("only top-degree forms can be integrated")
        return form.manifold.integrate(np.real(form.coefficients))
    return manifold.integrate(form)


def poisson_solve(rho):
    """Mean-zero u with i ddbar u = rho."""
    return ScalarField(rho.manifold, rho.manifold.poisson_solve(rho.coefficients))


def harmonic_part(beta):
    return FormField(beta.manifold, beta.bidegree, beta.manifold.harmonic_part(beta.coefficients))


def write_grid_csv(field, csvfile):
    """Dump node coordinates and values of a ScalarField, FormField or MetricDensity."""
    manifold = field.manifold
    values = field.coefficients if isinstance(field, FormField) else field.values
    value_type = csv_writer.COMPLEX if np.iscomplexobj(values) else csv_writer.DOUBLE
    if manifold.kind == ManifoldKind.CP1:
        names, coordinates = ["m"], [manifold.m]
    else:
        names, coordinates = (["x1", "x2"] if manifold.kind == ManifoldKind.TORUS else ["m1", "m2"]), [
            np.ravel(c) for c in manifold.nodes
        ]
    values = np.asarray(values)
    if values.ndim > len(manifold.shape):
        components = [np.ravel(c) for c in values]
        value_names = ["value{}".format(i) for i in range(len(components))]
    else:
        components = [np.ravel(values)]
        value_names = ["value"]
    writer = csv_writer.CSVWriter(
        csvfile,
        names + value_names,
        [csv_writer.DOUBLE] * len(names) + [value_type] * len(value_names),
    )
    writer.writeheader()
    writer.writecolumns(dict(zip(names + value_names, coordinates + components)))
