"""Holomorphic vector fields with closed-form complex-time flows.

Supported kinds:

    torus-constant   c d/dz on the torus, flow z -> z + c tau
    cp1-linear       a z d/dz on CP^1, flow z -> exp(a tau) z
    product          (a1 z1 d/dz1, a2 z2 d/dz2) on CP^1 x CP^1, acting componentwise
"""

import logging

import numpy as np
from scipy import interpolate

from .conventions import (
    LOGNAME,
    FieldKind,
    ManifoldKind,
    CompatibilityException,
    ExactnessException,
    UnsupportedFieldException,
)
from .grid_calculus import FormField, MetricDensity, ScalarField

_log = logging.getLogger(LOGNAME)

_KIND_OF_MANIFOLD = {
    ManifoldKind.TORUS: FieldKind.TORUS_CONSTANT,
    ManifoldKind.CP1: FieldKind.CP1_LINEAR,
    ManifoldKind.PRODUCT: FieldKind.PRODUCT,
}


class HoloField(object):
    __slots__ = ["manifold", "kind", "coefficient"]

    def __init__(self, manifold, coefficient):
        if manifold.kind not in _KIND_OF_MANIFOLD:
            raise UnsupportedFieldException("no holomorphic fields on " + str(manifold.kind))
        self.manifold = manifold
        self.kind = _KIND_OF_MANIFOLD[manifold.kind]
        if self.kind == FieldKind.PRODUCT:
            coefficient = tuple(complex(c) for c in coefficient)
            if len(coefficient) != 2:
                raise UnsupportedFieldException("product fields take one coefficient per factor")
        else:
            coefficient = complex(coefficient)
        self.coefficient = coefficient

    def scaled(self, tau):
        if self.kind == FieldKind.PRODUCT:
            return HoloField(self.manifold, [c * tau for c in self.coefficient])
        return HoloField(self.manifold, self.coefficient * tau)

    def __add__(self, other):
        check_commuting((self, other))
        if self.kind == FieldKind.PRODUCT:
            return HoloField(
                self.manifold, [a + b for a, b in zip(self.coefficient, other.coefficient)]
            )
        return HoloField(self.manifold, self.coefficient + other.coefficient)

    def factor(self, index):
        return HoloField(self.manifold.factors[index], self.coefficient[index])

    def is_zero(self):
        return not np.any(np.atleast_1d(self.coefficient))

    def __repr__(self):
        return "HoloField({}, {})".format(self.kind, self.coefficient)


def check_commuting(fields):
    """All supported kinds commute when they live on the same manifold."""
    first = fields[0]
    for other in fields[1:]:
        if other.manifold is not first.manifold or other.kind != first.kind:
            raise UnsupportedFieldException("fields do not act on the same manifold")
    return True


class FlowMap(object):
    def __init__(self, field, tau):
        self.field = field
        self.tau = complex(tau)
        self.manifold = field.manifold
        if field.kind == FieldKind.PRODUCT:
            self.factors = tuple(
                FlowMap(field.factor(i), self.tau) for i in range(2)
            )
        else:
            shift = field.coefficient * self.tau
            # torus: translation of (x1, x2); cp1: sigma = Re(a tau) and rotation angle
            self.real_part = shift.real
            self.imag_part = shift.imag

    def compose(self, other):
        if other.field.manifold is not self.manifold:
            raise UnsupportedFieldException("cannot compose flows on different manifolds")
        return FlowMap(self.field.scaled(self.tau) + other.field.scaled(other.tau), 1.0)

    def apply(self, points):
        """Image of grid points: torus (x1, x2) tuple, cp1 moment values, product (m1, m2)."""
        kind = self.field.kind
        if kind == FieldKind.TORUS_CONSTANT:
            x1, x2 = points
            return np.mod(x1 + self.real_part, 1.0), np.mod(x2 + self.imag_part, 1.0)
        if kind == FieldKind.CP1_LINEAR:
            return self.__moment_image(np.asarray(points, dtype=float))
        return tuple(f.apply(p) for f, p in zip(self.factors, points))

    def apply_angle(self, theta):
        return theta + self.imag_part

    def __moment_image(self, m):
        potential = self.manifold.potential
        if not np.any(potential.correction.coef):
            growth = np.exp(2.0 * self.real_part)
            return growth * m / (1.0 - m + growth * m)
        return potential.gradient_inverse(potential.gradient(m) + 2.0 * self.real_part)

    def moment_jacobian(self, m):
        """dm'/dm = psi(m') / psi(m), with limits exp(+-2 sigma) at the poles."""
        manifold = self.manifold
        image = self.apply(m)
        psi = manifold.potential.psi_jet(m)[0]
        psi_image = manifold.potential.psi_jet(image)[0]
        jacobian = np.empty_like(m)
        interior = psi > 0
        jacobian[interior] = psi_image[interior] / psi[interior]
        jacobian[m <= 0.0] = np.exp(2.0 * self.real_part)
        jacobian[m >= 1.0] = np.exp(-2.0 * self.real_part)
        return image, jacobian


def flow(field, tau):
    return FlowMap(field, tau)


def _interpolate_density(manifold, values, points):
    if np.ptp(values) == 0.0:
        return np.full_like(points, values[0])
    return interpolate.CubicSpline(manifold.m, values)(points)


def pullback(flow_map, omega):
    """F^* omega; densities transform with |Jacobian|^2."""
    manifold = flow_map.manifold
    kind = flow_map.field.kind
    if kind == FieldKind.TORUS_CONSTANT:
        values = manifold.shift(omega.values, flow_map.real_part, flow_map.imag_part)
        return MetricDensity(manifold, values)
    if kind == FieldKind.CP1_LINEAR:
        image, jacobian = flow_map.moment_jacobian(manifold.m)
        values = _interpolate_density(manifold, omega.values, image) * jacobian
        return MetricDensity(manifold, values)
    factors = _factor_densities(omega)
    pulled = [pullback(f, d) for f, d in zip(flow_map.factors, factors)]
    return manifold.split_density(*pulled)


def _factor_densities(omega):
    if omega.factors is None:
        raise CompatibilityException("product form is not split by factor")
    return omega.factors


def contract(field, omega):
    """V -| omega as a (0,1) form: torus i c g dzbar, cp1 i a psi D dbar s."""
    manifold = field.manifold
    if field.kind == FieldKind.TORUS_CONSTANT:
        return FormField(manifold, (0, 1), 1j * field.coefficient * omega.values)
    if field.kind == FieldKind.CP1_LINEAR:
        return FormField(manifold, (0, 1), 1j * field.coefficient * manifold.psi * omega.values)
    first, second = _factor_densities(omega)
    parts = [contract(field.factor(i), d).coefficients for i, d in enumerate((first, second))]
    shape = manifold.shape
    return FormField(
        manifold,
        (0, 1),
        np.stack([np.broadcast_to(parts[0][:, None], shape), np.broadcast_to(parts[1][None, :], shape)]),
    )


def apply_field(field, v):
    """Derivative V(v) of a function along the field."""
    manifold = field.manifold
    if field.kind == FieldKind.TORUS_CONSTANT:
        return field.coefficient * manifold.partial(v)
    if field.kind == FieldKind.CP1_LINEAR:
        return field.coefficient * manifold.psi * manifold.moment_derivative(v)
    first, second = manifold.factors
    return (
        field.coefficient[0] * first.psi[:, None] * first.moment_derivative(v, axis=0)
        + field.coefficient[1] * second.psi[None, :] * second.moment_derivative(v, axis=1)
    )


class ExactnessResult(object):
    """Outcome of the exactness test V -| omega = i dbar h.

    ``h`` is the complex mean-zero potential (None when not exact).
    """

    __slots__ = ["exact", "h", "obstruction"]

    def __init__(self, exact, h=None, obstruction=0.0):
        self.exact = exact
        self.h = h
        self.obstruction = obstruction


def exactness_check(field, omega):
    manifold = field.manifold
    if field.kind == FieldKind.TORUS_CONSTANT:
        beta = contract(field, omega).coefficients
        obstruction = float(np.abs(np.mean(manifold.harmonic_part(beta))))
        scale = max(1.0, float(np.max(np.abs(beta))))
        _log.debug("torus exactness obstruction %.3e", obstruction)
        if obstruction > manifold.tolerance * scale:
            return ExactnessResult(False, obstruction=obstruction)
        h = manifold.dbar_solve(-1j * beta)
        h = h - (manifold.mean(h.real, omega.values) + 1j * manifold.mean(h.imag, omega.values))
        return ExactnessResult(True, h=h, obstruction=obstruction)
    if field.kind == FieldKind.CP1_LINEAR:
        return ExactnessResult(True, h=_moment_potential(manifold, field.coefficient, omega.values))
    first, second = _factor_densities(omega)
    h1 = _moment_potential(manifold.factors[0], field.coefficient[0], first.values)
    h2 = _moment_potential(manifold.factors[1], field.coefficient[1], second.values)
    return ExactnessResult(True, h=h1[:, None] + h2[None, :])


def _moment_potential(manifold, coefficient, density):
    # psi h_m = coefficient psi D
    primitive = interpolate.CubicSpline(manifold.m, density).antiderivative()(manifold.m)
    primitive = primitive - manifold.mean(primitive, density)
    return coefficient * primitive


def hamiltonian(field, omega):
    """Real H with (V - Vbar) -| omega = i dH, mean zero against omega."""
    manifold = field.manifold
    result = exactness_check(field, omega)
    if not result.exact:
        raise ExactnessException(
            "V -| omega is not dbar-exact, obstruction {:.6g}".format(result.obstruction),
            obstruction=result.obstruction,
        )
    imaginary = float(np.max(np.abs(np.imag(result.h)), initial=0.0))
    scale = max(1.0, float(np.max(np.abs(result.h), initial=0.0)))
    if imaginary > manifold.tolerance * scale:
        raise ExactnessException(
            "imaginary part of V is not Hamiltonian, |Im h| = {:.6g}".format(imaginary),
            obstruction=imaginary,
        )
    H = np.real(result.h)
    beta = contract(field, omega).coefficients
    defect = float(np.max(np.abs(beta - 1j * manifold.dbar(H))))
    _log.debug("hamiltonian consistency defect %.3e", defect)
    scale = max(1.0, float(np.max(np.abs(beta), initial=0.0)))
    if defect > manifold.compatibility_tolerance * scale:
        raise ExactnessException(
            "V -| omega differs from i dbar H by {:.6g}".format(defect), obstruction=defect
        )
    return ScalarField(manifold, H)
