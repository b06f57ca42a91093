import numpy as np
import pytest
from numpy.polynomial import Polynomial

from conftest import BUMP
from kahler.conventions import LeafException, SampleException, TimeNodeException
from kahler.flows import HoloField, flow
from kahler.geodesics import toric_geodesic
from kahler.grid_calculus import SymplecticPotential, make_cp1
from kahler.kenergy_foliation import (
    SeparableTestFunction,
    ThetaDensity,
    chart_independence,
    curvature_bound_check,
    kenergy_theta,
    leaf_field,
    leaf_pullback_check,
    ray_bound_check,
    superposition_check,
    theta_on_leaf,
    toric_kenergy,
    toric_kenergy_second,
    trace_leaf,
)
from kahler.metric_superposition import STRIP, hyperbolic_density


@pytest.fixture(scope="module")
def long_toric_path():
    w0 = SymplecticPotential.fubini_study()
    times = np.arange(-64, 65) / 32.0
    return toric_geodesic(w0, SymplecticPotential(BUMP), times, resolution=256)


def _leaf_kappa(x, t):
    # the w_t-moment of a leaf is constant, so kappa = 1/4 (dw'' / w_t'')^2
    second = Polynomial(BUMP).deriv(2)(x)
    return 0.25 * (second / (1.0 / (x * (1.0 - x)) + t * second)) ** 2


def test_kenergy_is_constant_along_a_rotation(rotation_path):
    theta = kenergy_theta(rotation_path, leaves=0)
    assert theta.fiber is None
    assert np.max(np.abs(theta.values)) <= 1e-3


def test_toric_kappa_matches_the_closed_form(toric_path):
    w0 = SymplecticPotential.fubini_study()
    theta = kenergy_theta(toric_path, leaves=0)
    exact = [0.25 * toric_kenergy_second(w0, BUMP, t) for t in theta.times]
    assert np.max(np.abs(theta.values - exact)) <= 2e-3
    assert np.all(theta.values > 0.0)


def test_fiber_integral_matches_the_direct_route(toric_path):
    theta = kenergy_theta(toric_path, leaves=32)
    assert theta.discrepancy <= 5e-3


def test_kenergy_theta_rejects_sparse_samples(rotation_path):
    with pytest.raises(SampleException):
        kenergy_theta(rotation_path, leaves=1)


def test_leaves_preserve_the_form(rotation_path):
    assert leaf_pullback_check(rotation_path, 0.5) <= 1e-3
    with pytest.raises(LeafException):
        leaf_pullback_check(rotation_path, 0.001)


def test_leaf_field_at_the_base(rotation_path):
    field = leaf_field(rotation_path, 0.0)
    assert field.t == 0.0
    assert np.allclose(field.coefficients, 1.0)
    with pytest.raises(TimeNodeException):
        leaf_field(rotation_path, rotation_path.times[-1])


def test_strict_leaf_stops_at_the_boundary_cell(rotation_path):
    with pytest.raises(LeafException):
        trace_leaf(rotation_path, 2.0 / 128.0)


def test_leaf_theta_and_its_curvature(long_toric_path):
    x = 0.4
    leaf = trace_leaf(long_toric_path, x)
    theta = theta_on_leaf(leaf, stride=4)
    assert np.max(np.abs(theta.kappa - _leaf_kappa(x, theta.times))) <= 1e-4
    # kappa_x |dtau|^2 has curvature exactly -2 on toric leaves
    assert np.max(np.abs(theta.burns_margin)) <= 1e-2
    assert theta.curvature_times[0] == pytest.approx(-1.0)
    assert theta.curvature_times[-1] == pytest.approx(1.0)
    assert np.max(np.abs(theta.burns_margin_richardson)) <= 2e-2
    assert chart_independence(leaf, stride=4) <= 1e-3


def test_toric_kenergy_of_fubini_study():
    w0 = SymplecticPotential.fubini_study()
    assert toric_kenergy(w0) == pytest.approx(-2.0 * np.pi, rel=1e-10)
    h = 0.02
    direction = Polynomial(BUMP)
    values = [toric_kenergy(w0.shifted(direction, t)) for t in (-h, 0.0, h)]
    second = (values[0] - 2.0 * values[1] + values[2]) / h**2
    assert second == pytest.approx(toric_kenergy_second(w0, BUMP, 0.0), rel=1e-3)


def test_strip_density_is_sharp():
    times = np.linspace(0.25, 0.75, 51)
    volume = 2.0 * np.pi
    kappa = 0.5 * volume * hyperbolic_density(STRIP, (0.0, 1.0), times)
    report = curvature_bound_check(ThetaDensity(times, kappa, volume=volume), strip=(0.0, 1.0))
    assert report.branch == "positive"
    assert report.constant == pytest.approx(2.0 / volume)
    assert np.max(np.abs(report.differential)) < 1e-3
    assert report.strip_min == pytest.approx(0.0, abs=1e-9)


def test_flat_kappa_takes_the_zero_branch():
    times = np.linspace(0.0, 1.0, 11)
    report = curvature_bound_check(ThetaDensity(times, np.zeros(11), volume=2.0))
    assert report.branch == "zero"
    assert report.differential_min is None


def test_partly_vanishing_kappa_is_rejected():
    times = np.linspace(0.0, 1.0, 11)
    kappa = np.ones(11)
    kappa[5] = 0.0
    with pytest.raises(SampleException):
        curvature_bound_check(ThetaDensity(times, kappa, volume=2.0))


def test_ray_bound():
    times = np.linspace(1.0, 3.0, 21)
    theta = ThetaDensity(times, np.full(21, 0.1), volume=2.0 * np.pi)
    assert ray_bound_check(theta, 0.0) == pytest.approx(2.0 * np.pi / 9.0 - 0.4)
    with pytest.raises(SampleException):
        ray_bound_check(theta, 3.0)


def test_separable_test_function_derivatives():
    phi = SeparableTestFunction([([0.0, 1.0], [0.0, 0.0, 1.0]), ([1.0], [2.0])])
    m = np.linspace(0.0, 1.0, 5)
    assert np.allclose(phi.value(2.0, m), 2.0 * m**2 + 2.0)
    assert np.allclose(phi.value(2.0, m, dt=1, dm=1), 2.0 * m)
    assert np.allclose(phi.value(2.0, m, dt=2), 0.0)


def test_superposition_over_leaves(toric_path):
    phi = SeparableTestFunction([([1.0, 0.0, 1.0], [0.0, 1.0, -1.0])])
    result = superposition_check(toric_path, phi, leaves=32)
    assert result.gap <= 5e-2 * max(1.0, abs(result.lhs))


def test_curvature_needs_the_coarse_stencil(rotation_path):
    leaf = trace_leaf(rotation_path, 0.5)
    with pytest.raises(TimeNodeException):
        theta_on_leaf(leaf, stride=4)


def test_clipped_leaf_nodes_are_dropped(rotation_path):
    with pytest.warns(UserWarning):
        leaf = trace_leaf(rotation_path, 0.02, strict=False)
    assert leaf.clipped[-1]
    assert not leaf.clipped[:-1].any()
    theta = theta_on_leaf(leaf)
    assert theta.times[-1] == pytest.approx(leaf.times[-4])


def test_induced_leaves_follow_the_flow(fs, rotation_path):
    x = 0.3
    leaf = trace_leaf(rotation_path, x)
    field = HoloField(fs, 1.0)
    exact = np.array([flow(field, -t).apply(np.array([x]))[0] for t in leaf.times])
    assert np.max(np.abs(leaf.positions - exact)) <= 1e-5
    # log density along the leaf is affine in t
    assert np.max(np.abs(theta_on_leaf(leaf).kappa)) <= 1e-4
