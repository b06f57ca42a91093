import numpy as np
import pytest

from conftest import BUMP
from kahler.conventions import (
    CompatibilityException,
    ConvexityException,
    ExactnessException,
    Provenance,
    TimeNodeException,
    VelocityMethod,
)
from kahler.flows import HoloField
from kahler.geodesics import (
    ENERGY_CLOSED,
    ENERGY_SEGMENT,
    asymptotic_slope,
    aubin_yau_energy,
    complex_time_defect,
    energy_profile,
    extension_interval,
    geodesic_residual,
    hcmae_residual,
    induced_geodesic,
    line_restriction,
    manual_path,
    max_extension_time,
    multi_geodesic,
    multi_geodesic_residual,
    perturb_path,
    read_path_bundle,
    regauge,
    toric_geodesic,
    velocity_monotonicity,
    velocity_trajectory,
    write_path_bundle,
)
from kahler.grid_calculus import ScalarField, SymplecticPotential, make_cp1, make_product, make_torus


def _closed_form(manifold, t):
    phi = np.log1p(manifold.m * np.expm1(2.0 * t))
    return phi - aubin_yau_energy(ScalarField(manifold, phi)) / manifold.volume


def test_rotation_matches_closed_form(rotation_path):
    for t in (-0.25, 0.0, 0.25):
        u = rotation_path.potentials[rotation_path.index(t)]
        assert np.max(np.abs(u - _closed_form(rotation_path.manifold, t))) < 1e-5


def test_rotation_velocity_is_the_pulled_back_hamiltonian(rotation_path):
    i = rotation_path.index(0.0)
    assert np.max(np.abs(rotation_path.velocities[i] - (2.0 * rotation_path.manifold.m - 1.0))) < 1e-10
    assert rotation_path.provenance == Provenance.INDUCED
    assert rotation_path.velocity_method == VelocityMethod.FLOW


def test_residual_decays_with_the_time_step():
    fs = make_cp1(256)
    field = HoloField(fs, 1.0)
    deviations = []
    for step in (1.0 / 8.0, 1.0 / 16.0):
        path = induced_geodesic(field, np.arange(-2, 3) * step)
        deviations.append(geodesic_residual(path, 0.0).deviation)
    assert deviations[1] < deviations[0] / 3.0


def test_residual_needs_an_interior_node(rotation_path):
    with pytest.raises(TimeNodeException):
        geodesic_residual(rotation_path, rotation_path.times[0])
    with pytest.raises(TimeNodeException):
        geodesic_residual(rotation_path, 0.01)


def test_hcmae_residual_is_small(rotation_path):
    assert hcmae_residual(rotation_path, 0.0) < 1e-2


def test_richardson_residual(rotation_path):
    raw = geodesic_residual(rotation_path, 0.25).deviation
    assert geodesic_residual(rotation_path, 0.25, richardson=True).deviation < raw / 10.0
    assert hcmae_residual(rotation_path, 0.25, richardson=True) < hcmae_residual(rotation_path, 0.25)
    with pytest.raises(TimeNodeException):
        geodesic_residual(rotation_path, rotation_path.times[1], richardson=True)


def test_energy_is_affine_on_canonical_and_regauged_paths(rotation_path):
    assert energy_profile(rotation_path).deviation < 1e-9
    shifted = regauge(rotation_path, 0.3, -0.7)
    profile = energy_profile(shifted)
    assert profile.deviation < 1e-6
    assert profile.slope == pytest.approx(-0.7 * 2.0 * np.pi, rel=1e-6)
    assert shifted.gauge == {"kind": "affine", "offset": 0.3, "slope": -0.7}
    assert regauge(shifted, 0.1, 0.1).gauge["slope"] == pytest.approx(-0.6)


def test_velocities_increase_along_geodesics(rotation_path, toric_path):
    assert velocity_monotonicity(rotation_path) > -1e-10
    assert velocity_monotonicity(toric_path) > -1e-10


def test_non_exact_torus_field_needs_override():
    xi = lambda x1, x2: 1.0 + 0.3 * np.cos(2.0 * np.pi * x1)
    torus = make_torus(16, xi)
    times = np.arange(0, 5) * 0.25
    with pytest.raises(ExactnessException):
        induced_geodesic(HoloField(torus, 1.0), times)
    path = induced_geodesic(HoloField(torus, 1.0), times, override=True)
    assert np.max(np.abs(path.potentials[-1] - path.potentials[0])) < 1e-8
    assert np.max(np.ptp(path.potentials, axis=0)) > 1e-3


def test_complex_time_defect(fs):
    assert complex_time_defect(HoloField(fs, 1.0), 0.25, 0.3) < 1e-10
    assert complex_time_defect(HoloField(fs, 1j), 0.25, 0.3) > 1e-3


def test_velocity_trajectory_matches_the_path(rotation_path):
    velocities = velocity_trajectory(rotation_path.field, rotation_path.times)
    assert np.allclose(velocities, rotation_path.velocities)


def test_toric_velocity_and_residual(toric_path):
    fs = toric_path.manifold
    i = toric_path.index(0.0)
    assert np.allclose(toric_path.velocities[i], -np.polyval(BUMP[::-1], fs.m))
    assert toric_path.provenance == Provenance.TORIC
    assert geodesic_residual(toric_path, 0.25).deviation < 1e-3


def test_extension_interval_of_the_bump():
    fs = SymplecticPotential.fubini_study()
    lo, hi = extension_interval(fs, BUMP)
    assert lo == pytest.approx(-12.0, rel=1e-6)
    assert hi == pytest.approx(4.0, rel=1e-6)
    assert max_extension_time(fs, BUMP) == pytest.approx(4.0, rel=1e-6)
    assert extension_interval(fs, [1.0, 2.0]) == (-np.inf, np.inf)


def test_toric_path_breaks_past_the_interval():
    w0 = SymplecticPotential.fubini_study()
    with pytest.raises(ConvexityException):
        toric_geodesic(w0, SymplecticPotential(BUMP), [0.0, 2.25, 4.5], resolution=64)


def test_product_path_and_line_restriction():
    product = make_product(make_cp1(32))
    fields = (HoloField(product, (1.0, 0.0)), HoloField(product, (0.0, 1.0)))
    times = np.arange(-2, 3) * 0.125
    path = multi_geodesic(fields, times, times)
    assert path.parameters == 2
    assert np.max(multi_geodesic_residual(path, 2, 2).deviation) < 1e-2
    diagonal = line_restriction(path, (1, 1))
    assert np.allclose(diagonal.times, times)
    assert np.allclose(diagonal.potentials[2], path.potentials[2, 2])


def test_manual_and_perturbed_paths(rotation_path):
    fs = rotation_path.manifold
    manual = manual_path(fs, rotation_path.times, rotation_path.potentials)
    assert manual.velocity_method == VelocityMethod.CENTRAL
    assert np.max(np.abs(manual.velocities[16] - rotation_path.velocities[16])) < 1e-2
    with pytest.raises(CompatibilityException):
        manual_path(fs, rotation_path.times[:-1], rotation_path.potentials)
    control = perturb_path(rotation_path, 0.1, (fs.m - 0.5) ** 2)
    assert geodesic_residual(control, 0.25).deviation > 10.0 * geodesic_residual(rotation_path, 0.25).deviation


def test_asymptotic_slope_on_cp1():
    slope = asymptotic_slope(HoloField(make_cp1(1024), 1.0), T=20.0, eps=1e-3)
    assert slope.g_star == pytest.approx(1.0, abs=1e-9)
    assert slope.sup_norm_spread < 1e-6
    assert slope.deviation_measure < 1e-3


def test_path_bundle(tmp_path, rotation_path):
    write_path_bundle(rotation_path, str(tmp_path))
    path = read_path_bundle(str(tmp_path))
    assert np.allclose(path.times, rotation_path.times)
    assert np.allclose(path.potentials, rotation_path.potentials)
    assert path.gauge == rotation_path.gauge


def test_energy_methods_agree(rotation_path):
    fs = rotation_path.manifold
    u = rotation_path.potential_at(rotation_path.index(0.25))
    closed = aubin_yau_energy(ScalarField(fs, u.values + 0.4))
    segment = aubin_yau_energy(ScalarField(fs, u.values + 0.4), method=ENERGY_SEGMENT)
    assert segment == pytest.approx(closed, abs=1e-12)
    assert closed == pytest.approx(0.4 * fs.volume, abs=1e-12)
    constant = ScalarField(fs, np.full(fs.shape, 0.7))
    assert aubin_yau_energy(constant, method=ENERGY_CLOSED) == pytest.approx(0.7 * fs.volume, rel=1e-12)
    assert aubin_yau_energy(constant, method=ENERGY_SEGMENT) == pytest.approx(0.7 * fs.volume, rel=1e-12)


def test_affine_toric_direction_is_the_rotation(rotation_path):
    fs = rotation_path.manifold
    w0 = SymplecticPotential.fubini_study()
    toric = toric_geodesic(w0, SymplecticPotential([0.0, -2.0]), rotation_path.times, manifold=fs, normalize=True)
    assert np.max(np.abs(toric.velocities - rotation_path.velocities)) < 1e-8
    difference = toric.potentials - rotation_path.potentials
    assert np.max(np.ptp(difference, axis=1)) < 1e-4


def test_product_path_splits_by_factor():
    times = np.arange(-2, 3) * 0.125
    single = induced_geodesic(HoloField(make_cp1(32), 1.0), times)
    product = make_product(make_cp1(32))
    fields = (HoloField(product, (1.0, 0.0)), HoloField(product, (0.0, 1.0)))
    path = multi_geodesic(fields, times, times)
    for i, j in ((0, 4), (1, 2), (3, 3)):
        split = single.potentials[i][:, None] + single.potentials[j][None, :]
        assert np.ptp(path.potentials[i, j] - split) < 1e-9
        assert np.allclose(path.velocities[i, j, 0], single.velocities[i][:, None])
        assert np.allclose(path.velocities[i, j, 1], single.velocities[j][None, :])


def test_rotation_on_the_resolution_ladder():
    times = np.arange(-4, 5) / 8.0
    errors = []
    for resolution in (64, 128, 256, 512):
        path = induced_geodesic(HoloField(make_cp1(resolution), 1.0), times)
        u = path.potentials[path.index(0.5)]
        errors.append(np.max(np.abs(u - _closed_form(path.manifold, 0.5))))
    assert errors[0] < 1e-3
    assert errors[-1] < errors[0]
