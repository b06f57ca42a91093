import numpy as np
import pytest
from numpy.polynomial import Polynomial

from kahler import csv_reader
from kahler.conventions import (
    CompatibilityException,
    ConvexityException,
    PositivityException,
    ResolutionException,
)
from kahler.grid_calculus import (
    MetricDensity,
    ScalarField,
    SymplecticPotential,
    make_cp1,
    make_product,
    make_torus,
    write_grid_csv,
)


def test_resolution_rules():
    with pytest.raises(ResolutionException):
        make_cp1(8)
    with pytest.raises(ResolutionException):
        make_cp1(65)
    with pytest.raises(ResolutionException):
        make_torus(48)
    make_cp1(66)


def test_volumes():
    assert make_cp1(64).volume == pytest.approx(2.0 * np.pi, rel=1e-12)
    assert make_torus(32).volume == pytest.approx(2.0, rel=1e-12)
    xi = lambda x1, x2: 1.0 + 0.3 * np.cos(2.0 * np.pi * x1)
    assert make_torus(32, xi).volume == pytest.approx(2.0, rel=1e-12)
    product = make_product(make_cp1(32))
    assert product.shape == (33, 33)
    assert product.volume == pytest.approx(4.0 * np.pi**2, rel=1e-12)


def test_torus_derivatives_are_spectral():
    torus = make_torus(32)
    u = np.sin(2.0 * np.pi * torus.x1)
    assert np.max(np.abs(torus.dbar(u) - np.pi * np.cos(2.0 * np.pi * torus.x1))) < 1e-9
    # u_zzbar = Delta u / 4
    assert np.max(np.abs(torus.ddbar(u) + np.pi**2 * u)) < 1e-9


def test_torus_poisson_inverts_ddbar():
    torus = make_torus(32)
    u = np.sin(2.0 * np.pi * torus.x1) * np.cos(4.0 * np.pi * torus.x2)
    assert np.max(np.abs(torus.poisson_solve(torus.ddbar(u)) - u)) < 1e-10


def test_cp1_poisson_inverts_laplacian():
    fs = make_cp1(128, tolerance=1e-4)
    u = np.cos(np.pi * fs.m)
    back = fs.poisson_solve(fs.ddbar(u))
    assert np.max(np.abs(back - (u - fs.mean(u)))) < 1e-3


def test_gradient_inverse():
    w = SymplecticPotential(SymplecticPotential.bump(0.5))
    m = np.linspace(0.01, 0.99, 99)
    assert np.max(np.abs(w.gradient_inverse(w.gradient(m)) - m)) < 1e-10
    assert w.gradient_inverse(np.array([-np.inf, np.inf])).tolist() == [0.0, 1.0]


def test_fubini_study_psi():
    fs = make_cp1(64)
    assert np.allclose(fs.psi, fs.m * (1.0 - fs.m))
    assert np.allclose(fs.psi1, 1.0 - 2.0 * fs.m)


def test_non_convex_potential_is_rejected():
    with pytest.raises(ConvexityException):
        make_cp1(64, SymplecticPotential(Polynomial([0.0, 0.0, -10.0])))


def test_density_must_be_positive():
    fs = make_cp1(32)
    values = np.ones(fs.shape)
    values[5] = 0.0
    with pytest.raises(PositivityException) as e:
        MetricDensity(fs, values)
    assert e.value.location == (5,)


def test_write_grid_csv(tmp_path):
    fs = make_cp1(32)
    field = ScalarField(fs, fs.m**2)
    filename = tmp_path / "field.csv"
    with open(filename, "w", newline="") as csvfile:
        write_grid_csv(field, csvfile)
    with open(filename) as csvfile:
        data = csv_reader.CSVReader(csvfile)
    assert data.get_samples() == 33
    assert np.allclose(data.value, fs.m**2)


def test_integrate_reference_densities():
    torus = make_torus(64)
    assert torus.integrate(torus.reference.values) == pytest.approx(2.0, rel=1e-12)
    assert torus.integrate(np.zeros(torus.shape)) == 0.0
    fs = make_cp1(256)
    assert fs.integrate(fs.reference.values) == pytest.approx(2.0 * np.pi, rel=1e-12)


def test_harmonic_part_is_the_mean():
    torus = make_torus(32)
    constant = torus.harmonic_part(np.full(torus.shape, 1j))
    assert np.allclose(constant, 1j)
    exact = torus.harmonic_part(torus.dbar(np.sin(2.0 * np.pi * torus.x1)))
    assert np.max(np.abs(exact)) < 1e-10
    xi = 1.0 + 0.3 * np.cos(2.0 * np.pi * torus.x1)
    assert np.allclose(torus.harmonic_part(xi), 1.0)
    fs = make_cp1(64)
    assert not np.any(fs.harmonic_part(np.ones(fs.shape)))


def test_stokes_and_conjugation():
    torus = make_torus(32)
    u = np.sin(2.0 * np.pi * torus.x1) * np.cos(2.0 * np.pi * torus.x2) + np.cos(4.0 * np.pi * torus.x2)
    assert abs(torus.integrate(torus.ddbar(u))) < 1e-12
    assert np.allclose(torus.partial(u), np.conj(torus.dbar(u)), atol=1e-12)
    fs = make_cp1(128)
    v = np.cos(np.pi * fs.m)
    assert abs(fs.integrate(fs.ddbar(v))) <= fs.compatibility_tolerance * fs.volume
    assert np.allclose(fs.partial(v), np.conj(fs.dbar(v)))


def test_poisson_compatibility():
    fs = make_cp1(64)
    with pytest.raises(CompatibilityException):
        fs.poisson_solve(np.ones(fs.shape))
    assert np.max(np.abs(fs.poisson_solve(np.ones(fs.shape), project=True))) < 1e-12
    assert fs.compatibility_tolerance == pytest.approx(64.0**-2)
    torus = make_torus(32)
    assert torus.compatibility_tolerance == torus.tolerance
    with pytest.raises(CompatibilityException):
        torus.poisson_solve(torus.reference.values)
