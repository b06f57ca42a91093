import numpy as np
import pytest

from kahler.conventions import CompatibilityException, PositivityException, PreconditionException
from kahler.metric_superposition import (
    HALF_PLANE_LEFT,
    HALF_PLANE_RIGHT,
    STRIP,
    ConformalMetric,
    cauchy_margins,
    curvature_margin,
    hyperbolic_density,
    make_disk_grid,
    make_strip_grid,
    poincare_family,
    poincare_metric,
    prop_check,
    random_family,
    strip_metric,
    superpose,
)


@pytest.fixture(scope="module")
def disk():
    return make_disk_grid(128)


def _scale(metric):
    return float(np.max(metric.values[metric.grid.mask]))


def test_poincare_metric_is_sharp(disk):
    for c in (0.5, 1.0, 3.0):
        metric = poincare_metric(disk, c, 1.0)
        margin = curvature_margin(metric, 1.0 / (2.0 * c))
        assert abs(margin.minimum) <= 1e-8 * _scale(metric)


def test_jet_and_stencil_agree(disk):
    metric = poincare_metric(disk, 1.0, 1.5)
    stencil = ConformalMetric(disk, metric.values)
    jet = curvature_margin(metric, 0.5).field
    numeric = curvature_margin(stencil, 0.5).field
    mask = disk.mask
    assert np.max(np.abs(jet[mask] - numeric[mask])) <= 1e-2 * _scale(metric)


def test_random_superposition_keeps_the_bound(disk):
    rng = np.random.default_rng([3, 0])
    family, weights, a = random_family(disk, rng, size=6)
    result = prop_check(family, weights, a)
    assert result.constant == pytest.approx(a / np.sum(weights))
    assert result.margin >= -1e-8 * _scale(superpose(family, weights))
    assert result.relative >= -1e-8
    gradient, square = result.cauchy
    assert gradient >= -1e-8 * _scale(superpose(family, weights)) ** 2
    assert square >= -1e-8 * _scale(superpose(family, weights)) ** 2


def test_flat_member_fails_the_precondition(disk):
    flat = ConformalMetric(disk, np.ones(disk.shape))
    family = [flat] + poincare_family(disk, [1.0], [1.0])
    with pytest.raises(PreconditionException) as e:
        prop_check(family, [1.0, 1.0], 0.5)
    assert e.value.member == 0
    assert e.value.margin == pytest.approx(-0.5)


def test_superpose_checks_its_inputs(disk):
    family = poincare_family(disk, [1.0, 2.0], [1.0, 1.5])
    with pytest.raises(CompatibilityException):
        superpose(family, [1.0])
    with pytest.raises(CompatibilityException):
        superpose(family, [1.0, -1.0])
    total = superpose(family, [1.0, 2.0])
    assert np.allclose(total.values[disk.domain], (family[0].values + 2.0 * family[1].values)[disk.domain])


def test_metric_must_be_positive(disk):
    values = np.ones(disk.shape)
    values[64, 64] = -1.0
    with pytest.raises(PositivityException) as e:
        ConformalMetric(disk, values)
    assert e.value.location == (64, 64)


def test_hyperbolic_densities_have_curvature_minus_one():
    h = 1e-4
    t = np.linspace(0.2, 0.8, 7)
    for kind in (HALF_PLANE_RIGHT, HALF_PLANE_LEFT, STRIP):
        rho = lambda s: hyperbolic_density(kind, (0.0, 1.0), s)
        laplacian = 0.25 * (np.log(rho(t + h)) - 2.0 * np.log(rho(t)) + np.log(rho(t - h))) / h**2
        assert np.allclose(laplacian, rho(t), rtol=1e-5)
    assert hyperbolic_density(HALF_PLANE_RIGHT, (0.0, None), 1.0) == pytest.approx(0.5)
    with pytest.raises(ValueError):
        hyperbolic_density("annulus", (0.0, 1.0), 0.5)


def test_strip_metric_is_sharp():
    grid = make_strip_grid((0.0, 2.0), 128)
    for scale in (1.0, 4.0):
        metric = strip_metric(grid, scale)
        margin = curvature_margin(metric, 1.0 / scale)
        assert abs(margin.minimum) <= 1e-8 * _scale(metric)
    rho = hyperbolic_density(STRIP, (0.0, 2.0), grid.x[grid.mask])
    assert np.allclose(strip_metric(grid).values[grid.mask], rho)


def test_cauchy_margins_of_a_fixed_family(disk):
    family = poincare_family(disk, [1.0, 2.0, 0.5], [1.0, 1.2, 1.7])
    weights = [0.5, 1.0, 2.0]
    gradient, square = cauchy_margins(family, weights)
    scale = _scale(superpose(family, weights)) ** 2
    assert gradient >= -1e-8 * scale
    assert square >= -1e-8 * scale
