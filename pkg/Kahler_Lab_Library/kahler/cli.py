"""Experiment runner behind Kahler_Scripts/kahler_lab.py.

Each experiment type has a runner returning ReportRecords; ``run`` loads a
configuration, runs the experiments a subcommand selects and writes
``<out>/<name>/report.json`` next to the CSV data and SVG plots.
"""

import logging
import os
import sys

import numpy as np
from numpy.polynomial import Polynomial

from .conventions import LOGNAME, ConfigException, KahlerLabException, PreconditionException
from .dh_measures import (
    RangeSet,
    hausdorff,
    measure_distance,
    moment_image,
    pushforward,
    set_A,
    set_B,
    uniform_reference,
    write_hull_csv,
    write_measure_csv,
)
from .experiment_config import ExperimentConfig
from .flows import HoloField
from .geodesics import (
    aubin_yau_energy,
    asymptotic_slope,
    energy_profile,
    extension_interval,
    geodesic_residual,
    hcmae_residual,
    induced_geodesic,
    multi_geodesic,
    perturb_path,
    regauge,
    toric_geodesic,
    velocity_monotonicity,
    velocity_trajectory,
)
from .grid_calculus import ScalarField, SymplecticPotential, make_cp1, make_product, make_torus
from .kenergy_foliation import (
    SeparableTestFunction,
    ThetaDensity,
    chart_independence,
    curvature_bound_check,
    kenergy_theta,
    leaf_pullback_check,
    ray_bound_check,
    superposition_check,
    theta_on_leaf,
    toric_kenergy_second,
    trace_leaf,
    trace_leaves,
)
from .metric_superposition import (
    STRIP,
    ConformalMetric,
    hyperbolic_density,
    make_disk_grid,
    poincare_family,
    prop_check,
    random_family,
)
from . import csv_writer, plotting
from .report import (
    ReportRecord,
    bound_record,
    criterion_summary,
    exit_code,
    trend_record,
    write_report,
    write_trend_csv,
)

_log = logging.getLogger(LOGNAME)

REPORT = "report.json"

CRITERIA = {
    1: "cp1 rotation geodesic: closed-form potential at the finest grid, residual order across the ladder",
    2: "torus counterexample: 1-periodic canonical path, non-constant, residual far above the induced case",
    3: "pushforward invariance: measure distance decays on cp1 and cp1 x cp1, cp1 limit is uniform",
    4: "velocity ranges: Hausdorff(A, B_x) within two cells, fixed points give singleton endpoints, k = 2 hull covered",
    5: "sup-norm invariance of the velocity and the asymptotic slope off a small set",
    6: "moment image of the double rotation is the unit square, coverage defect decays",
    7: "Aubin-Yau energy is affine along canonical and re-gauged paths",
    8: "leaf pullback order on induced and toric paths, negative control fails",
    9: "K-energy: fiber and direct kappa agree with order two, induced paths have kappa = 0",
    10: "curvature of kappa |dtau|^2 and the leaf Burns margin within tol(h)",
    11: "kappa below the strip comparison on the extension interval",
    12: "superposition of negatively curved metrics keeps the scaled curvature bound",
}

SUBCOMMANDS = ("geodesic", "dh", "sets", "moment", "kenergy", "leaves", "prop-superpose", "all")


class ExperimentContext(object):
    """Output location, random generator and plot switch of one experiment."""

    def __init__(self, experiment, directory, rng, plots=True):
        self.experiment = experiment
        self.directory = directory
        self.rng = rng
        self.plots = plots

    def filename(self, name):
        return os.path.join(self.directory, "{}_{}".format(self.experiment.key, name))

    def write_csv(self, name, write, *args):
        with open(self.filename(name + ".csv"), "w", newline="") as csvfile:
            write(*args, csvfile)

    def write_columns(self, name, columns):
        names = list(columns)
        with open(self.filename(name + ".csv"), "w", newline="") as csvfile:
            writer = csv_writer.CSVWriter(csvfile, names, [csv_writer.DOUBLE] * len(names))
            writer.writeheader()
            writer.writecolumns(columns)

    def plot(self, draw, name, *args, **kwargs):
        if self.plots:
            draw(*args, filename=self.filename(name + ".svg"), **kwargs)


def _time_grid(span, step):
    """Uniform grid over [-span, span] with step ``step``; 0 is a node."""
    n = int(round(span / step))
    return np.arange(-n, n + 1) * step


def _potential(correction):
    if correction:
        return SymplecticPotential(correction)
    return SymplecticPotential.fubini_study()


def _rotation_path(exp, resolution, span=None):
    manifold = make_cp1(resolution, _potential(exp.values.get("correction")), exp["tolerance"])
    times = _time_grid(exp["t_span"] if span is None else span, exp["time_scale"] / resolution)
    return induced_geodesic(HoloField(manifold, exp["field"]), times)


def _toric_path(exp, resolution, span):
    """FS + t dw on cp1 over [-span, span] with step time_scale / M."""
    w0 = SymplecticPotential.fubini_study()
    direction = Polynomial(exp["direction"])
    manifold = make_cp1(resolution, w0, exp["tolerance"])
    times = _time_grid(span, exp["time_scale"] / resolution)
    return toric_geodesic(w0, SymplecticPotential(direction), times, manifold=manifold), w0, direction


def _stride(exp, path):
    return max(1, int(round(exp["stencil_step"] / path.step)))


def _curvature_tolerance(exp, resolution):
    """tol(h) = tolerance (M0 / M)^2, M0 the coarsest resolution of the ladder."""
    return exp["curvature_tolerance"] * (exp["resolutions"][0] / float(resolution)) ** 2


def _rotation_closed_form(path, coefficient, t):
    """log(1 - m + exp(2 a t) m) in the energy-zero gauge, a = Re of the coefficient."""
    manifold = path.manifold
    phi = np.log1p(manifold.m * np.expm1(2.0 * coefficient.real * t))
    return phi - aubin_yau_energy(ScalarField(manifold, phi)) / manifold.volume


# -- geodesic ------------------------------------------------------------------------


def run_geodesic(exp, ctx):
    if exp["manifold"] == "torus":
        return _geodesic_torus(exp, ctx)
    return _geodesic_cp1(exp, ctx)


def _energy_records(exp, ctx, path, label):
    profile = energy_profile(path)
    offset, slope = exp["regauge"]
    shifted = energy_profile(regauge(path, offset, slope))
    ctx.write_columns(
        label + "_energy",
        {"t": path.times, "energy": profile.energies, "regauged": shifted.energies},
    )
    ctx.plot(
        plotting.plot_curves,
        label + "_energy",
        path.times,
        {"canonical": profile.energies, "re-gauged": shifted.energies},
        ylabel="Aubin-Yau energy",
    )
    return [
        bound_record(exp.key, 7, label + "_energy_deviation", profile.deviation, exp["energy_tolerance"]),
        bound_record(exp.key, 7, label + "_regauged_energy_deviation", shifted.deviation, exp["energy_tolerance"]),
    ]


def _max_deviation(path, check_times):
    return max(geodesic_residual(path, t).deviation for t in check_times)


def _geodesic_cp1(exp, ctx):
    ladder = exp["resolutions"]
    checks = exp["check_times"]
    errors = []
    path = None
    for resolution in ladder:
        _log.info("%s: resolution %d", exp.key, resolution)
        path = _rotation_path(exp, resolution)
        errors.append(_max_deviation(path, checks))
    records = [trend_record(exp.key, 1, "residual_deviation", ladder, errors, exp["order_threshold"])]
    ctx.write_csv("residual_trend", write_trend_csv, records[0])
    ctx.plot(plotting.plot_trend, "residual_trend", records[0])
    if exp["correction"]:
        _log.info("%s: no closed form for a corrected potential", exp.key)
    else:
        closed = max(
            float(np.max(np.abs(path.potentials[path.index(t)] - _rotation_closed_form(path, exp["field"], t))))
            for t in checks
        )
        records.append(
            bound_record(
                exp.key, 1, "closed_form_error", closed, exp["closed_form_tolerance"], resolutions=[ladder[-1]]
            )
        )
    records.append(ReportRecord(exp.key, "hcmae_residual", max(hcmae_residual(path, t) for t in checks)))
    records.append(ReportRecord(exp.key, "velocity_monotonicity", velocity_monotonicity(path)))
    records.extend(_energy_records(exp, ctx, path, "cp1"))
    return records


def _geodesic_torus(exp, ctx):
    resolution = exp["resolutions"][-1]
    amplitude = exp["xi_amplitude"]
    manifold = make_torus(
        resolution, lambda x1, x2: 1.0 + amplitude * np.cos(2.0 * np.pi * x1), exp["tolerance"]
    )
    step = exp["period_step"]
    count = int(round(1.0 / step))
    times = np.arange(2 * count + 1) * step
    path = induced_geodesic(HoloField(manifold, exp["field"]), times, override=True)
    period = max(
        float(np.max(np.abs(path.potentials[i + count] - path.potentials[i]))) for i in range(count + 1)
    )
    variation = float(np.max(np.ptp(path.potentials, axis=0)))
    deviation = max(geodesic_residual(path, t).deviation for t in times[1:count])
    reference = _max_deviation(_rotation_path(exp, resolution), exp["check_times"])
    _log.info("%s: torus deviation %.3e, cp1 reference %.3e", exp.key, deviation, reference)
    ctx.write_columns(
        "period",
        {"t": times, "sup_u": np.max(np.abs(path.potentials), axis=(1, 2))},
    )
    records = [
        bound_record(exp.key, 2, "period_defect", period, exp["period_tolerance"], resolutions=[resolution]),
        bound_record(
            exp.key, 2, "path_variation", variation, 1e3 * exp["period_tolerance"], above=True,
            resolutions=[resolution],
        ),
        bound_record(
            exp.key, 2, "residual_contrast", deviation, exp["contrast"] * reference, above=True,
            resolutions=[resolution],
        ),
    ]
    records.extend(_energy_records(exp, ctx, path, "torus"))
    return records


# -- pushforward measures ------------------------------------------------------------


def _measure_path(exp, resolution, times):
    kind = exp["manifold"]
    a = exp["field"]
    if kind == "product":
        manifold = make_product(make_cp1(resolution, tolerance=exp["tolerance"]))
        fields = (HoloField(manifold, (a, 0.0)), HoloField(manifold, (0.0, a)))
        return multi_geodesic(fields, times, times)
    if kind == "torus":
        amplitude = exp["xi_amplitude"]
        manifold = make_torus(
            resolution, lambda x1, x2: 1.0 + amplitude * np.cos(2.0 * np.pi * x1), exp["tolerance"]
        )
        return induced_geodesic(HoloField(manifold, a), times, override=True)
    return induced_geodesic(HoloField(make_cp1(resolution, tolerance=exp["tolerance"]), a), times)


def run_dh(exp, ctx):
    ladder = exp["resolutions"]
    bins = exp["bins"]
    checks = exp["times"]
    grid = _time_grid(max(abs(t) for t in checks), exp["time_step"])
    pair = exp["manifold"] == "product"
    distances = []
    for resolution in ladder:
        _log.info("%s: resolution %d", exp.key, resolution)
        path = _measure_path(exp, resolution, grid)
        origin = (0.0, 0.0) if pair else 0.0
        base = pushforward(path, origin, bins=bins)
        measures = {t: pushforward(path, (t, t) if pair else t, edges=base.edges if pair else base.edges[0]) for t in checks}
        distances.append(max(measure_distance(base, m) for m in measures.values()))
    records = [trend_record(exp.key, 3, "measure_distance", ladder, distances, exp["order_threshold"])]
    ctx.write_csv("distance_trend", write_trend_csv, records[0])
    ctx.plot(plotting.plot_trend, "distance_trend", records[0])
    ctx.write_csv("measure_t0", write_measure_csv, base)
    last = checks[-1]
    ctx.write_csv("measure_t{:g}".format(last), write_measure_csv, measures[last])
    if pair:
        ctx.plot(plotting.plot_measure_2d, "measure_t0", base)
    else:
        ctx.plot(plotting.plot_measures, "measures", {"t = {:g}".format(t): m for t, m in [(0.0, base)] + list(measures.items())})
    if exp["manifold"] == "cp1":
        uniform = uniform_reference(base.edges[0], base.mass)
        records.append(
            bound_record(
                exp.key, 3, "uniform_cdf_error", measure_distance(base, uniform),
                exp["uniform_widths"] / bins, resolutions=[ladder[-1]],
            )
        )
    return records


# -- velocity ranges -----------------------------------------------------------------


def run_sets(exp, ctx):
    resolution = exp["resolutions"][-1]
    manifold = make_cp1(resolution, tolerance=exp["tolerance"])
    field = HoloField(manifold, exp["field"])
    times = _time_grid(exp["horizon"], exp["time_step"])
    velocities = velocity_trajectory(field, times)
    A = RangeSet.from_points(velocities[int(np.argmin(np.abs(times)))])
    limit = exp["cells"] * A.cell
    interior = np.arange(1, resolution)
    nodes = np.sort(ctx.rng.choice(interior, size=min(exp["samples"], len(interior)), replace=False))
    ranges = [set_B(velocities, int(x)) for x in nodes]
    distances = np.array([hausdorff(A, B) for B in ranges])
    ctx.write_columns(
        "ranges",
        {
            "m": manifold.m[nodes],
            "lo": np.array([B.lo for B in ranges]),
            "hi": np.array([B.hi for B in ranges]),
            "hausdorff": distances,
        },
    )
    records = [
        bound_record(exp.key, 4, "hausdorff_A_B", float(np.max(distances)), limit, resolutions=[resolution])
    ]
    tol = exp["fixed_point_tolerance"]
    for node, end in ((0, A.lo), (resolution, A.hi)):
        B = set_B(velocities, node)
        records.append(bound_record(exp.key, 4, "fixed_point_{}_width".format(node), B.hi - B.lo, tol))
        records.append(bound_record(exp.key, 4, "fixed_point_{}_endpoint".format(node), abs(B.lo - end), tol))

    product = make_product(make_cp1(exp["product_resolution"], tolerance=exp["tolerance"]))
    a = exp["field"]
    t = exp["product_time"]
    path = multi_geodesic(
        (HoloField(product, (a, 0.0)), HoloField(product, (0.0, a))), [0.0, t], [0.0, t]
    )
    cloud = set_A(path, (t, t))
    ctx.write_csv("product_hull", write_hull_csv, cloud)
    ctx.plot(plotting.plot_range, "product_hull", cloud)
    records.append(
        bound_record(
            exp.key, 4, "product_coverage_defect", cloud.coverage_defect, exp["cells"] * cloud.cell,
            resolutions=[exp["product_resolution"]],
        )
    )

    slope = asymptotic_slope(
        HoloField(make_cp1(exp["slope_resolution"], tolerance=exp["tolerance"]), exp["field"]),
        T=exp["slope_horizon"],
        eps=exp["slope_eps"],
    )
    records.append(
        bound_record(
            exp.key, 5, "sup_norm_spread", slope.sup_norm_spread, exp["sup_norm_tolerance"],
            resolutions=[exp["slope_resolution"]],
        )
    )
    records.append(
        bound_record(
            exp.key, 5, "slope_deviation_measure", slope.deviation_measure, exp["measure_tolerance"],
            resolutions=[exp["slope_resolution"]],
        )
    )
    records.append(ReportRecord(exp.key, "g_star", slope.g_star))
    return records


# -- moment image ----------------------------------------------------------------------


def run_moment(exp, ctx):
    ladder = exp["resolutions"]
    a = exp["field"].real
    square = RangeSet.from_points(np.array([[0.0, 0.0], [a, 0.0], [a, a], [0.0, a]]))
    distances, limits, defects = [], [], []
    for resolution in ladder:
        _log.info("%s: resolution %d", exp.key, resolution)
        product = make_product(make_cp1(resolution, tolerance=exp["tolerance"]))
        image = moment_image((HoloField(product, (exp["field"], 0.0)), HoloField(product, (0.0, exp["field"]))))
        distances.append(hausdorff(image, square))
        limits.append(exp["cells"] * image.cell)
        defects.append(image.coverage_defect)
    ctx.write_csv("hull", write_hull_csv, image)
    ctx.plot(plotting.plot_range, "image", image, reference=square)
    trend = trend_record(exp.key, 6, "coverage_defect", ladder, defects, exp["order_threshold"])
    ctx.write_csv("coverage_trend", write_trend_csv, trend)
    ctx.plot(plotting.plot_trend, "coverage_trend", trend)
    return [bound_record(exp.key, 6, "hausdorff_square", distances, limits, resolutions=ladder), trend]


# -- K-energy ----------------------------------------------------------------------------


def _leaf_count(exp, resolution):
    return max(2, int(round(exp["leaf_ratio"] * resolution)))


def run_kenergy(exp, ctx):
    ladder = exp["resolutions"]
    finest = ladder[-1]
    records = []

    induced = _rotation_path(exp, finest)
    theta = kenergy_theta(induced, leaves=_leaf_count(exp, finest))
    records.append(
        bound_record(exp.key, 9, "induced_kappa_direct", float(np.max(np.abs(theta.values))), exp["kappa_tolerance"])
    )
    records.append(
        bound_record(exp.key, 9, "induced_kappa_fiber", float(np.max(np.abs(theta.fiber))), exp["kappa_tolerance"])
    )

    discrepancies = []
    for resolution in ladder:
        _log.info("%s: fiber integral at resolution %d", exp.key, resolution)
        path, w0, direction = _toric_path(exp, resolution, exp["t_span"])
        theta = kenergy_theta(path, leaves=_leaf_count(exp, resolution))
        discrepancies.append(theta.discrepancy)
    trend = trend_record(exp.key, 9, "fiber_direct_discrepancy", ladder, discrepancies, exp["order_threshold"])
    records.append(trend)
    ctx.write_csv("discrepancy_trend", write_trend_csv, trend)
    ctx.plot(plotting.plot_trend, "discrepancy_trend", trend)
    oracle = np.array([0.25 * toric_kenergy_second(w0, direction, t) for t in theta.times])
    records.append(ReportRecord(exp.key, "kappa_oracle_error", float(np.max(np.abs(theta.values - oracle)))))
    ctx.write_columns("kappa", {"t": theta.times, "direct": theta.values, "fiber": theta.fiber, "closed_form": oracle})
    records.append(
        ReportRecord(
            exp.key,
            "superposition_gap",
            superposition_check(path, SeparableTestFunction([([0.0, 0.0, 1.0], [0.0, 0.0, 1.0, -2.0, 1.0])])).gap,
        )
    )
    records.append(ReportRecord(exp.key, "chart_independence", chart_independence(trace_leaf(path, 0.5))))

    strip = extension_interval(w0, direction)
    window = exp["window"]
    margins, tolerances, strips, sharpness = [], [], [], []
    for resolution in ladder:
        _log.info("%s: curvature at resolution %d", exp.key, resolution)
        path, _, _ = _toric_path(exp, resolution, exp["curvature_span"])
        stride = _stride(exp, path)
        theta = kenergy_theta(path, leaves=0)
        report = curvature_bound_check(theta, strip=strip, window=window, stride=stride)
        margins.append(0.0 if report.branch == "zero" else report.differential_min)
        tolerances.append(-_curvature_tolerance(exp, resolution))
        strips.append(0.0 if report.branch == "zero" else report.strip_min)
        comparison = 0.5 * theta.dimension * theta.volume * hyperbolic_density(STRIP, strip, theta.times)
        sharp = curvature_bound_check(
            ThetaDensity(theta.times, comparison, volume=theta.volume, dimension=theta.dimension),
            window=window,
            stride=stride,
        )
        sharpness.append(float(np.max(np.abs(sharp.differential))))
    records.append(bound_record(exp.key, 10, "curvature_margin", margins, tolerances, above=True, resolutions=ladder))
    records.append(
        bound_record(exp.key, 10, "sharpness_margin", sharpness, exp["sharpness_tolerance"], resolutions=ladder)
    )
    records.append(
        bound_record(exp.key, 11, "strip_margin", strips, -exp["strip_tolerance"], above=True, resolutions=ladder)
    )
    records.append(
        ReportRecord(exp.key, "ray_margin", ray_bound_check(theta, strip[0]), message="ray from the left end of the strip")
    )
    ctx.write_columns("curvature", {"t": report.times, "margin": report.differential})
    ctx.plot(
        plotting.plot_curves,
        "kappa",
        theta.times,
        {"kappa": theta.values, "(nV/2) rho_strip": comparison},
        ylabel="kappa",
    )
    return records


# -- leaves ------------------------------------------------------------------------------


def run_leaves(exp, ctx):
    ladder = exp["resolutions"]
    x = exp["start"]
    induced_errors, toric_errors = [], []
    for resolution in ladder:
        _log.info("%s: leaves at resolution %d", exp.key, resolution)
        induced_errors.append(leaf_pullback_check(_rotation_path(exp, resolution), x))
        toric, _, _ = _toric_path(exp, resolution, exp["t_span"])
        toric_errors.append(leaf_pullback_check(toric, x))
    records = [
        trend_record(exp.key, 8, "induced_pullback", ladder, induced_errors, exp["order_threshold"]),
        trend_record(exp.key, 8, "toric_pullback", ladder, toric_errors, exp["order_threshold"]),
    ]
    for r in records:
        ctx.write_csv(r.quantity + "_trend", write_trend_csv, r)
        ctx.plot(plotting.plot_trend, r.quantity + "_trend", r)
    control = perturb_path(toric, exp["perturbation"], (toric.manifold.m - 0.5) ** 2)
    records.append(
        bound_record(
            exp.key, 8, "negative_control", leaf_pullback_check(control, x),
            exp["contrast"] * toric_errors[-1], above=True, resolutions=[ladder[-1]],
        )
    )

    path, _, _ = _toric_path(exp, ladder[-1], exp["curvature_span"])
    stride = _stride(exp, path)
    leaves = trace_leaves(path, exp["burns_starts"], strict=True)
    thetas = [theta_on_leaf(leaf, stride) for leaf in leaves]
    margins = [float(np.nanmin(theta.burns_margin)) for theta in thetas]
    records.append(
        bound_record(exp.key, 10, "leaf_burns_margin", margins, -exp["burns_tolerance"], above=True)
    )
    ctx.write_columns(
        "leaves",
        dict(
            [("t", leaves[0].times)]
            + [("mu_{}".format(k), np.real(leaf.positions)) for k, leaf in enumerate(leaves)]
        ),
    )
    ctx.plot(
        plotting.plot_curves,
        "leaf_kappa",
        None,
        {"mu0 = {:g}".format(leaf.start): (theta.times, theta.kappa) for leaf, theta in zip(leaves, thetas)},
        ylabel="kappa on the leaf",
    )
    return records


# -- superposition -----------------------------------------------------------------------


def run_prop_superpose(exp, ctx):
    grid = make_disk_grid(exp["grid"])
    margins = []
    for k in range(exp["families"]):
        family, weights, a = random_family(
            grid, ctx.rng, exp["members"], exp["amplitudes"], exp["radii"]
        )
        margins.append(prop_check(family, weights, a).margin)
    ctx.write_columns("margins", {"family": np.arange(len(margins)), "margin": np.array(margins)})
    copies = exp["equality_copies"]
    equality = prop_check(poincare_family(grid, [1.0] * copies, [1.0] * copies), np.ones(copies), 0.5)
    records = [
        bound_record(
            exp.key, 12, "random_family_margin", float(np.min(margins)), -exp["margin_tolerance"], above=True,
            resolutions=[exp["grid"]],
        ),
        bound_record(
            exp.key, 12, "equality_margin", abs(equality.margin), exp["equality_tolerance"], resolutions=[exp["grid"]]
        ),
    ]
    flat = ConformalMetric(grid, np.ones(grid.shape))
    try:
        prop_check([flat], np.ones(1), 0.5)
        rejected = False
    except PreconditionException as e:
        _log.info("flat member rejected: %s", e)
        rejected = True
    records.append(ReportRecord(exp.key, "flat_member_rejected", rejected, criterion=12, passed=rejected))
    return records


RUNNERS = {
    "geodesic": run_geodesic,
    "dh": run_dh,
    "sets": run_sets,
    "moment": run_moment,
    "kenergy": run_kenergy,
    "leaves": run_leaves,
    "prop-superpose": run_prop_superpose,
}


def covered_criteria(exp):
    if exp.type == "geodesic":
        return (2, 7) if exp["manifold"] == "torus" else (1, 7)
    return {
        "dh": (3,),
        "sets": (4, 5),
        "moment": (6,),
        "kenergy": (9, 10, 11),
        "leaves": (8, 10),
        "prop-superpose": (12,),
    }[exp.type]


def _error_records(exp, error, message):
    return [
        ReportRecord(
            exp.key, "error", None, criterion=criterion, passed=False,
            message="{}: {}".format(type(error).__name__, message),
        )
        for criterion in covered_criteria(exp)
    ]


def run(subcommand, config, out, seed=None, resolution_override=None, plots=True):
    """Run the experiments of ``subcommand``; returns (exit code, records)."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigException("unknown subcommand " + str(subcommand), "subcommand")
    conf = ExperimentConfig(config)
    seed = conf.seed if seed is None else seed
    directory = os.path.join(out, conf.name)
    os.makedirs(directory, exist_ok=True)
    selected = [
        (index, exp)
        for index, exp in enumerate(conf.experiments())
        if subcommand == "all" or exp.type == subcommand
    ]
    if not selected:
        raise ConfigException("configuration has no {} experiment".format(subcommand), subcommand)
    records = []
    criteria = set()
    for count, (index, exp) in enumerate(selected):
        if resolution_override is not None:
            exp = exp.with_resolutions([resolution_override])
        criteria.update(covered_criteria(exp))
        ctx = ExperimentContext(exp, directory, np.random.default_rng([seed, index]), plots)
        _log.info("experiment %s (%s) started", exp.key, exp.type)
        try:
            records.extend(RUNNERS[exp.type](exp, ctx))
        except ConfigException:
            raise
        except KahlerLabException as e:
            _log.error("experiment %s failed: %s", exp.key, e)
            records.extend(_error_records(exp, e, e.msg))
        except Exception as e:
            _log.exception("experiment %s aborted", exp.key)
            records.extend(_error_records(exp, e, str(e)))
        _log.info("experiment %s finished", exp.key)
        sys.stdout.write("\r{:.2%} done.".format(float(count + 1) / len(selected)))
        sys.stdout.flush()
    records.extend(criterion_summary(records, {c: CRITERIA[c] for c in criteria}))
    for r in records:
        if r.passed is not None:
            _log.info("%s %s: %s", r.experiment, r.quantity, r.status)
    write_report(records, os.path.join(directory, REPORT), seed)
    return exit_code(records), records
