import json
import os

import numpy as np
import pytest

from kahler import cli
from kahler.conventions import ConfigException


def _write(tmp_path, experiments):
    filename = tmp_path / "config.xml"
    filename.write_text(
        '<?xml version="1.0"?>\n<configuration name="small" seed="3">\n{}\n</configuration>\n'.format(experiments)
    )
    return str(filename)


SUPERPOSE = """<experiment key="superposition" type="prop-superpose">
  <field name="grid" type="INT" value="64"/>
  <field name="families" type="INT" value="3"/>
  <field name="members" type="INT" value="3"/>
</experiment>"""

FLAT_TORUS = """<experiment key="flat" type="dh">
  <field name="manifold" type="STRING" value="torus"/>
  <field name="xi_amplitude" type="DOUBLE" value="0.0"/>
  <field name="resolutions" type="INT_LIST" value="16,32"/>
  <field name="times" type="DOUBLE_LIST" value="-1.0,1.0"/>
  <field name="bins" type="INT" value="32"/>
</experiment>"""

BAD_LEAF = """<experiment key="edge" type="leaves">
  <field name="start" type="DOUBLE" value="0.999"/>
  <field name="resolutions" type="INT_LIST" value="16"/>
</experiment>"""


def test_superposition_passes(tmp_path):
    config = _write(tmp_path, SUPERPOSE)
    code, records = cli.run("prop-superpose", config, str(tmp_path / "out"), plots=False)
    assert code == 0
    summary = [r for r in records if r.quantity == "acceptance"]
    assert [(r.criterion, r.status) for r in summary] == [(12, "PASS")]
    with open(tmp_path / "out" / "small" / cli.REPORT) as f:
        report = json.load(f)
    assert {r["seed"] for r in report} == {3}
    assert os.path.exists(tmp_path / "out" / "small" / "superposition_margins.csv")


def test_flat_torus_measure_is_invariant(tmp_path):
    config = _write(tmp_path, FLAT_TORUS)
    code, records = cli.run("all", config, str(tmp_path / "out"), seed=9)
    assert code == 0
    trend = [r for r in records if r.quantity == "measure_distance"][0]
    assert trend.passed
    directory = tmp_path / "out" / "small"
    for name in ("flat_distance_trend.csv", "flat_distance_trend.svg", "flat_measures.svg", "flat_measure_t0.csv"):
        assert os.path.exists(directory / name)


def test_resolution_override(tmp_path):
    config = _write(tmp_path, FLAT_TORUS)
    _, records = cli.run("dh", config, str(tmp_path / "out"), resolution_override=16, plots=False)
    trend = [r for r in records if r.quantity == "measure_distance"][0]
    assert trend.resolutions == [16]


def test_configuration_errors(tmp_path):
    config = _write(tmp_path, SUPERPOSE)
    with pytest.raises(ConfigException):
        cli.run("nonsense", config, str(tmp_path / "out"))
    with pytest.raises(ConfigException):
        cli.run("leaves", config, str(tmp_path / "out"))


def test_failing_experiment_is_reported(tmp_path):
    config = _write(tmp_path, BAD_LEAF)
    code, records = cli.run("leaves", config, str(tmp_path / "out"), plots=False)
    assert code == 1
    errors = [r for r in records if r.quantity == "error"]
    assert sorted(r.criterion for r in errors) == [8, 10]
    assert errors[0].message.startswith("LeafException")
    summary = {r.criterion: r.status for r in records if r.quantity == "acceptance"}
    assert summary == {8: "FAIL", 10: "FAIL"}


def test_numerical_error_is_recorded(tmp_path, monkeypatch):
    def singular(exp, ctx):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setitem(cli.RUNNERS, "prop-superpose", singular)
    config = _write(tmp_path, SUPERPOSE)
    code, records = cli.run("prop-superpose", config, str(tmp_path / "out"), plots=False)
    assert code == 1
    errors = [r for r in records if r.quantity == "error"]
    assert [(r.experiment, r.criterion) for r in errors] == [("superposition", 12)]
    assert errors[0].message == "LinAlgError: Singular matrix"
    assert os.path.exists(tmp_path / "out" / "small" / cli.REPORT)
