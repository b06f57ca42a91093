import os

import pytest

from kahler.conventions import ConfigException
from kahler.experiment_config import LADDER, ExperimentConfig

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def _write(tmp_path, body, attributes='name="test" seed="5"'):
    filename = tmp_path / "config.xml"
    filename.write_text('<?xml version="1.0"?>\n<configuration {}>\n{}\n</configuration>\n'.format(attributes, body))
    return str(filename)


def _config(tmp_path, *fields, experiment_type="geodesic"):
    body = '<experiment key="e" type="{}">\n{}\n</experiment>'.format(
        experiment_type,
        "\n".join('<field name="{}" type="{}" value="{}"/>'.format(*f) for f in fields),
    )
    return ExperimentConfig(_write(tmp_path, body))


def test_defaults(tmp_path):
    config = _config(tmp_path)
    exp = config.get_experiment("e")
    assert config.name == "test"
    assert config.seed == 5
    assert exp["resolutions"] == LADDER
    assert exp["manifold"] == "cp1"
    assert exp["field"] == 1.0 + 0.0j


def test_values_are_parsed(tmp_path):
    exp = _config(
        tmp_path,
        ("field", "COMPLEX", "0.5,-1.5"),
        ("resolutions", "INT_LIST", "16,32"),
        ("check_times", "DOUBLE_LIST", "0.1, 0.2"),
    ).get_experiment("e")
    assert exp["field"] == 0.5 - 1.5j
    assert exp["resolutions"] == [16, 32]
    assert exp["check_times"] == [0.1, 0.2]


@pytest.mark.parametrize(
    "field, key_path",
    [
        (("bogus", "DOUBLE", "1"), "e.bogus"),
        (("resolutions", "INT_LIST", "128,64"), "e.resolutions"),
        (("resolutions", "INT_LIST", "8,16"), "e.resolutions"),
        (("tolerance", "DOUBLE", "0"), "e.tolerance"),
        (("manifold", "STRING", "sphere"), "e.manifold"),
        (("t_span", "INT", "1"), "e.t_span"),
        (("field", "COMPLEX", "1"), "e.field"),
        (("regauge", "DOUBLE_LIST", "1,2,3"), "e.regauge"),
    ],
)
def test_invalid_fields(tmp_path, field, key_path):
    with pytest.raises(ConfigException) as e:
        _config(tmp_path, field)
    assert e.value.key_path == key_path


def test_unknown_experiment_type(tmp_path):
    with pytest.raises(ConfigException) as e:
        _config(tmp_path, experiment_type="nonsense")
    assert e.value.key_path == "e.type"


def test_malformed_files(tmp_path):
    bad = tmp_path / "bad.xml"
    bad.write_text("<configuration><experiment></configuration>")
    with pytest.raises(ConfigException):
        ExperimentConfig(str(bad))
    with pytest.raises(ConfigException):
        ExperimentConfig(_write(tmp_path, "", attributes='seed="x"'))


def test_duplicate_keys(tmp_path):
    body = '<experiment key="e" type="moment"/>\n<experiment key="e" type="dh"/>'
    with pytest.raises(ConfigException):
        ExperimentConfig(_write(tmp_path, body))


def test_experiment_selection(tmp_path):
    body = '<experiment key="a" type="moment"/>\n<experiment key="b" type="dh"/>'
    config = ExperimentConfig(_write(tmp_path, body))
    assert [e.key for e in config.experiments()] == ["a", "b"]
    assert [e.key for e in config.experiments("dh")] == ["b"]
    assert config.experiments("leaves") == []


def test_with_resolutions(tmp_path):
    exp = _config(tmp_path).get_experiment("e")
    assert exp.with_resolutions([32])["resolutions"] == [32]
    assert exp["resolutions"] == LADDER
    with pytest.raises(ConfigException):
        exp.with_resolutions([])


def test_shipped_configurations_load():
    for name in ("acceptance.xml", "torus_flat.xml"):
        config = ExperimentConfig(os.path.join(PROJECT_ROOT, "Kahler_Configs", name))
        assert config.experiments()


def test_acceptance_measures_share_the_times():
    config = ExperimentConfig(os.path.join(PROJECT_ROOT, "Kahler_Configs", "acceptance.xml"))
    dh = [exp for exp in config.experiments() if exp.type == "dh"]
    assert [exp["manifold"] for exp in dh] == ["cp1", "product"]
    for exp in dh:
        assert exp["times"] == [-2.0, -0.5, 0.5, 2.0]
