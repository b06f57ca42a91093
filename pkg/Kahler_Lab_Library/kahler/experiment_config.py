"""Experiment configuration files.

    <configuration name="acceptance" seed="20240101">
      <experiment key="rotation" type="geodesic">
        <field name="manifold" type="STRING" value="cp1"/>
        <field name="resolutions" type="INT_LIST" value="64,128,256,512"/>
      </experiment>
    </configuration>

Every key an experiment type understands is listed in SCHEMA with its type
and default; keys left out of a file take the default.
"""

import xml.etree.ElementTree as ET

from .conventions import MIN_RESOLUTION, ConfigException

STRING = "STRING"
INT = "INT"
DOUBLE = "DOUBLE"
BOOL = "BOOL"
INT_LIST = "INT_LIST"
DOUBLE_LIST = "DOUBLE_LIST"
COMPLEX = "COMPLEX"

LADDER = [64, 128, 256, 512]

_COMMON = {
    "resolutions": (INT_LIST, LADDER),
    "tolerance": (DOUBLE, 1e-8),
}

SCHEMA = {
    "geodesic": {
        "manifold": (STRING, "cp1"),
        "field": (COMPLEX, 1.0 + 0.0j),
        "correction": (DOUBLE_LIST, []),
        "xi_amplitude": (DOUBLE, 0.3),
        "t_span": (DOUBLE, 0.5),
        "time_scale": (DOUBLE, 2.0),
        "check_times": (DOUBLE_LIST, [-0.25, 0.0, 0.25]),
        "closed_form_tolerance": (DOUBLE, 1e-6),
        "order_threshold": (DOUBLE, 1.8),
        "energy_tolerance": (DOUBLE, 1e-7),
        "regauge": (DOUBLE_LIST, [0.3, -0.7]),
        "period_step": (DOUBLE, 0.0625),
        "period_tolerance": (DOUBLE, 1e-8),
        "contrast": (DOUBLE, 10.0),
    },
    "dh": {
        "manifold": (STRING, "cp1"),
        "field": (COMPLEX, 1.0 + 0.0j),
        "xi_amplitude": (DOUBLE, 0.0),
        "times": (DOUBLE_LIST, [-2.0, -0.5, 0.5, 2.0]),
        "time_step": (DOUBLE, 0.5),
        "bins": (INT, 64),
        "order_threshold": (DOUBLE, 0.9),
        "uniform_widths": (DOUBLE, 2.0),
    },
    "sets": {
        "field": (COMPLEX, 1.0 + 0.0j),
        "samples": (INT, 100),
        "horizon": (DOUBLE, 20.0),
        "time_step": (DOUBLE, 0.05),
        "cells": (DOUBLE, 2.0),
        "fixed_point_tolerance": (DOUBLE, 1e-9),
        "product_resolution": (INT, 128),
        "product_time": (DOUBLE, 0.5),
        "slope_resolution": (INT, 1024),
        "slope_horizon": (DOUBLE, 20.0),
        "slope_eps": (DOUBLE, 1e-3),
        "sup_norm_tolerance": (DOUBLE, 1e-6),
        "measure_tolerance": (DOUBLE, 1e-3),
    },
    "moment": {
        "field": (COMPLEX, 1.0 + 0.0j),
        "cells": (DOUBLE, 2.0),
        "order_threshold": (DOUBLE, 0.9),
    },
    "kenergy": {
        "field": (COMPLEX, 1.0 + 0.0j),
        "direction": (DOUBLE_LIST, [0.0, 0.0, 1.0, -2.0, 1.0]),
        "t_span": (DOUBLE, 0.5),
        "time_scale": (DOUBLE, 2.0),
        "leaf_ratio": (DOUBLE, 0.5),
        "kappa_tolerance": (DOUBLE, 1e-3),
        "order_threshold": (DOUBLE, 1.8),
        "curvature_span": (DOUBLE, 2.0),
        "window": (DOUBLE_LIST, [-1.5, 1.5]),
        "stencil_step": (DOUBLE, 0.125),
        "curvature_tolerance": (DOUBLE, 1e-3),
        "sharpness_tolerance": (DOUBLE, 1e-4),
        "strip_tolerance": (DOUBLE, 1e-6),
    },
    "leaves": {
        "field": (COMPLEX, 1.0 + 0.0j),
        "direction": (DOUBLE_LIST, [0.0, 0.0, 1.0, -2.0, 1.0]),
        "start": (DOUBLE, 0.5),
        "t_span": (DOUBLE, 0.5),
        "time_scale": (DOUBLE, 2.0),
        "order_threshold": (DOUBLE, 1.8),
        "perturbation": (DOUBLE, 0.1),
        "contrast": (DOUBLE, 10.0),
        "curvature_span": (DOUBLE, 2.0),
        "stencil_step": (DOUBLE, 0.125),
        "burns_starts": (DOUBLE_LIST, [0.35, 0.5, 0.65]),
        "burns_tolerance": (DOUBLE, 1e-2),
    },
    "prop-superpose": {
        "grid": (INT, 256),
        "families": (INT, 100),
        "members": (INT, 10),
        "amplitudes": (DOUBLE_LIST, [1.0, 3.0]),
        "radii": (DOUBLE_LIST, [1.0, 2.0]),
        "margin_tolerance": (DOUBLE, 1e-6),
        "equality_tolerance": (DOUBLE, 1e-4),
        "equality_copies": (INT, 3),
    },
}

for _keys in SCHEMA.values():
    for _key, _entry in _COMMON.items():
        _keys.setdefault(_key, _entry)

_TOLERANCE_SUFFIXES = ("tolerance", "_eps")

MANIFOLDS = {
    "geodesic": ("cp1", "torus"),
    "dh": ("cp1", "product", "torus"),
}
PAIRS = ("regauge", "window")
POSITIVE = ("bins", "samples", "families", "members", "leaf_ratio", "time_step", "period_step", "stencil_step")


def _parse_value(text, value_type, key_path):
    try:
        if value_type == STRING:
            return text
        if value_type == INT:
            return int(text)
        if value_type == DOUBLE:
            return float(text)
        if value_type == BOOL:
            if text.strip().lower() not in ("true", "false", "1", "0"):
                raise ValueError(text)
            return text.strip().lower() in ("true", "1")
        if value_type == INT_LIST:
            return [int(v) for v in text.split(",") if v.strip()]
        if value_type == DOUBLE_LIST:
            return [float(v) for v in text.split(",") if v.strip()]
        if value_type == COMPLEX:
            parts = [float(v) for v in text.split(",")]
            if len(parts) != 2:
                raise ValueError(text)
            return complex(parts[0], parts[1])
    except (TypeError, ValueError):
        raise ConfigException(
            "{}: cannot read {!r} as {}".format(key_path, text, value_type), key_path
        )
    raise ConfigException("{}: unknown type {}".format(key_path, value_type), key_path)


class Experiment(object):
    __slots__ = ["key", "type", "values"]

    @staticmethod
    def parse(experiment_node):
        exp = Experiment()
        exp.key = experiment_node.get("key")
        exp.type = experiment_node.get("type")
        if not exp.key:
            raise ConfigException("experiment without a key", "experiment")
        if exp.type not in SCHEMA:
            raise ConfigException(
                "{}.type: unknown experiment type {!r}".format(exp.key, exp.type), exp.key + ".type"
            )
        schema = SCHEMA[exp.type]
        exp.values = {name: default for name, (_, default) in schema.items()}
        for f in experiment_node.findall("field"):
            name = f.get("name")
            key_path = "{}.{}".format(exp.key, name)
            if name not in schema:
                raise ConfigException("{}: unknown key".format(key_path), key_path)
            declared = f.get("type")
            if declared != schema[name][0]:
                raise ConfigException(
                    "{}: declared {} but the key is {}".format(key_path, declared, schema[name][0]),
                    key_path,
                )
            exp.values[name] = _parse_value(f.get("value", ""), declared, key_path)
        exp.validate()
        return exp

    def validate(self):
        ladder = self.values["resolutions"]
        path = self.key + ".resolutions"
        if not ladder:
            raise ConfigException(path + ": empty resolution ladder", path)
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ConfigException(path + ": ladder must be strictly increasing", path)
        if ladder[0] < MIN_RESOLUTION:
            raise ConfigException(
                "{}: entries must be >= {}".format(path, MIN_RESOLUTION), path
            )
        for name, value in self.values.items():
            key_path = "{}.{}".format(self.key, name)
            if name.endswith(_TOLERANCE_SUFFIXES) and not value > 0:
                raise ConfigException(key_path + ": tolerances must be > 0", key_path)
            if name in PAIRS and len(value) != 2:
                raise ConfigException(key_path + ": expected two values", key_path)
            if name in POSITIVE and not value > 0:
                raise ConfigException(key_path + ": must be > 0", key_path)
        if self.type in MANIFOLDS and self.values["manifold"] not in MANIFOLDS[self.type]:
            key_path = self.key + ".manifold"
            raise ConfigException(
                "{}: expected one of {}".format(key_path, ", ".join(MANIFOLDS[self.type])), key_path
            )

    def __getitem__(self, name):
        return self.values[name]

    def with_resolutions(self, resolutions):
        exp = Experiment()
        exp.key, exp.type = self.key, self.type
        exp.values = dict(self.values)
        exp.values["resolutions"] = list(resolutions)
        exp.validate()
        return exp


class ExperimentConfig(object):
    def __init__(self, filename):
        self.__filename = filename
        try:
            tree = ET.parse(self.__filename)
        except ET.ParseError as e:
            raise ConfigException("configuration: {}".format(e), "configuration")
        root = tree.getroot()
        if root.tag != "configuration":
            raise ConfigException("configuration: root element is <{}>".format(root.tag), "configuration")
        self.name = root.get("name", "kahler-lab")
        try:
            self.seed = int(root.get("seed", "0"))
        except ValueError:
            raise ConfigException("configuration.seed: not an integer", "configuration.seed")
        experiments = [Experiment.parse(e) for e in root.findall("experiment")]
        self.__dictionary = dict()
        for e in experiments:
            if e.key in self.__dictionary:
                raise ConfigException("{}: duplicate experiment key".format(e.key), e.key)
            self.__dictionary[e.key] = e

    def get_experiment(self, key):
        return self.__dictionary[key]

    def experiments(self, experiment_type=None):
        return [
            e for e in self.__dictionary.values() if experiment_type in (None, "all", e.type)
        ]

    def get_name(self):
        return self.__filename
