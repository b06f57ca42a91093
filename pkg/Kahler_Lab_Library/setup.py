# -*- coding: utf-8 -*-
from setuptools import setup

setup(
    name="KahlerLab",
    packages=["kahler"],
    version="0.3.0",
    description="Desk-scale Kaehler geometry lab: induced geodesics, pushforward measures, K-energy curvature checks",
    install_requires=["numpy", "scipy", "matplotlib"],
)
