import os
import sys

import numpy as np
import pytest

_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.insert(0, os.path.join(_ROOT, "Kahler_Lab_Library"))

from kahler.flows import HoloField  # noqa: E402
from kahler.geodesics import induced_geodesic, toric_geodesic  # noqa: E402
from kahler.grid_calculus import SymplecticPotential, make_cp1  # noqa: E402

BUMP = [0.0, 0.0, 1.0, -2.0, 1.0]


@pytest.fixture(scope="session")
def fs():
    return make_cp1(128)


@pytest.fixture(scope="session")
def rotation_path(fs):
    times = np.arange(-16, 17) / 32.0
    return induced_geodesic(HoloField(fs, 1.0), times)


@pytest.fixture(scope="session")
def toric_path():
    w0 = SymplecticPotential.fubini_study()
    times = np.arange(-16, 17) / 32.0
    return toric_geodesic(w0, SymplecticPotential(BUMP), times, manifold=make_cp1(128, w0))
