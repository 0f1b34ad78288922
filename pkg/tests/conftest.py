import numpy as np
import pytest

from vcstab import ControllerParams, LoadSet, LoadSpec, NetworkParams


@pytest.fixture
def net():
    """The E=2 V, g_l=1 S network used in all worked examples (P_max = 1 W)."""
    return NetworkParams(2.0, 1.0)


@pytest.fixture
def ctrl():
    return ControllerParams(0.1, 0.1)


@pytest.fixture
def two_inflexible():
    return LoadSet((LoadSpec(0.5), LoadSpec(0.25)))


@pytest.fixture
def mixed_pair():
    """One flexible (P0=0.7, kappa=1) plus one inflexible (P0=0.5) load."""
    return LoadSet((LoadSpec(0.7, flexible=True, kappa=1.0), LoadSpec(0.5)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260824)
