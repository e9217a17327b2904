import math
from pathlib import Path

import numpy as np
import pytest

from cfhist.scenario import load_intervention, load_scenario, parse_intervention, parse_scenario
from cfhist.simulate import simulate_cohort
from cfhist.study import data_path


@pytest.fixture(scope="session")
def dynamic():
    return load_scenario(data_path("cde_dynamic.yaml"))


@pytest.fixture(scope="session")
def theta1():
    return load_intervention(data_path("theta_a0.yaml"))


@pytest.fixture(scope="session")
def theta2():
    return load_intervention(data_path("theta_a1.yaml"))


@pytest.fixture(scope="session")
def small_cohort(dynamic):
    return simulate_cohort(dynamic, 2000, 11)


@pytest.fixture
def scenario_from():
    def make(text, base_dir=None):
        return parse_scenario(text, base_dir)

    return make


@pytest.fixture
def theta_from():
    return parse_intervention


def within(est, oracle, se, z=3.0):
    return abs(est - oracle) <= z * se


BASELINE_ONLY = """
horizon: 1.0
baseline:
  A: {time: 0.0, values: [0, 1], parents: [], table: [[0.5, 0.5]]}
"""
