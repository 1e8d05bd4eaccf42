import numpy as np
import pytest

from zmpgait.params import GaitParameters, load_params
from zmpgait.pattern_gen import generate_references
from zmpgait.robot_model import bundled_model_path, load_model


@pytest.fixture(scope="session")
def model():
    return load_model(bundled_model_path())


@pytest.fixture(scope="session")
def level_params():
    return load_params("level_4s")


@pytest.fixture(scope="session")
def level_refs(level_params):
    return generate_references(level_params)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_q(model, rng, shrink=1.0):
    mid = 0.5 * (model.q_min + model.q_max)
    half = 0.5 * (model.q_max - model.q_min) * shrink
    return mid + half * rng.uniform(-1.0, 1.0, model.n_joints)


def short_params(**kw):
    base = dict(n_strides=1, T_stride=3.0, T_switch=1.0, ts=0.02)
    base.update(kw)
    return GaitParameters(**base)
