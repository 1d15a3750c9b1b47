import math

import numpy as np
import pytest

from shrinker_lab import TauParams


def branch_params():
    return {
        "MA": TauParams.monge_ampere(),
        "LOG": TauParams.log_branch(math.pi / 6),
        "HARM": TauParams.harmonic(),
        "ATAN": TauParams.atan_branch(math.pi / 3),
        "SLAG": TauParams.special_lagrangian(),
        "NEG": TauParams.neg_branch(a=-2.0),
    }


@pytest.fixture
def all_branches():
    return branch_params()


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
