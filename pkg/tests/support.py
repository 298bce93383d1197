"""Shared model instances for the tests."""

import math

from poissongittins.levy import LevyModel

SQRT2 = math.sqrt(2.0)


def all_models():
    return {
        "bm0": LevyModel.brownian(0.0, SQRT2),
        "bm": LevyModel.brownian(0.5, 1.0),
        "cl": LevyModel.cramer_lundberg(2.0, 1.0, 1.0),
        "cl_neg_drift": LevyModel.cramer_lundberg(1.0, 2.0, 1.0),
        "bmj": LevyModel.brownian_exp_jumps(1.0, 1.0, 1.0, 2.0),
    }
