import numpy as np

from apmc.core import WeightedSample


def sample_1d(values, weights=None, distances=None):
    values = np.asarray(values, dtype=float)
    weights = np.ones(values.size) if weights is None else weights
    distances = np.zeros(values.size) if distances is None else distances
    return WeightedSample(values[:, None], weights, distances)
