"""Checks of the hand-derived oracles against brute-force simulation."""

import math

import numpy as np

from oracles import frechet_cdf, mma_bivariate_cdf, mma_joint_exceedance_measure
from tailstorm.raw import mma_lag_cutoff, mma_paths


def test_bivariate_cdf_reduces_to_margins():
    # with one threshold at infinity only the standard Frechet margin is left
    assert math.isclose(mma_bivariate_cdf(1.0, 1e300), frechet_cdf(1.0), rel_tol=1e-12)
    assert math.isclose(mma_bivariate_cdf(1e300, 2.0), frechet_cdf(2.0), rel_tol=1e-12)


def test_bivariate_cdf_at_one():
    assert math.isclose(mma_bivariate_cdf(1.0, 1.0), math.exp(-1.5))


def test_bivariate_cdf_matches_brute_force(rng):
    paths = mma_paths(rng, 200_000, 0, 1, 0.5, 1.0)[:, :, 0]
    for x0, x1 in [(0.5, 1.0), (1.0, 1.0), (2.0, 0.5)]:
        emp = np.mean((paths[:, 0] <= x0) & (paths[:, 1] <= x1))
        p = mma_bivariate_cdf(x0, x1)
        assert abs(emp - p) < 4 * math.sqrt(p * (1 - p) / paths.shape[0])


def test_joint_exceedance_measure_matches_scaled_frequency(rng):
    paths = mma_paths(rng, 400_000, 0, 1, 0.5, 1.0)[:, :, 0]
    x = 50.0
    emp = x * np.mean((paths[:, 0] > x) & (paths[:, 1] > x))
    assert abs(emp - mma_joint_exceedance_measure()) < 0.06


def test_lag_cutoff_mass():
    M = mma_lag_cutoff(0.5, 1.0)
    assert 0.5 ** (M + 1) / (1 - 0.5) <= 1e-12 * 2
