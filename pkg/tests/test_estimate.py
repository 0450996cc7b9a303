import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tailstorm.core import SpectralWindow
from tailstorm.estimate import (
    TooFewExceedances, anchor_batch_values, anchor_pattern, attractor_check, block_maxima,
    cluster_conditional_sample, empirical_spectral_tail, round_trip_sample, tail_factorization_check,
)
from tailstorm.m3 import simulate_m3
from tailstorm.models import model_delta, model_mma
from tailstorm.raw import iid_frechet_paths
from tailstorm.stats import energy_test


def test_anchor_pattern_two_point():
    p = anchor_pattern(SpectralWindow(0, [1.0, 2.0]))
    assert p.t_star == 1 and p.theta_star == 2.0
    assert p.window.t_min == -1
    np.testing.assert_array_equal(p.window.values[:, 0], [0.5, 1.0])


def test_anchor_pattern_ties_take_first():
    p = anchor_pattern(SpectralWindow(-1, [1.0, 1.0, 0.5]))
    assert p.t_star == -1 and p.window.t_min == 0


def test_anchor_pattern_mma():
    w = SpectralWindow(-4, [0, 0, 4.0, 2.0, 1.0, 0.5, 0.25])
    p = anchor_pattern(w)
    assert p.t_star == -2 and p.theta_star == 4.0
    assert p.window.at(0)[0] == 1.0 and p.window.at(1)[0] == 0.5


def test_anchor_pattern_rejects():
    with pytest.raises(ValueError):
        anchor_pattern(SpectralWindow(0, [0.0, 0.0]))
    with pytest.raises(ValueError):
        anchor_pattern(SpectralWindow(0, [1.0], outside="unknown"))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.one_of(st.just(0.0), st.floats(1e-100, 1e6)), min_size=1, max_size=12), st.data())
def test_anchor_round_trip_within_ulp(vals, data):
    t_min = data.draw(st.integers(-(len(vals) - 1), 0))
    vals = np.array(vals)
    if not np.any(vals > 0):
        vals[0] = 1.0
    w = SpectralWindow(t_min, vals)
    p = anchor_pattern(w)
    back = p.window.values[:, 0] * p.theta_star
    assert p.window.t_min + p.t_star == t_min
    np.testing.assert_allclose(back, vals, rtol=4 * np.finfo(float).eps, atol=0)


def test_cluster_resampling_frequencies(rng):
    m = model_mma(0.5, 1.0)
    p = anchor_pattern(m.sample(rng, -34, 34))
    shifts = np.array([p.window.t_min - cluster_conditional_sample(p, 1.0, rng).t_min for _ in range(4000)])
    # the resampled window starts at lag -K with P(K = k) = (1 - phi) phi^k
    for k in range(4):
        expect = 0.5 ** (k + 1)
        assert abs(np.mean(shifts == k) - expect) < 4 * math.sqrt(expect * (1 - expect) / 4000)


def test_round_trip_batch_law(rng):
    m = model_mma(0.5, 1.0)
    vals = m.sample_batch(rng, 4000, -34, 34)
    out = round_trip_sample(vals, -34, 1.0, -2, 2, rng)
    ref = m.sample_batch(rng, 4000, -2, 2)
    assert energy_test(np.log1p(out[:, :, 0]), np.log1p(ref[:, :, 0]), 499, rng).passed
    pats, t_star = anchor_batch_values(vals, -34)
    assert np.all(pats.max(axis=(1, 2)) == 1.0)
    assert np.all(t_star <= 0)


def test_too_few_exceedances(rng):
    x = iid_frechet_paths(rng, 100, 0, 2)
    with pytest.raises(TooFewExceedances) as info:
        empirical_spectral_tail(x, 0.99, -1, 1)
    assert info.value.achieved == 1 and info.value.required == 200


def test_probe_must_fit(rng):
    with pytest.raises(ValueError):
        empirical_spectral_tail(iid_frechet_paths(rng, 100, 0, 1), 0.5, -1, 1)


def test_lag_zero_norm_is_one(rng):
    b = simulate_m3(model_mma(0.5, 1.0), 1.0, (-1, 1), 5000, rng)
    ex = empirical_spectral_tail(b, 0.9, -1, 1)
    np.testing.assert_array_equal(np.abs(ex.lag(0)).max(axis=1), 1.0)
    assert np.all(ex.radius > 1) and ex.count == 500
    np.testing.assert_allclose(ex.lag(0, "tail")[:, 0], ex.radius)
    rec = ex.to_records()[0]
    assert rec["t_min"] == -1 and len(rec["values"]) == 3


def test_delta_spectral_tail_vanishes(rng):
    x = iid_frechet_paths(rng, 200_000, 0, 2)
    ex = empirical_spectral_tail(x, 0.999, -1, 1)
    for l in (-1, 1):
        assert np.mean(ex.lag(l)[:, 0] > 0.5) < 0.03


def _product_paths(rng, n, coupled=False):
    # X_0 Frechet and X_{+-1} = X_0 * W: the spectral window W is independent of the radius
    x0 = iid_frechet_paths(rng, n, 0, 0)[:, 0, 0]
    w = rng.uniform(0.0, 1.0, size=(n, 2))
    if coupled:
        w = np.minimum(1.0, 20.0 / x0[:, None]) * w
    return np.stack([x0 * w[:, 0], x0, x0 * w[:, 1]], axis=1)[:, :, None]


def test_tail_factorization_independent_product(rng):
    x = _product_paths(rng, 100_000)
    assert tail_factorization_check(x, 0.99, -1, 1, 1.0, rng, permutations=299).passed


def test_tail_factorization_detects_coupling(rng):
    x = _product_paths(rng, 100_000, coupled=True)
    rep = tail_factorization_check(x, 0.99, -1, 1, 1.0, rng, permutations=299)
    assert not rep.passed and rep.details[1]["passed"] is False


def test_tail_factorization_detects_wrong_alpha(rng):
    x = iid_frechet_paths(rng, 200_000, 0, 2)
    assert not tail_factorization_check(x, 0.995, -1, 1, 2.0, rng, permutations=199).passed


def test_block_maxima_shape(rng):
    raw = lambda r, m: iid_frechet_paths(r, m, 0, 1)
    M = block_maxima(raw, 10, 25, 10.0, rng)
    assert M.shape == (25, 2, 1)


def test_attractor_iid(rng):
    raw = lambda r, m: iid_frechet_paths(r, m, 0, 1)
    ref = simulate_m3(model_delta(), 1.0, (0, 1), 1000, rng)
    assert attractor_check(raw, 1.0, 200, 200.0, 1000, ref, rng, permutations=299).passed
    # a wrong normalizing constant shifts every margin
    assert not attractor_check(raw, 1.0, 200, 50.0, 1000, ref, rng, permutations=199).passed
