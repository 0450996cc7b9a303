import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import mma_bivariate_cdf, mma_joint_exceedance_measure
from tailstorm.m3 import (
    exponent_samples, fdd_cdf, generate_points, limit_measure_probe, max_stability_check,
    path_from_points, simulate_m3,
)
from tailstorm.models import model_broken, model_delta, model_mma, model_periodic
from tailstorm.poisson import PathBatch, StopPolicy, TruncationError
from tailstorm.raw import mma_paths
from tailstorm.stats import frechet_cdf, ks_one_sample


def test_delta_margins_are_frechet(rng):
    for alpha in (0.5, 1.0, 2.0):
        b = simulate_m3(model_delta(), alpha, (0, 2), 5000, rng)
        assert isinstance(b, PathBatch) and b.values.shape == (5000, 3, 1)
        for l in range(3):
            assert ks_one_sample(b.values[:, l, 0], lambda x: frechet_cdf(x, alpha)).passed
        # independent lags
        both = np.mean((b.values[:, 0, 0] <= 1) & (b.values[:, 1, 0] <= 1))
        assert abs(both - math.exp(-2)) < 4 * math.sqrt(math.exp(-2) * (1 - math.exp(-2)) / 5000)


def test_mma_bivariate_matches_oracle(rng):
    b = simulate_m3(model_mma(0.5, 1.0), 1.0, (0, 1), 20_000, rng)
    for x0, x1 in [(1, 1), (0.5, 2), (2, 0.5)]:
        p = mma_bivariate_cdf(x0, x1)
        hat = np.mean((b.values[:, 0, 0] <= x0) & (b.values[:, 1, 0] <= x1))
        assert abs(hat - p) < 4 * math.sqrt(p * (1 - p) / 20_000)


def test_certificates_and_counts(rng):
    b = simulate_m3(model_mma(0.5, 1.0), 1.0, (-1, 1), 500, rng)
    assert np.all(b.certificate < b.values.reshape(500, -1).min(axis=1))
    assert np.all(b.n_points >= 1)
    assert b.model_bound > 0 and b.model_bound < 1e-9


def test_periodic_rejected_by_m3(rng):
    with pytest.raises(ValueError, match="summability"):
        simulate_m3(model_periodic(), 1.0, (0, 3), 10, rng)


def test_threads_do_not_change_output():
    m = model_mma(0.5, 1.0)
    a = simulate_m3(m, 1.0, (0, 2), 1500, np.random.default_rng(7), threads=1)
    b = simulate_m3(m, 1.0, (0, 2), 1500, np.random.default_rng(7), threads=3)
    np.testing.assert_array_equal(a.values, b.values)


def test_truncation_error_carries_partial(rng):
    with pytest.raises(TruncationError) as info:
        simulate_m3(model_mma(0.5, 1.0), 1.0, (0, 30), 50, rng, stop=StopPolicy(eps=1e-9, n_max=3, batch=1))
    assert isinstance(info.value.partial, PathBatch)
    assert info.value.partial.n == 50


def test_points_bounds_descend(rng):
    pts = list(itertools.islice(generate_points(model_mma(0.5, 1.0), 1.0, (0, 2), rng), 200))
    bounds = [p.bound for p in pts]
    assert all(a >= b for a, b in zip(bounds, bounds[1:]))


@pytest.mark.parametrize("model", [model_delta(), model_mma(0.5, 1.0), model_broken()])
def test_stopping_is_exact(model, rng):
    """Once the bound falls below the current minimum, no later point changes the path."""
    bounds = (-1, 2)
    for _ in range(10):
        gen = generate_points(model, 1.0, bounds, rng)
        pts = [next(gen)]
        while True:
            z = path_from_points(pts, 1.0, bounds)
            reach = z > 0 if model.name == "broken" else np.ones_like(z, dtype=bool)
            if reach.all() and pts[-1].bound < z[reach].min():
                break
            pts.append(next(gen))
        more = pts + [next(gen) for _ in range(len(pts) + 50)]
        np.testing.assert_array_equal(path_from_points(more, 1.0, bounds), z)


def test_fdd_cdf_delta_closed_form(rng):
    for alpha in (0.5, 1.0, 2.0):
        p, se = fdd_cdf(model_delta(), alpha, [1.0, 2.0], 100, rng)
        assert p == pytest.approx(math.exp(-(1 + 2 ** -alpha)), rel=1e-12)
        assert se == 0.0


def test_fdd_cdf_mma_closed_form(rng):
    for x0, x1 in [(1, 1), (0.5, 2), (2, 0.5), (1, 4)]:
        p, se = fdd_cdf(model_mma(0.5, 1.0), 1.0, [x0, x1], 2000, rng)
        assert abs(p - mma_bivariate_cdf(x0, x1)) <= 1e-6 + 3 * se


def test_fdd_cdf_mma_against_brute_force(rng):
    raw = mma_paths(rng, 40_000, 0, 1, 0.5, 1.0)
    for x0, x1 in [(1, 1), (2, 0.5)]:
        p, _ = fdd_cdf(model_mma(0.5, 1.0), 1.0, [x0, x1], 2000, rng)
        hat = np.mean((raw[:, 0, 0] <= x0) & (raw[:, 1, 0] <= x1))
        assert abs(hat - p) < 4 * math.sqrt(p * (1 - p) / 40_000)


def test_fdd_cdf_edge_cases(rng):
    m = model_mma(0.5, 1.0)
    assert fdd_cdf(m, 1.0, [np.inf, np.inf], 10, rng) == (1.0, 0.0)
    assert fdd_cdf(m, 1.0, [0.0, 1.0], 10, rng) == (0.0, 0.0)
    with pytest.raises(ValueError):
        fdd_cdf(m, 1.0, [-1.0, 1.0], 10, rng)
    # an infinite entry drops that lag
    p, _ = fdd_cdf(m, 1.0, [1.0, np.inf], 10, rng)
    assert p == pytest.approx(math.exp(-1.0))


@settings(max_examples=25, deadline=None)
@given(lam=st.floats(0.2, 5.0), x0=st.floats(0.2, 5.0), x1=st.floats(0.2, 5.0), alpha=st.sampled_from([0.5, 1.0, 2.0]))
def test_fdd_homogeneity(lam, x0, x1, alpha):
    m = model_mma(0.5, alpha)
    s1 = exponent_samples(m, alpha, [x0, x1], 0, 50, np.random.default_rng(3))
    s2 = exponent_samples(m, alpha, [lam * x0, lam * x1], 0, 50, np.random.default_rng(3))
    np.testing.assert_allclose(s2, s1 * lam ** -alpha, rtol=1e-10)


def test_fdd_shift_invariance(rng):
    m = model_mma(0.5, 1.0)
    a = exponent_samples(m, 1.0, [1.0, 0.7, 2.0], 0, 200, np.random.default_rng(5))
    b = exponent_samples(m, 1.0, [1.0, 0.7, 2.0], 4, 200, np.random.default_rng(5))
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_max_stability_k1_exact(rng):
    b = simulate_m3(model_mma(0.5, 1.0), 1.0, (0, 1), 2000, rng)
    rep = max_stability_check(b, 1.0, 1, [0.5, 1.0, 2.0], [0, 1], 2000, rng, joint=True)
    assert rep.passed and rep.statistic == 0.0
    assert all(c["lhs"] == c["rhs"] for c in rep.details)


def test_max_stability_passes_and_detects(rng):
    m = model_mma(0.5, 1.0)
    src = lambda r, n: simulate_m3(m, 1.0, (0, 1), n, r)
    assert max_stability_check(src, 1.0, 2, [0.5, 1.0, 2.0], [0, 1], 10_000, rng).passed
    # squared Frechet(1) maxima are Frechet(1/2), not max-stable with index 1
    bad = lambda r, n: np.sqrt(src(r, n).values)
    assert not max_stability_check(bad, 1.0, 2, [0.5, 1.0, 2.0], [0, 1], 10_000, rng).passed


def test_limit_measure_examples(rng):
    assert limit_measure_probe(model_delta(), 1.0, [1.0], 100, rng) == (1.0, 0.0)
    both, _ = limit_measure_probe(model_mma(0.5, 1.0), 1.0, [1.0, 1.0], 5000, rng)
    assert both == pytest.approx(mma_joint_exceedance_measure(), abs=1e-9)
    union, _ = limit_measure_probe(model_mma(0.5, 1.0), 1.0, [1.0, 1.0], 5000, rng, mode="any")
    assert union == pytest.approx(2 - mma_joint_exceedance_measure(), abs=1e-9)
    v, _ = limit_measure_probe(model_delta(), 1.0, [2.0], 10, rng)
    assert v == pytest.approx(0.5)
    capped, _ = limit_measure_probe(model_delta(), 1.0, [1.0], 10, rng, upper=[2.0])
    assert capped == pytest.approx(0.5)


def test_limit_measure_stationary_and_validated(rng):
    m = model_mma(0.5, 1.0)
    a, _ = limit_measure_probe(m, 1.0, [1.0, 2.0, np.inf], 3000, np.random.default_rng(1))
    b, _ = limit_measure_probe(m, 1.0, [1.0, 2.0, np.inf], 3000, np.random.default_rng(1), s=5)
    assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(ValueError):
        limit_measure_probe(m, 1.0, [0.0], 10, rng)
    with pytest.raises(ValueError):
        limit_measure_probe(m, 1.0, [np.inf], 10, rng)
