import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from tailstorm.core import (
    SUP, CoverageError, NormSpec, Outside, SpectralWindow, alpha_norm, alpha_sums, anchor, anchor_batch,
    check_alpha, lift, norm, signed_to_nonneg,
)

finite = st.floats(0.0, 1e6, allow_nan=False, allow_infinity=False)


def test_check_alpha_rejects_bad_values():
    for bad in (0, -1, float("inf"), float("nan")):
        with pytest.raises(ValueError):
            check_alpha(bad)
    assert check_alpha(2) == 2.0


def test_norm_kinds():
    v = [3.0, -4.0]
    assert norm(v, SUP) == 4.0
    assert norm(v, NormSpec("l1")) == 7.0
    assert norm(v, NormSpec("lp", 2)) == 5.0
    assert math.isclose(norm(v, NormSpec("lp", 3)), (27 + 64) ** (1 / 3))
    with pytest.raises(ValueError):
        NormSpec("lp", 0.5)
    with pytest.raises(ValueError):
        norm([np.nan])


@pytest.mark.parametrize("text", ["sup", "l1", "lp:2", "lp:3.5"])
def test_norm_spec_round_trip(text):
    assert NormSpec.from_string(text).to_string() == text


def test_window_validation():
    with pytest.raises(ValueError):
        SpectralWindow(1, [1.0])  # lag 0 not in window
    with pytest.raises(ValueError):
        SpectralWindow(0, [-1.0])
    with pytest.raises(ValueError):
        SpectralWindow(0, [np.inf])
    with pytest.raises(ValueError):
        SpectralWindow(0, [0.5], normalized=True)
    w = SpectralWindow(-1, [0.5, 1.0, 0.25], normalized=True)
    assert (w.t_min, w.t_max, w.dim) == (-1, 1, 1)


def test_window_slice_and_coverage():
    w = SpectralWindow(0, [1.0, 2.0])
    np.testing.assert_array_equal(w.slice(-1, 2)[:, 0], [0, 1, 2, 0])
    assert w.at(5)[0] == 0.0
    u = SpectralWindow(0, [1.0, 2.0], outside=Outside.UNKNOWN)
    with pytest.raises(CoverageError):
        u.slice(-1, 1)
    with pytest.raises(CoverageError):
        u.at(3)


def test_window_dict_round_trip():
    w = SpectralWindow(-2, np.arange(10.0).reshape(5, 2), norm_spec=NormSpec("l1"), truncation=0.5)
    assert SpectralWindow.from_dict(w.to_dict()) == w


def test_alpha_norm_simple():
    w = SpectralWindow(0, [1.0, 0.5, 0.25])
    val, flag = alpha_norm(w, 1.0)
    assert val == 1.75 and not flag
    val, flag = alpha_norm(SpectralWindow(0, [1.0, 1.0], outside="unknown"), 2.0)
    assert math.isclose(val, math.sqrt(2)) and flag


@given(arrays(float, st.integers(1, 30), elements=finite), st.floats(0.2, 4.0))
def test_alpha_norm_matches_batched(values, alpha):
    w = SpectralWindow(0, values)
    exact, _ = alpha_norm(w, alpha)
    batched = alpha_sums(values[None, :, None], alpha)[0] ** (1 / alpha)
    assert math.isclose(exact, batched, rel_tol=1e-9, abs_tol=1e-300)


def test_anchor_first_maximum():
    a = anchor(SpectralWindow(-2, [0.0, 3.0, 1.0, 3.0]))
    assert (a.theta_star, a.t_star, a.not_in_z_risk) == (3.0, -1, False)
    z = anchor(SpectralWindow(0, [0.0, 0.0]))
    assert z.t_star is None and z.theta_star == 0.0
    assert anchor(SpectralWindow(0, [1.0], outside="unknown")).not_in_z_risk


@settings(max_examples=50)
@given(arrays(float, st.tuples(st.integers(1, 6), st.integers(1, 12), st.integers(1, 3)), elements=finite))
def test_anchor_batch_agrees_with_scalar(vals):
    top, t_star, valid = anchor_batch(vals, 0)
    for r in range(vals.shape[0]):
        a = anchor(SpectralWindow(0, vals[r]))
        assert a.theta_star == top[r]
        assert valid[r] == (a.t_star is not None)
        if valid[r]:
            assert a.t_star == t_star[r]


@given(arrays(float, st.tuples(st.integers(1, 8), st.integers(1, 3)),
              elements=st.floats(-1e6, 1e6, allow_nan=False)))
def test_lift_splits_signs(x):
    y = lift(x)
    assert y.shape == (x.shape[0], 2 * x.shape[1])
    assert np.all(y >= 0)
    np.testing.assert_array_equal(y[:, 0::2] - y[:, 1::2], x)
    # the sup norm of the lift equals the sup norm of the signed vector
    np.testing.assert_array_equal(SUP(y), SUP(x))


def test_signed_to_nonneg():
    w = signed_to_nonneg([[1.0], [-2.0]], t_min=0)
    np.testing.assert_array_equal(w.values, [[1, 0], [0, 2]])
