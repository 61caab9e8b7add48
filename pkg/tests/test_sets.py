import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mintime import Ball2, BallInf, set_from_dict

vec2 = arrays(np.float64, 2, elements=st.floats(-50, 50))
SETS = [Ball2(1.5, 2), BallInf([1.0, 0.25])]


@pytest.mark.parametrize("U", SETS)
@settings(max_examples=60, deadline=None)
@given(v=vec2, w=vec2)
def test_projection_properties(U, v, w):
    p = U.project(v)
    assert U.contains(p, 1e-12)
    np.testing.assert_array_equal(U.project(p), p)
    # nonexpansive
    assert np.linalg.norm(U.project(v) - U.project(w)) <= np.linalg.norm(v - w) + 1e-12
    # variational inequality: (v - p) . (q - p) <= 0 for q in U
    q = U.project(w)
    assert np.dot(v - p, q - p) <= 1e-9


def test_ball_projection_values():
    U = Ball2(2.0, 2)
    np.testing.assert_allclose(U.project([3.0, 4.0]), [1.2, 1.6])
    np.testing.assert_array_equal(U.project([0.0, 0.0]), [0.0, 0.0])


def test_box_projection_values():
    np.testing.assert_array_equal(BallInf([1, 2]).project([[3, -5], [0.5, 1]]), [[1, -2], [0.5, 1]])


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="size 2"):
        Ball2(1.0, 2).project([1.0, 2.0, 3.0])


def test_invalid_parameters():
    with pytest.raises(ValueError):
        Ball2(0.0)
    with pytest.raises(ValueError):
        Ball2(1.0, 0)
    with pytest.raises(ValueError):
        BallInf([1.0, -1.0])


def test_radius_and_difference():
    assert Ball2(2.0, 3).radius_bound() == 2.0
    assert BallInf([3.0, 4.0]).radius_bound() == pytest.approx(5.0)
    assert Ball2(2.0, 3).self_difference() == Ball2(4.0, 3)
    assert BallInf([1.0, 2.0]).self_difference() == BallInf([2.0, 4.0])


@pytest.mark.parametrize("U", SETS + [Ball2(1.0, 3), Ball2(2.0, 1)])
def test_samples_in_set_and_reproducible(U):
    a = U.sample_uniform(np.random.default_rng(3), size=500)
    b = U.sample_uniform(np.random.default_rng(3), size=500)
    np.testing.assert_array_equal(a, b)
    assert a.shape == (500, U.n_u)
    assert U.contains(a, 1e-12)
    assert U.sample_uniform(np.random.default_rng(0)).shape == (U.n_u,)


def test_ball_sampling_is_uniform_in_radius():
    # P(||u|| <= r/2) = 2^-n for a uniform draw from the n-ball
    u = Ball2(1.0, 2).sample_uniform(np.random.default_rng(1), size=40000)
    frac = np.mean(np.linalg.norm(u, axis=1) <= 0.5)
    assert abs(frac - 0.25) < 0.01


def test_boundary_gap():
    assert Ball2(1.0, 2).boundary_gap([0.6, 0.8]) == pytest.approx(0.0)
    box = BallInf([1.0, 1.0])
    assert box.boundary_gap([1.0, -1.0]) == 0.0
    # one saturated coordinate is not enough
    assert box.boundary_gap([1.0, 0.5]) == 0.5


@pytest.mark.parametrize("U", SETS)
def test_projection_jacobian_matches_finite_differences(U):
    rng = np.random.default_rng(0)
    for _ in range(20):
        v = rng.uniform(-3, 3, 2)
        J = U.projection_jacobian(v)
        h = 1e-6
        fd = np.column_stack([(U.project(v + h * e) - U.project(v - h * e)) / (2 * h) for e in np.eye(2)])
        np.testing.assert_allclose(J, fd, atol=1e-5)


def test_scaled():
    assert Ball2(2.0, 2).scaled(0.5) == Ball2(1.0, 2)
    assert BallInf([2.0]).scaled(3.0) == BallInf([6.0])


@pytest.mark.parametrize("U", SETS + [Ball2(2.0, 1)])
def test_dict_round_trip(U):
    assert set_from_dict(U.to_dict()) == U


def test_set_from_dict_errors():
    with pytest.raises(ValueError, match="unknown set type"):
        set_from_dict({"type": "simplex"})
