import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mintime import (
    Ball2,
    BallInf,
    LtiSystem,
    RelaxationProblem,
    WeightOverflowError,
    WeightSchedule,
    build_delta,
    explicit_weights,
    linear_weights,
    normalize,
    solve_relaxation,
    spectral_norm,
    theorem1_weights,
)


def test_linear_examples():
    np.testing.assert_array_equal(linear_weights(1, 3).w, [1, 2, 3])
    np.testing.assert_array_equal(linear_weights(0.5, 2).w, [0.5, 1.0])
    assert linear_weights(2.0, 4).to_dict() == {"type": "linear", "a": 2.0}


@settings(max_examples=50, deadline=None)
@given(a=st.floats(1e-6, 1e6), T=st.integers(1, 50))
def test_linear_strictly_increasing(a, T):
    w = linear_weights(a, T).w
    assert np.all(w > 0) and np.all(np.diff(w) > 0)


@pytest.mark.parametrize("a, T", [(0, 3), (-1, 3), (1, 0)])
def test_linear_rejects(a, T):
    with pytest.raises(ValueError):
        linear_weights(a, T)


def test_schedule_invariants():
    with pytest.raises(ValueError, match="increasing"):
        WeightSchedule(np.array([1.0, 1.0]), "linear")
    with pytest.raises(ValueError, match="nonnegative"):
        explicit_weights([1.0, -1.0])
    with pytest.raises(ValueError, match="non-empty"):
        explicit_weights([])
    # explicit schedules may contain zeros (feasibility mode)
    assert explicit_weights([0, 0, 1]).T == 3
    ws = linear_weights(1, 3)
    with pytest.raises(ValueError):
        ws.w[0] = 7.0


def test_recursive_first_two_weights(double_integrator, unit_box):
    w = theorem1_weights(double_integrator, unit_box, eta=0.1, safety=1.01, T=3).w
    assert w[0] == 1.0
    assert w[1] == pytest.approx(20.2, rel=1e-15)


def test_recursive_weights_satisfy_growth_inequality(double_integrator, unit_box):
    eta = 1e-2
    ws = theorem1_weights(double_integrator, unit_box, eta=eta, safety=1.01, T=6)
    assert ws.provenance == "theorem1"
    r = unit_box.radius_bound()
    w = ws.w
    for t in range(2, 7):
        rhs = (2 * r / eta) * sum(np.sqrt(k) * spectral_norm(build_delta(double_integrator, k)) * w[k - 1] for k in range(1, t))
        assert w[t - 1] > rhs * (1 + 1e-12)


def test_recursive_box_uses_euclidean_radius():
    sys = LtiSystem(np.eye(2), np.eye(2))
    w = theorem1_weights(sys, BallInf([3.0, 4.0]), eta=1.0, safety=2.0, T=2).w
    assert w[1] == pytest.approx(2.0 * 2 * 5.0)


def test_recursive_overflow_names_index():
    sys = LtiSystem([[10.0]], [[10.0]])
    with pytest.raises(WeightOverflowError) as info:
        theorem1_weights(sys, Ball2(1.0), eta=1e-12, safety=1.01, T=40)
    assert 2 <= info.value.t <= 40
    assert "w(" in str(info.value)


def test_recursive_nonincreasing_is_reported():
    # B = 0 makes every later weight zero
    sys = LtiSystem([[1.0]], [[0.0]])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        ws = theorem1_weights(sys, Ball2(1.0), eta=1.0, T=3)
    assert any(issubclass(c.category, RuntimeWarning) for c in caught)
    assert ws.provenance == "explicit"


def test_recursive_rejects_bad_parameters(double_integrator, unit_box):
    with pytest.raises(ValueError):
        theorem1_weights(double_integrator, unit_box, eta=0.0)
    with pytest.raises(ValueError):
        theorem1_weights(double_integrator, unit_box, eta=1.0, safety=1.0)


def test_normalize_examples():
    np.testing.assert_array_equal(normalize(explicit_weights([1, 2, 4])).w, [0.25, 0.5, 1.0])
    once = normalize(linear_weights(1, 5))
    np.testing.assert_array_equal(normalize(once).w, once.w)
    assert once.provenance == "linear"


def test_normalize_preserves_minimizer(double_integrator, unit_box):
    for ws in (linear_weights(1, 10), theorem1_weights(double_integrator, unit_box, 1e-2, T=6)):
        x0 = np.array([-5.0, 1.0])
        a = solve_relaxation(RelaxationProblem(double_integrator, x0, unit_box, ws))
        b = solve_relaxation(RelaxationProblem(double_integrator, x0, unit_box, normalize(ws)))
        np.testing.assert_allclose(a.x, b.x, atol=1e-5)
        top = ws.w.max()
        assert b.objective == pytest.approx(a.objective / top, rel=1e-8)
