import cvxpy as cp
import numpy as np
import pytest
from scipy.optimize import linprog

from mintime import (
    Ball2,
    BallInf,
    DegenerateSamplingError,
    LtiSystem,
    build_delta,
    detect_T1,
    estimate_mu,
    explicit_weights,
    feasibility_distance,
    linear_weights,
    oracle_scan,
    simulate,
)
from mintime.oracle import default_tolerance

from conftest import random_system


def lp_reachable(sys, radii, x0, t):
    """Independent feasibility test: is -A^t x0 = Delta_t u solvable with |u_i| <= radii_i?"""
    D = build_delta(sys, t)
    bounds = [(-r, r) for r in np.tile(radii, t)]
    res = linprog(np.zeros(D.shape[1]), A_eq=D, b_eq=-sys.power(t) @ x0, bounds=bounds, method="highs")
    return res.status == 0


def cvx_distance(sys, uset, x0, t):
    U = cp.Variable((t, sys.n_u))
    x = x0
    for k in range(t):
        x = sys.A @ x + sys.B @ U[k]
    cons = [cp.norm(U[k]) <= uset.r for k in range(t)] if isinstance(uset, Ball2) else [cp.abs(U) <= np.tile(uset.radii, (t, 1))]
    prob = cp.Problem(cp.Minimize(cp.norm(x)), cons)
    prob.solve(solver=cp.CLARABEL)
    return prob.value


def test_zero_state(double_integrator, unit_box):
    for t in (1, 4):
        res = feasibility_distance(double_integrator, unit_box, [0, 0], t)
        assert res.distance == 0.0
        np.testing.assert_array_equal(res.witness, np.zeros((t, 1)))
    assert oracle_scan(double_integrator, unit_box, [0, 0], 5).t_star == 0


def test_double_integrator_distances(double_integrator, unit_box):
    tol = default_tolerance([0, 1])
    d = [feasibility_distance(double_integrator, unit_box, [0, 1], t).distance for t in (1, 2, 3)]
    assert d[0] > tol and d[1] > tol and d[2] <= tol
    # one step: x(1) = (1, 1 + u), closest at u = -1
    assert d[0] == pytest.approx(1.0, abs=1e-9)
    res = oracle_scan(double_integrator, unit_box, [0, 1], 10)
    assert res.t_star == 3 and res.reachable
    np.testing.assert_allclose(res.witness.ravel(), [-1, -1, 1], atol=1e-9)
    assert list(res.distances) == [1, 2, 3]


def test_sign_symmetry(double_integrator, unit_box):
    res = oracle_scan(double_integrator, unit_box, [0, -1], 10)
    assert res.t_star == 3
    np.testing.assert_allclose(res.witness.ravel(), [1, 1, -1], atol=1e-9)


def test_unreachable_within_tmax(double_integrator, unit_box):
    res = oracle_scan(double_integrator, unit_box, [0, 1], 2)
    assert res.t_star is None and not res.reachable and res.witness is None


@pytest.mark.parametrize("seed", range(4))
def test_distance_matches_conic_solver(seed):
    rng = np.random.default_rng(seed)
    sys = random_system(rng)
    uset = Ball2(0.5, sys.n_u) if seed % 2 else BallInf(np.full(sys.n_u, 0.5))
    x0 = rng.uniform(-2, 2, sys.n)
    for t in (1, 2, 3, 4):
        res = feasibility_distance(sys, uset, x0, t)
        assert res.distance == pytest.approx(cvx_distance(sys, uset, x0, t), abs=1e-6)
        np.testing.assert_array_equal(uset.project(res.witness), res.witness)
        assert np.linalg.norm(simulate(sys, x0, res.witness)[-1]) == pytest.approx(res.distance, abs=1e-12)


def test_minimum_time_matches_linear_programming():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(25):
        sys = random_system(rng)
        radii = np.full(sys.n_u, 1.0)
        x0 = rng.uniform(-2, 2, sys.n)
        res = oracle_scan(sys, BallInf(radii), x0, 8)
        lp = next((t for t in range(1, 9) if lp_reachable(sys, radii, x0, t)), None)
        assert res.t_star == lp
        checked += lp is not None
    assert checked >= 10


def test_huge_radius_reduces_to_range_test():
    rng = np.random.default_rng(3)
    for _ in range(10):
        sys = random_system(rng)
        x0 = rng.uniform(-1, 1, sys.n)
        res = oracle_scan(sys, Ball2(1e6, sys.n_u), x0, sys.n + 1)
        rank_t = None
        for t in range(1, sys.n + 2):
            D = build_delta(sys, t)
            target = sys.power(t) @ x0
            coef, *_ = np.linalg.lstsq(D, target, rcond=None)
            if np.linalg.norm(D @ coef - target) <= 1e-9:
                rank_t = t
                break
        assert res.t_star == rank_t


def test_reachability_is_monotone():
    rng = np.random.default_rng(11)
    for _ in range(15):
        sys = random_system(rng)
        uset = Ball2(1.0, sys.n_u)
        x0 = rng.uniform(-1, 1, sys.n)
        tol = default_tolerance(x0)
        feas = [feasibility_distance(sys, uset, x0, t).distance <= tol for t in range(1, 9)]
        first = feas.index(True) if True in feas else len(feas)
        assert all(feas[first:])


def test_distance_not_monotone_for_expanding_dynamics(double_integrator, unit_box):
    # d(t) itself can grow: from [2, 2] the position drifts away faster than
    # one unit-bounded input can brake. Reachability is what is monotone.
    d1 = feasibility_distance(double_integrator, unit_box, [2, 2], 1).distance
    d2 = feasibility_distance(double_integrator, unit_box, [2, 2], 2).distance
    assert d1 == pytest.approx(np.sqrt(17), abs=1e-7)
    assert d2 == pytest.approx(5.0, abs=1e-7)
    assert d2 == pytest.approx(cvx_distance(double_integrator, unit_box, np.array([2.0, 2.0]), 2), abs=1e-6)


def test_bisection_agrees_with_scan(double_integrator, unit_box):
    for x0 in ([0, 1], [2, 2], [-5, 1], [10, 0], [0, 0]):
        a = oracle_scan(double_integrator, unit_box, x0, 10)
        b = oracle_scan(double_integrator, unit_box, x0, 10, bisect=True)
        assert a.t_star == b.t_star
        if x0 != [0, 0]:
            assert len(b.distances) <= 5
    assert oracle_scan(double_integrator, unit_box, [0, 1], 2, bisect=True).t_star is None


def test_detect_T1_examples():
    assert detect_T1(np.zeros((4, 2)), 1e-6) == 0
    assert detect_T1(np.array([[1.0], [1.0]]), 1e-6) is None
    x = np.array([5, 2, 1e-9, 1e-10, 1e-9])[:, None]
    assert detect_T1(x, 1e-6) == 2
    # a transient dip below the tolerance does not count
    assert detect_T1(np.array([1, 1e-9, 1, 0])[:, None], 1e-6) == 3
    with pytest.raises(ValueError):
        detect_T1(x, 0.0)


# --- Monte-Carlo ratio ------------------------------------------------------------

def test_mu_is_one_at_full_horizon(double_integrator, unit_box):
    assert estimate_mu(double_integrator, unit_box, linear_weights(1, 6), 6, 6, 2000, 1) == 1.0


def test_mu_reproducible_and_baseline(double_integrator, unit_box):
    w = linear_weights(1, 10)
    a = estimate_mu(double_integrator, unit_box, w, 2, 10, 10_000, 0)
    b = estimate_mu(double_integrator, unit_box, w, 2, 10, 10_000, np.random.default_rng(0))
    assert a == b
    assert 0 < a < 1
    assert a == pytest.approx(0.10391926545906888, rel=1e-12)


def test_mu_chunking_does_not_change_draws(double_integrator, unit_box):
    w = linear_weights(1, 5)
    a = estimate_mu(double_integrator, unit_box, w, 2, 5, 3000, 4, chunk_size=4096)
    b = estimate_mu(double_integrator, unit_box, w, 2, 5, 3000, 4, chunk_size=4096)
    assert a == b


def test_mu_running_maximum(multi_input, unit_ball2):
    best, running = estimate_mu(multi_input, unit_ball2, linear_weights(1, 10), 4, 10, 5000, 2, return_running=True)
    assert running.shape == (5000,)
    assert np.all(np.diff(running) >= 0)
    assert running[-1] == best


def test_mu_bounded_by_one_for_equal_weights(double_integrator, unit_box):
    mu = estimate_mu(double_integrator, unit_box, explicit_weights(np.ones(8)), 3, 8, 2000, 0)
    assert 0 <= mu <= 1


def test_mu_degenerate_sampling():
    sys = LtiSystem([[0.5]], [[0.0]])
    with pytest.raises(DegenerateSamplingError):
        estimate_mu(sys, Ball2(1.0), linear_weights(1, 3), 1, 3, 100, 0)


def test_mu_argument_checks(double_integrator, unit_box):
    w = linear_weights(1, 4)
    with pytest.raises(ValueError):
        estimate_mu(double_integrator, unit_box, w, 5, 4, 10)
    with pytest.raises(ValueError):
        estimate_mu(double_integrator, unit_box, w, 2, 6, 10)
    with pytest.raises(ValueError):
        estimate_mu(double_integrator, unit_box, w, 2, 4, 0)
