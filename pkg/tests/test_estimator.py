import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from mintime import MinimumTimeController
from conftest import MULTI_A, MULTI_B

DI = dict(A=[[1.0, 1.0], [0.0, 1.0]], B=[[0.0], [1.0]], set_type="ballinf", radius=1.0)


def test_params_round_trip():
    est = MinimumTimeController(**DI, horizon=8)
    params = est.get_params()
    assert params["horizon"] == 8 and params["set_type"] == "ballinf"
    twin = clone(est)
    assert twin.get_params()["horizon"] == 8
    est.set_params(horizon=6)
    assert est.horizon == 6


def test_requires_fit():
    with pytest.raises(NotFittedError):
        MinimumTimeController(**DI).predict([[0, 1]])


def test_predict_policy():
    est = MinimumTimeController(**DI).fit()
    u = est.predict([[0, 1], [0, -1], [0, 0]])
    np.testing.assert_allclose(u, [[-1.0], [1.0], [0.0]], atol=1e-9)
    assert est.n_features_in_ == 2


def test_predict_rejects_wrong_width():
    est = MinimumTimeController(**DI).fit()
    with pytest.raises(ValueError, match="features"):
        est.predict([[0, 1, 2]])


def test_solve_returns_certified_report():
    rep = MinimumTimeController(A=MULTI_A, B=MULTI_B).fit().solve([10, -10, 5])
    assert rep.certified and rep.T1 == rep.t_star == 5


def test_recursive_and_explicit_weights():
    est = MinimumTimeController(**DI, horizon=6, weights="theorem1").fit()
    assert est.weights_.provenance == "theorem1"
    est = MinimumTimeController(**DI, horizon=3, weights=[1.0, 2.0, 5.0]).fit()
    np.testing.assert_array_equal(est.weights_.w, [1, 2, 5])
    with pytest.raises(ValueError):
        MinimumTimeController(**DI, horizon=4, weights=[1.0, 2.0]).fit()


@pytest.mark.parametrize(
    "kwargs",
    [dict(set_type="ball1"), dict(weights="quadratic"), dict(A=None), dict(rho=-1.0)],
)
def test_fit_rejects_bad_configuration(kwargs):
    with pytest.raises(ValueError):
        MinimumTimeController(**{**DI, **kwargs}).fit()
