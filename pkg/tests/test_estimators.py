import numpy as np
import pytest
from sklearn.base import clone

from rrrmt.ensembles import ModelConfig, simulate_model
from rrrmt.estimators import ReducedRankRegression
from rrrmt.exceptions import DimensionError, ParameterError


@pytest.fixture(scope="module")
def data():
    ds = simulate_model(ModelConfig(200, 40, 60, rank=2, thetas=(3.0, 2.0)), 1)
    return ds


def test_params():
    est = ReducedRankRegression(method="BSW", significance=0.05)
    assert est.get_params() == {"method": "BSW", "significance": 0.05,
                                "estimator": None, "rank": None}
    assert clone(est).get_params() == est.get_params()


@pytest.mark.parametrize("method", ["TW_Y", "TW_Yhat", "TW_Ahat", "BSW"])
def test_selects_true_rank(data, method):
    est = ReducedRankRegression(method=method).fit(data.X, data.Y)
    assert est.rank_ == 2
    assert est.coef_.shape == (60, 40)
    assert np.linalg.matrix_rank(est.coef_) == 2


def test_predict_transform(data):
    est = ReducedRankRegression().fit(data.X, data.Y)
    assert est.predict(data.X).shape == (200, 60)
    assert est.transform(data.X).shape == (200, 2)
    assert est.score(data.X, data.Y) > 0


def test_fixed_rank_full_is_ols(data):
    est = ReducedRankRegression(rank=40).fit(data.X, data.Y)
    ols = np.linalg.lstsq(data.X, data.Y, rcond=None)[0]
    np.testing.assert_allclose(est.coef_, ols.T, atol=1e-9)


def test_estimates(data):
    est = ReducedRankRegression(estimator="FromA").fit(data.X, data.Y)
    assert [r.index for r in est.estimates_] == [1, 2]
    assert est.estimates_[0].theta_hat == pytest.approx(3.0, abs=0.5)


def test_errors(data):
    with pytest.raises(DimensionError):
        ReducedRankRegression().fit(data.X, data.Y[:, 0])
    with pytest.raises(ParameterError):
        ReducedRankRegression(rank=99).fit(data.X, data.Y)
    with pytest.raises(ParameterError):
        ReducedRankRegression(estimator="EmpiricalA").fit(data.X, data.Y)
    est = ReducedRankRegression().fit(data.X, data.Y)
    with pytest.raises(DimensionError):
        est.predict(data.X[:, :5])


def test_unfitted(data):
    from sklearn.exceptions import NotFittedError
    with pytest.raises(NotFittedError):
        ReducedRankRegression().predict(data.X)
