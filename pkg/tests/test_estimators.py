import numpy as np
import pytest
from sklearn.base import clone
from sklearn.utils.estimator_checks import check_estimator

from hdinfer import GroupHypothesis, RidgeProjectionTest, ScaledLasso
from hdinfer.design import build_design
from hdinfer.lasso import scaled_lasso_fit


@pytest.fixture(scope="module")
def data():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((60, 120)) * rng.uniform(0.5, 3, 120) + 2.0
    beta = np.zeros(120)
    beta[:2] = [3.0, -2.0] / X[:, :2].std(axis=0)
    y = X @ beta + 1.0 + 0.5 * rng.standard_normal(60)
    return X, y


@pytest.mark.parametrize("est", [ScaledLasso(), RidgeProjectionTest(mc_draws=1000)])
def test_sklearn_compatible(est):
    failed = [
        r["check_name"] for r in check_estimator(est, on_fail=None) if r["status"] == "failed"
    ]
    assert failed == []


def test_scaled_lasso_matches_functional_api(data):
    X, y = data
    est = ScaledLasso().fit(X, y)
    ref = scaled_lasso_fit(build_design(X), y)
    assert est.sigma_ == ref.sigma_hat
    assert np.allclose(est.coef_ * est.design_.col_scales, ref.beta_init)
    resid = y - est.predict(X)
    assert np.isclose(np.linalg.norm(resid - resid.mean()) / np.sqrt(60), est.sigma_)
    assert abs(resid.mean()) < 1e-10


def test_ridge_projection_test_finds_signal(data):
    X, y = data
    est = RidgeProjectionTest(mc_draws=2000, seed=1).fit(X, y)
    assert est.get_support()[:2].all()
    assert est.get_support().sum() <= 4
    assert est.transform(X).shape[1] == est.get_support().sum()
    assert np.all(est.pvalues_corr_ >= 0) and np.all(est.pvalues_corr_ <= 1)
    assert est.ridge_lambda_ == 1 / 60
    assert est.null_distribution_.draws == 2000


def test_corrections(data):
    X, y = data
    raw = RidgeProjectionTest(correction="none", mc_draws=1000).fit(X, y)
    holm = RidgeProjectionTest(correction="holm", mc_draws=1000).fit(X, y)
    assert np.array_equal(raw.pvalues_, raw.pvalues_corr_)
    assert np.all(holm.pvalues_corr_ >= holm.pvalues_)
    with pytest.raises(ValueError):
        RidgeProjectionTest(correction="bh").fit(X, y)


def test_groups_and_determinism(data):
    X, y = data
    groups = [GroupHypothesis((0, 1, 2), "signal"), (80, 81, 82), ("tail", range(100, 120))]
    a = RidgeProjectionTest(groups=groups, mc_draws=2000, seed=4, threads=1).fit(X, y)
    b = RidgeProjectionTest(groups=groups, mc_draws=2000, seed=4, threads=3).fit(X, y)
    assert [g.label for g in a.groups_] == ["signal", "group2", "tail"]
    assert np.array_equal(a.group_pvalues_, b.group_pvalues_)
    assert np.array_equal(a.group_pvalues_corr_, b.group_pvalues_corr_)
    assert np.array_equal(a.pvalues_corr_, b.pvalues_corr_)
    assert a.group_pvalues_[0] < 0.01
    assert np.all(a.group_pvalues_ >= 1 / 2001)


def test_params_roundtrip():
    est = RidgeProjectionTest(alpha=0.1, xi=0.2, seed=5)
    params = est.get_params()
    assert params["alpha"] == 0.1 and params["seed"] == 5
    assert clone(est).get_params() == params
    est.set_params(zeta=0.01)
    assert est.zeta == 0.01


@pytest.mark.parametrize(
    "kw",
    [dict(alpha=0.0), dict(xi=0.5), dict(zeta=-1.0), dict(mc_draws=10), dict(ridge_lambda=-1.0),
     dict(ridge_lambda="big"), dict(groups=[(500,)])],
)
def test_invalid_params(data, kw):
    X, y = data
    with pytest.raises(ValueError):
        RidgeProjectionTest(**kw).fit(X, y)
