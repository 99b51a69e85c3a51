import numpy as np
import pytest
from sklearn.base import clone

from redpool import (
    CocPoolingModel,
    CosPoolingModel,
    DomainError,
    InstabilityError,
    ParetoFrontierSearch,
    ProviderParams,
    mean_response_pair,
    waiting_probabilities,
)


def test_get_and_set_params():
    m = CosPoolingModel(n_servers=(2, 2), lam=(0.5, 0.8))
    assert m.get_params() == {"n_servers": (2, 2), "lam": (0.5, 0.8), "standalone_wait": None,
                              "nu": 1.0, "metric": "wait"}
    m.set_params(metric="delay")
    assert clone(m).metric == "delay"


def test_coc_predict():
    m = CocPoolingModel(n_servers=(2, 3), lam=(1.0, 2.0)).fit()
    got = m.predict([[0, 0], [1, 1], [2, 3]])
    p1, p2 = ProviderParams(1.0, 1, 2), ProviderParams(2.0, 1, 3)
    want = [mean_response_pair(p1, p2, k) for k in [(0, 0), (1, 1), (2, 3)]]
    np.testing.assert_array_equal(got, want)
    np.testing.assert_array_equal(m.baseline_, want[0])


def test_coc_rejects_fractional():
    m = CocPoolingModel(n_servers=(2, 2), lam=(1.0, 1.0)).fit()
    with pytest.raises(DomainError):
        m.predict([[0.5, 1]])


def test_cos_from_standalone_waits():
    m = CosPoolingModel(standalone_wait=(0.1, 0.5)).fit()
    assert m.providers_[0].lam == pytest.approx(0.1)
    c = m.predict(np.array([[1.0, 1.0], [0.0, 0.0]]))
    assert c[0] == pytest.approx(waiting_probabilities(ProviderParams(0.1), ProviderParams(0.5), (1, 1)))
    assert c[1] == pytest.approx([0.1, 0.5])


def test_cos_delay_metric():
    m = CosPoolingModel(lam=(0.3, 0.4), metric="delay").fit()
    d = m.predict([[0, 0]])[0]
    assert d == pytest.approx([1 / 0.7, 1 / 0.6], rel=1e-6)


def test_frontier_search():
    s = ParetoFrontierSearch(lam=(0.1, 0.5), grid_step=0.05).fit()
    assert s.structure_.case == "symmetric-other"
    assert s.ksbs_.is_ksbs
    ks = np.array([p.k for p in s.frontier_])
    assert s.predict(ks).all()
    assert not s.predict([[0, 0], [0, 1]]).any()


def test_frontier_search_coc():
    s = ParetoFrontierSearch(n_servers=(2, 2), lam=(1.2, 0.5), policy="coc", metric="delay").fit()
    assert s.predict([[2, 2], [1, 2]]).tolist() == [True, False]


@pytest.mark.parametrize("kwargs", [
    {"lam": None},
    {"lam": (0.1, 0.2), "standalone_wait": (0.1, 0.2)},
    {"lam": (0.1, 0.2), "n_servers": (0, 1)},
    {"lam": (0.1, 0.2), "nu": (1.0, 2.0)},
    {"lam": (0.1, 0.2), "metric": "mean"},
])
def test_bad_parameters(kwargs):
    with pytest.raises(DomainError):
        CosPoolingModel(**kwargs).fit()


def test_unstable():
    with pytest.raises(InstabilityError):
        CocPoolingModel(lam=(1.2, 0.1)).fit()


def test_predict_before_fit():
    with pytest.raises(DomainError):
        CocPoolingModel(lam=(0.2, 0.1)).predict([[0, 0]])


def test_predict_shape_checks():
    m = CosPoolingModel(lam=(0.2, 0.1)).fit()
    assert m.predict([0.5, 0.5]).shape == (1, 2)
    with pytest.raises(DomainError):
        m.predict([[0.5, 0.5, 0.5]])
    with pytest.raises(DomainError):
        m.predict([[1.5, 0.5]])
