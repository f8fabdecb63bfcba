import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.pipeline import make_pipeline

from kinterp.estimators import DoubleStarTransformer, ImplicitEulerFlow, KFunctionalTransformer

X = np.array([[3.0, -1.0, 2.0], [1.0, 1.0, 1.0]])


def test_k_transformer_values():
    out = KFunctionalTransformer(t_grid=(1, 1.5, 3)).fit_transform(X)
    assert np.allclose(out, [[3, 4, 6], [1, 1.5, 3]])


def test_double_star_matches_k_over_t():
    t = np.array([0.5, 1.0, 2.0, 3.0])
    k = KFunctionalTransformer(t_grid=t).fit_transform(X)
    ds = DoubleStarTransformer(t_grid=t).fit_transform(X)
    assert np.allclose(k / t, ds)


def test_flow_preserves_mass_and_constants():
    out = ImplicitEulerFlow(p=3.0, steps=5).fit_transform(X)
    assert np.allclose(out.sum(axis=1), X.sum(axis=1))
    assert np.allclose(out[1], 1.0)


def test_not_fitted_and_clone():
    with pytest.raises(NotFittedError):
        KFunctionalTransformer().transform(X)
    est = KFunctionalTransformer(t_grid=(2.0,), x0="l1")
    assert clone(est).get_params() == est.get_params()


def test_pipeline_and_validation():
    pipe = make_pipeline(ImplicitEulerFlow(steps=2), DoubleStarTransformer(t_grid=(1.0,)))
    assert pipe.fit_transform(X).shape == (2, 1)
    with pytest.raises(ValueError):
        KFunctionalTransformer(t_grid=(-1.0,)).fit(X)
    with pytest.raises(ValueError):
        ImplicitEulerFlow(graph="star").fit(X)
    with pytest.raises(ValueError):
        KFunctionalTransformer().fit(X).transform(X[:, :2])
