"""scikit-learn transformers over rows of vectors on a finite measure space.

Each row of ``X`` is one function on the atoms.  ``fit`` fixes the measure
space (and couple) from the column count; ``transform`` is row-wise.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .evolve import GraphDirichletForm, prox_step
from .kfunctional import k_curve
from .lattice import Couple, LatticeVector, MeasureSpace, NormSpec, rearrange

__all__ = ["KFunctionalTransformer", "DoubleStarTransformer", "ImplicitEulerFlow"]


def _space(weights, n):
    if weights is None:
        return MeasureSpace.uniform(n)
    w = np.asarray(weights, dtype=float)
    if w.shape[0] != n:
        raise ValueError(f"weights have {w.shape[0]} entries, X has {n} columns")
    return MeasureSpace(tuple(w))


class KFunctionalTransformer(TransformerMixin, BaseEstimator):
    """Map each row ``f`` to ``K(f, t)`` on a grid of ``t`` values.

    Parameters
    ----------
    t_grid : sequence of positive floats
    x0, x1 : str or NormSpec
        Endpoint norms; names as accepted by ``NormSpec.from_name``.
    weights : sequence of floats, optional
        Atom masses; uniform when omitted.
    """

    def __init__(self, t_grid=(0.5, 1.0, 2.0), x0="l1", x1="linf", weights=None):
        self.t_grid = t_grid
        self.x0 = x0
        self.x1 = x1
        self.weights = weights

    def fit(self, X, y=None):
        X = check_array(X)
        t = np.asarray(self.t_grid, dtype=float)
        if t.ndim != 1 or np.any(t <= 0):
            raise ValueError("t_grid must be a 1-d sequence of positive numbers")
        norm = lambda N: N if isinstance(N, NormSpec) else NormSpec.from_name(N)
        self.couple_ = Couple(_space(self.weights, X.shape[1]), norm(self.x0), norm(self.x1))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "couple_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, fitted on {self.n_features_in_}")
        t = np.asarray(self.t_grid, dtype=float)
        return np.array([k_curve(self.couple_, row)(t) for row in X])


class DoubleStarTransformer(TransformerMixin, BaseEstimator):
    """Map each row ``f`` to ``f**(t)`` on a grid of ``t`` values."""

    def __init__(self, t_grid=(0.5, 1.0, 2.0), weights=None):
        self.t_grid = t_grid
        self.weights = weights

    def fit(self, X, y=None):
        X = check_array(X)
        self.space_ = _space(self.weights, X.shape[1])
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "space_")
        X = check_array(X)
        t = np.asarray(self.t_grid, dtype=float)
        out = np.empty((X.shape[0], t.size))
        for i, row in enumerate(X):
            r = rearrange(LatticeVector(self.space_, row))
            out[i] = [r.integral(s) / s for s in t]
        return out


class ImplicitEulerFlow(TransformerMixin, BaseEstimator):
    """Evolve each row by ``steps`` implicit Euler steps of a graph p-Laplace flow."""

    def __init__(self, graph="path", p=2.0, lam=0.1, steps=1, weights=None):
        self.graph = graph
        self.p = p
        self.lam = lam
        self.steps = steps
        self.weights = weights

    def fit(self, X, y=None):
        X = check_array(X)
        n = X.shape[1]
        space = _space(self.weights, n)
        if self.graph == "path":
            self.form_ = GraphDirichletForm.path(n, self.p, space=space)
        elif self.graph == "cycle":
            self.form_ = GraphDirichletForm.cycle(n, self.p, space=space)
        else:
            raise ValueError(f"unknown graph {self.graph!r}")
        self.n_features_in_ = n
        return self

    def transform(self, X):
        check_is_fitted(self, "form_")
        X = check_array(X)
        out = X.astype(float).copy()
        for i in range(out.shape[0]):
            for _ in range(int(self.steps)):
                out[i] = prox_step(self.form_, out[i], self.lam)
        return out
