"""scikit-learn style wrappers around the norm, semigroup and decay-fit operations.

Only the pieces that look like fit/transform/predict are wrapped; the solvers
themselves stay plain functions.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_field_batch, check_series
from .grid import Grid
from .linear import semigroup_apply
from .littlewood_paley import besov_norm, build_ladder
from .model import PhysicalParams
from .stability import fit_decay_exponent

__all__ = ["BesovBlockTransformer", "SemigroupTransformer", "DecayExponentRegressor"]


class BesovBlockTransformer(TransformerMixin, BaseEstimator):
    """Map physical fields to their weighted dyadic block norms ``2**(j s) ||Delta_j u||``.

    Rows of the output are samples, columns are ladder indices ``j_min..j_max``.
    """

    def __init__(self, L=2 * np.pi, N=32, s=0.0, j_min=None, j_max=None):
        self.L = L
        self.N = N
        self.s = s
        self.j_min = j_min
        self.j_max = j_max

    def fit(self, X, y=None):
        self.grid_ = Grid(self.L, self.N)
        check_field_batch(X, self.grid_.N)
        self.ladder_ = build_ladder(self.grid_, self.j_min, self.j_max)
        self.indices_ = np.array(list(self.ladder_.indices))
        return self

    def transform(self, X):
        check_is_fitted(self, "ladder_")
        X = check_field_batch(X, self.grid_.N)
        rows = []
        for field in X:
            _, blocks = besov_norm(self.grid_.forward(field), self.ladder_, self.s, 2.0, per_block=True)
            rows.append(blocks)
        return np.array(rows)

    def norm(self, X, r=2.0):
        """Besov norm per sample, ``l^r`` over the block columns."""
        B = self.transform(X)
        if np.isinf(r):
            return B.max(axis=1)
        return np.sum(B**r, axis=1) ** (1.0 / r)


class SemigroupTransformer(TransformerMixin, BaseEstimator):
    """Apply the linear semigroup ``exp(tA)`` to 5-component physical states."""

    def __init__(self, L=2 * np.pi, N=32, t=1.0, mu=1.0, mu_prime=0.0, kappa=1.0, c_v=1.5, rho_inf=1.0, theta_inf=1.0):
        self.L = L
        self.N = N
        self.t = t
        self.mu = mu
        self.mu_prime = mu_prime
        self.kappa = kappa
        self.c_v = c_v
        self.rho_inf = rho_inf
        self.theta_inf = theta_inf

    def fit(self, X=None, y=None):
        if self.t < 0:
            raise ValueError("t must be non-negative")
        self.grid_ = Grid(self.L, self.N)
        self.params_ = PhysicalParams(self.mu, self.mu_prime, self.kappa, self.c_v, self.rho_inf, self.theta_inf)
        if X is not None:
            check_field_batch(X, self.grid_.N, 5)
        return self

    def transform(self, X):
        check_is_fitted(self, "params_")
        X = check_field_batch(X, self.grid_.N, 5)
        g = self.grid_
        return np.array([g.inverse(semigroup_apply(g, g.forward(u), self.t, self.params_)) for u in X])


class DecayExponentRegressor(RegressorMixin, BaseEstimator):
    """Power-law fit ``y ~ C (1 + t)^exponent`` by least squares in log-log coordinates."""

    def __init__(self, window=None, curvature_threshold=0.05):
        self.window = window
        self.curvature_threshold = curvature_threshold

    def fit(self, X, y):
        t, y = check_series(X, y)
        fit = fit_decay_exponent(t, y, self.window, self.curvature_threshold)
        sel = np.ones_like(t, dtype=bool) if self.window is None else (t >= self.window[0]) & (t <= self.window[1])
        self.exponent_ = fit.exponent
        self.stderr_ = fit.stderr
        self.curved_ = fit.curved
        self.log_prefactor_ = float(np.mean(np.log(y[sel]) - fit.exponent * np.log1p(t[sel])))
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        t = check_series(X)
        return np.exp(self.log_prefactor_) * (1.0 + t) ** self.exponent_
