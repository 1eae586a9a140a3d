"""scikit-learn style wrapper: least squares, rank selection, rank truncation."""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .estimation import (correction_from_A, estimate_thetas_from_A,
                         estimate_thetas_from_Y)
from .exceptions import DimensionError, ParameterError
from .ranktests import Algorithm, all_statistics, select_rank
from .regression import fit as ls_fit, svd


class ReducedRankRegression(RegressorMixin, TransformerMixin, BaseEstimator):
    """Multivariate regression with a data-driven rank.

    The rank is selected by one of the largest-singular-value rules and the
    least-squares coefficients are projected on the top right singular
    vectors of the fitted responses.

    Parameters
    ----------
    method : {"TW_Y", "TW_Yhat", "TW_Ahat", "BSW"}
        Rank-selection rule.
    significance : float
        Level of the TW rules.
    estimator : {None, "FromA", "FromY"}
        If set, also compute de-biased spike estimates for the selected rank.
    rank : int or None
        Fix the rank instead of selecting it.

    Attributes
    ----------
    coef_ : ndarray of shape (n_targets, n_features)
    rank_ : int
    decision_ : RankDecision or None
    statistics_ : dict of TwStatistics
    singular_values_ : ndarray, singular values of the least-squares coefficients
    components_ : ndarray of shape (rank_, n_targets)
    estimates_ : list of EstimateRecord or None
    """

    def __init__(self, method="TW_Yhat", significance=0.10, estimator=None,
                 rank=None):
        self.method = method
        self.significance = significance
        self.estimator = estimator
        self.rank = rank

    def fit(self, X, y):
        X, Y = check_X_y(X, y, multi_output=True, y_numeric=True)
        if Y.ndim == 1 or Y.shape[1] < 2:
            raise DimensionError("need at least two response columns")
        N, p = X.shape
        r = Y.shape[1]
        A_hat, Y_hat = ls_fit(X, Y)
        self.statistics_ = all_statistics(Y, Y_hat, A_hat, N, p, r)
        if self.rank is None:
            self.decision_ = select_rank(Algorithm(self.method), Y, Y_hat, A_hat,
                                         N, p, r, self.significance)
            rank = self.decision_.selected_rank
        else:
            if not 0 <= int(self.rank) <= min(p, r):
                raise ParameterError(f"rank must lie in 0..{min(p, r)}")
            self.decision_ = None
            rank = int(self.rank)
        V = svd(Y_hat).right_vectors[:, :rank]
        self.components_ = V.T
        self.coef_ = (A_hat @ V @ V.T).T
        self.rank_ = rank
        self.singular_values_ = svd(A_hat).singulars
        self.n_features_in_ = p
        self.estimates_ = None
        if self.estimator is not None and rank > 0:
            self.estimates_ = self._estimate(A_hat, Y_hat, N, p, r, rank)
        return self

    def _estimate(self, A_hat, Y_hat, N, p, r, s):
        lam, beta, mu = N / p - 1.0, p / r, N / r
        if self.estimator == "FromA":
            return estimate_thetas_from_A(A_hat, s, correction_from_A(lam, beta),
                                          lam, beta, N=N)
        if self.estimator == "FromY":
            return estimate_thetas_from_Y(Y_hat, r, s, beta, mu, p=p)
        raise ParameterError(
            f"estimator must be None, 'FromA' or 'FromY', got {self.estimator!r}")

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise DimensionError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_.T

    def transform(self, X):
        """Scores on the ``rank_`` selected response directions."""
        return self.predict(X) @ self.components_.T
