"""Least-squares core: coefficient matrix, fitted responses, singular values."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, SingularDesignError
from .validation import check_matrix

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class SvdResult:
    singulars: np.ndarray
    left_vectors: np.ndarray
    right_vectors: np.ndarray

    def reconstruct(self):
        return (self.left_vectors * self.singulars) @ self.right_vectors.T


def _qr_solve(X, Y):
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() == 0.0 or np.linalg.cond(R) > MAX_CONDITION:
        raise SingularDesignError(
            f"design matrix condition number exceeds {MAX_CONDITION:g}")
    return scipy.linalg.solve_triangular(R, Q.T @ Y), Q


def ols_coefficients(X, Y):
    """Least-squares coefficients ``X \\ Y`` for an ``N x p`` design.

    Solved through the thin QR factorization of ``X``; the normal equations
    are never formed.
    """
    X = check_matrix(X, "X")
    Y = check_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise DimensionError(
            f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if X.shape[0] < X.shape[1]:
        raise SingularDesignError("X has fewer rows than columns")
    return _qr_solve(X, Y)[0]


def fitted_responses(X, A_hat):
    """``X @ A_hat``, the projection of ``Y`` on the column span of ``X``."""
    X = check_matrix(X, "X")
    A_hat = check_matrix(A_hat, "A_hat")
    if X.shape[1] != A_hat.shape[0]:
        raise DimensionError(
            f"X is {X.shape} but A_hat is {A_hat.shape}")
    return X @ A_hat


def fit(X, Y):
    """Return ``(A_hat, Y_hat)`` sharing one QR factorization."""
    X = check_matrix(X, "X")
    Y = check_matrix(Y, "Y")
    if X.shape[0] != Y.shape[0]:
        raise DimensionError(
            f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if X.shape[0] < X.shape[1]:
        raise SingularDesignError("X has fewer rows than columns")
    A_hat, Q = _qr_solve(X, Y)
    return A_hat, Q @ (Q.T @ Y)


def singular_values(M):
    """Singular values of ``M`` in descending order, ``min(M.shape)`` of them."""
    M = check_matrix(M, "M")
    return np.linalg.svd(M, compute_uv=False)


def svd(M):
    """Thin SVD with singular values sorted descending (stable on ties)."""
    M = check_matrix(M, "M")
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    order = np.argsort(-s, kind="stable")
    return SvdResult(s[order], U[:, order], Vt[order].T)
