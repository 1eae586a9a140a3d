"""Exact finite-size oracle for outliers of a low-rank perturbation.

For ``A_hat = Z + U diag(theta) V.T`` the singular values of ``A_hat`` that
are not singular values of ``Z`` are the positive zeros of ``det M(t)``::

    M(t) = [[t V'(t^2 - Z'Z)^-1 V,   V'Z'(t^2 - ZZ')^-1 U],
            [U'(t^2 - ZZ')^-1 Z V,   t U'(t^2 - ZZ')^-1 U]]  -  [[0, T^-1], [T^-1, 0]]

The resolvents are applied through the SVD of ``Z``, never inverted densely.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .exceptions import DimensionError, PoleError, SingularDesignError
from .validation import check_matrix

POLE_TOL = 1e-12


def det_identity_check(Psi, D, W1, W2, t):
    """Both sides of the low-rank determinant identity.

    ``det(tI - Psi - W1 D W2) = det(D) det(tI - Psi) det(D^-1 - W2 (tI - Psi)^-1 W1)``
    """
    Psi = np.atleast_2d(np.asarray(Psi, dtype=float))
    D = np.atleast_2d(np.asarray(D, dtype=float))
    W1 = np.asarray(W1, dtype=float).reshape(Psi.shape[0], D.shape[0])
    W2 = np.asarray(W2, dtype=float).reshape(D.shape[0], Psi.shape[0])
    n = Psi.shape[0]
    if Psi.shape != (n, n) or D.shape[0] != D.shape[1]:
        raise DimensionError("Psi and D must be square")
    if np.linalg.cond(D) > 1e14:
        raise SingularDesignError("D is singular")
    shifted = t * np.eye(n) - Psi
    if np.linalg.cond(shifted) > 1e14:
        raise SingularDesignError(f"t={t} is an eigenvalue of Psi")
    lhs = np.linalg.det(shifted - W1 @ D @ W2)
    inner = np.linalg.inv(D) - W2 @ np.linalg.solve(shifted, W1)
    rhs = np.linalg.det(D) * np.linalg.det(shifted) * np.linalg.det(inner)
    return float(lhs), float(rhs)


@dataclass(frozen=True)
class SecularFunction:
    """``M(t)`` for noise ``Z`` (p x r) and the rank-s signal ``U diag(thetas) V.T``."""

    Z: np.ndarray
    U_vecs: np.ndarray
    V_vecs: np.ndarray
    thetas: np.ndarray
    _left: np.ndarray = field(init=False, repr=False)
    _right: np.ndarray = field(init=False, repr=False)
    _sv: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        Z = check_matrix(self.Z, "Z")
        p, r = Z.shape
        U = np.asarray(self.U_vecs, dtype=float).reshape(p, -1)
        V = np.asarray(self.V_vecs, dtype=float).reshape(r, -1)
        thetas = np.atleast_1d(np.asarray(self.thetas, dtype=float))
        if not U.shape[1] == V.shape[1] == thetas.size:
            raise DimensionError("U_vecs, V_vecs and thetas disagree on the rank")
        if np.any(thetas == 0):
            raise DimensionError("thetas must be nonzero")
        P, sv, Qt = np.linalg.svd(Z, full_matrices=True)
        for name, value in (("Z", Z), ("U_vecs", U), ("V_vecs", V),
                            ("thetas", thetas), ("_sv", sv)):
            object.__setattr__(self, name, value)
        # signal directions in the singular bases of Z
        object.__setattr__(self, "_left", P.T @ U)
        object.__setattr__(self, "_right", Qt @ V)

    @property
    def rank(self):
        return self.thetas.size

    @property
    def noise_singulars(self):
        return self._sv.copy()

    def poles(self):
        """Distinct ``t >= 0`` where ``M`` is undefined."""
        p, r = self.Z.shape
        pts = self._sv if p == r else np.append(self._sv, 0.0)
        return np.unique(pts)

    def matrix(self, t):
        t = float(t)
        if t <= 0:
            raise PoleError(f"t must be positive, got {t}")
        p, r = self.Z.shape
        k = self._sv.size
        if np.any(np.abs(self._sv - t) <= POLE_TOL * max(1.0, t)):
            raise PoleError(f"t={t} is a singular value of Z")
        t2 = t * t
        eig_p = np.zeros(p)
        eig_p[:k] = self._sv ** 2
        eig_r = np.zeros(r)
        eig_r[:k] = self._sv ** 2
        a, b = self._left, self._right
        vv = t * (b.T / (t2 - eig_r)) @ b
        uu = t * (a.T / (t2 - eig_p)) @ a
        uzv = (a[:k].T * (self._sv / (t2 - self._sv ** 2))) @ b[:k]
        inv_theta = np.diag(1.0 / self.thetas)
        return np.block([[vv, uzv.T - inv_theta], [uzv - inv_theta, uu]])


def secular_eval(sf, t):
    """``det M(t)``."""
    return float(np.linalg.det(sf.matrix(t)))


def secular_zeros(sf, grid=400, upper=None):
    """Positive zeros of ``det M`` by sign-change scan plus bisection.

    Each gap between consecutive poles (and the half-line above the largest)
    is scanned on ``grid`` Chebyshev-clustered points so zeros hugging a pole
    are still bracketed.
    """
    poles = sf.poles()
    if upper is None:
        upper = poles[-1] + np.sum(np.abs(sf.thetas)) + 1.0
    edges = np.append(poles, upper)
    if edges[0] > 0:
        edges = np.insert(edges, 0, 0.0)
    zeros = []
    u = 0.5 * (1.0 - np.cos(np.linspace(0.0, np.pi, grid)))[1:-1]
    for lo, hi in zip(edges[:-1], edges[1:]):
        width = hi - lo
        if width <= 1e-10 * max(1.0, hi):
            continue
        ts = lo + width * u
        vals = np.array([secular_eval(sf, t) for t in ts])
        for i in np.flatnonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0):
            zeros.append(brentq(lambda t: secular_eval(sf, t), ts[i], ts[i + 1],
                                xtol=1e-15, rtol=1e-15))
        zeros.extend(ts[vals == 0.0])
    return np.sort(np.asarray(zeros))[::-1]
