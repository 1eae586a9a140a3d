"""De-biased estimation of the spike strengths ``theta_j``.

An outlier singular value ``x`` of ``A_hat`` (or of ``Y_hat / sqrt(r)``) is
mapped back to the spike through a correction function::

    D(x) = 1 / (x * sqrt(G(x^2) * Gt(x^2)))

with ``G`` the Stieltjes transform of the ``r x r`` noise law and ``Gt`` that
of its ``p x p`` companion.  Three variants are available:

``FromA``       limit law of ``A_hat`` (needs ``lam > 0``)
``FromY``       Marchenko-Pastur law of ``Y_hat / sqrt(r)``
``EmpiricalA``  plug-in transform of an observed noise spectrum
"""

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .exceptions import DomainError, NoRootError, ParameterError
from .ranktests import stat_coefficients, stat_fitted
from .regression import singular_values
from .spectra import AbLaw, MpLaw
from .tracywidom import tw_quantile
from .validation import check_matrix, check_positive

EDGE_OFFSETS = (1e-3, 1e-4, 1e-5)


class CorrectionKind(str, Enum):
    FROM_A = "FromA"
    FROM_Y = "FromY"
    EMPIRICAL_A = "EmpiricalA"


@dataclass(frozen=True)
class CorrectionFunction:
    """Callable ``D`` together with the transforms it is built from.

    ``G`` / ``G_tilde`` and their derivatives take the squared argument
    ``z = x^2``; ``domain_lower`` is the square root of the upper edge of the
    noise spectrum, below which ``D`` is undefined.
    """

    kind: CorrectionKind
    params: dict
    domain_lower: float
    G: Callable = field(repr=False)
    G_tilde: Callable = field(repr=False)
    G_deriv: Optional[Callable] = field(default=None, repr=False)
    G_tilde_deriv: Optional[Callable] = field(default=None, repr=False)

    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if np.any(x <= self.domain_lower):
            raise DomainError(
                f"D is defined only above {self.domain_lower:.6g}")
        return x

    def __call__(self, x):
        x = self._check(x)
        z = x * x
        out = 1.0 / (x * np.sqrt(self.G(z) * self.G_tilde(z)))
        return out if out.ndim else float(out)

    def edge_limit(self, offsets=EDGE_OFFSETS):
        """``lim D(x)`` as ``x`` decreases to ``domain_lower``.

        ``D`` has a square-root expansion at the edge,
        ``D(e (1 + h)) = L + a sqrt(h) + b h + ...``; three offsets determine
        ``(L, a, b)`` exactly.
        """
        if self.kind is CorrectionKind.EMPIRICAL_A:
            raise ParameterError("an empirical correction has a pole at its edge")
        h = np.asarray(offsets, dtype=float)
        vals = self(self.domain_lower * (1.0 + h))
        design = np.column_stack([np.ones_like(h), np.sqrt(h), h])
        return float(np.linalg.solve(design, vals)[0])

    def inverse(self, theta):
        """Largest ``x > domain_lower`` with ``D(x) = theta``.

        ``D`` is increasing, so the root is unique; it is bracketed on
        ``[e (1 + 1e-6), e (1 + theta)]`` with geometric expansion of the upper
        end and refined by Brent's bisection/secant hybrid.
        """
        theta = check_positive(theta, "theta")
        lo = self.domain_lower * (1.0 + 1e-6) if self.domain_lower > 0 else 1e-8
        if self(lo) >= theta:
            raise NoRootError(
                f"theta={theta} is at or below the detection threshold "
                f"(D near the edge is {self(lo):.6g})")
        hi = max(self.domain_lower * (1.0 + theta), lo * 2.0, theta)
        while self(hi) <= theta:
            hi *= 2.0
            if hi > 1e300:
                raise NoRootError("failed to bracket D(x) = theta")
        return brentq(lambda x: self(x) - theta, lo, hi, xtol=1e-14, rtol=1e-15,
                      maxiter=500)


def correction_from_A(lam, beta):
    lam = check_positive(lam, "lam")
    beta = check_positive(beta, "beta")
    law = AbLaw(lam, beta)
    ib = 1.0 / beta
    return CorrectionFunction(
        CorrectionKind.FROM_A, {"lam": lam, "beta": beta},
        math.sqrt(law.support()[1]),
        G=law.stieltjes,
        G_tilde=lambda z: ib * law.stieltjes(z) + (1.0 - ib) / z,
        G_deriv=law.stieltjes_deriv,
        G_tilde_deriv=lambda z: ib * law.stieltjes_deriv(z) - (1.0 - ib) / z ** 2,
    )


def correction_from_Y(beta):
    beta = check_positive(beta, "beta")
    law = MpLaw(beta)
    ib = 1.0 / beta
    return CorrectionFunction(
        CorrectionKind.FROM_Y, {"beta": beta},
        math.sqrt(law.support()[1]),
        G=law.stieltjes,
        G_tilde=lambda z: ib * law.stieltjes(z) + (1.0 - ib) / z,
        G_deriv=law.stieltjes_deriv,
        G_tilde_deriv=lambda z: ib * law.stieltjes_deriv(z) - (1.0 - ib) / z ** 2,
    )


def empirical_correction(noise_singulars, p, r):
    """Plug-in correction ``D_N`` from the singular values of ``X \\ U``.

    ``G_N`` is the Stieltjes transform of the ``r x r`` matrix ``Z.T @ Z``,
    whose ``r - len(noise_singulars)`` missing eigenvalues are zero, and
    ``Gt_N = (r/p) G_N + (1 - r/p) / z`` is that of ``Z @ Z.T``.
    """
    s = np.asarray(noise_singulars, dtype=float).ravel()
    if s.size == 0 or s.size > r:
        raise ParameterError(f"need 1..r={r} noise singular values, got {s.size}")
    sq = np.concatenate([s ** 2, np.zeros(r - s.size)])
    ratio = r / p

    def G(z):
        z = np.asarray(z, dtype=float)
        return np.mean(1.0 / (z[..., None] - sq), axis=-1)

    def G_deriv(z):
        z = np.asarray(z, dtype=float)
        return -np.mean(1.0 / (z[..., None] - sq) ** 2, axis=-1)

    return CorrectionFunction(
        CorrectionKind.EMPIRICAL_A, {"p": int(p), "r": int(r)},
        float(np.max(np.abs(s))),
        G=G,
        G_tilde=lambda z: ratio * G(z) + (1.0 - ratio) / z,
        G_deriv=G_deriv,
        G_tilde_deriv=lambda z: ratio * G_deriv(z) - (1.0 - ratio) / z ** 2,
    )


def noise_proxy_from_A(A_hat, s):
    """Singular values of ``A_hat`` below the top ``s``.

    A data-only stand-in for the spectrum of ``X \\ U`` when the noise is not
    observed.  Not covered by the consistency theory; the bulk is shifted by
    the removed spikes only at order ``1/r``.
    """
    sv = singular_values(A_hat)
    if s >= sv.size:
        raise ParameterError("s must be smaller than min(p, r)")
    return sv[s:]


def d_function_A(x, lam, beta):
    return correction_from_A(lam, beta)(x)


def d_function_Y(x, beta):
    return correction_from_Y(beta)(x)


def threshold_A(lam, beta):
    """Smallest spike of ``A`` that separates from the noise of ``A_hat``."""
    return correction_from_A(lam, beta).edge_limit()


def threshold_Y(beta):
    """Edge limit of ``D_Y``, the threshold on the ``Y_hat / sqrt(r)`` scale.

    Equals ``beta ** 0.25``.  A spike ``theta`` of ``A`` yields an outlier when
    ``theta > threshold_Y(beta) / sqrt(mu)``; see :func:`spike_threshold_Y`.
    """
    return correction_from_Y(beta).edge_limit()


def spike_threshold_Y(beta, mu):
    """Detection threshold of the ``Y_hat`` route in units of ``theta``."""
    return threshold_Y(beta) / math.sqrt(check_positive(mu, "mu"))


def threshold_surface(lams, betas):
    """Rows ``(lam, beta, theta_A, theta_Y, theta_A - theta_Y, theta_Y / sqrt(mu))``."""
    rows = []
    for lam in lams:
        for beta in betas:
            ta = threshold_A(lam, beta)
            ty = threshold_Y(beta)
            mu = (1.0 + lam) * beta
            rows.append((float(lam), float(beta), ta, ty, ta - ty,
                         ty / math.sqrt(mu)))
    return rows


def export_threshold_surface(rows, path):
    header = "lambda,beta,theta_A,theta_Y,difference,theta_Y_spike"
    np.savetxt(path, np.asarray(rows, dtype=float), delimiter=",",
               header=header, comments="", fmt="%.10g")


@dataclass(frozen=True)
class EstimateRecord:
    index: int
    sigma_hat: float
    theta_hat: Optional[float]
    above_threshold: bool
    std_error: Optional[float] = None


def _outlier_gate(stat_values, s, significance):
    if significance is None:
        return np.ones(s, dtype=bool)
    cut = tw_quantile(1.0 - significance)
    return np.asarray(stat_values[:s]) > cut


def estimate_thetas_from_A(A_hat, s, correction, lam=None, beta=None, N=None,
                           significance=0.01, std_error=True):
    """De-biased estimates from the top ``s`` singular values of ``A_hat``.

    A singular value counts as an outlier when it lies above the correction's
    domain and, unless ``significance`` is None, its coefficient TW statistic
    exceeds the ``1 - significance`` quantile (finite-size guard against bulk
    fluctuations past the limiting edge).  ``N`` defaults to
    ``round(p (1 + lam))``.

    For ``s = 1`` with ``lam`` and ``beta`` known, ``std_error`` is
    ``omega(theta_hat) / sqrt(r)``.
    """
    A_hat = check_matrix(A_hat, "A_hat")
    p, r = A_hat.shape
    if s < 1 or s > min(p, r):
        raise ParameterError(f"s must lie in 1..{min(p, r)}, got {s}")
    sigma = singular_values(A_hat)[:s]
    gate = np.ones(s, dtype=bool)
    if significance is not None:
        if N is None:
            if lam is None:
                raise ParameterError("the TW guard needs N or lam")
            N = int(round(p * (1.0 + lam)))
        gate = _outlier_gate(stat_coefficients(A_hat, N, p, r).values, s,
                             significance)
    records = []
    for i in range(s):
        above = bool(sigma[i] > correction.domain_lower and gate[i])
        theta_hat = float(correction(sigma[i])) if above else None
        se = None
        if (std_error and above and s == 1 and lam is not None and beta is not None
                and lam > 0 and theta_hat > threshold_A(lam, beta)):
            se = clt_parameters(theta_hat, lam, beta).omega / math.sqrt(r)
        records.append(EstimateRecord(i + 1, float(sigma[i]), theta_hat, above, se))
    return records


def estimate_thetas_from_Y(Y_hat, r, s, beta, mu, p=None, significance=0.01):
    """De-biased estimates ``mu^{-1/2} D_Y(sigma)`` from ``Y_hat / sqrt(r)``."""
    Y_hat = check_matrix(Y_hat, "Y_hat")
    if Y_hat.shape[1] != r:
        raise ParameterError(f"Y_hat has {Y_hat.shape[1]} columns, expected r={r}")
    mu = check_positive(mu, "mu")
    correction = correction_from_Y(beta)
    p = int(round(beta * r)) if p is None else int(p)
    if s < 1 or s > min(p, r):
        raise ParameterError(f"s must lie in 1..{min(p, r)}, got {s}")
    sigma = singular_values(Y_hat)[:s] / math.sqrt(r)
    gate = np.ones(s, dtype=bool)
    if significance is not None:
        gate = _outlier_gate(stat_fitted(Y_hat, p, r).values, s, significance)
    records = []
    for i in range(s):
        above = bool(sigma[i] > correction.domain_lower and gate[i])
        theta_hat = float(correction(sigma[i]) / math.sqrt(mu)) if above else None
        records.append(EstimateRecord(i + 1, float(sigma[i]), theta_hat, above))
    return records


@dataclass(frozen=True)
class CltParameters:
    sigma: float
    kappa1_sq: float
    kappa2_sq: float
    tau_sq: float
    kappa_sq: float
    omega: float


def clt_parameters(theta, lam, beta):
    """Asymptotic scale ``omega`` of ``sqrt(r) (theta_hat - theta)`` (rank one)."""
    correction = correction_from_A(lam, beta)
    try:
        sigma = correction.inverse(theta)
    except NoRootError as exc:
        raise NoRootError(
            f"theta={theta} does not exceed the threshold "
            f"{threshold_A(lam, beta):.6g}") from exc
    z = sigma * sigma
    G, Gt = correction.G(z), correction.G_tilde(z)
    dG, dGt = correction.G_deriv(z), correction.G_tilde_deriv(z)
    kappa1_sq = -2.0 * z * (dG + G * G)
    kappa2_sq = -(2.0 / beta) * z * (dGt + Gt * Gt)
    tau_sq = -(z * dGt + Gt)
    kappa_sq = z * Gt * Gt * kappa1_sq + z * G * G * kappa2_sq + 4.0 * tau_sq / theta ** 2
    omega = 0.5 * theta ** 3 * math.sqrt(kappa_sq)
    return CltParameters(float(sigma), float(kappa1_sq), float(kappa2_sq),
                         float(tau_sq), float(kappa_sq), float(omega))


def studentized_error(theta_hat, theta, r, omega):
    if omega <= 0:
        raise ParameterError(f"omega must be positive, got {omega}")
    return math.sqrt(r) * (theta_hat - theta) / omega
