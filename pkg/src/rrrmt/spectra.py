"""Limiting spectral laws of the noise part of ``Y_hat`` and ``A_hat``.

``MpLaw(beta)`` is the Marchenko-Pastur law of ``Y_hat.T @ Y_hat / r`` and
``AbLaw(lam, beta)`` the law of ``A_hat.T @ A_hat`` (both ``r x r``), where
``lam = N/p - 1`` and ``beta = p/r``.  When ``beta < 1`` both carry an atom of
mass ``1 - beta`` at zero.

Stieltjes transforms ``G(z) = integral dP(t) / (z - t)`` are evaluated in
closed form on the real axis at or above the upper support edge, using
rationalized expressions that avoid cancellation::

    G_MP(z) = 2 / (1 - beta + z + sqrt(D_MP(z)))
    G_A(z)  = 2 (1 + lam beta) / (1 - beta + (2 + lam beta) z + sqrt(D_A(z)))
"""

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
from scipy import integrate

from .exceptions import DomainError, ParameterError
from .validation import check_positive

# Gauss-Legendre rule for the piecewise CDF integrals.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_BASE_PANELS = 256


class _Law:
    """Shared CDF / quadrature machinery.

    Subclasses describe the continuous part through a change of variables
    ``x = x_of(phi)``, ``phi in [0, phi_max]``, chosen so that
    ``density(x) dx/dphi`` is smooth; square-root edges disappear.
    """

    atom = 0.0
    phi_max = math.pi

    def support(self):
        raise NotImplementedError

    def density(self, x):
        raise NotImplementedError

    def x_of(self, phi):
        raise NotImplementedError

    def phi_of(self, x):
        raise NotImplementedError

    def mapped_density(self, phi):
        raise NotImplementedError

    def _panel_integrals(self, edges):
        a, b = edges[:-1], edges[1:]
        half = (b - a) / 2.0
        nodes = (a + b)[:, None] / 2.0 + half[:, None] * _GL_X[None, :]
        return half * (self.mapped_density(nodes) @ _GL_W)

    def continuous_cdf(self, x):
        """Mass of the continuous part on ``(-inf, x]``."""
        x = np.asarray(x, dtype=float)
        phi = self.phi_of(x)
        base = np.linspace(0.0, self.phi_max, _BASE_PANELS + 1)
        edges = np.union1d(base, phi.ravel())
        cum = np.concatenate([[0.0], np.cumsum(self._panel_integrals(edges))])
        return cum[np.searchsorted(edges, phi)]

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        out = self.continuous_cdf(x) + np.where(x >= 0.0, self.atom, 0.0)
        return out if out.ndim else float(out)

    def cdf_left(self, x):
        """Left limit ``P(X < x)``; differs from :meth:`cdf` only at the atom."""
        x = np.asarray(x, dtype=float)
        out = self.continuous_cdf(x) + np.where(x > 0.0, self.atom, 0.0)
        return out if out.ndim else float(out)

    @property
    def continuous_mass(self):
        return float(np.sum(self._panel_integrals(
            np.linspace(0.0, self.phi_max, _BASE_PANELS + 1))))

    def stieltjes(self, z):
        raise NotImplementedError

    def stieltjes_deriv(self, z):
        raise NotImplementedError

    def _check_z(self, z, strict):
        z = np.asarray(z, dtype=float)
        upper = self.support()[1]
        if not math.isfinite(upper):
            raise DomainError("support is unbounded; no real Stieltjes domain")
        # non-strict: accept the edge up to rounding (x * x for x = sqrt(edge))
        bad = z <= upper if strict else z < upper * (1.0 - 1e-14)
        if np.any(bad):
            raise DomainError(
                f"z must be {'>' if strict else '>='} upper edge {upper}")
        return z


def _semicircle_phi(x, lo, hi):
    t = np.clip((np.asarray(x, dtype=float) - lo) / (hi - lo), 0.0, 1.0)
    return np.arccos(1.0 - 2.0 * t)


@dataclass(frozen=True)
class MpLaw(_Law):
    """Marchenko-Pastur law with ratio ``beta``."""

    beta: float

    def __post_init__(self):
        check_positive(self.beta, "beta")

    @property
    def atom(self):
        return max(0.0, 1.0 - self.beta)

    def support(self):
        rb = math.sqrt(self.beta)
        return (rb - 1.0) ** 2, (rb + 1.0) ** 2

    def density(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support()
        inside = (x > lo) & (x < hi) & (x > 0)
        xs = np.where(inside, x, 1.0)
        val = np.sqrt(np.maximum(4 * self.beta - (self.beta + 1 - xs) ** 2, 0.0))
        out = np.where(inside, val / (2 * math.pi * xs), 0.0)
        return out if out.ndim else float(out)

    def x_of(self, phi):
        lo, hi = self.support()
        return lo + (hi - lo) * (1.0 - np.cos(phi)) / 2.0

    def phi_of(self, x):
        return _semicircle_phi(x, *self.support())

    def mapped_density(self, phi):
        lo, hi = self.support()
        half = (hi - lo) / 2.0
        x = self.x_of(phi)
        s2 = np.sin(phi) ** 2
        # sin^2(phi) / x stays bounded when lo = 0
        ratio = np.where(x > 0, s2 / np.where(x > 0, x, 1.0), 4.0 / hi)
        return half * half * ratio / (2.0 * math.pi)

    def stieltjes(self, z):
        z = self._check_z(z, strict=False)
        a = 1.0 - self.beta
        disc = np.maximum((a + z) ** 2 - 4.0 * z, 0.0)
        out = 2.0 / (a + z + np.sqrt(disc))
        return out if out.ndim else float(out)

    def stieltjes_deriv(self, z):
        z = self._check_z(z, strict=True)
        a = 1.0 - self.beta
        root = np.sqrt((a + z) ** 2 - 4.0 * z)
        denom = a + z + root
        out = -2.0 * (1.0 + (a + z - 2.0) / root) / denom ** 2
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class AbLaw(_Law):
    """Limit law of the squared singular values of ``A_hat`` (noise only)."""

    lam: float
    beta: float

    def __post_init__(self):
        check_positive(self.lam, "lam", allow_zero=True)
        check_positive(self.beta, "beta")

    @property
    def atom(self):
        return max(0.0, 1.0 - self.beta)

    def support(self):
        lam, beta = self.lam, self.beta
        if lam == 0.0:
            return (beta - 1.0) ** 2 / (4.0 * beta), math.inf
        c = (1.0 + beta) * lam + 2.0
        root = 2.0 * math.sqrt(lam * lam * beta + lam * (beta + 1.0) + 1.0)
        scale = lam * lam * beta
        # x1 = (c - root)/scale written without cancellation: c^2 - root^2 = lam^2 (beta-1)^2
        x1 = lam * lam * (beta - 1.0) ** 2 / (scale * (c + root))
        return x1, (c + root) / scale

    @property
    def phi_max(self):
        return math.pi if self.lam > 0 else math.pi / 2.0

    def density(self, x):
        x = np.asarray(x, dtype=float)
        lam, beta = self.lam, self.beta
        lo, hi = self.support()
        inside = (x > lo) & (x < hi) & (x > 0)
        xs = np.where(inside, x, 1.0)
        quad = (-(beta - 1.0) ** 2 + 2.0 * beta * ((1.0 + beta) * lam + 2.0) * xs
                - beta * beta * lam * lam * xs * xs)
        val = np.sqrt(np.maximum(quad, 0.0)) / (2 * math.pi * xs * (xs + 1.0))
        out = np.where(inside, val, 0.0)
        return out if out.ndim else float(out)

    def x_of(self, phi):
        lo, hi = self.support()
        if self.lam > 0:
            return lo + (hi - lo) * (1.0 - np.cos(phi)) / 2.0
        return lo + np.tan(phi) ** 2

    def phi_of(self, x):
        lo, hi = self.support()
        if self.lam > 0:
            return _semicircle_phi(x, lo, hi)
        return np.arctan(np.sqrt(np.maximum(np.asarray(x, dtype=float) - lo, 0.0)))

    def mapped_density(self, phi):
        lam, beta = self.lam, self.beta
        lo, hi = self.support()
        x = self.x_of(phi)
        if lam > 0:
            half = (hi - lo) / 2.0
            s2 = np.sin(phi) ** 2
            ratio = np.where(x > 0, s2 / np.where(x > 0, x, 1.0), 4.0 / hi)
            return beta * lam * half * half * ratio / (2.0 * math.pi * (x + 1.0))
        # x = lo + t^2, t = tan(phi): density dx = 2 sqrt(beta) t^2 sec^2 / (pi x (x+1))
        t2 = np.tan(np.minimum(phi, math.pi / 2 - 1e-12)) ** 2
        ratio = np.where(x > 0, t2 / np.where(x > 0, x, 1.0), 1.0)
        return 2.0 * math.sqrt(beta) * ratio * (1.0 + t2) / (math.pi * (x + 1.0))

    def _parts(self, z):
        lam, beta = self.lam, self.beta
        c = lam * (1.0 + beta) + 2.0
        disc = np.maximum((lam * beta * z) ** 2 - 2.0 * beta * c * z
                          + (beta - 1.0) ** 2, 0.0)
        b = 1.0 - beta + (2.0 + lam * beta) * z
        return b, disc, c

    def stieltjes(self, z):
        if self.lam == 0.0:
            raise DomainError("Stieltjes transform needs lam > 0")
        z = self._check_z(z, strict=False)
        b, disc, _ = self._parts(z)
        out = 2.0 * (1.0 + self.lam * self.beta) / (b + np.sqrt(disc))
        return out if out.ndim else float(out)

    def stieltjes_deriv(self, z):
        if self.lam == 0.0:
            raise DomainError("Stieltjes transform needs lam > 0")
        z = self._check_z(z, strict=True)
        lam, beta = self.lam, self.beta
        b, disc, c = self._parts(z)
        root = np.sqrt(disc)
        d_disc = 2.0 * (lam * beta) ** 2 * z - 2.0 * beta * c
        denom = b + root
        out = (-2.0 * (1.0 + lam * beta) * ((2.0 + lam * beta) + d_disc / (2.0 * root))
               / denom ** 2)
        return out if out.ndim else float(out)

    def stieltjes_rescaled(self, z):
        """Stieltjes transform through the law of ``beta * A_hat.T @ A_hat``.

        ``G(z) = beta * H(beta z)``, where ``H`` is the transform of the
        rescaled variable.  Independent algebraic route to :meth:`stieltjes`.
        """
        if self.lam == 0.0:
            raise DomainError("Stieltjes transform needs lam > 0")
        z = self._check_z(z, strict=False)
        lam, beta = self.lam, self.beta
        w = beta * z
        disc = np.maximum(((1.0 + beta) - lam * w) ** 2 - 4.0 * (w + beta), 0.0)
        H = (beta / 2.0) * (1.0 - beta + (lam + 2.0 / beta) * w
                            - np.sqrt(disc)) / (w * (w + beta))
        out = beta * H
        return out if out.ndim else float(out)


def stieltjes_quadrature(law, z):
    """``integral density(t) / (z - t) dt + atom / z`` by adaptive quadrature.

    Uses QUADPACK's algebraic-weight rule so the square-root edges are
    integrated exactly; independent of the closed forms.
    """
    lo, hi = law.support()
    if not math.isfinite(hi):
        raise DomainError("unbounded support")
    if z <= hi:
        raise DomainError("z must exceed the upper edge")
    if isinstance(law, MpLaw):
        coef = 1.0 / (2.0 * math.pi)

        def folded(t):
            return coef / (z - t)
    else:
        coef = law.beta * law.lam / (2.0 * math.pi)

        def folded(t):
            return coef / ((z - t) * (t + 1.0))
    # density = folded(t) (z - t) sqrt((t - lo)(hi - t)) / t
    if lo > 1e-14:
        val, _ = integrate.quad(lambda t: folded(t) / t, lo, hi, weight="alg",
                                wvar=(0.5, 0.5), epsabs=1e-12, epsrel=1e-12,
                                limit=200)
    else:
        # lower edge at zero: sqrt(t) / t = t^{-1/2} goes into the weight
        val, _ = integrate.quad(folded, 0.0, hi, weight="alg", wvar=(-0.5, 0.5),
                                epsabs=1e-12, epsrel=1e-12, limit=200)
    return val + law.atom / z


def total_mass_quadrature(law):
    """Continuous mass plus atom by adaptive quadrature of :meth:`density`."""
    lo, hi = law.support()
    if math.isfinite(hi):
        val, _ = integrate.quad(law.density, lo, hi, epsabs=1e-11, limit=400)
    else:
        v1, _ = integrate.quad(law.density, lo, lo + 1.0, epsabs=1e-11, limit=400)
        v2, _ = integrate.quad(law.density, lo + 1.0, np.inf, epsabs=1e-11, limit=400)
        val = v1 + v2
    return val + law.atom


# Functional API -------------------------------------------------------------

def mp_density(x, beta):
    return MpLaw(beta).density(x)


def mp_support(beta):
    return MpLaw(beta).support()


def ab_density(x, lam, beta):
    return AbLaw(lam, beta).density(x)


def ab_support(lam, beta):
    """``(x1, x2)``; ``x2 = inf`` when ``lam = 0``."""
    return AbLaw(lam, beta).support()


def stieltjes_mp(z, beta):
    return MpLaw(beta).stieltjes(z)


def stieltjes_mp_deriv(z, beta):
    return MpLaw(beta).stieltjes_deriv(z)


def stieltjes_ab(z, lam, beta):
    if lam <= 0:
        raise DomainError("Stieltjes transform of the coefficient law needs lam > 0")
    return AbLaw(lam, beta).stieltjes(z)


def stieltjes_ab_deriv(z, lam, beta):
    if lam <= 0:
        raise DomainError("Stieltjes transform of the coefficient law needs lam > 0")
    return AbLaw(lam, beta).stieltjes_deriv(z)


def tilde_transform(g_value, x, beta):
    """``g / beta + (1 - 1/beta) / x``: transform of the companion ``p x p`` law."""
    x = np.asarray(x, dtype=float)
    if np.any(x == 0):
        raise DomainError("x must be nonzero")
    beta = check_positive(beta, "beta")
    out = np.asarray(g_value) / beta + (1.0 - 1.0 / beta) / x
    return out if out.ndim else float(out)


def tilde_transform_deriv(g_deriv, x, beta):
    x = np.asarray(x, dtype=float)
    out = np.asarray(g_deriv) / beta - (1.0 - 1.0 / beta) / x ** 2
    return out if out.ndim else float(out)


# Empirical spectral distributions ------------------------------------------

@dataclass(frozen=True)
class Esd:
    """Uniform probability measure on ``points`` (sorted ascending)."""

    points: np.ndarray

    @property
    def n(self):
        return self.points.size

    @cached_property
    def weights(self):
        return np.full(self.n, 1.0 / self.n)

    def cdf(self, x):
        out = np.searchsorted(self.points, np.asarray(x, dtype=float),
                              side="right") / self.n
        return out if np.ndim(out) else float(out)

    def stieltjes(self, z):
        z = np.asarray(z, dtype=float)
        out = np.mean(1.0 / (z[..., None] - self.points), axis=-1)
        return out if out.ndim else float(out)


def esd_from_values(values):
    values = np.asarray(values, dtype=float).ravel()
    if values.size == 0:
        raise ParameterError("empirical distribution needs at least one value")
    if not np.all(np.isfinite(values)):
        raise ParameterError("values must be finite")
    return Esd(np.sort(values))


def ks_distance(esd, law):
    """``sup_x |F_esd(x) - F_law(x)|``, exact for a law with an atom at 0."""
    pts = np.unique(esd.points)
    n = esd.n
    # ECDF at and just below each distinct point (ties jump together)
    at = np.searchsorted(esd.points, pts, side="right") / n
    below = np.searchsorted(esd.points, pts, side="left") / n
    return float(max(np.max(np.abs(at - law.cdf(pts))),
                     np.max(np.abs(below - law.cdf_left(pts)))))


def law_from_kind(kind, lam=None, beta=1.0):
    kind = kind.lower()
    if kind == "mp":
        return MpLaw(beta)
    if kind == "ab":
        if lam is None:
            raise ParameterError("the coefficient law needs lam")
        return AbLaw(lam, beta)
    raise ParameterError(f"unknown law kind {kind!r}; use 'mp' or 'ab'")


def law_table(law, grid=1000, upper=None):
    """``(x, density, cdf)`` on ``grid`` points spanning the support.

    For an unbounded support the grid stops at ``upper`` (default: the 99.9%
    quantile region, ``x1 + 1e3``).
    """
    lo, hi = law.support()
    if not math.isfinite(hi):
        hi = upper if upper is not None else lo + 1e3
    x = np.linspace(lo, hi, int(grid))
    return x, law.density(x), law.cdf(x)


def export_law_table(law, path, grid=1000, what="density", upper=None):
    """Two-column TSV ``x<TAB>value`` for plotting."""
    x, dens, cdf = law_table(law, grid, upper)
    values = {"density": dens, "cdf": cdf}[what]
    np.savetxt(path, np.column_stack([x, values]), delimiter="\t",
               header=f"x\t{what}", comments="", fmt="%.10g")
