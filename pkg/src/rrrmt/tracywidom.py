"""Tracy-Widom law for real symmetric ensembles (TW1).

Two routes to the CDF:

* :func:`fredholm_cdf` evaluates ``F1(s) = det(I - K_s)`` on ``L2(0, inf)``,
  with kernel ``K_s(x, y) = Ai((x + y) / 2 + s) / 2``, by Gauss-Legendre
  discretization of the operator.  Accurate to ~1e-14 but costs an
  ``m x m`` determinant per point.
* :func:`tw_cdf` interpolates a table of the determinant (``data/tw1_cdf.tsv``,
  step 0.01 on ``[-10, 10]``) with a monotone cubic.  This is the route the
  rank tests use.
"""

from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq
from scipy.special import airy

from .validation import check_probability

TABLE_RANGE = (-10.0, 10.0)
TABLE_STEP = 0.01

# Quantiles quoted in the literature at two decimals, P(TW1 >= x) = level.
FOOTNOTE_QUANTILES = {0.50: -1.3, 0.10: 0.45, 0.05: 0.98, 0.02: 1.60, 0.01: 2.02}


def fredholm_cdf(s, nodes=80):
    """TW1 CDF at ``s`` from the Fredholm determinant (slow, reference route)."""
    s = float(s)
    # Ai((x + y)/2 + s) < 1e-30 once (x + y)/2 + s > 14
    length = max(2.0 * (14.0 - s), 8.0)
    x, w = np.polynomial.legendre.leggauss(nodes)
    x = (x + 1.0) * length / 2.0
    w = w * length / 2.0
    K = 0.5 * airy((x[:, None] + x[None, :]) / 2.0 + s)[0]
    sw = np.sqrt(w)
    value = np.linalg.det(np.eye(nodes) - sw[:, None] * K * sw[None, :])
    return float(min(max(value, 0.0), 1.0))


def generate_table(path, step=TABLE_STEP, bounds=TABLE_RANGE):
    """Write the ``(s, F1(s))`` table consumed by :func:`tw_cdf`."""
    n = int(round((bounds[1] - bounds[0]) / step)) + 1
    grid = np.linspace(bounds[0], bounds[1], n)
    values = np.array([fredholm_cdf(s) for s in grid])
    values = np.maximum.accumulate(values)
    np.savetxt(path, np.column_stack([grid, values]), fmt="%.6f\t%.17e",
               header="s\tF1", comments="")


@lru_cache(maxsize=1)
def _interpolant():
    with resources.files("rrrmt").joinpath("data/tw1_cdf.tsv").open() as fh:
        table = np.loadtxt(fh, skiprows=1)
    return PchipInterpolator(table[:, 0], table[:, 1], extrapolate=False)


def tw_cdf(x):
    """TW1 cumulative distribution function (vectorized)."""
    x = np.asarray(x, dtype=float)
    out = _interpolant()(np.clip(x, *TABLE_RANGE))
    out = np.where(x < TABLE_RANGE[0], 0.0, out)
    out = np.where(x > TABLE_RANGE[1], 1.0, out)
    out = np.clip(out, 0.0, 1.0)
    return out if out.ndim else float(out)


def tw_sf(x):
    """Upper tail ``P(TW1 > x)``."""
    return 1.0 - tw_cdf(x)


def tw_quantile(q):
    """Inverse of :func:`tw_cdf`: the ``x`` with ``P(TW1 <= x) = q``."""
    q = check_probability(q)
    lo, hi = -8.0, 8.0
    while tw_cdf(lo) > q:
        lo -= 1.0
    while tw_cdf(hi) < q:
        hi += 1.0
    return brentq(lambda s: tw_cdf(s) - q, lo, hi, xtol=1e-12, rtol=1e-14)
