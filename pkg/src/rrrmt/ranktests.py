"""Largest-singular-value tests and rank selection.

Three centred and scaled statistics are asymptotically TW1 under ``A = 0``:

* ``Responses``: squared singular values of ``Y`` (does not use ``X``),
* ``Fitted``: squared singular values of ``Y_hat``,
* ``Coefficients``: log squared singular values of ``A_hat`` (Jacobi scaling).

A TW rule selects as rank the number of statistics above the TW1 upper
``significance`` quantile.  The BSW rule counts squared singular values of
``Y_hat`` above ``2 (p + r)``.
"""

from dataclasses import dataclass
from enum import Enum
import math

import numpy as np

from .exceptions import DimensionError, ParameterError
from .regression import singular_values
from .tracywidom import tw_quantile
from .validation import check_matrix, check_probability


class StatisticKind(str, Enum):
    RESPONSES = "Responses"
    FITTED = "Fitted"
    COEFFICIENTS = "Coefficients"


class Algorithm(str, Enum):
    TW_Y = "TW_Y"
    TW_YHAT = "TW_Yhat"
    TW_AHAT = "TW_Ahat"
    BSW = "BSW"


_ALGORITHM_OF = {
    StatisticKind.RESPONSES: Algorithm.TW_Y,
    StatisticKind.FITTED: Algorithm.TW_YHAT,
    StatisticKind.COEFFICIENTS: Algorithm.TW_AHAT,
}


@dataclass(frozen=True)
class TwStatistics:
    kind: StatisticKind
    values: np.ndarray
    raw_squared_singulars: np.ndarray
    center: float
    scale: float

    @property
    def algorithm(self):
        return _ALGORITHM_OF[self.kind]


@dataclass(frozen=True)
class RankDecision:
    algorithm: Algorithm
    selected_rank: int
    threshold_used: float


def _wishart_scaling(n, r):
    # n - 1 and r enter symmetrically
    a, b = math.sqrt(n - 1), math.sqrt(r)
    return (a + b) ** 2, (a + b) * (1.0 / a + 1.0 / b) ** (1.0 / 3.0)


def responses_scaling(N, r):
    """Centre and scale of the ``Y`` statistic."""
    if N < 2 or r < 2:
        raise DimensionError(f"need N, r >= 2, got N={N}, r={r}")
    return _wishart_scaling(N, r)


def fitted_scaling(p, r):
    """Centre and scale of the ``Y_hat`` statistic."""
    if p < 2 or r < 2:
        raise DimensionError(f"need p, r >= 2, got p={p}, r={r}")
    return _wishart_scaling(p, r)


def coefficient_angles(N, p, r):
    """Angles ``(gamma, phi)`` of the Jacobi edge scaling."""
    denom = N + r - 1.0
    s_gamma = (min(p, r) - 0.5) / denom
    s_phi = (max(p, r) - 0.5) / denom
    for name, v in (("sin^2(gamma/2)", s_gamma), ("sin^2(phi/2)", s_phi)):
        if not 0.0 < v < 1.0:
            raise ParameterError(f"{name} = {v} outside (0, 1)")
    return 2.0 * math.asin(math.sqrt(s_gamma)), 2.0 * math.asin(math.sqrt(s_phi))


def coefficients_scaling(N, p, r):
    """Centre and scale of the log ``A_hat`` statistic."""
    if p < 2 or r < 2 or N < p:
        raise DimensionError(f"need N >= p >= 2 and r >= 2, got N={N}, p={p}, r={r}")
    gamma, phi = coefficient_angles(N, p, r)
    center = 2.0 * math.log(math.tan((phi + gamma) / 2.0))
    scale3 = (16.0 / (N + r - 1.0) ** 2
              / (math.sin(phi + gamma) ** 2 * math.sin(phi) * math.sin(gamma)))
    return center, scale3 ** (1.0 / 3.0)


def stat_responses(Y):
    Y = check_matrix(Y, "Y", min_rows=2, min_cols=2)
    N, r = Y.shape
    center, scale = responses_scaling(N, r)
    lsq = singular_values(Y) ** 2
    return TwStatistics(StatisticKind.RESPONSES, (lsq - center) / scale, lsq,
                        center, scale)


def stat_fitted(Y_hat, p, r=None):
    Y_hat = check_matrix(Y_hat, "Y_hat")
    r = Y_hat.shape[1] if r is None else r
    if Y_hat.shape[1] != r:
        raise DimensionError(f"Y_hat has {Y_hat.shape[1]} columns, expected r={r}")
    center, scale = fitted_scaling(p, r)
    # Y_hat has rank p: only the top min(p, r) values carry information
    lsq = singular_values(Y_hat)[:min(p, r)] ** 2
    return TwStatistics(StatisticKind.FITTED, (lsq - center) / scale, lsq,
                        center, scale)


def stat_coefficients(A_hat, N, p=None, r=None):
    A_hat = check_matrix(A_hat, "A_hat")
    p = A_hat.shape[0] if p is None else p
    r = A_hat.shape[1] if r is None else r
    if A_hat.shape != (p, r):
        raise DimensionError(f"A_hat is {A_hat.shape}, expected {(p, r)}")
    center, scale = coefficients_scaling(N, p, r)
    lsq = singular_values(A_hat) ** 2
    with np.errstate(divide="ignore"):
        logs = np.log(lsq)
    return TwStatistics(StatisticKind.COEFFICIENTS, (logs - center) / scale, lsq,
                        center, scale)


def select_rank_tw(stats, significance=0.10, max_rank=None):
    """Number of statistics strictly above the TW1 ``1 - significance`` quantile.

    ``max_rank`` caps the count (the ``Y`` statistic has ``min(N, r)`` values
    but the model rank is at most ``min(p, r)``).
    """
    significance = check_probability(significance, "significance")
    threshold = tw_quantile(1.0 - significance)
    rank = int(np.count_nonzero(np.asarray(stats.values) > threshold))
    if max_rank is not None:
        rank = min(rank, int(max_rank))
    return RankDecision(stats.algorithm, rank, threshold)


def bsw_threshold(p, r):
    return 2.0 * (p + r)


def select_rank_bsw(l_fitted, p, r):
    """Number of squared singular values of ``Y_hat`` strictly above ``2 (p + r)``."""
    threshold = bsw_threshold(p, r)
    rank = int(np.count_nonzero(np.asarray(l_fitted, dtype=float) > threshold))
    return RankDecision(Algorithm.BSW, min(rank, min(p, r)), threshold)


def all_statistics(Y, Y_hat, A_hat, N, p, r):
    return {
        Algorithm.TW_Y: stat_responses(Y),
        Algorithm.TW_YHAT: stat_fitted(Y_hat, p, r),
        Algorithm.TW_AHAT: stat_coefficients(A_hat, N, p, r),
    }


def select_rank(algorithm, Y, Y_hat, A_hat, N, p, r, significance=0.10):
    """Apply one of the four selection rules to a fitted model."""
    algorithm = Algorithm(algorithm)
    if algorithm is Algorithm.BSW:
        return select_rank_bsw(singular_values(Y_hat)[:min(p, r)] ** 2, p, r)
    if algorithm is Algorithm.TW_Y:
        stats = stat_responses(Y)
    elif algorithm is Algorithm.TW_YHAT:
        stats = stat_fitted(Y_hat, p, r)
    else:
        stats = stat_coefficients(A_hat, N, p, r)
    return select_rank_tw(stats, significance, max_rank=min(p, r))
