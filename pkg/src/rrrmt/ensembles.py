"""Random objects of the regression model ``Y = X A + U``.

All samplers draw from :func:`make_rng` generators: Philox (counter based)
streams keyed by ``(seed, stream)``.  Gaussian variates use numpy's ziggurat
``standard_normal``, so a given ``(seed, stream)`` reproduces bit for bit.
"""

from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, ParameterError, RankError, RegimeError
from .validation import check_positive, check_positive_int


class SignalConvention(str, Enum):
    """Normalization of the low-rank factors of ``A``.

    ``UNIT_VECTORS``: orthonormal ``u_j``, ``v_j``; singular values of ``A``
    are exactly ``theta_j``.
    ``ROW_COL_SCALED``: the same directions rescaled to norms ``sqrt(p)`` and
    ``sqrt(r)``; singular values are ``theta_j * sqrt(p * r)``, i.e. ``theta``
    is the size of a typical entry of ``A``.
    """

    UNIT_VECTORS = "UnitVectors"
    ROW_COL_SCALED = "RowColScaled"


def make_rng(seed=0, stream=None):
    """Return a Philox generator for ``(seed, stream)``.

    Distinct ``stream`` values give statistically independent generators, so
    replication ``k`` of an experiment is ``make_rng(master_seed, k)`` no matter
    which worker computes it.
    """
    if isinstance(seed, np.random.Generator):
        if stream is not None:
            raise ParameterError("stream cannot be combined with a Generator")
        return seed
    seed = int(seed)
    if seed < 0:
        raise ParameterError(f"seed must be nonnegative, got {seed}")
    spawn_key = () if stream is None else (int(stream),)
    ss = np.random.SeedSequence(entropy=seed, spawn_key=spawn_key)
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ModelConfig:
    """Dimensions and signal of one regression model.

    ``N >= p`` observations, ``p`` predictors, ``r`` responses, and a rank-``s``
    signal with singular-value parameters ``thetas`` (nonincreasing).
    """

    N: int
    p: int
    r: int
    rank: int = 0
    thetas: tuple = ()
    signal_convention: SignalConvention = SignalConvention.UNIT_VECTORS
    noise_sd: float = 1.0

    def __post_init__(self):
        check_positive_int(self.N, "N")
        check_positive_int(self.p, "p")
        check_positive_int(self.r, "r")
        check_positive_int(self.rank, "rank", minimum=0)
        if self.N < self.p:
            raise RegimeError(f"need N >= p, got N={self.N}, p={self.p}")
        if self.rank > min(self.p, self.r):
            raise RankError(
                f"rank {self.rank} exceeds min(p, r) = {min(self.p, self.r)}")
        thetas = tuple(np.atleast_1d(np.asarray(self.thetas, dtype=float)).tolist())
        # a single theta is shared by all spikes
        if len(thetas) == 1 and self.rank > 1:
            thetas = thetas * self.rank
        if len(thetas) != self.rank:
            raise RankError(
                f"expected {self.rank} thetas, got {len(thetas)}")
        if any(t <= 0 or not math.isfinite(t) for t in thetas):
            raise ParameterError(f"thetas must be positive, got {thetas}")
        if any(a < b for a, b in zip(thetas, thetas[1:])):
            raise ParameterError(f"thetas must be nonincreasing, got {thetas}")
        object.__setattr__(self, "thetas", thetas)
        object.__setattr__(self, "signal_convention",
                           SignalConvention(self.signal_convention))
        check_positive(self.noise_sd, "noise_sd")

    @property
    def lam(self):
        """``N / p - 1``."""
        return self.N / self.p - 1.0

    @property
    def beta(self):
        """``p / r``."""
        return self.p / self.r

    @property
    def mu(self):
        """``N / r``."""
        return self.N / self.r

    def to_dict(self):
        return {
            "N": self.N, "p": self.p, "r": self.r, "rank": self.rank,
            "thetas": list(self.thetas),
            "signal_convention": self.signal_convention.value,
            "noise_sd": self.noise_sd,
        }


@dataclass(frozen=True)
class SignalFactors:
    """``A = U_vecs @ diag(thetas) @ V_vecs.T``."""

    U_vecs: np.ndarray
    V_vecs: np.ndarray
    thetas: np.ndarray

    @property
    def Theta(self):
        return np.diag(self.thetas)

    def matrix(self):
        return (self.U_vecs * self.thetas) @ self.V_vecs.T


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    U: np.ndarray
    A: np.ndarray
    Y: np.ndarray
    seed: int
    signal: SignalFactors = field(default=None, repr=False)


def sample_gaussian_matrix(rows, cols, rng_state=0):
    """``rows x cols`` matrix of i.i.d. N(0, 1) entries."""
    check_positive_int(rows, "rows")
    check_positive_int(cols, "cols")
    return make_rng(rng_state).standard_normal((rows, cols))


def _haar_frame(rng, n, k):
    # QR of a Gaussian matrix with the sign of diag(R) fixed gives a Haar frame.
    q, r = np.linalg.qr(rng.standard_normal((n, k)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def build_signal(config, rng_state=0):
    """Draw Haar-distributed factor directions for the configured spikes."""
    s = config.rank
    if s < 1:
        raise RankError("build_signal needs rank >= 1")
    if s > min(config.p, config.r):
        raise RankError(f"rank {s} exceeds min(p, r)")
    rng = make_rng(rng_state)
    U_vecs = _haar_frame(rng, config.p, s)
    V_vecs = _haar_frame(rng, config.r, s)
    if config.signal_convention is SignalConvention.ROW_COL_SCALED:
        U_vecs = U_vecs * math.sqrt(config.p)
        V_vecs = V_vecs * math.sqrt(config.r)
    return SignalFactors(U_vecs, V_vecs, np.asarray(config.thetas, dtype=float))


def simulate_model(config, seed=0, stream=None):
    """Draw ``X``, ``U`` and the signal, and return ``Y = X A + U``.

    ``X``, ``U`` and the signal directions come from one generator in that
    order, so changing the signal never changes the design or the noise.
    """
    if config.N < config.p:
        raise RegimeError("least squares needs N >= p")
    rng = make_rng(seed, stream)
    X = rng.standard_normal((config.N, config.p))
    U = config.noise_sd * rng.standard_normal((config.N, config.r))
    if config.rank == 0:
        signal = None
        A = np.zeros((config.p, config.r))
        Y = U.copy()
    else:
        signal = build_signal(config, rng)
        A = signal.matrix()
        Y = X @ A + U
    return Dataset(X=X, U=U, A=A, Y=Y, seed=int(seed), signal=signal)


def jacobi_parameters(N, p, r):
    """Map regression dimensions to the Jacobi ensemble of ``X \\ U``.

    Returns ``(m, n1, n2, alpha1, alpha2)``: ``m = min(p, r)``; ``f_i`` are
    eigenvalues of ``(B + C)^{-1} C`` with ``B ~ W_m(I, n1)`` and
    ``C ~ W_m(I, n2)``; ``alpha1 = (|r - p| - 1) / 2`` and
    ``alpha2 = (N - p - 1) / 2``.
    """
    if N < p:
        raise RegimeError("need N >= p")
    if r >= p:
        m, n1, n2 = p, N, r
    else:
        m, n1, n2 = r, N + r - p, p
    return m, n1, n2, (abs(r - p) - 1) / 2.0, (N - p - 1) / 2.0


def sample_jacobi_spectrum(m, n1, n2, rng_state=0):
    """Eigenvalues of ``(B + C)^{-1} C`` for independent Wisharts, descending.

    ``B ~ W_m(I, n1)`` and ``C ~ W_m(I, n2)``.
    """
    check_positive_int(m, "m")
    check_positive_int(n1, "n1")
    check_positive_int(n2, "n2")
    if m > min(n1, n2):
        raise DimensionError(f"need m <= min(n1, n2), got m={m}, "
                             f"n1={n1}, n2={n2}")
    rng = make_rng(rng_state)
    G1 = rng.standard_normal((n1, m))
    G2 = rng.standard_normal((n2, m))
    B = G1.T @ G1
    C = G2.T @ G2
    f = scipy.linalg.eigh(C, B + C, eigvals_only=True)
    return np.clip(f, 0.0, 1.0)[::-1]
