import numpy as np
import pytest
from scipy.integrate import trapezoid

from rrrmt.exceptions import ParameterError
from rrrmt.tracywidom import fredholm_cdf, tw_cdf, tw_quantile, tw_sf


@pytest.mark.parametrize("s", [-3.5, -1.27, 0.0, 0.45, 2.0, 4.0])
def test_table_matches_determinant(s):
    assert tw_cdf(s) == pytest.approx(fredholm_cdf(s), abs=1e-7)


def test_monotone_and_bounded():
    x = np.linspace(-12, 12, 2001)
    F = tw_cdf(x)
    assert np.all(np.diff(F) >= 0)
    assert F[0] == 0.0 and F[-1] == 1.0


@pytest.mark.parametrize("q", [0.5, 0.9, 0.95, 0.98, 0.99])
def test_inverse_consistency(q):
    assert tw_cdf(tw_quantile(q)) == pytest.approx(q, abs=1e-6)


@pytest.mark.parametrize("q, x", [(0.90, 0.45), (0.95, 0.98), (0.98, 1.60), (0.99, 2.02)])
def test_upper_quantiles(q, x):
    assert tw_quantile(q) == pytest.approx(x, abs=0.02)


def test_median():
    # determinant value; the two-decimal literature figure -1.3 is rounded from -1.27
    assert tw_quantile(0.5) == pytest.approx(-1.2686, abs=1e-3)


def test_moments():
    # TW1 mean -1.2065 and variance 1.6078 (known constants)
    x = np.linspace(-10, 10, 20001)
    dens = np.gradient(tw_cdf(x), x)
    mean = trapezoid(x * dens, x)
    var = trapezoid((x - mean) ** 2 * dens, x)
    assert mean == pytest.approx(-1.2065, abs=1e-3)
    assert var == pytest.approx(1.6078, abs=1e-3)


def test_sf():
    assert tw_sf(0.45) == pytest.approx(0.10, abs=0.002)


@pytest.mark.parametrize("q", [0.0, 1.0, -0.1])
def test_bad_probability(q):
    with pytest.raises(ParameterError):
        tw_quantile(q)
