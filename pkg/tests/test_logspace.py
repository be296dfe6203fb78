"""Log-space primitives against independent high-precision oracles."""

import math

import mpmath as mp
import numpy as np
import pytest

from ldplab.logspace import (
    NEG_INF,
    log1mexp,
    log_norm_interval,
    log_norm_tail,
    logdiffexp,
    logmeanexp,
    logsumexp,
)

mp.mp.dps = 40


@pytest.mark.parametrize("x", [-3.0, 0.0, 1.0, 5.0, 9.0, 20.0, 40.0, 100.0, 250.0])
def test_log_norm_tail_matches_mpmath(x):
    oracle = float(mp.log(mp.ncdf(-mp.mpf(x))))
    assert log_norm_tail(x) == pytest.approx(oracle, rel=1e-12)


@pytest.mark.parametrize(
    "lo,hi",
    [(-1.0, 1.0), (0.0, 2.0), (9.0, 11.0), (-11.0, -9.0), (-0.5, 30.0), (50.0, 60.0)],
)
def test_log_norm_interval_matches_mpmath(lo, hi):
    # evaluate the oracle on the lower-tail side, where 40-digit mpmath
    # keeps the difference representable (identical by symmetry)
    a, b = (lo, hi) if lo + hi <= 0 else (-hi, -lo)
    oracle = float(mp.log(mp.ncdf(mp.mpf(b)) - mp.ncdf(mp.mpf(a))))
    assert log_norm_interval(lo, hi) == pytest.approx(oracle, rel=1e-10)


def test_log_norm_interval_degenerate():
    assert log_norm_interval(2.0, 2.0) == NEG_INF
    assert log_norm_interval(3.0, 1.0) == NEG_INF


def test_log1mexp_small_and_large():
    for x in (-1e-12, -0.1, -1.0, -50.0):
        assert log1mexp(x) == pytest.approx(math.log(1 - math.exp(x)) if x < -1e-6 else float(mp.log(1 - mp.e**mp.mpf(x))), rel=1e-9)
    assert log1mexp(0.0) == NEG_INF
    with pytest.raises(ValueError):
        log1mexp(0.5)


def test_logdiffexp():
    assert logdiffexp(math.log(5), math.log(3)) == pytest.approx(math.log(2))
    assert logdiffexp(1.0, NEG_INF) == 1.0
    assert logdiffexp(1.0, 1.0) == NEG_INF


def test_logsumexp_edges():
    assert logsumexp([]) == NEG_INF
    assert logsumexp([NEG_INF, NEG_INF]) == NEG_INF
    assert logsumexp([0.0, 0.0]) == pytest.approx(math.log(2))
    big = logsumexp([1000.0, 1000.0])
    assert big == pytest.approx(1000.0 + math.log(2))


def test_logmeanexp_partial_terms():
    # three nonzero terms of a 10-term mean
    vals = np.log([1.0, 2.0, 3.0])
    assert logmeanexp(vals, n=10) == pytest.approx(math.log(6.0 / 10.0))
