"""Numerically stable log-space primitives shared by the whole package.

Everything that accumulates probabilities or exponential moments does so on
the log scale; quantities like ``2**-T * exp(T*mu)`` overflow long before the
answers themselves become uninteresting.
"""

import math

import numpy as np
from scipy.special import log_ndtr, logsumexp as _logsumexp

NEG_INF = float("-inf")
POS_INF = float("inf")


def logsumexp(values):
    """log(sum(exp(values))) over a 1-D array; -inf entries are harmless."""
    a = np.asarray(values, dtype=float)
    if a.size == 0 or np.all(np.isneginf(a)):
        return NEG_INF
    if np.any(np.isposinf(a)):
        return POS_INF
    return float(_logsumexp(a))


def logmeanexp(values, n=None):
    """log of the mean of exp(values); ``n`` overrides the divisor.

    Useful when ``values`` holds only the nonzero terms of an n-term mean.
    """
    a = np.asarray(values, dtype=float)
    count = a.size if n is None else n
    if count == 0:
        return NEG_INF
    s = logsumexp(a)
    if s == NEG_INF or s == POS_INF:
        return s
    return s - math.log(count)


def log1mexp(x):
    """log(1 - exp(x)) for x <= 0, stable near both ends."""
    if x >= 0.0:
        if x == 0.0:
            return NEG_INF
        raise ValueError("log1mexp requires x <= 0")
    if x < -math.log(2.0):
        return math.log1p(-math.exp(x))
    return math.log(-math.expm1(x))


def logdiffexp(a, b):
    """log(exp(a) - exp(b)) for a >= b."""
    if b == NEG_INF:
        return a
    if a == NEG_INF or a < b:
        raise ValueError("logdiffexp requires a >= b")
    if a == b:
        return NEG_INF
    return a + log1mexp(b - a)


def log_norm_tail(x):
    """log of the upper standard normal tail, ln P(Z > x).

    Delegates to scipy's log_ndtr, which is accurate to full double
    precision for arguments far beyond the underflow point of the plain
    tail (x ~ 38).
    """
    return float(log_ndtr(-np.asarray(x, dtype=float)))


def log_norm_interval(lo, hi):
    """ln P(lo < Z < hi) for a standard normal Z, stable in both tails."""
    if not lo < hi:
        return NEG_INF
    if lo == NEG_INF and hi == POS_INF:
        return 0.0
    # mirror into the lower half-line, where log_ndtr is the accurate tail
    if lo + hi > 0.0:
        lo, hi = -hi, -lo
    if hi <= 0.0:
        la = float(log_ndtr(hi))
        lb = float(log_ndtr(lo)) if lo > NEG_INF else NEG_INF
        return logdiffexp(la, lb)
    # interval straddles the bulk: 1 - tail(hi) - tail(-lo)
    t = math.exp(log_norm_tail(hi)) + math.exp(log_norm_tail(-lo))
    if t >= 1.0:
        return NEG_INF
    return math.log1p(-t)
