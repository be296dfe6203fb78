"""The model zoo: samplers and closed-form evaluators for the built-in families.

Each family is a :class:`FamilyModel`, a capability record bundling a sampler
for the random vector ``zeta_T`` with optional exact evaluators:

* ``exact_log_local_prob(alpha, eps, T)``  -> ln P(zeta_T in ball(alpha, eps))
* ``exact_trunc_log_mgf(mu, M, T)``        -> ln E(exp(T <mu, zeta_T>); |zeta_T| <= M)
* ``exact_untrunc_log_mgf(mu, T)``         -> ln E exp(T <mu, zeta_T>)   (may be +inf)
* ``exact_log_tail(v, T)``                 -> ln P(|zeta_T| > v)
* ``exact_tail_contribution(mu, M, T)``    -> ln E(exp(T <mu, zeta_T>); <mu, zeta_T> >= M)
* ``tilted_sample(mu, M, T, rng, size)``   -> draws from the exponentially
  tilted law with density proportional to exp(T <mu, x>) * 1(|x| <= M).

All probability and moment accumulation happens in log space.  Families with
intrinsically integer time use ceil(T) steps.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln, ndtri

from .logspace import (
    NEG_INF,
    POS_INF,
    log1mexp,
    log_norm_interval,
    log_norm_tail,
    logsumexp,
)
from .rng import make_rng

LN2 = math.log(2.0)

_SAMPLE_CHUNK = 20_000_000  # max scalar draws per block when vectorizing iid means


class CapabilityError(RuntimeError):
    """The requested exact evaluator or sampler is not provided by this family."""


class TiltStallError(RuntimeError):
    """Tilted rejection sampling acceptance fell below 1e-6: M too small for the tilt."""


@dataclass(frozen=True)
class FamilyModel:
    """Capability record describing one family {zeta_T}."""

    name: str
    dimension: int
    sample: Callable  # (T, rng, size=None) -> array, shape (d,) or (size, d)
    exact_log_local_prob: Optional[Callable] = None
    exact_trunc_log_mgf: Optional[Callable] = None
    exact_untrunc_log_mgf: Optional[Callable] = None
    exact_log_tail: Optional[Callable] = None
    exact_tail_contribution: Optional[Callable] = None
    tilted_sample: Optional[Callable] = None
    cumulant: Optional[Callable] = None  # per-increment log-MGF, iid families only
    params: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# capability dispatch (operation-style front ends)
# ---------------------------------------------------------------------------

def sample(model, T, seed):
    """One deterministic draw of zeta_T for the given (model, T, seed)."""
    if not T > 0:
        raise ValueError("T must be positive")
    return model.sample(T, make_rng(seed))


def _require(model, attr):
    fn = getattr(model, attr)
    if fn is None:
        raise CapabilityError(f"model {model.name!r} does not provide {attr}")
    return fn


def exact_log_local_prob(model, alpha, eps, T):
    if not eps > 0:
        raise ValueError("eps must be positive")
    return _require(model, "exact_log_local_prob")(alpha, eps, T)


def exact_trunc_log_mgf(model, mu, M, T):
    if not M > 0:
        raise ValueError("M must be positive")
    return _require(model, "exact_trunc_log_mgf")(mu, M, T)


def exact_log_tail(model, v, T):
    return _require(model, "exact_log_tail")(v, T)


def tilted_sample(model, mu, M, T, seed, size=None):
    return _require(model, "tilted_sample")(mu, M, T, make_rng(seed), size)


# ---------------------------------------------------------------------------
# heavy-tail family: normal body with a reciprocal tail beyond sqrt(T)
# ---------------------------------------------------------------------------

def _mills_log_tail_one_sided(z, T):
    """ln P(zeta_T > z) for z > 0: normal-body branch below sqrt(T), then c_T / z."""
    rt = math.sqrt(T)
    if z < rt:
        return log_norm_tail(z * rt)
    return 0.5 * math.log(T) + log_norm_tail(T) - math.log(z)


def _mills_log_cdf_interval(a, b, T):
    """ln P(a < zeta_T < b) for the symmetric two-branch law."""
    if not a < b:
        return NEG_INF
    if b <= 0.0:
        a, b = -b, -a
    if a >= 0.0:
        la = _mills_log_tail_one_sided(a, T) if a > 0.0 else math.log(0.5)
        lb = _mills_log_tail_one_sided(b, T) if b < POS_INF else NEG_INF
        if lb >= la:
            return NEG_INF
        return la + log1mexp(lb - la) if lb > NEG_INF else la
    # interval straddles 0
    t = 0.0
    if b < POS_INF:
        t += math.exp(_mills_log_tail_one_sided(b, T))
    if a > -POS_INF:
        t += math.exp(_mills_log_tail_one_sided(-a, T))
    return math.log1p(-t) if t < 1.0 else NEG_INF


def _mills_sample(T, rng, size=None):
    scalar = size is None
    n = 1 if scalar else int(size)
    w = rng.random(n)
    sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    rt = math.sqrt(T)
    log_ct = 0.5 * math.log(T) + log_norm_tail(T)
    w_switch = math.exp(log_ct + LN2 - 0.5 * math.log(T))  # = 2*Phibar(T); 0 once it underflows
    z = np.empty(n)
    body = w >= w_switch
    z[body] = -ndtri(w[body] / 2.0) / rt
    far = ~body
    if far.any():
        z[far] = np.exp(LN2 + log_ct - np.log(w[far]))
    out = (sign * z)[:, None]
    return out[0] if scalar else out


def _mills_trunc_log_mgf(mu, M, T):
    mu = float(np.atleast_1d(mu)[0])
    rt = math.sqrt(T)
    a_body = min(M, rt)
    m = mu * rt
    ln_parts = [
        0.5 * m * m + log_norm_interval(-a_body * rt - m, a_body * rt - m)
    ]
    if M > rt:
        log_ct = 0.5 * math.log(T) + log_norm_tail(T)
        for s in (1.0, -1.0):
            ln_parts.append(log_ct + _log_quad_exp(s * T * mu, rt, M))
    return logsumexp(ln_parts)


def _log_quad_exp(c, lo, hi):
    """ln of integral over [lo, hi] of exp(c z) / z^2, by shifted quadrature."""
    if hi <= lo:
        return NEG_INF
    f_lo = c * lo - 2.0 * math.log(lo)
    f_hi = c * hi - 2.0 * math.log(hi)
    k = max(f_lo, f_hi)
    val, _ = quad(lambda z: math.exp(c * z - 2.0 * math.log(z) - k), lo, hi, limit=200)
    return k + math.log(val) if val > 0.0 else NEG_INF


def mills_tail():
    """Symmetric law: standard-normal-like body, reciprocal tail beyond sqrt(T).

    The plain exponential moment is infinite for every nonzero tilt, but the
    ball-truncated one behaves like the Gaussian cumulant mu^2/2.
    """

    def local_prob(alpha, eps, T):
        a = float(np.atleast_1d(alpha)[0])
        return _mills_log_cdf_interval(a - eps, a + eps, T)

    def log_tail(v, T):
        return LN2 + _mills_log_tail_one_sided(v, T)

    def untrunc(mu, T):
        return 0.0 if float(np.atleast_1d(mu)[0]) == 0.0 else POS_INF

    def tail_contrib(mu, M, T):
        m = float(np.atleast_1d(mu)[0])
        if m == 0.0:
            return NEG_INF if M > 0 else 0.0
        return POS_INF  # reciprocal tail beats any exponential truncation level

    return FamilyModel(
        name="mills-tail",
        dimension=1,
        sample=_mills_sample,
        exact_log_local_prob=local_prob,
        exact_trunc_log_mgf=_mills_trunc_log_mgf,
        exact_untrunc_log_mgf=untrunc,
        exact_log_tail=log_tail,
        exact_tail_contribution=tail_contrib,
    )


# ---------------------------------------------------------------------------
# two-atom family
# ---------------------------------------------------------------------------

def two_atom(variant):
    """Two atoms: P(zeta_T = 1) = 2^-T, the rest at a_T.

    variant 'vanishing': a_T = 1/T; variant 'escaping': a_T = T.
    """
    if variant not in ("vanishing", "escaping"):
        raise ValueError(f"unknown two-atom variant {variant!r}")

    def atoms(T):
        a_t = 1.0 / T if variant == "vanishing" else float(T)
        lp_rare = -T * LN2
        return np.array([1.0, a_t]), np.array([lp_rare, log1mexp(lp_rare)])

    def smpl(T, rng, size=None):
        xs, lps = atoms(T)
        scalar = size is None
        n = 1 if scalar else int(size)
        pick = rng.random(n) < math.exp(lps[0])
        out = np.where(pick, xs[0], xs[1])[:, None]
        return out[0] if scalar else out

    def local_prob(alpha, eps, T):
        a = float(np.atleast_1d(alpha)[0])
        xs, lps = atoms(T)
        inside = np.abs(xs - a) < eps
        return logsumexp(lps[inside]) if inside.any() else NEG_INF

    def trunc_mgf(mu, M, T):
        m = float(np.atleast_1d(mu)[0])
        xs, lps = atoms(T)
        keep = np.abs(xs) <= M
        if not keep.any():
            return NEG_INF
        return logsumexp(T * m * xs[keep] + lps[keep])

    def untrunc(mu, T):
        m = float(np.atleast_1d(mu)[0])
        xs, lps = atoms(T)
        return logsumexp(T * m * xs + lps)

    def log_tail(v, T):
        xs, lps = atoms(T)
        out = np.abs(xs) > v
        return logsumexp(lps[out]) if out.any() else NEG_INF

    def tail_contrib(mu, M, T):
        m = float(np.atleast_1d(mu)[0])
        xs, lps = atoms(T)
        keep = m * xs >= M
        if not keep.any():
            return NEG_INF
        return logsumexp(T * m * xs[keep] + lps[keep])

    def tilted(mu, M, T, rng, size=None):
        m = float(np.atleast_1d(mu)[0])
        xs, lps = atoms(T)
        keep = np.abs(xs) <= M
        if not keep.any():
            raise TiltStallError("no atoms inside the truncation ball")
        lw = T * m * xs[keep] + lps[keep]
        p = np.exp(lw - logsumexp(lw))
        p /= p.sum()
        scalar = size is None
        n = 1 if scalar else int(size)
        out = rng.choice(xs[keep], p=p, size=n)[:, None]
        return out[0] if scalar else out

    return FamilyModel(
        name=f"two-atom-{variant}",
        dimension=1,
        sample=smpl,
        exact_log_local_prob=local_prob,
        exact_trunc_log_mgf=trunc_mgf,
        exact_untrunc_log_mgf=untrunc,
        exact_log_tail=log_tail,
        exact_tail_contribution=tail_contrib,
        tilted_sample=tilted,
        params={"variant": variant},
    )


# ---------------------------------------------------------------------------
# three-state absorbing chain, pair of occupation frequencies
# ---------------------------------------------------------------------------

def _occupation_log_pmf(n):
    """Chain-law weights: lp[k] = ln P(branch picked and count = k), k = 0..n.

    Start in state 1 or 2 with probability 1/2 each; the start state is kept
    with probability 1/2 per step and deserting is absorbing, so a branch
    holds its state for exactly k of the n steps with probability 2^-(k+1),
    capped at k = n with probability 2^-n.
    """
    k = np.arange(n + 1)
    lp = -(k + 2.0) * LN2
    lp[n] = -(n + 1.0) * LN2
    return lp


def markov_occupation():
    """Occupation frequencies of states 1 and 2 of a 3-state absorbing chain.

    zeta_T = (1/n) * (#{t <= n: Y_t = 1}, #{t <= n: Y_t = 2}), n = ceil(T);
    one coordinate is always zero.
    """

    def smpl(T, rng, size=None):
        n = math.ceil(T)
        scalar = size is None
        m = 1 if scalar else int(size)
        branch = rng.integers(0, 2, size=m)
        stay = np.minimum(rng.geometric(0.5, size=m) - 1, n)
        z = np.zeros((m, 2))
        z[np.arange(m), branch] = stay / n
        return z[0] if scalar else z

    def trunc_mgf(mu, M, T):
        n = math.ceil(T)
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        lp = _occupation_log_pmf(n)
        k = np.arange(n + 1)
        kmax = n if M >= 1.0 else min(n, int(math.floor(M * n + 1e-12)))
        sl = slice(0, kmax + 1)
        parts = [
            logsumexp(T * mu[0] * k[sl] / n + lp[sl]),
            logsumexp(T * mu[1] * k[sl] / n + lp[sl]),
        ]
        return logsumexp(parts)

    def untrunc(mu, T):
        return trunc_mgf(mu, 1.0, T)

    def local_prob(alpha, eps, T):
        n = math.ceil(T)
        a = np.atleast_1d(np.asarray(alpha, dtype=float))
        on_axis0 = a[1] == 0.0 and a[0] - eps > 0.0 and a[0] + eps < 1.0
        on_axis1 = a[0] == 0.0 and a[1] - eps > 0.0 and a[1] + eps < 1.0
        if on_axis0 or on_axis1:
            # closed-form geometric window sum for a pure coordinate window;
            # carries a known constant-factor offset (about 2x) against the
            # simulated chain at fixed T (see tests), identical on the rate scale
            x = a[0] if on_axis0 else a[1]
            k_lo = math.floor((x - eps) * n) + 2
            k_hi = math.ceil((x + eps) * n)
            if k_hi < k_lo:
                return NEG_INF
            ks = np.arange(k_lo, k_hi + 1)
            return logsumexp(-ks * LN2)
        # general balls: enumerate the support atoms under the chain law
        lp = _occupation_log_pmf(n)
        k = np.arange(n + 1) / n
        terms = []
        d0 = np.hypot(k - a[0], a[1])
        d1 = np.hypot(a[0], k - a[1])
        terms.extend(lp[d0 < eps])
        terms.extend(lp[d1 < eps])
        return logsumexp(terms) if terms else NEG_INF

    def log_tail(v, T):
        if v >= 1.0:
            return NEG_INF
        n = math.ceil(T)
        lp = _occupation_log_pmf(n)
        k = np.arange(n + 1) / n
        out = k > v
        if not out.any():
            return NEG_INF
        return logsumexp(np.concatenate([lp[out], lp[out]]))

    def tail_contrib(mu, M, T):
        n = math.ceil(T)
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        lp = _occupation_log_pmf(n)
        k = np.arange(n + 1) / n
        terms = []
        for j in (0, 1):
            keep = mu[j] * k >= M
            if keep.any():
                terms.append(logsumexp(T * mu[j] * k[keep] + lp[keep]))
        return logsumexp(terms) if terms else NEG_INF

    def tilted(mu, M, T, rng, size=None):
        n = math.ceil(T)
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        lp = _occupation_log_pmf(n)
        k = np.arange(n + 1) / n
        keep = k <= M if M < 1.0 else np.ones(n + 1, dtype=bool)
        lw = np.concatenate([T * mu[0] * k[keep] + lp[keep], T * mu[1] * k[keep] + lp[keep]])
        xs0 = np.concatenate([k[keep], np.zeros(keep.sum())])
        xs1 = np.concatenate([np.zeros(keep.sum()), k[keep]])
        p = np.exp(lw - logsumexp(lw))
        p /= p.sum()
        scalar = size is None
        m = 1 if scalar else int(size)
        ix = rng.choice(len(p), p=p, size=m)
        z = np.column_stack([xs0[ix], xs1[ix]])
        return z[0] if scalar else z

    return FamilyModel(
        name="markov-occupation",
        dimension=2,
        sample=smpl,
        exact_log_local_prob=local_prob,
        exact_trunc_log_mgf=trunc_mgf,
        exact_untrunc_log_mgf=untrunc,
        exact_log_tail=log_tail,
        exact_tail_contribution=tail_contrib,
        tilted_sample=tilted,
    )


# ---------------------------------------------------------------------------
# iid sample means
# ---------------------------------------------------------------------------

def _chunked_mean_sampler(draw_increments):
    """Wrap a (rng, rows, n) -> (rows, n) increment sampler into a mean sampler."""

    def smpl(T, rng, size=None):
        n = math.ceil(T)
        scalar = size is None
        rows = 1 if scalar else int(size)
        out = np.empty(rows)
        step = max(1, _SAMPLE_CHUNK // n)
        done = 0
        while done < rows:
            r = min(step, rows - done)
            out[done : done + r] = draw_increments(rng, r, n).mean(axis=1)
            done += r
        out = out[:, None]
        return out[0] if scalar else out

    return smpl


def _binom_logpmf(k, n, p):
    k = np.asarray(k, dtype=float)
    return (
        gammaln(n + 1.0)
        - gammaln(k + 1.0)
        - gammaln(n - k + 1.0)
        + k * math.log(p)
        + (n - k) * math.log1p(-p)
    )


def iid_mean(kind, **params):
    """Sample mean of ceil(T) iid increments.

    kind: 'normal' | 'bernoulli' (p) | 'exponential' (rate) | 'pareto' (index).
    Normal and Bernoulli carry full exact evaluators and exact tilted samplers.
    """
    if kind == "normal":
        return _iid_normal()
    if kind == "bernoulli":
        return _iid_bernoulli(float(params.get("p", 0.5)))
    if kind == "exponential":
        return _iid_exponential(float(params.get("rate", 1.0)))
    if kind == "pareto":
        return _iid_pareto(float(params.get("index", 2.0)))
    raise ValueError(f"unknown iid increment kind {kind!r}")


def _iid_normal():
    def local_prob(alpha, eps, T):
        n = math.ceil(T)
        a = float(np.atleast_1d(alpha)[0])
        rt = math.sqrt(n)
        return log_norm_interval((a - eps) * rt, (a + eps) * rt)

    def trunc_mgf(mu, M, T):
        n = math.ceil(T)
        r = T * float(np.atleast_1d(mu)[0])
        rt = math.sqrt(n)
        return r * r / (2.0 * n) + log_norm_interval((-M - r / n) * rt, (M - r / n) * rt)

    def untrunc(mu, T):
        n = math.ceil(T)
        r = T * float(np.atleast_1d(mu)[0])
        return r * r / (2.0 * n)

    def log_tail(v, T):
        n = math.ceil(T)
        return LN2 + log_norm_tail(v * math.sqrt(n))

    def tail_contrib(mu, M, T):
        n = math.ceil(T)
        m = float(np.atleast_1d(mu)[0])
        if m == 0.0:
            return NEG_INF if M > 0 else 0.0
        r = T * m
        rt = math.sqrt(n)
        cut = M / m  # region <mu, z> >= M
        if m > 0:
            return r * r / (2.0 * n) + log_norm_tail((cut - r / n) * rt)
        return r * r / (2.0 * n) + log_norm_tail((r / n - cut) * rt)

    def tilted(mu, M, T, rng, size=None):
        n = math.ceil(T)
        r = T * float(np.atleast_1d(mu)[0])
        mean_t = r / n
        sd = 1.0 / math.sqrt(n)
        scalar = size is None
        want = 1 if scalar else int(size)
        out = np.empty(want)
        got = 0
        drawn = 0
        while got < want:
            block = max(want - got, 1024)
            z = rng.normal(mean_t, sd, size=block)
            z = z[np.abs(z) <= M]
            drawn += block
            take = min(len(z), want - got)
            out[got : got + take] = z[:take]
            got += take
            if drawn >= 1_000_000 and got / drawn < 1e-6:
                raise TiltStallError("tilted rejection acceptance below 1e-6")
        out = out[:, None]
        return out[0] if scalar else out

    return FamilyModel(
        name="iid-normal",
        dimension=1,
        sample=_chunked_mean_sampler(lambda rng, r, n: rng.standard_normal((r, n))),
        exact_log_local_prob=local_prob,
        exact_trunc_log_mgf=trunc_mgf,
        exact_untrunc_log_mgf=untrunc,
        exact_log_tail=log_tail,
        exact_tail_contribution=tail_contrib,
        tilted_sample=tilted,
        cumulant=lambda mu: 0.5 * mu * mu,
    )


def _iid_bernoulli(p):
    if not 0.0 < p < 1.0:
        raise ValueError("bernoulli p must lie in (0, 1)")

    def cumulant(mu):
        return float(np.logaddexp(math.log1p(-p), math.log(p) + mu))

    def local_prob(alpha, eps, T):
        n = math.ceil(T)
        a = float(np.atleast_1d(alpha)[0])
        k = np.arange(n + 1)
        inside = np.abs(k / n - a) < eps
        if not inside.any():
            return NEG_INF
        return logsumexp(_binom_logpmf(k[inside], n, p))

    def trunc_mgf(mu, M, T):
        n = math.ceil(T)
        m = float(np.atleast_1d(mu)[0])
        k = np.arange(n + 1)
        keep = k / n <= M
        if not keep.any():
            return NEG_INF
        return logsumexp(T * m * k[keep] / n + _binom_logpmf(k[keep], n, p))

    def untrunc(mu, T):
        n = math.ceil(T)
        m = float(np.atleast_1d(mu)[0])
        return n * cumulant(T * m / n)

    def log_tail(v, T):
        n = math.ceil(T)
        k = np.arange(n + 1)
        out = k / n > v
        if not out.any():
            return NEG_INF
        return logsumexp(_binom_logpmf(k[out], n, p))

    def tilted(mu, M, T, rng, size=None):
        n = math.ceil(T)
        m = float(np.atleast_1d(mu)[0])
        t = T * m / n
        # exponential-family conjugation keeps the increments Bernoulli
        logit = math.log(p) - math.log1p(-p) + t
        p_t = 1.0 / (1.0 + math.exp(-logit))
        scalar = size is None
        want = 1 if scalar else int(size)
        out = np.empty(want)
        got = 0
        drawn = 0
        while got < want:
            block = max(want - got, 1024)
            z = rng.binomial(n, p_t, size=block) / n
            z = z[np.abs(z) <= M]
            drawn += block
            take = min(len(z), want - got)
            out[got : got + take] = z[:take]
            got += take
            if drawn >= 1_000_000 and got / drawn < 1e-6:
                raise TiltStallError("tilted rejection acceptance below 1e-6")
        out = out[:, None]
        return out[0] if scalar else out

    return FamilyModel(
        name="iid-bernoulli",
        dimension=1,
        sample=_chunked_mean_sampler(
            lambda rng, r, n: (rng.random((r, n)) < p).astype(float)
        ),
        exact_log_local_prob=local_prob,
        exact_trunc_log_mgf=trunc_mgf,
        exact_untrunc_log_mgf=untrunc,
        exact_log_tail=log_tail,
        tilted_sample=tilted,
        cumulant=cumulant,
        params={"p": p},
    )


def _iid_exponential(rate):
    if not rate > 0:
        raise ValueError("exponential rate must be positive")

    def cumulant(mu):
        return -math.log1p(-mu / rate) if mu < rate else POS_INF

    return FamilyModel(
        name="iid-exponential",
        dimension=1,
        sample=_chunked_mean_sampler(
            lambda rng, r, n: rng.exponential(1.0 / rate, size=(r, n))
        ),
        cumulant=cumulant,
        params={"rate": rate},
    )


def _iid_pareto(index):
    if not index > 0:
        raise ValueError("pareto index must be positive")

    # heavy upper tail: no exponential moments for positive tilts, and no
    # closed cumulant for negative ones; sampler-only sanity model
    return FamilyModel(
        name="iid-pareto",
        dimension=1,
        sample=_chunked_mean_sampler(
            lambda rng, r, n: rng.random((r, n)) ** (-1.0 / index)
        ),
        params={"index": index},
    )


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

MODELS = {
    "mills-tail": mills_tail,
    "two-atom-vanishing": lambda: two_atom("vanishing"),
    "two-atom-escaping": lambda: two_atom("escaping"),
    "markov-occupation": markov_occupation,
    "iid-normal": lambda: iid_mean("normal"),
    "iid-bernoulli": lambda **kw: iid_mean("bernoulli", **kw),
    "iid-exponential": lambda **kw: iid_mean("exponential", **kw),
    "iid-pareto": lambda **kw: iid_mean("pareto", **kw),
}


def make_model(name, **params):
    """Instantiate a built-in family by its stable string identifier."""
    try:
        factory = MODELS[name]
    except KeyError:
        raise ValueError(
            f"unknown model {name!r}; known: {', '.join(sorted(MODELS))}"
        ) from None
    try:
        return factory(**params) if params else factory()
    except TypeError:
        raise ValueError(f"model {name!r} does not accept parameters {params}") from None
