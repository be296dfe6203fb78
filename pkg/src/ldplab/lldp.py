"""Local rate estimation from shrinking-ball probabilities.

The decay exponent D(alpha) of P(zeta_T in ball(alpha, eps_T)) is estimated
along a T-ladder, either from closed forms or by Monte Carlo counting, and
for rare targets by exponential-tilt importance sampling: choose mu solving
grad A(mu) = alpha, sample the tilted law, and unwind the change of measure.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .convex import NonConvexError, _check_convex_lines
from .logspace import NEG_INF, POS_INF, logsumexp
from .rng import derive_seed, make_rng
from .schedules import ScheduleSpec, decay_legality_probe
from .wsff import Curve, LogEstimate, Z_CI, curve_to_grid, estimate_trunc_log_mgf

STAGNANT_CUTOFF = -0.05  # (1/T) ln P(|zeta|>v) above this counts as escaping mass


class TiltError(RuntimeError):
    """Tilt selection failed (nonsmooth target or clamped at the window edge)."""


@dataclass(frozen=True)
class TiltSolution:
    mu_star: np.ndarray
    achieved_gradient: np.ndarray
    residual: float
    status: str  # interior | boundary-clamped | failed-nonsmooth


@dataclass
class RatePoint:
    """Estimated decay exponent of a shrinking ball around alpha."""

    alpha: np.ndarray
    D_hat: LogEstimate
    method: str  # exact | naive-mc | tilted-is
    eps_used: float
    T_used: float
    M_used: float = float("nan")
    flags: list = field(default_factory=list)
    rungs: list = field(default_factory=list)  # (T, eps, LogEstimate) per rung


def _as_grid(A):
    return curve_to_grid(A) if isinstance(A, Curve) else A


# ---------------------------------------------------------------------------
# naive shrinking-ball estimator
# ---------------------------------------------------------------------------

def estimate_local_rate_naive(model, alpha, eps_schedule, T_ladder, N=10_000, seed=0):
    """-(1/T) ln P(zeta_T in ball(alpha, eps_T)) along a T-ladder.

    Uses the model's exact ball probability when available.  Monte Carlo
    rungs with zero hits report +inf and an ``undersampled`` flag; the
    returned rate is the last rung with a usable value.
    """
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    ladder = tuple(sorted(float(t) for t in T_ladder))
    rungs = []
    flags = []
    exact = model.exact_log_local_prob is not None
    for r, T in enumerate(ladder):
        eps = eps_schedule(T)
        if exact:
            lnp = model.exact_log_local_prob(a, eps, T)
            est = LogEstimate(-lnp / T if lnp > NEG_INF else POS_INF)
        else:
            rng = make_rng(derive_seed(seed, r))
            draws = model.sample(T, rng, size=N)
            hits = int((np.linalg.norm(draws - a, axis=1) < eps).sum())
            if hits == 0:
                est = LogEstimate(POS_INF, POS_INF, 0.0, "monte-carlo")
            else:
                p_hat = hits / N
                ci = Z_CI * math.sqrt((1.0 - p_hat) / hits) / T
                est = LogEstimate(-math.log(p_hat) / T, ci, float(hits), "monte-carlo")
        rungs.append((T, eps, est))

    # last rung with a usable (finite for MC) value
    report_ix = len(rungs) - 1
    if not exact:
        finite = [i for i, (_, _, e) in enumerate(rungs) if math.isfinite(e.value)]
        if finite:
            report_ix = finite[-1]
            if report_ix != len(rungs) - 1:
                flags.append("undersampled-beyond-T=%g" % rungs[report_ix][0])
        else:
            flags.append("undersampled")
    T_used, eps_used, est = rungs[report_ix]
    if est.value == POS_INF and "undersampled" not in flags and est.provenance == "exact":
        flags.append("empty-event")
    return RatePoint(
        alpha=a,
        D_hat=est,
        method="exact" if exact else "naive-mc",
        eps_used=eps_used,
        T_used=T_used,
        flags=flags,
        rungs=rungs,
    )


# ---------------------------------------------------------------------------
# tilt selection
# ---------------------------------------------------------------------------

def _solve_tilt_1d(x, f, h, target, tol):
    """Locate the node whose subdifferential contains the target slope.

    The one-sided segment slopes of a convex line are nondecreasing, so the
    monotone search for the first segment at the target level is a bisection
    (searchsorted).  Returns (node index, achieved subgradient, status); the
    achieved value is the point of the node's subdifferential [s_left,
    s_right] closest to the target, and landing strictly inside a wide
    subgradient jump is reported as failed-nonsmooth.
    """
    s = np.diff(f) / h
    flat = 1e-9 * (1.0 + abs(target))
    j = int(np.searchsorted(s, target - flat))
    if j >= len(s):
        i_star = len(s) - 1  # last interior node
        achieved = float(s[-1])
        status = "boundary-clamped" if target - achieved > tol else "interior"
        return i_star, achieved, status
    if j == 0:
        s_left, s_right = float(s[0]), float(s[min(1, len(s) - 1)])
        achieved = min(max(target, s_left), s_right)
        status = "boundary-clamped" if s_left - target > tol else "interior"
        return 1, achieved, status
    i_star = j  # node between segments j-1 and j
    s_left, s_right = float(s[j - 1]), float(s[j])
    achieved = min(max(target, s_left), s_right)
    if min(target - s_left, s_right - target) > tol:
        return i_star, achieved, "failed-nonsmooth"
    return i_star, achieved, "interior"


def solve_tilt(A, alpha, tol=None):
    """Solve grad A(mu) = alpha on the grid of a convex function A.

    1-D: monotone bisection on the central-difference gradient.  2-D: damped
    coordinate-wise bisection on the gradient map.  Status is
    ``failed-nonsmooth`` when the target sits inside a subgradient jump and
    ``boundary-clamped`` when the solution hits the grid window edge.
    """
    A = _as_grid(A)
    spec = A.spec
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    _check_convex_lines(A.values)  # raises NonConvexError

    if spec.dimension == 1:
        h = spec.spacing[0]
        tol = 2.0 * h if tol is None else tol
        fin = np.isfinite(A.values)
        ix = np.flatnonzero(fin)
        lo, hi = ix[0], ix[-1]
        if hi - lo < 2:
            raise NonConvexError("domain too thin to differentiate")
        x = spec.axis(0)[lo : hi + 1]
        f = A.values[lo : hi + 1]
        i_rel, achieved, status = _solve_tilt_1d(x, f, h, float(a[0]), tol)
        mu = np.array([x[i_rel]])
        g = np.array([achieved])
        return TiltSolution(mu, g, float(abs(achieved - a[0])), status)

    # 2-D damped coordinate-wise bisection on the gradient map
    h0, h1 = spec.spacing
    tol = 2.0 * max(h0, h1) if tol is None else tol
    i = spec.count[0] // 2
    j = spec.count[1] // 2
    damp = 0.7
    achieved = np.zeros(2)
    status = "interior"
    for _ in range(80):
        col = A.values[:, j]
        fin = np.flatnonzero(np.isfinite(col))
        i_rel, ach0, st0 = _solve_tilt_1d(
            spec.axis(0)[fin[0] : fin[-1] + 1], col[fin[0] : fin[-1] + 1], h0, a[0], tol
        )
        i_new = fin[0] + i_rel
        i_next = int(round(i + damp * (i_new - i)))
        row = A.values[i_next, :]
        fin = np.flatnonzero(np.isfinite(row))
        j_rel, ach1, st1 = _solve_tilt_1d(
            spec.axis(1)[fin[0] : fin[-1] + 1], row[fin[0] : fin[-1] + 1], h1, a[1], tol
        )
        j_new = fin[0] + j_rel
        j_next = int(round(j + damp * (j_new - j)))
        settled = i_next == i and j_next == j and i_new == i and j_new == j
        i, j = i_next, j_next
        achieved = np.array([ach0, ach1])
        status = st1 if st1 != "interior" else st0
        if settled:
            break
    i = min(max(i, 1), spec.count[0] - 2)
    j = min(max(j, 1), spec.count[1] - 2)
    mu = np.array([spec.axis(0)[i], spec.axis(1)[j]])
    res = float(np.linalg.norm(achieved - a))
    if status == "interior" and res > 2.0 * tol:
        status = "failed-nonsmooth"
    return TiltSolution(mu, achieved, res, status)


# ---------------------------------------------------------------------------
# tilted importance sampling
# ---------------------------------------------------------------------------

def tilted_concentration_check(model, mu, alpha, eps, M, T, N=10_000, seed=0):
    """Empirical log miss probability of the target ball under the tilted law.

    The tilted-sampling route is only trustworthy when the tilted mass
    concentrates on the ball: the check passes when the miss fraction is at
    most 1/2.
    """
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    rng = make_rng(seed)
    x = model.tilted_sample(mu, M, T, rng, N)
    miss = int((np.linalg.norm(x - a, axis=1) >= eps).sum())
    if miss == 0:
        return LogEstimate(NEG_INF, POS_INF, float(N), "monte-carlo")
    p_hat = miss / N
    ci = Z_CI * math.sqrt((1.0 - p_hat) / miss)
    return LogEstimate(math.log(p_hat), ci, float(N), "monte-carlo")


def estimate_local_rate_tilted(
    model,
    alpha,
    A,
    eps_schedule,
    T_ladder,
    M_schedule,
    N=10_000,
    seed=0,
    tilt_tol=None,
):
    """Rare-ball rate via exponential tilting.

    Requires an interior tilt solution of grad A(mu) = alpha.  Per rung, the
    ball probability factorizes as the truncated exponential moment at the
    tilt times the tilted expectation of exp(-T <mu, x>) over ball hits; both
    factors are estimated in log space.  Raises TiltError when no interior
    tilt exists (at a subgradient jump the lower bound genuinely fails).
    """
    a = np.atleast_1d(np.asarray(alpha, dtype=float))
    tilt = solve_tilt(A, a, tilt_tol)
    if tilt.status != "interior":
        if tilt.status == "boundary-clamped" and a.size == 1:
            # interior-shift device: nudge the target half a ball inward
            eps0 = eps_schedule(sorted(T_ladder)[-1])
            shift = -0.5 * eps0 * math.copysign(1.0, float(a[0]))
            tilt = solve_tilt(A, a + shift, tilt_tol)
            if tilt.status != "interior":
                raise TiltError(f"tilt selection failed: {tilt.status}")
        else:
            raise TiltError(f"tilt selection failed: {tilt.status}")
    mu = tilt.mu_star

    if model.tilted_sample is not None:
        draw_tilted = lambda M, T, rng, n: model.tilted_sample(mu, M, T, rng, n)  # noqa: E731
    else:
        def draw_tilted(M, T, rng, n):
            # self-normalized fallback: reweight plain draws on the ball
            raw = model.sample(T, rng, size=4 * n)
            inside = np.linalg.norm(raw, axis=1) <= M
            raw = raw[inside]
            if len(raw) == 0:
                raise TiltError("no raw draws inside the truncation ball")
            lw = T * (raw @ mu)
            p = np.exp(lw - logsumexp(lw))
            p /= p.sum()
            ix = make_rng(derive_seed(0, int(rng.integers(1 << 62)))).choice(
                len(raw), p=p, size=n
            )
            return raw[ix]

    ladder = tuple(sorted(float(t) for t in T_ladder))
    flags = []
    rungs = []
    for r, T in enumerate(ladder):
        eps = eps_schedule(T)
        M = M_schedule(T)
        if np.linalg.norm(a) + eps > M:
            flags.append(f"ball-not-contained-T={T:g}")
        log_E = estimate_trunc_log_mgf(model, mu, T, M, N, derive_seed(seed, r, 0))
        rng = make_rng(derive_seed(seed, r, 1))
        x = draw_tilted(M, T, rng, N)
        hit = np.linalg.norm(x - a, axis=1) < eps
        n_hit = int(hit.sum())
        miss_frac = 1.0 - n_hit / N
        if miss_frac > 0.5 and f"concentration-failed-T={T:g}" not in flags:
            flags.append(f"concentration-failed-T={T:g}")
        if n_hit == 0:
            rungs.append((T, eps, LogEstimate(POS_INF, POS_INF, 0.0, "monte-carlo")))
            continue
        b = -T * (x[hit] @ mu)
        b_max = b.max()
        u = np.exp(b - b_max)
        tot = u.sum()
        log_hit_term = b_max + math.log(tot) - math.log(N)
        n_eff = tot * tot / np.square(u).sum()
        mean_u = tot / N
        var_u = (np.square(u).sum() - N * mean_u * mean_u) / max(N - 1, 1)
        ci_term = Z_CI * math.sqrt(max(var_u, 0.0) / N) / mean_u / T
        value = -(log_E.value * T + log_hit_term) / T
        ci = math.hypot(log_E.ci_half_width, ci_term)
        rungs.append((T, eps, LogEstimate(value, ci, float(n_eff), "monte-carlo")))

    T_used, eps_used, est = rungs[-1]
    if est.n_effective < 30:
        flags.append("n-effective-below-floor")
    return RatePoint(
        alpha=a,
        D_hat=est,
        method="tilted-is",
        eps_used=eps_used,
        T_used=T_used,
        M_used=M_schedule(T_used),
        flags=flags,
        rungs=rungs,
    )


# ---------------------------------------------------------------------------
# exponential tightness probe
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TightnessTable:
    v_grid: tuple
    T_ladder: tuple
    values: tuple  # per v: tuple of per-T (1/T) log tail values
    verdicts: tuple  # per v: decaying | stagnant-near-zero


def exponential_tightness_probe(model, v_grid, T_ladder, N=10_000, seed=0):
    """(1/T) ln P(|zeta_T| > v) per (v, T): does the far mass decay exponentially?

    Verdict per v: ``decaying`` when the final rung sits clearly below zero,
    ``stagnant-near-zero`` when the log tail refuses to leave 0 (mass
    escaping to infinity at a higher speed).
    """
    vs = tuple(float(v) for v in v_grid)
    ladder = tuple(sorted(float(t) for t in T_ladder))
    table = []
    verdicts = []
    for vi, v in enumerate(vs):
        row = []
        for r, T in enumerate(ladder):
            if model.exact_log_tail is not None:
                lnp = model.exact_log_tail(v, T)
            else:
                rng = make_rng(derive_seed(seed, vi, r))
                draws = model.sample(T, rng, size=N)
                k = int((np.linalg.norm(draws, axis=1) > v).sum())
                lnp = math.log(k / N) if k else NEG_INF
            row.append(lnp / T if lnp > NEG_INF else NEG_INF)
        table.append(tuple(row))
        verdicts.append(
            "stagnant-near-zero" if row[-1] > STAGNANT_CUTOFF else "decaying"
        )
    return TightnessTable(vs, ladder, tuple(table), tuple(verdicts))


# ---------------------------------------------------------------------------
# schedule robustness wrapper
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RobustnessReport:
    multipliers: tuple
    values: tuple
    spread: float
    tolerance: float
    legal: bool
    legality_growth: float
    passed: bool
    flags: tuple


def _final_value(result):
    if isinstance(result, RatePoint):
        return result.D_hat.value
    if isinstance(result, LogEstimate):
        return result.value
    return float(result)


def schedule_robustness(
    runner,
    schedule,
    multipliers=None,
    tol=0.05,
    probe_ladder=(100.0, 1_000.0, 10_000.0),
):
    """Re-run a schedule-parameterized estimator under constant rescalings.

    ``runner(schedule) -> float | LogEstimate | RatePoint``.  The base
    schedule must be a legal slowly-vanishing one: ScheduleSpec enforces this
    by construction, raw callables are probed empirically (eps_T * T has to
    grow).  An illegal schedule fails the report outright; otherwise the
    report passes iff all rescaled final values are finite and their max
    pairwise deviation stays within ``tol``.
    """
    flags = []
    if isinstance(schedule, ScheduleSpec):
        legal, growth = True, math.inf
        if schedule.kind == "constant" and schedule.role == "to-zero":
            legal, growth = True, math.inf  # constant radius: trivially slower than 1/T
        if multipliers is None:
            multipliers = schedule.multipliers
        scaled = schedule.scaled
    else:
        legal, growth = decay_legality_probe(schedule, probe_ladder)
        scaled = lambda m: (lambda T: m * schedule(T))  # noqa: E731
    if multipliers is None:
        multipliers = (0.5, 1.0, 2.0, 4.0)
    multipliers = tuple(float(m) for m in multipliers)

    if not legal:
        flags.append("illegal-schedule-decays-too-fast")
        return RobustnessReport(
            multipliers, (), POS_INF, tol, False, growth, False, tuple(flags)
        )

    values = tuple(_final_value(runner(scaled(m))) for m in multipliers)
    finite = [v for v in values if math.isfinite(v)]
    if len(finite) != len(values):
        flags.append("nonfinite-final-value")
        spread = POS_INF
    else:
        spread = max(values) - min(values) if values else 0.0
    passed = legal and not flags and spread <= tol
    if not passed and "illegal-schedule-decays-too-fast" not in flags and spread > tol:
        flags.append("schedule-sensitivity")
    return RobustnessReport(
        multipliers, values, float(spread), tol, legal, growth, passed, tuple(flags)
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def write_rate_csv(points, path):
    """CSV columns: alpha0[,alpha1],D_hat,ci,method,eps,T,M,neff,flags."""
    points = list(points)
    d = points[0].alpha.size
    cols = [f"alpha{j}" for j in range(d)] + [
        "D_hat",
        "ci",
        "method",
        "eps",
        "T",
        "M",
        "neff",
        "flags",
    ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for pt in points:
            cells = [repr(float(x)) for x in pt.alpha]
            cells += [
                _num(pt.D_hat.value),
                _num(pt.D_hat.ci_half_width),
                pt.method,
                _num(pt.eps_used),
                _num(pt.T_used),
                _num(pt.M_used),
                _num(pt.D_hat.n_effective),
                ";".join(pt.flags),
            ]
            fh.write(",".join(cells) + "\n")


def _num(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return repr(v)
