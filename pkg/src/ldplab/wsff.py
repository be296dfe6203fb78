"""Truncated exponential-moment limits over a grid of tilt arguments.

Estimates A(mu) = lim (1/T) ln E(exp(T <mu, zeta_T>); |zeta_T| <= M_T) by
climbing a T-ladder with a slowly growing truncation radius schedule, with
per-argument convergence and divergence flags.  Exact evaluators are used
whenever the model provides them; otherwise Monte Carlo in log space with a
delta-method confidence interval on the log of the weighted mean.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .grids import GridFunction, GridSpec
from .logspace import NEG_INF, POS_INF, logsumexp
from .rng import derive_seed, make_rng

Z_CI = 1.96
N_EFF_FLOOR = 30  # below this the delta-method CI is not trustworthy
DIVERGENCE_PER_DOUBLING = 0.5


@dataclass(frozen=True)
class LogEstimate:
    """A log-scale scalar estimate with uncertainty and provenance."""

    value: float
    ci_half_width: float = 0.0
    n_effective: float = float("inf")
    provenance: str = "exact"  # exact | monte-carlo

    @property
    def reliable(self):
        return self.provenance == "exact" or self.n_effective >= N_EFF_FLOOR


@dataclass
class Curve:
    """Map from tilt arguments to estimates, with ladder diagnostics.

    ``estimates`` holds the final-rung estimate per argument; ``rungs`` the
    full (n_args, n_rungs) table behind the convergence flags.
    """

    arguments: np.ndarray  # (n_args, d)
    estimates: list  # of LogEstimate, final rung
    T_ladder: tuple
    converged: list  # of bool
    diverging: list = field(default_factory=list)
    rungs: list = field(default_factory=list)  # per argument: list of LogEstimate
    M_values: tuple = ()

    def values(self):
        return np.array([e.value for e in self.estimates])


def estimate_trunc_log_mgf(model, mu, T, M, N=10_000, seed=0):
    """One (1/T)-scaled truncated log moment estimate at a single (mu, T, M).

    Dispatches to the model's closed form when available.  Monte Carlo path:
    value = (1/T) ln( (1/N) sum exp(T <mu, z_i>) 1(|z_i| <= M) ), accumulated
    in log space; returns -inf when every draw misses the ball.
    """
    mu_vec = np.atleast_1d(np.asarray(mu, dtype=float))
    if model.exact_trunc_log_mgf is not None:
        return LogEstimate(model.exact_trunc_log_mgf(mu_vec, M, T) / T)
    if N < 100:
        raise ValueError("Monte Carlo path needs N >= 100")
    rng = make_rng(seed)
    draws = model.sample(T, rng, size=N)
    inside = np.linalg.norm(draws, axis=1) <= M
    if not inside.any():
        return LogEstimate(NEG_INF, POS_INF, 0.0, "monte-carlo")
    a = T * (draws[inside] @ mu_vec)
    a_max = a.max()
    u = np.exp(a - a_max)
    total = u.sum()
    value = (a_max + math.log(total) - math.log(N)) / T
    n_eff = total * total / np.square(u).sum()
    mean_u = total / N
    var_u = (np.square(u).sum() - N * mean_u * mean_u) / max(N - 1, 1)
    ci = Z_CI * math.sqrt(max(var_u, 0.0) / N) / mean_u / T
    return LogEstimate(value, ci, float(n_eff), "monte-carlo")


def estimate_wsff_curve(
    model,
    mu_grid,
    T_ladder,
    M_schedule,
    N=10_000,
    seed=0,
    rung_tol=0.02,
    jobs=1,
):
    """Estimate the truncated-moment limit curve over a grid of tilts.

    Per argument, the ladder is climbed with M = M_schedule(T); the reported
    value is the last rung.  ``converged`` requires the last two rungs to
    agree within rung_tol; a last-rung increase above 0.5 per T-doubling is
    flagged as divergence to +inf (evidence the argument lies outside the
    effective domain).
    """
    args = np.atleast_2d(np.asarray(mu_grid, dtype=float))
    if args.shape[0] == 0:
        raise ValueError("empty argument grid")
    ladder = tuple(sorted(float(t) for t in T_ladder))
    if len(ladder) < 1:
        raise ValueError("T ladder must not be empty")

    tasks = [(k, r) for k in range(args.shape[0]) for r in range(len(ladder))]

    def run(task):
        k, r = task
        T = ladder[r]
        return estimate_trunc_log_mgf(
            model, args[k], T, M_schedule(T), N, derive_seed(seed, k, r)
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            flat = list(pool.map(run, tasks))
    else:
        flat = [run(t) for t in tasks]

    n_r = len(ladder)
    rungs = [flat[k * n_r : (k + 1) * n_r] for k in range(args.shape[0])]
    estimates, converged, diverging = [], [], []
    for row in rungs:
        estimates.append(row[-1])
        vals = [e.value for e in row]
        if len(vals) >= 2 and math.isfinite(vals[-1]) and math.isfinite(vals[-2]):
            converged.append(abs(vals[-1] - vals[-2]) <= rung_tol)
            slope = (vals[-1] - vals[-2]) / math.log2(ladder[-1] / ladder[-2])
            diverging.append(slope > DIVERGENCE_PER_DOUBLING)
        else:
            converged.append(False)
            diverging.append(vals[-1] == POS_INF)
    return Curve(
        arguments=args,
        estimates=estimates,
        T_ladder=ladder,
        converged=converged,
        diverging=diverging,
        rungs=rungs,
        M_values=tuple(M_schedule(T) for T in ladder),
    )


def extrapolate_inverse_T(curve):
    """Linear-in-1/T extrapolation of the last two rungs (opt-in).

    Fits value(T) = v_inf + c / T through the final rungs and reports v_inf.
    Off by default everywhere: extrapolation can manufacture apparent
    convergence on slowly diverging branches, so callers must opt in.
    """
    if len(curve.T_ladder) < 2:
        return curve
    T1, T2 = curve.T_ladder[-2], curve.T_ladder[-1]
    new = []
    for row, est in zip(curve.rungs, curve.estimates):
        v1, v2 = row[-2].value, row[-1].value
        if math.isfinite(v1) and math.isfinite(v2):
            v_inf = (T2 * v2 - T1 * v1) / (T2 - T1)
            new.append(LogEstimate(v_inf, est.ci_half_width, est.n_effective, est.provenance))
        else:
            new.append(est)
    return Curve(
        curve.arguments, new, curve.T_ladder, curve.converged,
        curve.diverging, curve.rungs, curve.M_values,
    )


@dataclass(frozen=True)
class DoubleLimitReport:
    """Fixed-radius liminf/limsup proxies versus the radius ladder."""

    mu: tuple
    radii: tuple
    liminf_proxy: tuple
    limsup_proxy: tuple
    gap_at_largest: float
    agreement: bool
    table: tuple  # per radius: tuple of per-rung values


def double_limit_check(model, mu, ball_ladder, T_ladder, N=10_000, seed=0, tol=0.05):
    """Probe the order-of-limits formulation: fixed ball first, then T.

    For each fixed radius, (1/T)-scaled truncated log moments are computed on
    the T-ladder; min/max over the top half of the ladder stand in for
    liminf/limsup.  Agreement is flagged when their gap at the largest radius
    falls below ``tol``.
    """
    radii = tuple(sorted(float(b) for b in ball_ladder))
    ladder = tuple(sorted(float(t) for t in T_ladder))
    if len(radii) < 1 or len(ladder) < 1:
        raise ValueError("ladders must not be empty")
    half = len(ladder) // 2
    lows, highs, table = [], [], []
    for bi, radius in enumerate(radii):
        vals = [
            estimate_trunc_log_mgf(
                model, mu, T, radius, N, derive_seed(seed, bi, r)
            ).value
            for r, T in enumerate(ladder)
        ]
        table.append(tuple(vals))
        top = vals[half:]
        lows.append(min(top))
        highs.append(max(top))
    gap = highs[-1] - lows[-1]
    return DoubleLimitReport(
        tuple(np.atleast_1d(np.asarray(mu, dtype=float))),
        radii,
        tuple(lows),
        tuple(highs),
        float(gap),
        bool(gap <= tol),
        tuple(table),
    )


def tail_mass_diagnostic(model, mu, M_ladder, T, N=10_000, seed=0):
    """(1/T)-scaled contribution of the far region {<mu, zeta> >= M} per rung.

    Exposes families whose plain exponential moment is infinite: there the
    contribution refuses to decay as the cutoff grows.  Exact when the model
    provides the closed form; otherwise a Monte Carlo partial mean.
    """
    rungs = sorted(float(m) for m in M_ladder)
    mu_vec = np.atleast_1d(np.asarray(mu, dtype=float))
    out = []
    if model.exact_tail_contribution is not None:
        for M in rungs:
            out.append(LogEstimate(model.exact_tail_contribution(mu_vec, M, T) / T))
        return out
    rng = make_rng(seed)
    draws = model.sample(T, rng, size=N)
    proj = draws @ mu_vec
    a_all = T * proj
    for M in rungs:
        sel = proj >= M
        if not sel.any():
            out.append(LogEstimate(NEG_INF, POS_INF, 0.0, "monte-carlo"))
            continue
        a = a_all[sel]
        value = (logsumexp(a) - math.log(N)) / T
        u = np.exp(a - a.max())
        n_eff = u.sum() ** 2 / np.square(u).sum()
        out.append(LogEstimate(value, POS_INF if n_eff < 2 else 0.0, float(n_eff), "monte-carlo"))
    return out


# ---------------------------------------------------------------------------
# curve <-> grid bridging and serialization
# ---------------------------------------------------------------------------

def curve_to_grid(curve):
    """Reshape a curve whose arguments form a full uniform grid into a GridFunction."""
    args = curve.arguments
    vals = curve.values()
    if np.any(np.isneginf(vals)):
        raise ValueError("curve contains -inf estimates; cannot grid them")
    d = args.shape[1]
    if d == 1:
        xs = args[:, 0]
        order = np.argsort(xs)
        xs, vals = xs[order], vals[order]
        spec = GridSpec((xs[0],), (xs[-1],), (len(xs),))
        return GridFunction(spec, vals)
    ax0 = np.unique(args[:, 0])
    ax1 = np.unique(args[:, 1])
    if len(ax0) * len(ax1) != len(vals):
        raise ValueError("curve arguments do not form a full 2-D grid")
    spec = GridSpec(
        (ax0[0], ax1[0]), (ax0[-1], ax1[-1]), (len(ax0), len(ax1))
    )
    grid = np.empty(spec.count)
    i0 = np.searchsorted(ax0, args[:, 0])
    i1 = np.searchsorted(ax1, args[:, 1])
    grid[i0, i1] = vals
    return GridFunction(spec, grid)


def _curve_rows(curve):
    d = curve.arguments.shape[1]
    T_last = curve.T_ladder[-1]
    M_last = curve.M_values[-1] if curve.M_values else float("nan")
    for k in range(curve.arguments.shape[0]):
        est = curve.estimates[k]
        row = {f"mu{j}": float(curve.arguments[k, j]) for j in range(d)}
        row.update(
            value=est.value,
            ci=est.ci_half_width,
            neff=est.n_effective,
            T=T_last,
            M=M_last,
            converged=bool(curve.converged[k]),
        )
        yield row


def write_curve_csv(curve, path):
    rows = list(_curve_rows(curve))
    cols = list(rows[0].keys())
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_cell(row[c]) for c in cols) + "\n")


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    return str(v)


def write_curve_json(curve, path):
    rows = list(_curve_rows(curve))
    for row in rows:
        for key, val in row.items():
            if isinstance(val, float) and math.isinf(val):
                row[key] = "inf" if val > 0 else "-inf"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=1)
        fh.write("\n")
