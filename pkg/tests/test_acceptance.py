"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line
and enforcing its stated tolerance and runtime budget."""

import dataclasses
import math
import time

import numpy as np

from ldplab.cli import exact_rate_grid
from ldplab.convex import biconjugate, check_essential_smoothness, conjugate
from ldplab.duality import minorant_check, verify_converse, verify_forward
from ldplab.families import make_model
from ldplab.grids import INF, GridFunction, grid_1d, grid_2d
from ldplab.lldp import (
    estimate_local_rate_naive,
    estimate_local_rate_tilted,
    exponential_tightness_probe,
    schedule_robustness,
)
from ldplab.logspace import POS_INF
from ldplab.schedules import ScheduleSpec, ball_power, eps_constant, eps_power
from ldplab.wsff import curve_to_grid, estimate_wsff_curve, tail_mass_diagnostic

LN2 = math.log(2.0)


class _Gate:
    def __init__(self, label, budget_s):
        self.label = label
        self.budget = budget_s
        self.checks = []

    def check(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def finish(self, t0):
        elapsed = time.perf_counter() - t0
        ok = all(c[1] for c in self.checks) and elapsed <= self.budget
        status = "PASS" if ok else "FAIL"
        print(f"{status} {self.label} ({elapsed:.2f}s / budget {self.budget:.0f}s)")
        for name, good, detail in self.checks:
            mark = "ok" if good else "FAILED"
            print(f"    [{mark}] {name}" + (f": {detail}" if detail else ""))
        assert elapsed <= self.budget, f"{self.label} exceeded runtime budget"
        for name, good, detail in self.checks:
            assert good, f"{self.label} / {name}: {detail}"


def _two_atom_rate_grid():
    spec = grid_1d(-1.0, 3.0, 4001)
    vals = np.full(spec.count, INF)
    ax = spec.axis(0)
    vals[int(np.argmin(np.abs(ax)))] = 0.0
    vals[int(np.argmin(np.abs(ax - 1.0)))] = LN2
    return GridFunction(spec, vals)


def test_criterion_1_conjugate_golden_values():
    t0 = time.perf_counter()
    gate = _Gate("criterion-1 conjugate golden values", 1.0)

    g = conjugate(_two_atom_rate_grid(), grid_1d(-1.0, 3.0, 4001))
    mu = g.spec.axis(0)
    err1 = float(np.max(np.abs(g.values - np.maximum(0.0, mu - LN2))))
    gate.check("two-atom conjugate exact at dual nodes", err1 <= 1e-12, f"err={err1:.2e}")

    D2 = exact_rate_grid("markov-occupation", grid_2d(-0.25, 1.25, 121))
    h2 = max(D2.spec.spacing)
    dual = grid_2d(-1.0, 2.0, 301)
    g2 = conjugate(D2, dual)
    m0, m1 = np.meshgrid(dual.axis(0), dual.axis(1), indexing="ij")
    err2 = float(np.max(np.abs(g2.values - np.maximum(0.0, np.maximum(m0, m1) - LN2))))
    gate.check("occupation-pair conjugate within 2h", err2 <= 2 * h2, f"err={err2:.2e}")
    gate.finish(t0)


def test_criterion_2_biconjugate_minorant():
    t0 = time.perf_counter()
    gate = _Gate("criterion-2 biconjugate minorants", 1.0)

    f = _two_atom_rate_grid()
    h = f.spec.spacing[0]
    b = biconjugate(f, grid_1d(-1.0, 3.0, 4001))
    ax = f.spec.axis(0)
    on = (ax >= -1e-12) & (ax <= 1 + 1e-12)
    err1 = float(np.max(np.abs(b.values[on] - ax[on] * LN2)))
    gate.check("two-atom biconjugate is alpha*ln2 on [0,1]", err1 <= 2 * h, f"err={err1:.2e}")

    D2 = exact_rate_grid("markov-occupation", grid_2d(-0.25, 1.25, 121))
    h2 = max(D2.spec.spacing)
    b2 = biconjugate(D2, grid_2d(-1.5, 2.5, 161))
    a0, a1 = np.meshgrid(D2.spec.axis(0), D2.spec.axis(1), indexing="ij")
    simplex = (a0 >= -1e-12) & (a1 >= -1e-12) & (a0 + a1 <= 1 + 1e-12)
    err2 = float(np.max(np.abs(b2.values[simplex] - (a0 + a1)[simplex] * LN2)))
    gate.check("simplex biconjugate is (a0+a1)ln2", err2 <= 2 * h2, f"err={err2:.2e}")
    gate.finish(t0)


def test_criterion_3_heavy_tail_rate_and_schedules():
    t0 = time.perf_counter()
    gate = _Gate("criterion-3 heavy-tail rate and schedule robustness", 5.0)
    m = make_model("mills-tail")

    rp = estimate_local_rate_naive(m, 1.0, eps_power(), (2500.0, 5000.0, 10000.0))
    gate.check(
        "rate(1) in 0.5 +/- 0.05 at T=1e4",
        abs(rp.D_hat.value - 0.5) <= 0.05,
        f"D_hat={rp.D_hat.value:.4f}",
    )

    ladder = tuple(1e6 / 2**k for k in range(4, -1, -1))

    def runner(schedule):
        return estimate_local_rate_naive(m, 1.0, schedule, ladder)

    rep = schedule_robustness(runner, eps_power(), multipliers=(0.5, 1.0, 2.0, 4.0), tol=0.05)
    gate.check(
        "multiplier spread <= 0.05",
        rep.passed and rep.spread <= 0.05,
        f"spread={rep.spread:.4f} values={[round(v, 4) for v in rep.values]}",
    )

    try:
        ScheduleSpec("power", "to-zero", exponent=1.0)
        structurally_rejected = False
    except ValueError:
        structurally_rejected = True
    fast = schedule_robustness(runner, lambda T: 1.0 / T)
    gate.check(
        "illegal 1/T schedule fails robustness",
        structurally_rejected and not fast.legal and not fast.passed,
        f"flags={fast.flags}",
    )
    gate.finish(t0)


def test_criterion_4_heavy_tail_moment_curve_and_tails():
    t0 = time.perf_counter()
    gate = _Gate("criterion-4 heavy-tail moment curve and tails", 10.0)
    m = make_model("mills-tail")
    ladder = (2500.0, 5000.0, 10000.0)

    mu = grid_1d(-2.0, 2.0, 81).nodes()
    curve = estimate_wsff_curve(m, mu, ladder, ball_power(), seed=7)
    err = float(np.max(np.abs(curve.values() - 0.5 * mu[:, 0] ** 2)))
    gate.check("moment curve within 0.05 of mu^2/2 on [-2,2]", err <= 0.05, f"err={err:.2e}")

    probe = exponential_tightness_probe(m, [2.0], ladder)
    gate.check(
        "log tail at v=2 within 0.1 of -2",
        abs(probe.values[0][-1] + 2.0) <= 0.1,
        f"value={probe.values[0][-1]:.4f}",
    )

    diag = tail_mass_diagnostic(m, 1.0, (1.0, 2.0, 4.0, 8.0), 100.0)
    vals = [e.value for e in diag]
    gate.check(
        "far-region contribution does not decay",
        all(v == POS_INF for v in vals),
        f"values={vals}",
    )
    gate.finish(t0)


def test_criterion_5_two_atom_suite():
    t0 = time.perf_counter()
    gate = _Gate("criterion-5 two-atom suite", 5.0)
    ladder = (50.0, 100.0, 200.0)

    v = make_model("two-atom-vanishing")
    rp0 = estimate_local_rate_naive(v, 0.0, eps_constant(0.3), ladder)
    rp1 = estimate_local_rate_naive(v, 1.0, eps_constant(0.3), ladder)
    gate.check("vanishing: rate(0) = 0", abs(rp0.D_hat.value) <= 1e-9, f"{rp0.D_hat.value:.2e}")
    gate.check(
        "vanishing: rate(1) = ln2 exactly",
        abs(rp1.D_hat.value - LN2) <= 1e-12,
        f"{rp1.D_hat.value!r}",
    )

    mu = grid_1d(-1.0, 2.0, 301).nodes()
    curve_v = estimate_wsff_curve(v, mu, ladder, ball_power(), seed=5)
    rep = check_essential_smoothness(curve_to_grid(curve_v))
    gate.check(
        "vanishing: kink detected at ln2",
        rep.verdict == "kink-detected" and abs(rep.gap_location[0] - LN2) <= 0.03,
        f"verdict={rep.verdict} at={rep.gap_location}",
    )
    win = grid_1d(-0.5, 1.5, 2001)
    conv_v = verify_converse(curve_v, exact_rate_grid("two-atom-vanishing", win), win)
    gate.check(
        "vanishing: converse precondition fails",
        (not conv_v.passed) and conv_v.note.startswith("precondition-failed"),
        conv_v.note,
    )

    e = make_model("two-atom-escaping")
    curve_e = estimate_wsff_curve(e, mu, ladder, ball_power(), seed=5)
    err = float(np.max(np.abs(curve_e.values() - (mu[:, 0] - LN2))))
    gate.check("escaping: curve within 0.02 of mu - ln2", err <= 0.02, f"err={err:.2e}")

    win_e = grid_1d(0.5, 1.5, 1001)
    conv_e = verify_converse(curve_e, exact_rate_grid("two-atom-escaping", win_e), win_e, tol=0.02)
    L = conjugate(curve_to_grid(curve_e), win_e)
    i1 = int(np.argmin(np.abs(win_e.axis(0) - 1.0)))
    concentrated = (
        abs(L.values[i1] - LN2) <= 0.02
        and L.values[i1 - 250] >= LN2 + 0.2
        and L.values[i1 + 250] >= LN2 + 0.2
    )
    gate.check(
        "escaping: converse holds, conjugate concentrated at 1 with value ln2",
        conv_e.passed and concentrated,
        f"sup={conv_e.sup_distance:.2e} L(1)={L.values[i1]:.4f}",
    )

    probe = exponential_tightness_probe(e, [2.0], ladder)
    gate.check(
        "escaping: mass escapes (log tail ~ 0)",
        probe.verdicts[0] == "stagnant-near-zero" and abs(probe.values[0][-1]) <= 1e-6,
        f"value={probe.values[0][-1]:.2e}",
    )
    gate.finish(t0)


def test_criterion_6_occupation_suite():
    t0 = time.perf_counter()
    gate = _Gate("criterion-6 occupation-frequency suite", 30.0)
    m = make_model("markov-occupation")
    ladder = (100.0, 300.0, 500.0)

    from ldplab.wsff import estimate_trunc_log_mgf

    est = estimate_trunc_log_mgf(m, (1.0, 0.0), 500.0, 2.0)
    gate.check(
        "moment value at (1,0) within 0.01 of 1 - ln2",
        abs(est.value - (1.0 - LN2)) <= 0.01,
        f"value={est.value:.5f}",
    )

    window = grid_2d(-1.0, 1.5, 51)
    curve = estimate_wsff_curve(m, window.nodes(), ladder, ball_power(), seed=3)
    target = np.array([max(0.0, max(a, b) - LN2) for a, b in window.nodes()])
    err = float(np.max(np.abs(curve.values() - target)))
    gate.check("moment surface within 0.02 on [-1,1.5]^2", err <= 0.02, f"err={err:.4f}")

    Dwin = grid_2d(-0.25, 1.25, 121)
    D = exact_rate_grid("markov-occupation", Dwin)
    fwd = verify_forward(D, curve, window, tol=0.02)
    gate.check("forward duality passes", fwd.passed, f"sup={fwd.sup_distance:.4f}")

    mino = minorant_check(D, grid_2d(-1.5, 2.5, 161))
    b2 = biconjugate(D, grid_2d(-1.5, 2.5, 161))
    a0, a1 = np.meshgrid(Dwin.axis(0), Dwin.axis(1), indexing="ij")
    simplex = (a0 >= -1e-12) & (a1 >= -1e-12) & (a0 + a1 <= 1 + 1e-12)
    err_s = float(np.max(np.abs(b2.values[simplex] - (a0 + a1)[simplex] * LN2)))
    gate.check(
        "minorant reproduces the simplex formula",
        mino.passed and err_s <= 2 * max(Dwin.spacing),
        f"err={err_s:.4f}",
    )

    conv = verify_converse(curve, D, Dwin, tol=0.02)
    gate.check(
        "converse does not claim equality",
        not (conv.passed and conv.sup_distance <= 1e-9),
        conv.note,
    )
    gate.finish(t0)


def test_criterion_7_tilted_importance_sampling():
    t0 = time.perf_counter()
    gate = _Gate("criterion-7 tilted importance sampling", 60.0)
    m = make_model("iid-normal")
    mu_grid = grid_1d(-3.0, 3.0, 601).nodes()
    curve = estimate_wsff_curve(m, mu_grid, (50.0,), ball_power(), seed=11)

    rp = estimate_local_rate_tilted(
        m, 1.0, curve, eps_constant(0.1), (50.0,), ball_power(), N=100_000, seed=11
    )
    gate.check(
        "tilted rate(1) in 0.5 +/- 0.05 at T=50",
        abs(rp.D_hat.value - 0.5) <= 0.05,
        f"D_hat={rp.D_hat.value:.4f}",
    )
    gate.check(
        "effective sample size >= 1e3",
        rp.D_hat.n_effective >= 1e3,
        f"n_eff={rp.D_hat.n_effective:.0f}",
    )

    naive_model = dataclasses.replace(m, exact_log_local_prob=None)
    rp_naive = estimate_local_rate_naive(
        naive_model, 1.0, eps_constant(0.1), (50.0,), N=100_000, seed=11
    )
    gate.check(
        "naive MC records zero hits at the same budget",
        rp_naive.D_hat.value == POS_INF and "undersampled" in rp_naive.flags,
        f"flags={rp_naive.flags}",
    )
    gate.finish(t0)


def test_criterion_8_property_suites():
    t0 = time.perf_counter()
    gate = _Gate("criterion-8 property suites", 120.0)
    rng = np.random.default_rng(2024)

    # exact structural properties over 200 random piecewise-linear inputs
    dual = grid_1d(-4.0, 4.0, 801)
    convex_ok = True
    monotone_ok = True
    involution_ok = True
    for _ in range(200):
        f = _random_pwl(rng, convex=bool(rng.integers(2)))
        g = conjugate(f, dual)
        gaps = g.values[:-2] + g.values[2:] - 2.0 * g.values[1:-1]
        convex_ok &= bool((gaps >= -1e-10 * np.maximum(1.0, np.abs(g.values[1:-1]))).all())
        raised = GridFunction(f.spec, f.values + abs(float(rng.normal(0.0, 1.0))))
        monotone_ok &= bool((conjugate(raised, dual).values <= g.values + 1e-12).all())
    for _ in range(60):
        f = _random_pwl(rng, convex=True)
        b = biconjugate(f, dual)
        h = f.spec.spacing[0]
        c = 3.0 + 2.0 * (dual.spacing[0] / h)
        mask = f.finite_mask
        involution_ok &= bool(
            np.max(np.abs(b.values[mask] - f.values[mask])) <= c * h + 1e-9
        )
    gate.check("conjugate convexity (exact) over 200 random inputs", convex_ok)
    gate.check("conjugate monotonicity (exact) over 200 random inputs", monotone_ok)
    gate.check("involution on convex inputs within C*h", involution_ok)

    # tilted-linear consistency across the zoo on a 21-point tilt grid
    from ldplab.wsff import estimate_trunc_log_mgf

    chernoff_ok = True
    worst = -np.inf
    cases = [
        ("mills-tail", 1.0),
        ("two-atom-vanishing", 1.0),
        ("two-atom-escaping", 1.0),
        ("markov-occupation", (0.5, 0.0)),
        ("iid-normal", 0.8),
        ("iid-bernoulli", 0.7),
    ]
    eps_sched = eps_power()
    for name, alpha in cases:
        model = make_model(name)
        a = np.atleast_1d(np.asarray(alpha, dtype=float))
        for T in (50.0, 100.0, 200.0):
            eps = eps_sched(T)
            M = ball_power()(T)
            rp = estimate_local_rate_naive(model, alpha, eps_sched, (T,))
            for tilt in np.linspace(-1.0, 1.0, 21):
                mu = tilt * np.ones(model.dimension) / math.sqrt(model.dimension)
                A_T = estimate_trunc_log_mgf(model, mu, T, M).value
                slack = rp.D_hat.value - (
                    float(mu @ a) - A_T - float(np.linalg.norm(mu)) * eps
                )
                worst = max(worst, -slack)
                chernoff_ok &= slack >= -1e-9
    gate.check(
        "tilted-linear lower bound across all models (21-point grid)",
        chernoff_ok,
        f"worst violation={worst:.2e}",
    )

    # determinism under jobs in {1, 4, 16}
    import io

    mc = dataclasses.replace(make_model("iid-normal"), exact_trunc_log_mgf=None)
    mu = grid_1d(-1.0, 1.0, 5).nodes()
    blobs = []
    for jobs in (1, 4, 16):
        c = estimate_wsff_curve(
            mc, mu, (10.0, 20.0, 40.0), ball_power(), N=3000, seed=99, jobs=jobs
        )
        buf = io.StringIO()
        _curve_to_text(c, buf)
        blobs.append(buf.getvalue())
    gate.check(
        "bit-identical results under jobs in {1,4,16}",
        blobs[0] == blobs[1] == blobs[2],
    )
    gate.finish(t0)


def _random_pwl(rng, convex, n=81):
    spec = grid_1d(-2.0, 2.0, n)
    lo, hi = sorted(rng.choice(np.arange(5, n - 5), size=2, replace=False))
    if hi - lo < 4:
        hi = lo + 4
    vals = np.full(n, INF)
    k = hi - lo
    slopes = rng.uniform(-3.0, 3.0, size=k)
    if convex:
        slopes = np.sort(slopes)
    vals[lo : hi + 1] = rng.uniform(-1, 1) + np.concatenate(
        [[0.0], np.cumsum(slopes * spec.spacing[0])]
    )
    return GridFunction(spec, vals)


def _curve_to_text(curve, buf):
    for k in range(curve.arguments.shape[0]):
        e = curve.estimates[k]
        buf.write(
            f"{curve.arguments[k].tolist()} {e.value!r} {e.ci_half_width!r} "
            f"{e.n_effective!r}\n"
        )
