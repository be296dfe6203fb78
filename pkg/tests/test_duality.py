"""Duality harness: forward/converse checks, minorant, moment agreement."""

import math

import numpy as np
import pytest

from ldplab.cli import exact_rate_grid
from ldplab.duality import (
    ff_wsff_agreement,
    minorant_check,
    verify_converse,
    verify_forward,
    write_duality_json,
)
from ldplab.families import make_model
from ldplab.grids import GridFunction, grid_1d, grid_2d
from ldplab.schedules import ball_power
from ldplab.wsff import curve_to_grid, estimate_wsff_curve

LN2 = math.log(2.0)


def vanishing_curve(T_ladder=(50.0, 100.0, 200.0)):
    m = make_model("two-atom-vanishing")
    mu = grid_1d(-1.0, 2.0, 301).nodes()
    return estimate_wsff_curve(m, mu, T_ladder, ball_power(), seed=1)


def escaping_curve(T_ladder=(50.0, 100.0, 200.0)):
    m = make_model("two-atom-escaping")
    mu = grid_1d(-1.0, 2.0, 301).nodes()
    return estimate_wsff_curve(m, mu, T_ladder, ball_power(), seed=1)


def markov_curve(window, T_ladder=(100.0, 300.0, 500.0)):
    m = make_model("markov-occupation")
    return estimate_wsff_curve(m, window.nodes(), T_ladder, ball_power(), seed=1)


# ---------------------------------------------------------------------------
# forward direction
# ---------------------------------------------------------------------------

def test_forward_two_atom_vanishing():
    D = exact_rate_grid("two-atom-vanishing", grid_1d(-0.5, 1.5, 2001))
    rep = verify_forward(D, vanishing_curve(), grid_1d(-1.0, 2.0, 301), tol=0.02)
    assert rep.passed
    assert rep.direction == "forward"


def test_forward_quadratic_pair():
    spec = grid_1d(-4.0, 4.0, 801)
    D = GridFunction(spec, 0.5 * spec.axis(0) ** 2)
    window = grid_1d(-2.0, 2.0, 401)
    A = GridFunction(window, 0.5 * window.axis(0) ** 2)
    rep = verify_forward(D, A, window, tol=2 * spec.spacing[0])
    assert rep.passed


def test_forward_markov_surface():
    window = grid_2d(-1.0, 1.5, 51)
    D = exact_rate_grid("markov-occupation", grid_2d(-0.25, 1.25, 121))
    rep = verify_forward(D, markov_curve(window), window, tol=0.02)
    assert rep.passed


def test_forward_detects_mismatch():
    spec = grid_1d(-4.0, 4.0, 801)
    D = GridFunction(spec, 0.5 * spec.axis(0) ** 2)
    window = grid_1d(-2.0, 2.0, 401)
    wrong = GridFunction(window, 0.5 * window.axis(0) ** 2 + 0.3)
    rep = verify_forward(D, wrong, window, tol=0.02)
    assert not rep.passed
    assert rep.sup_distance >= 0.29
    assert rep.witnesses


# ---------------------------------------------------------------------------
# converse direction
# ---------------------------------------------------------------------------

def test_converse_escaping_passes():
    win = grid_1d(0.5, 1.5, 1001)
    D = exact_rate_grid("two-atom-escaping", win)
    rep = verify_converse(escaping_curve(), D, win, tol=0.02)
    assert rep.passed and rep.note == ""
    # conjugate of the curve concentrates at the single finite rate point
    g = curve_to_grid(escaping_curve())
    from ldplab.convex import conjugate

    L = conjugate(g, win)
    i1 = int(np.argmin(np.abs(win.axis(0) - 1.0)))
    assert abs(L.values[i1] - LN2) <= 0.02
    assert L.values[i1 - 250] >= LN2 + 0.2 and L.values[i1 + 250] >= LN2 + 0.2


def test_converse_vanishing_precondition_fails():
    win = grid_1d(-0.5, 1.5, 2001)
    D = exact_rate_grid("two-atom-vanishing", win)
    rep = verify_converse(vanishing_curve(), D, win, tol=0.02)
    assert not rep.passed
    assert rep.note.startswith("precondition-failed")
    # informational: the conjugate is the convex minorant alpha*ln2, not D;
    # at the isolated rate points it happens to coincide
    assert rep.sup_distance <= 0.02


def test_converse_mills():
    m = make_model("mills-tail")
    mu = grid_1d(-2.0, 2.0, 161).nodes()
    curve = estimate_wsff_curve(m, mu, (2500.0, 5000.0, 10000.0), ball_power(), seed=1)
    win = grid_1d(-1.5, 1.5, 601)
    D = exact_rate_grid("mills-tail", win)
    rep = verify_converse(curve, D, win, tol=0.05)
    assert rep.passed


def test_converse_markov_not_claimed():
    window = grid_2d(-1.0, 1.5, 51)
    Dwin = grid_2d(-0.25, 1.25, 121)
    D = exact_rate_grid("markov-occupation", Dwin)
    rep = verify_converse(markov_curve(window), D, Dwin, tol=0.02)
    assert not (rep.passed and rep.sup_distance <= 1e-9)
    assert rep.note.startswith("precondition-failed")


# ---------------------------------------------------------------------------
# minorant
# ---------------------------------------------------------------------------

def test_minorant_markov_simplex():
    D = exact_rate_grid("markov-occupation", grid_2d(-0.25, 1.25, 121))
    rep = minorant_check(D, grid_2d(-1.5, 2.5, 161))
    assert rep.passed
    # the biconjugate follows (a0 + a1) ln 2 on the simplex, strictly below
    # the infinite off-axis values of the rate function
    from ldplab.convex import biconjugate

    B = biconjugate(D, grid_2d(-1.5, 2.5, 161))
    a0, a1 = np.meshgrid(D.spec.axis(0), D.spec.axis(1), indexing="ij")
    simplex = (a0 >= 0) & (a1 >= 0) & (a0 + a1 <= 1)
    h = max(D.spec.spacing)
    assert np.max(np.abs(B.values[simplex] - (a0 + a1)[simplex] * LN2)) <= 2 * h
    off = (a0 > 0.05) & (a1 > 0.05) & (a0 + a1 <= 1)
    assert np.all(np.isinf(D.values[off])) and np.all(np.isfinite(B.values[off]))


def test_minorant_convex_input_is_tight():
    spec = grid_1d(-3.0, 3.0, 601)
    D = GridFunction(spec, 0.5 * spec.axis(0) ** 2)
    rep = minorant_check(D, grid_1d(-4.0, 4.0, 801))
    assert rep.passed
    assert rep.sup_distance <= 2 * spec.spacing[0]


def test_minorant_two_atom_contact_points():
    win = grid_1d(-1.0, 3.0, 4001)
    D = exact_rate_grid("two-atom-vanishing", win)
    rep = minorant_check(D, grid_1d(-1.0, 3.0, 4001))
    assert rep.passed
    from ldplab.convex import biconjugate

    B = biconjugate(D, grid_1d(-1.0, 3.0, 4001))
    ax = win.axis(0)
    i0 = int(np.argmin(np.abs(ax)))
    i1 = int(np.argmin(np.abs(ax - 1.0)))
    assert abs(B.values[i0] - 0.0) <= 1e-9
    assert abs(B.values[i1] - LN2) <= 1e-9
    imid = int(np.argmin(np.abs(ax - 0.5)))
    assert B.values[imid] == pytest.approx(0.5 * LN2, abs=2 * win.spacing[0])


# ---------------------------------------------------------------------------
# moment agreement
# ---------------------------------------------------------------------------

def test_agreement_iid_normal():
    m = make_model("iid-normal")
    rep = ff_wsff_agreement(
        m, grid_1d(-2.0, 2.0, 41), (100.0, 200.0, 400.0), ball_power(), tol=0.05
    )
    assert rep.passed
    assert rep.sup_distance <= 0.05


def test_agreement_markov_exact_zero():
    m = make_model("markov-occupation")
    rep = ff_wsff_agreement(
        m, grid_2d(-1.0, 1.5, 11), (50.0, 100.0), ball_power(), tol=0.02
    )
    assert rep.passed
    assert rep.sup_distance == 0.0  # truncation vacuous once the ball covers [0,1]^2


def test_agreement_mills_divergence_reported():
    m = make_model("mills-tail")
    rep = ff_wsff_agreement(
        m, grid_1d(-1.0, 1.0, 21), (100.0, 200.0), ball_power(), tol=0.05
    )
    assert not rep.passed
    assert "untruncated-diverges" in rep.note


# ---------------------------------------------------------------------------
# composition and determinism
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("name", ["mills-tail", "two-atom-escaping", "iid-normal"])
def test_forward_converse_composition(name):
    """Convex rate + smooth moment curve: both directions hold together.

    Window hygiene: the rate-function grid must span the slope range of the
    tilt window (and conversely), otherwise discrete conjugates are clipped.
    """
    m = make_model(name)
    mu_win = grid_1d(-2.0, 2.0, 161)
    ladder = (2500.0, 5000.0, 10000.0) if name == "mills-tail" else (50.0, 100.0, 200.0)
    curve = estimate_wsff_curve(m, mu_win.nodes(), ladder, ball_power(), seed=1)
    D_wide = exact_rate_grid(name, grid_1d(-3.0, 3.0, 1201))
    fwd = verify_forward(D_wide, curve, mu_win, tol=0.05)
    rate_win = grid_1d(-1.5, 1.5, 601)
    D_inner = exact_rate_grid(name, rate_win)
    conv = verify_converse(curve, D_inner, rate_win, tol=0.05)
    assert fwd.passed and conv.passed
    # double conjugation reproduces the rate function where finite
    from ldplab.convex import biconjugate

    B = biconjugate(D_inner, mu_win)
    fin = D_inner.finite_mask
    assert np.max(np.abs(B.values[fin] - D_inner.values[fin])) <= 0.05


def test_report_determinism_and_json(tmp_path):
    D = exact_rate_grid("two-atom-vanishing", grid_1d(-0.5, 1.5, 2001))
    win = grid_1d(-1.0, 2.0, 301)
    r1 = verify_forward(D, vanishing_curve(), win, tol=0.02)
    r2 = verify_forward(D, vanishing_curve(), win, tol=0.02)
    assert r1 == r2
    path = tmp_path / "rep.json"
    write_duality_json([r1], path)
    import json

    payload = json.loads(path.read_text())
    assert payload[0].keys() == {
        "direction",
        "sup_distance",
        "pass",
        "window",
        "witnesses",
        "note",
    }
