"""Cross-verification harness for the two duality directions.

Forward: the truncated-moment limit curve must coincide with the conjugate
of the local rate function.  Converse: when that curve is essentially
smooth, its conjugate must reproduce the rate function.  On non-convex rate
functions only the forward direction holds and the biconjugate is the
largest convex minorant; both facts are checked here, along with agreement
between truncated and plain moment limits where the latter exist.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .convex import (
    EmptyInteriorError,
    NonConvexError,
    biconjugate,
    check_essential_smoothness,
    conjugate,
)
from .logspace import POS_INF
from .rng import derive_seed
from .wsff import Curve, curve_to_grid, estimate_trunc_log_mgf, estimate_wsff_curve

DEFAULT_MARGIN_CELLS = 3  # discrete conjugates are slope-clipped near window edges


@dataclass
class DualityReport:
    direction: str  # forward | converse | minorant | ff-agreement
    sup_distance: float
    window: object  # GridSpec of the comparison window
    passed: bool
    witnesses: list = field(default_factory=list)  # (point, discrepancy), worst first
    note: str = ""


def _grid_and_ci(obj):
    """Normalize a GridFunction or Curve into (GridFunction, ci array)."""
    if isinstance(obj, Curve):
        gf = curve_to_grid(obj)
        ci = np.array([e.ci_half_width for e in obj.estimates])
        d = obj.arguments.shape[1]
        if d == 1:
            order = np.argsort(obj.arguments[:, 0])
            ci_grid = ci[order]
        else:
            ax0 = np.unique(obj.arguments[:, 0])
            ax1 = np.unique(obj.arguments[:, 1])
            ci_grid = np.empty(gf.spec.count)
            i0 = np.searchsorted(ax0, obj.arguments[:, 0])
            i1 = np.searchsorted(ax1, obj.arguments[:, 1])
            ci_grid[i0, i1] = ci
        return gf, np.asarray(ci_grid).reshape(gf.spec.count)
    return obj, np.zeros(obj.spec.count)


def _interp_line(src_x, src_v, src_ci, tgt_x):
    """1-D linear interpolation propagating +inf through touched cells."""
    vals = np.empty(len(tgt_x))
    cis = np.empty(len(tgt_x))
    for t, x in enumerate(tgt_x):
        if x <= src_x[0]:
            i = 0
        elif x >= src_x[-1]:
            i = len(src_x) - 2
        else:
            i = int(np.searchsorted(src_x, x) - 1)
        x0, x1 = src_x[i], src_x[i + 1]
        v0, v1 = src_v[i], src_v[i + 1]
        w = 0.0 if x1 == x0 else (x - x0) / (x1 - x0)
        if w < 1e-12 and math.isfinite(v0):
            vals[t], cis[t] = v0, src_ci[i]
        elif w > 1 - 1e-12 and math.isfinite(v1):
            vals[t], cis[t] = v1, src_ci[i + 1]
        elif math.isfinite(v0) and math.isfinite(v1):
            vals[t] = (1 - w) * v0 + w * v1
            cis[t] = max(src_ci[i], src_ci[i + 1])
        else:
            vals[t], cis[t] = POS_INF, 0.0
    return vals, cis


def _resample(gf, ci, window):
    """Values and cis of gf at the nodes of ``window`` (linear, inf-propagating)."""
    if window == gf.spec:
        return gf.values.copy(), ci.copy()
    if gf.spec.dimension == 1:
        return _interp_line(gf.spec.axis(0), gf.values, ci, window.axis(0))
    # 2-D: interpolate along axis 1 to target columns, then along axis 0
    ax0, ax1 = gf.spec.axis(0), gf.spec.axis(1)
    t0, t1 = window.axis(0), window.axis(1)
    mid_v = np.empty((len(ax0), len(t1)))
    mid_c = np.empty((len(ax0), len(t1)))
    for i in range(len(ax0)):
        mid_v[i], mid_c[i] = _interp_line(ax1, gf.values[i], ci[i], t1)
    out_v = np.empty((len(t0), len(t1)))
    out_c = np.empty((len(t0), len(t1)))
    for j in range(len(t1)):
        out_v[:, j], out_c[:, j] = _interp_line(ax0, mid_v[:, j], mid_c[:, j], t0)
    return out_v, out_c


def _central_mask(window, margin):
    mask = np.ones(window.count, dtype=bool)
    if margin <= 0:
        return mask
    if window.dimension == 1:
        mask[:margin] = False
        mask[-margin:] = False
    else:
        mask[:margin, :] = False
        mask[-margin:, :] = False
        mask[:, :margin] = False
        mask[:, -margin:] = False
    return mask


def _witnesses(window, disc, k=5):
    flat = disc.ravel()
    order = np.argsort(flat)[::-1][:k]
    nodes = window.nodes()
    out = []
    for ix in order:
        if flat[ix] <= 0:
            break
        out.append((tuple(np.atleast_1d(nodes[ix])), float(flat[ix])))
    return out


def verify_forward(D_source, A_curve, window, tol=0.02, margin_cells=DEFAULT_MARGIN_CELLS):
    """Check that the moment-limit curve equals the conjugate of the rate function.

    Both inputs land on ``window`` (the tilt-argument grid); points where
    exactly one side is finite count as infinite discrepancy.  Estimated
    curves are compared net of their confidence half-widths.
    """
    D_grid, _ = _grid_and_ci(D_source)
    L_D = conjugate(D_grid, window).values
    A_grid, A_ci = _grid_and_ci(A_curve)
    A_vals, A_cis = _resample(A_grid, A_ci, window)
    mask = _central_mask(window, margin_cells)
    disc = np.zeros(window.count)
    both = np.isfinite(L_D) & np.isfinite(A_vals)
    one = np.isfinite(L_D) ^ np.isfinite(A_vals)
    disc[both] = np.maximum(0.0, np.abs(L_D[both] - A_vals[both]) - A_cis[both])
    disc[one] = POS_INF
    disc[~mask] = 0.0
    if not mask.any():
        raise ValueError("empty comparison window after margin exclusion")
    sup = float(np.max(disc))
    return DualityReport(
        "forward", sup, window, bool(sup <= tol), _witnesses(window, disc)
    )


def verify_converse(
    A_curve,
    rate_source,
    window,
    tol=0.02,
    margin_cells=0,
    gap_tol=None,
    steepness_threshold=None,
):
    """Conjugate the moment-limit curve back and compare with the rate function.

    Valid only for essentially smooth curves: otherwise the report is emitted
    with ``precondition-failed`` (the comparison distance is still computed
    for information, since the conjugate is then merely the convex minorant).
    The comparison runs where the supplied rate is finite; a window-clipped
    discrete conjugate is finite everywhere, so infinite rate values carry no
    evidence either way.
    """
    A_grid, _ = _grid_and_ci(A_curve)
    note = ""
    try:
        report = check_essential_smoothness(A_grid, gap_tol, steepness_threshold)
        verdict = report.verdict
    except EmptyInteriorError:
        verdict = "empty-interior"
    except NonConvexError:
        verdict = "non-convex"  # noisy estimated curves land here
    if verdict != "essentially-smooth":
        note = f"precondition-failed: {verdict}"

    L_A = conjugate(A_grid, window).values
    R_grid, R_ci = _grid_and_ci(rate_source)
    R_vals, R_cis = _resample(R_grid, R_ci, window)
    mask = _central_mask(window, margin_cells) & np.isfinite(R_vals)
    if not mask.any():
        raise ValueError("rate source is nowhere finite on the comparison window")
    disc = np.zeros(window.count)
    disc[mask] = np.maximum(0.0, np.abs(L_A[mask] - R_vals[mask]) - R_cis[mask])
    sup = float(np.max(disc))
    passed = bool(sup <= tol) and not note
    return DualityReport("converse", sup, window, passed, _witnesses(window, disc), note)


def minorant_check(D, window, tol=None):
    """Verify the biconjugate is a convex node-wise minorant of D.

    ``window`` is the dual grid used for the intermediate conjugate.  The
    default slack scales with both grid resolutions and the relevant slope
    ranges.  The report note lists how many finite nodes the minorant
    actually touches (those on the convex envelope).
    """
    D_grid, _ = _grid_and_ci(D)
    B = biconjugate(D_grid, window).values
    vals = D_grid.values
    fin = np.isfinite(vals)
    if tol is None:
        # dual discretization shifts the conjugate's argmax by at most one cell
        x_max = max(
            abs(b) for k in range(D_grid.spec.dimension) for b in (D_grid.spec.lower[k], D_grid.spec.upper[k])
        )
        mu_max = max(
            abs(b) for k in range(window.dimension) for b in (window.lower[k], window.upper[k])
        )
        tol = 2.0 * max(window.spacing) * x_max + 2.0 * max(D_grid.spec.spacing) * mu_max
    viol = np.zeros_like(vals)
    viol[fin] = np.maximum(0.0, B[fin] - vals[fin])
    sup = float(viol.max())

    convex_ok = _midpoint_convex(B)
    contact = int(np.sum(np.abs(B[fin] - vals[fin]) <= tol))
    passed = bool(sup <= tol and convex_ok)
    note = f"contact-nodes={contact}" + ("" if convex_ok else "; biconjugate-not-convex")
    return DualityReport(
        "minorant", sup, D_grid.spec, passed, _witnesses(D_grid.spec, viol), note
    )


def _midpoint_convex(values, slack=1e-9):
    v = values
    if v.ndim == 1:
        gaps = v[:-2] + v[2:] - 2.0 * v[1:-1]
        return bool((gaps >= -slack * np.maximum(1.0, np.abs(v[1:-1]))).all())
    ok = True
    gaps0 = v[:-2, :] + v[2:, :] - 2.0 * v[1:-1, :]
    ok &= bool((gaps0 >= -slack * np.maximum(1.0, np.abs(v[1:-1, :]))).all())
    gaps1 = v[:, :-2] + v[:, 2:] - 2.0 * v[:, 1:-1]
    ok &= bool((gaps1 >= -slack * np.maximum(1.0, np.abs(v[:, 1:-1]))).all())
    return ok


def ff_wsff_agreement(
    model,
    window,
    T_ladder,
    M_schedule,
    tol=0.05,
    N=10_000,
    seed=0,
):
    """Compare ball-truncated and plain (1/T)-scaled log moment estimates.

    Models with heavy tails have no plain limit: any +inf on the window is
    reported via the ``untruncated-diverges`` note rather than raised, and
    the report fails (there is nothing to agree with).
    """
    mu_nodes = window.nodes()
    curve = estimate_wsff_curve(
        model, mu_nodes, T_ladder, M_schedule, N=N, seed=seed
    )
    T_last = sorted(T_ladder)[-1]
    trunc = curve.values().reshape(window.count)
    cis = np.array([e.ci_half_width for e in curve.estimates]).reshape(window.count)
    untrunc = np.empty(window.count)
    flat = untrunc.ravel()
    for k, mu in enumerate(mu_nodes):
        if model.exact_untrunc_log_mgf is not None:
            flat[k] = model.exact_untrunc_log_mgf(mu, T_last) / T_last
        else:
            flat[k] = estimate_trunc_log_mgf(
                model, mu, T_last, POS_INF, N, derive_seed(seed, 7, k)
            ).value
    diverged = ~np.isfinite(untrunc)
    note = ""
    if diverged.any():
        note = f"untruncated-diverges at {int(diverged.sum())} of {diverged.size} tilts"
    disc = np.zeros(window.count)
    both = np.isfinite(untrunc) & np.isfinite(trunc)
    disc[both] = np.maximum(0.0, np.abs(trunc[both] - untrunc[both]) - cis[both])
    sup = float(disc.max()) if both.any() else POS_INF
    passed = bool(not diverged.any() and sup <= tol)
    return DualityReport(
        "ff-agreement", sup, window, passed, _witnesses(window, disc), note
    )


def write_duality_json(reports, path):
    """Serialize one report or a list of them with the contract field names."""
    if isinstance(reports, DualityReport):
        reports = [reports]
    payload = []
    for rep in reports:
        payload.append(
            {
                "direction": rep.direction,
                "sup_distance": "inf" if math.isinf(rep.sup_distance) else rep.sup_distance,
                "pass": rep.passed,
                "window": {
                    "lower": list(rep.window.lower),
                    "upper": list(rep.window.upper),
                    "count": list(rep.window.count),
                },
                "witnesses": [
                    {"point": list(pt), "discrepancy": ("inf" if math.isinf(d) else d)}
                    for pt, d in rep.witnesses
                ],
                "note": rep.note,
            }
        )
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")
