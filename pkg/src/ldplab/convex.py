"""Discrete convex analysis on uniform grids.

The central operation is the discrete Legendre-Fenchel transform

    g(mu) = max over finite nodes x of  <mu, x> - f(x),

computed by a linear-time lower-convex-hull scan in 1-D and by sequential
per-axis 1-D transforms in 2-D (the discrete sup factorizes exactly:
max over (x0,x1) = max over x0 of max over x1).  The transform output is the
exact maximum over the finite node set, so convexity and monotonicity
properties hold exactly, not up to tolerance.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .grids import INF, GridFunction, GridSpec


class NonConvexError(ValueError):
    """Input violates the convexity precondition of an operation."""


class EmptyInteriorError(ValueError):
    """Effective domain has no interior node."""


# ---------------------------------------------------------------------------
# conjugation
# ---------------------------------------------------------------------------

def _hull_scan(x, f):
    """Lower convex hull of the points (x_i, f_i), x ascending, f finite.

    Returns hull vertex arrays (hx, hf).  The maximizer of mu*x - f over the
    whole point set always sits on this hull, because the objective is linear
    with negative weight on f.
    """
    n = len(x)
    sx = np.empty(n)
    sf = np.empty(n)
    m = 0
    for i in range(n):
        xi, fi = x[i], f[i]
        # pop while the new point makes the previous vertex non-extreme
        while m >= 2 and (sf[m - 1] - sf[m - 2]) * (xi - sx[m - 1]) >= (
            fi - sf[m - 1]
        ) * (sx[m - 1] - sx[m - 2]):
            m -= 1
        sx[m] = xi
        sf[m] = fi
        m += 1
    return sx[:m], sf[:m]


def _conjugate_1d(x, f, mu):
    """max_i (mu * x_i - f_i) for every mu (ascending), in O(n + m).

    x: ascending finite-node coordinates, f: their values, mu: dual nodes.
    """
    hx, hf = _hull_scan(np.asarray(x, float), np.asarray(f, float))
    k = len(hx)
    out = np.empty(len(mu))
    j = 0
    for t, m in enumerate(mu):
        while j + 1 < k and (hf[j + 1] - hf[j]) <= m * (hx[j + 1] - hx[j]):
            j += 1
        out[t] = m * hx[j] - hf[j]
    return out


def conjugate(f, dual):
    """Discrete Legendre-Fenchel transform of f onto the grid ``dual``.

    Parameters
    ----------
    f : GridFunction
        Primal function; +inf nodes are skipped (outside the domain).
    dual : GridSpec
        Grid of transform arguments, same dimension as f.

    Returns
    -------
    GridFunction on ``dual``; finite everywhere (the sup runs over a
    nonempty finite set) and convex along every axis, exactly.
    """
    spec = f.spec
    if dual.dimension != spec.dimension:
        raise ValueError("dual grid dimension mismatch")
    if f.finite_count == 0:
        raise ValueError("cannot conjugate an everywhere-infinite function")
    if spec.dimension == 1:
        mask = f.finite_mask
        vals = _conjugate_1d(spec.axis(0)[mask], f.values[mask], dual.axis(0))
        return GridFunction(dual, vals)

    # 2-D: transform along axis 1 for every primal row, then along axis 0
    ax0, ax1 = spec.axis(0), spec.axis(1)
    mu1 = dual.axis(1)
    n0 = spec.count[0]
    inner = np.full((n0, len(mu1)), -INF)
    row_ok = np.zeros(n0, dtype=bool)
    for i0 in range(n0):
        row = f.values[i0]
        mask = np.isfinite(row)
        if not mask.any():
            continue
        row_ok[i0] = True
        inner[i0] = _conjugate_1d(ax1[mask], row[mask], mu1)
    mu0 = dual.axis(0)
    out = np.empty((len(mu0), len(mu1)))
    x0 = ax0[row_ok]
    for j1 in range(len(mu1)):
        # -inner is a function of x0 with +inf on all-infinite rows
        out[:, j1] = _conjugate_1d(x0, -inner[row_ok, j1], mu0)
    return GridFunction(dual, out)


def biconjugate(f, dual):
    """conjugate twice: the discrete largest convex minorant surrogate.

    The second transform reuses the primal grid of ``f``; the result is
    convex, everywhere-finite and node-wise <= f up to discretization slack.
    """
    return conjugate(conjugate(f, dual), f.spec)


# ---------------------------------------------------------------------------
# effective domain and regularity diagnostics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainBox:
    """Per-axis bounding interval of the finite nodes, plus interior flag."""

    lower: tuple
    upper: tuple
    interior_nonempty: bool
    touches_window: tuple  # per axis: (touches lower edge, touches upper edge)


def _interior_mask(values):
    """Nodes whose full axis-neighbourhood exists and is finite."""
    fin = np.isfinite(values)
    mask = np.zeros_like(fin)
    if values.ndim == 1:
        if len(values) >= 3:
            mask[1:-1] = fin[1:-1] & fin[:-2] & fin[2:]
        return mask
    if values.shape[0] >= 3 and values.shape[1] >= 3:
        mask[1:-1, 1:-1] = (
            fin[1:-1, 1:-1]
            & fin[:-2, 1:-1]
            & fin[2:, 1:-1]
            & fin[1:-1, :-2]
            & fin[1:-1, 2:]
        )
    return mask


def effective_domain(f):
    """Bounding box of {f < inf} with an interior-nonemptiness flag."""
    fin = f.finite_mask
    if not fin.any():
        raise ValueError("function is everywhere +inf")
    spec = f.spec
    lows, highs, touches = [], [], []
    idx = np.argwhere(fin)
    for k in range(spec.dimension):
        imin, imax = idx[:, k].min(), idx[:, k].max()
        ax = spec.axis(k)
        lows.append(float(ax[imin]))
        highs.append(float(ax[imax]))
        touches.append((imin == 0, imax == spec.count[k] - 1))
    return DomainBox(
        tuple(lows), tuple(highs), bool(_interior_mask(f.values).any()), tuple(touches)
    )


@dataclass(frozen=True)
class SmoothnessReport:
    """Outcome of the essential-smoothness diagnostic.

    max_subgradient_gap is the largest one-sided-slope mismatch that
    *persists under stride-2 coarsening*: pure curvature produces mismatches
    that halve when the stencil is doubled, while genuine subgradient jumps
    keep their size, so only the latter are counted (steep-but-smooth
    boundary layers would otherwise masquerade as kinks at any fixed
    resolution).

    boundary_steepness maps face labels like ``axis0-upper`` to the gradient
    magnitude of the last finite segment before that face; only faces where
    the domain ends strictly inside the grid window appear (a domain touching
    the window edge counts as unbounded in that direction).
    """

    interior_nonempty: bool
    max_subgradient_gap: float
    boundary_steepness: dict
    verdict: str  # essentially-smooth | kink-detected | not-steep | empty-interior
    gap_location: tuple = field(default=())


def _axis_lines(values, axis):
    """Iterate 1-D lines of a 1-D/2-D array along ``axis``."""
    if values.ndim == 1:
        yield (), values
        return
    if axis == 0:
        for j in range(values.shape[1]):
            yield (j,), values[:, j]
    else:
        for i in range(values.shape[0]):
            yield (i,), values[i, :]


def _check_convex_lines(values):
    for axis in range(values.ndim):
        for _, line in _axis_lines(values, axis):
            fin = np.isfinite(line)
            for i in range(1, len(line) - 1):
                if fin[i - 1] and fin[i] and fin[i + 1]:
                    if line[i - 1] + line[i + 1] - 2.0 * line[i] < -1e-9 * max(
                        1.0, abs(line[i])
                    ):
                        raise NonConvexError(
                            f"midpoint convexity violated along axis {axis} at index {i}"
                        )
            # convexity of f also requires the finite set per line to be contiguous
            if fin.any():
                lo, hi = np.argmax(fin), len(fin) - 1 - np.argmax(fin[::-1])
                if not fin[lo : hi + 1].all():
                    raise NonConvexError("finite set is not an interval along a line")


def check_essential_smoothness(f, gap_tol=None, steepness_threshold=None):
    """Diagnose the three essential-smoothness conditions on a convex grid function.

    Interior nonempty, no subgradient jumps beyond ``gap_tol`` at interior
    nodes, and slope blow-up (above ``steepness_threshold``) approaching any
    effective-domain boundary that lies strictly inside the grid window.

    Defaults scale with the resolution: gap_tol = 10 h, threshold = 1/h.
    """
    spec = f.spec
    h_max = max(spec.spacing)
    if gap_tol is None:
        gap_tol = 10.0 * h_max
    if steepness_threshold is None:
        steepness_threshold = 1.0 / h_max
    _check_convex_lines(f.values)

    interior = _interior_mask(f.values)
    if not interior.any():
        raise EmptyInteriorError("effective domain has empty interior")

    max_gap = 0.0
    gap_loc = ()
    for axis in range(spec.dimension):
        h = spec.spacing[axis]
        for fixed, line in _axis_lines(f.values, axis):
            gap, pos = _max_persistent_gap(line, h, gap_tol)
            if gap > max_gap:
                max_gap = gap
                if spec.dimension == 1:
                    gap_loc = (float(spec.axis(0)[pos]),)
                elif axis == 0:
                    gap_loc = (float(spec.axis(0)[pos]), float(spec.axis(1)[fixed[0]]))
                else:
                    gap_loc = (float(spec.axis(0)[fixed[0]]), float(spec.axis(1)[pos]))

    steep = {}
    for axis in range(spec.dimension):
        h = spec.spacing[axis]
        for side, label in ((0, "lower"), (1, "upper")):
            face = _face_steepness(f, axis, side)
            if face is not None:
                steep[f"axis{axis}-{label}"] = face / h

    if max_gap > gap_tol:
        verdict = "kink-detected"
    elif steep and min(steep.values()) <= steepness_threshold:
        verdict = "not-steep"
    else:
        verdict = "essentially-smooth"
    return SmoothnessReport(True, float(max_gap), steep, verdict, gap_loc)


_COARSE_RATIO = 0.56  # above: jump persists under coarsening; 0.5 = pure curvature


def _max_persistent_gap(line, h, gap_tol):
    """Largest coarsening-stable subgradient gap along one grid line.

    A gap at node i counts only when the stride-2 stencil fits inside the
    finite run and the fine gap exceeds _COARSE_RATIO times the coarse one;
    gaps that halve with the stencil are curvature and are skipped (nodes
    adjacent to a finite domain edge fall under the steepness criterion
    instead).
    """
    fin = np.isfinite(line)
    best, pos = 0.0, -1
    for i in range(2, len(line) - 2):
        if not fin[i - 2 : i + 3].all():
            continue
        g1 = (line[i + 1] - 2.0 * line[i] + line[i - 1]) / h
        if g1 <= max(gap_tol, best):
            continue
        g2 = (line[i + 2] - 2.0 * line[i] + line[i - 2]) / (2.0 * h)
        if g2 <= 0.0 or g1 / g2 > _COARSE_RATIO:
            best, pos = g1, i
    return best, pos


def _face_steepness(f, axis, side):
    """Min |last finite segment increment| toward a finite domain face.

    Returns None when the domain touches the window edge on that side along
    every line (treated as unbounded: no steepness requirement), or when no
    line has a finite pair on that side.
    """
    spec = f.spec
    best = None
    for _, line in _axis_lines(f.values, axis):
        fin = np.isfinite(line)
        if not fin.any():
            continue
        lo = int(np.argmax(fin))
        hi = int(len(fin) - 1 - np.argmax(fin[::-1]))
        if side == 1:
            if hi == len(line) - 1:  # reaches window edge: unbounded direction
                continue
            if hi - 1 < 0 or not fin[hi - 1]:
                continue
            slope = abs(line[hi] - line[hi - 1])
        else:
            if lo == 0:
                continue
            if lo + 1 >= len(line) or not fin[lo + 1]:
                continue
            slope = abs(line[lo + 1] - line[lo])
        best = slope if best is None else min(best, slope)
    return best


# ---------------------------------------------------------------------------
# compactness probe and gradients
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SublevelReport:
    """Finite-window compactness surrogate for a sublevel set {f <= v}.

    ``compact`` is True iff the set is nonempty and stays clear of the grid
    window boundary; the window is carried along because the verdict is only
    meaningful relative to it.
    """

    compact: bool
    nonempty: bool
    touches_boundary: bool
    level: float
    window: GridSpec

    def __bool__(self):
        return self.compact


def sublevel_compact(f, v):
    """Check that {f <= v} is nonempty and does not touch the window boundary."""
    if not v > 0:
        raise ValueError("level v must be positive")
    mask = f.values <= v
    nonempty = bool(mask.any())
    touches = False
    if nonempty:
        if f.spec.dimension == 1:
            touches = bool(mask[0] or mask[-1])
        else:
            touches = bool(
                mask[0, :].any() or mask[-1, :].any() or mask[:, 0].any() or mask[:, -1].any()
            )
    return SublevelReport(nonempty and not touches, nonempty, touches, float(v), f.spec)


def numeric_gradient(f, point):
    """Central finite-difference gradient at the node nearest ``point``.

    The node must be strictly inside the grid with finite axis neighbours;
    O(h^2) accurate on twice-differentiable inputs.
    """
    spec = f.spec
    idx = spec.nearest_index(point)
    pt = np.atleast_1d(np.asarray(point, dtype=float))
    for k in range(spec.dimension):
        if not (spec.lower[k] <= pt[k] <= spec.upper[k]):
            raise ValueError("point outside the grid window")
        if idx[k] == 0 or idx[k] == spec.count[k] - 1:
            raise ValueError("point too close to the grid window edge")
    if not math.isfinite(f.values[idx]):
        raise ValueError("point is outside the effective domain")
    grad = np.empty(spec.dimension)
    for k in range(spec.dimension):
        lo = list(idx)
        hi = list(idx)
        lo[k] -= 1
        hi[k] += 1
        a, b = f.values[tuple(lo)], f.values[tuple(hi)]
        if not (math.isfinite(a) and math.isfinite(b)):
            raise ValueError("point is adjacent to +inf nodes")
        grad[k] = (b - a) / (2.0 * spec.spacing[k])
    return grad
