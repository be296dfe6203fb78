"""Uniform rectangular grids and extended-real-valued grid functions.

A GridFunction stores samples of a function R^d -> (-inf, +inf] on a uniform
grid, d in {1, 2}.  ``+inf`` is a distinguished "not in the effective domain"
marker, never a large float; ``-inf`` is only ever *returned* by transforms
(as an empty-sup flag) and may not be stored.
"""

import math
from dataclasses import dataclass

import numpy as np

INF = float("inf")


@dataclass(frozen=True)
class GridSpec:
    """Axis-aligned uniform grid: per-axis lower/upper bounds and point counts."""

    lower: tuple
    upper: tuple
    count: tuple

    def __post_init__(self):
        lower = tuple(float(x) for x in np.atleast_1d(self.lower))
        upper = tuple(float(x) for x in np.atleast_1d(self.upper))
        count = tuple(int(n) for n in np.atleast_1d(self.count))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "count", count)
        if not (len(lower) == len(upper) == len(count)):
            raise ValueError("lower, upper and count must have equal length")
        if len(lower) not in (1, 2):
            raise ValueError("only dimensions 1 and 2 are supported")
        for lo, hi, n in zip(lower, upper, count):
            if not lo < hi:
                raise ValueError(f"need lower < upper per axis, got [{lo}, {hi}]")
            if n < 2:
                raise ValueError("need at least 2 points per axis")

    @property
    def dimension(self):
        return len(self.count)

    @property
    def spacing(self):
        return tuple(
            (hi - lo) / (n - 1) for lo, hi, n in zip(self.lower, self.upper, self.count)
        )

    def axis(self, k):
        """Node coordinates along axis k."""
        return np.linspace(self.lower[k], self.upper[k], self.count[k])

    def nodes(self):
        """All grid nodes as an (n_points, d) array in row-major order."""
        if self.dimension == 1:
            return self.axis(0)[:, None]
        x0, x1 = np.meshgrid(self.axis(0), self.axis(1), indexing="ij")
        return np.column_stack([x0.ravel(), x1.ravel()])

    def nearest_index(self, point):
        """Index tuple of the grid node closest to ``point``."""
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        if pt.size != self.dimension:
            raise ValueError("point dimension mismatch")
        idx = []
        for k, x in enumerate(pt):
            h = self.spacing[k]
            i = int(round((x - self.lower[k]) / h))
            idx.append(min(max(i, 0), self.count[k] - 1))
        return tuple(idx)


def grid_1d(lower, upper, count):
    return GridSpec((lower,), (upper,), (count,))


def grid_2d(lower, upper, count):
    """Square 2-D grid helper; scalars are broadcast to both axes."""
    lo = np.broadcast_to(np.atleast_1d(lower), (2,))
    hi = np.broadcast_to(np.atleast_1d(upper), (2,))
    n = np.broadcast_to(np.atleast_1d(count), (2,))
    return GridSpec(tuple(lo), tuple(hi), tuple(n))


class GridFunction:
    """Extended-real samples on a GridSpec.

    values has shape ``spec.count``; entries are finite floats or +inf.
    """

    def __init__(self, spec, values):
        values = np.asarray(values, dtype=float).reshape(spec.count)
        if np.any(np.isnan(values)):
            raise ValueError("NaN entries are not permitted in a GridFunction")
        if np.any(np.isneginf(values)):
            raise ValueError("-inf may not be stored in a GridFunction")
        if not np.any(np.isfinite(values)):
            raise ValueError("GridFunction must have at least one finite value")
        self.spec = spec
        self.values = values

    @property
    def finite_count(self):
        return int(np.isfinite(self.values).sum())

    @property
    def finite_mask(self):
        return np.isfinite(self.values)

    def __call__(self, point):
        return float(self.values[self.spec.nearest_index(point)])

    @classmethod
    def from_callable(cls, spec, fn):
        """Sample ``fn`` at every node; fn takes a scalar (1-D) or a pair (2-D)."""
        if spec.dimension == 1:
            vals = np.array([fn(x) for x in spec.axis(0)])
        else:
            vals = np.array(
                [[fn((x0, x1)) for x1 in spec.axis(1)] for x0 in spec.axis(0)]
            )
        return cls(spec, vals)


def write_csv(gf, path):
    """Serialize as CSV with header axis0[,axis1],value; +inf as token ``inf``."""
    spec = gf.spec
    with open(path, "w", encoding="utf-8") as fh:
        if spec.dimension == 1:
            fh.write("axis0,value\n")
            for x, v in zip(spec.axis(0), gf.values):
                fh.write(f"{float(x)!r},{_fmt(v)}\n")
        else:
            fh.write("axis0,axis1,value\n")
            ax0, ax1 = spec.axis(0), spec.axis(1)
            for i0, x0 in enumerate(ax0):
                for i1, x1 in enumerate(ax1):
                    fh.write(f"{float(x0)!r},{float(x1)!r},{_fmt(gf.values[i0, i1])}\n")


def _fmt(v):
    return "inf" if math.isinf(v) else repr(float(v))


def read_csv(path):
    """Inverse of write_csv; the grid is reconstructed from the coordinates."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    dim = len(header) - 1
    if dim not in (1, 2) or header[-1] != "value":
        raise ValueError(f"unrecognised GridFunction CSV header: {header}")
    vals = [float(r[-1]) for r in rows]
    if dim == 1:
        xs = np.array([float(r[0]) for r in rows])
        spec = grid_1d(xs.min(), xs.max(), len(xs))
        return GridFunction(spec, np.array(vals))
    x0 = np.array([float(r[0]) for r in rows])
    x1 = np.array([float(r[1]) for r in rows])
    ax0 = np.unique(x0)
    ax1 = np.unique(x1)
    spec = GridSpec((ax0.min(), ax1.min()), (ax0.max(), ax1.max()), (len(ax0), len(ax1)))
    grid = np.full(spec.count, INF)
    i0 = np.searchsorted(ax0, x0)
    i1 = np.searchsorted(ax1, x1)
    grid[i0, i1] = vals
    return GridFunction(spec, grid)
