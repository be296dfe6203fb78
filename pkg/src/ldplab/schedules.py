"""Parametric schedules for the slowly-vanishing / slowly-growing tuning knobs.

A schedule maps T to a ball radius cutoff eps_T (role ``to-zero``) or to a
truncation radius M_T (role ``to-infinity``).  Power schedules are restricted
to exponents strictly inside (0, 1): the decaying side must vanish slower
than 1/T for shrinking-ball estimates to remain meaningful, and the growing
side must stay o(T).  Robustness of any result under constant rescaling of
the schedule is part of its meaning, hence the multiplier set carried here.
"""

import math
from dataclasses import dataclass, field

DEFAULT_MULTIPLIERS = (0.5, 1.0, 2.0, 4.0)

TO_ZERO = "to-zero"
TO_INFINITY = "to-infinity"


@dataclass(frozen=True)
class ScheduleSpec:
    """One of: power T^p (0<p<1), logarithmic ln(1+T), or constant."""

    kind: str  # power | logarithmic | constant
    role: str  # to-zero | to-infinity
    scale: float = 1.0
    exponent: float = 1.0 / 3.0
    multipliers: tuple = field(default=DEFAULT_MULTIPLIERS)

    def __post_init__(self):
        if self.kind not in ("power", "logarithmic", "constant"):
            raise ValueError(f"unknown schedule kind {self.kind!r}")
        if self.role not in (TO_ZERO, TO_INFINITY):
            raise ValueError(f"unknown schedule role {self.role!r}")
        if not self.scale > 0:
            raise ValueError("schedule scale must be positive")
        if self.kind == "power" and not 0.0 < self.exponent < 1.0:
            raise ValueError(
                "power schedule exponent must lie strictly in (0, 1); "
                f"got {self.exponent} (T^-1-fast decay is outside the valid regime)"
            )
        if any(m <= 0 for m in self.multipliers):
            raise ValueError("robustness multipliers must be positive")

    def __call__(self, T):
        if self.kind == "constant":
            return self.scale
        if self.kind == "power":
            g = T ** self.exponent
        else:
            g = math.log1p(T)
        return self.scale / g if self.role == TO_ZERO else self.scale * g

    def scaled(self, multiplier):
        """Same schedule with the scale rescaled by a positive constant."""
        return ScheduleSpec(
            self.kind, self.role, self.scale * multiplier, self.exponent, self.multipliers
        )


def eps_power(exponent=1.0 / 3.0, scale=1.0, multipliers=DEFAULT_MULTIPLIERS):
    """Default shrinking-ball schedule eps_T = scale * T^-exponent."""
    return ScheduleSpec("power", TO_ZERO, scale, exponent, multipliers)


def ball_power(exponent=1.0 / 3.0, scale=1.0, multipliers=DEFAULT_MULTIPLIERS):
    """Default truncation-radius schedule M_T = scale * T^exponent."""
    return ScheduleSpec("power", TO_INFINITY, scale, exponent, multipliers)


def eps_constant(value):
    return ScheduleSpec("constant", TO_ZERO, value)


def ball_constant(value):
    return ScheduleSpec("constant", TO_INFINITY, value)


def decay_legality_probe(schedule, T_ladder, min_growth=1.25):
    """Empirical check that a to-zero schedule decays strictly slower than 1/T.

    Evaluates eps_T * T along the ladder; a valid schedule drives this
    product to infinity, so it must grow by at least ``min_growth`` per
    T-doubling on average.  Returns (ok, observed per-doubling growth).
    """
    ts = sorted(T_ladder)
    if len(ts) < 2:
        return True, math.inf
    p0 = schedule(ts[0]) * ts[0]
    p1 = schedule(ts[-1]) * ts[-1]
    doublings = math.log2(ts[-1] / ts[0])
    if doublings <= 0 or p0 <= 0:
        return True, math.inf
    growth = (p1 / p0) ** (1.0 / doublings)
    return growth >= min_growth, growth
