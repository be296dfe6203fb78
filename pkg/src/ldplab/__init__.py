"""ldplab: a numerical laboratory for local large deviation rates.

Estimates shrinking-ball decay exponents and ball-truncated exponential
moment limits for a zoo of built-in families, and cross-verifies the two
against each other through the discrete Legendre-Fenchel transform.
"""

from .convex import (
    EmptyInteriorError,
    NonConvexError,
    SmoothnessReport,
    SublevelReport,
    biconjugate,
    check_essential_smoothness,
    conjugate,
    effective_domain,
    numeric_gradient,
    sublevel_compact,
)
from .duality import (
    DualityReport,
    ff_wsff_agreement,
    minorant_check,
    verify_converse,
    verify_forward,
)
from .families import (
    CapabilityError,
    FamilyModel,
    MODELS,
    TiltStallError,
    iid_mean,
    make_model,
    markov_occupation,
    mills_tail,
    sample,
    two_atom,
)
from .grids import GridFunction, GridSpec, grid_1d, grid_2d, read_csv, write_csv
from .lldp import (
    RatePoint,
    TightnessTable,
    TiltError,
    TiltSolution,
    estimate_local_rate_naive,
    estimate_local_rate_tilted,
    exponential_tightness_probe,
    schedule_robustness,
    solve_tilt,
    tilted_concentration_check,
)
from .rng import derive_seed, make_rng
from .schedules import ScheduleSpec, ball_constant, ball_power, eps_constant, eps_power
from .wsff import (
    Curve,
    LogEstimate,
    curve_to_grid,
    double_limit_check,
    estimate_trunc_log_mgf,
    estimate_wsff_curve,
    tail_mass_diagnostic,
)

__version__ = "0.1.0"
