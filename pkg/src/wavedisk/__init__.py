"""Global phase-plane analysis of planar traveling-wave systems.

The package follows one pipeline: exact-rational vector fields
(``polyfield``), compactification onto the Poincare disk
(``compactify``), equilibrium location and classification
(``equilibria``), center manifolds and blow-ups at degenerate points
(``degenerate``), event-driven numerical flow (``flow``), and wave
detection with two independent minimal-speed computations (``waves``).
The ``wavedisk`` command line exposes reproducible analyses on top.
"""

from .polyfield import (
    BivariatePolynomial,
    PlanarSystem,
    PoleError,
    RationalFunction,
    ReactionTerm,
    as_fraction,
    desingularize,
    eval_field,
    is_odd_symmetric,
    jacobian,
    make_reaction,
    make_tw_system,
    parse_reaction,
)
from .compactify import (
    ChartDomainError,
    ChartId,
    ChartSystem,
    DiskPoint,
    boundary_chart_coords,
    chart_coords,
    chart_of_disk,
    chart_system,
    disk_embed,
    disk_from_chart,
    plane_from_chart,
    transition,
)
from .equilibria import (
    Equilibrium,
    Regime,
    StabilityClass,
    boundary_equilibria,
    classify,
    finite_equilibria,
    regime_of,
)
from .degenerate import (
    BlowupChart,
    BlowupReport,
    CenterManifold,
    EigenstructureError,
    blowup_chart,
    center_manifold,
    nilpotent_sector_report,
)
from .flow import (
    EventRecord,
    EventSpec,
    OrbitFate,
    Trajectory,
    enter_ball,
    exit_radius,
    integrate,
    lambda1_zero,
    orbit_fate,
    phi_zero,
    psi_zero,
    track_disk,
)
from .waves import (
    BracketError,
    ProfileSamples,
    RegimeError,
    TailError,
    WaveReport,
    asymptotic_rate,
    classify_wave,
    count_zero_crossings,
    logistic_reaction,
    minimal_speed_shooting,
    minimal_speed_shooting_kpp,
    minimal_speed_spectral,
    reconstruct_profile,
    run_family,
    saturating_reaction,
    seed_at_infinity,
    seed_near_origin,
    seed_sign_changing,
    wave_system,
)

__version__ = "0.1.0"
