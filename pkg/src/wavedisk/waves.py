"""Detection and classification of unbounded traveling waves.

A wave profile is an orbit of the planar system connecting the circle
at infinity to the rest state at the origin. Classification integrates
forward from seeds displaced off the boundary equilibria and maps the
recorded axis crossings and terminal behavior to a profile class. The
minimal speed is computed twice, by independent routes: from the
discriminant of the boundary polynomial (spectral route), and by
bisecting a backward-shooting oracle that knows nothing about boundary
roots (geometric route).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .compactify import ChartId, chart_system, plane_from_chart
from .equilibria import (
    Equilibrium,
    Regime,
    boundary_equilibria,
    regime_of,
)
from .flow import (
    OrbitFate,
    Trajectory,
    enter_ball,
    integrate,
    orbit_fate,
    phi_zero,
    psi_zero,
    track_disk,
)
from .polyfield import (
    PlanarSystem,
    ReactionTerm,
    as_fraction,
    desingularize,
    make_tw_system,
    parse_reaction,
)

__all__ = [
    "RegimeError",
    "BracketError",
    "TailError",
    "WaveReport",
    "ProfileSamples",
    "saturating_reaction",
    "logistic_reaction",
    "wave_system",
    "seed_at_infinity",
    "seed_near_origin",
    "seed_sign_changing",
    "classify_wave",
    "run_family",
    "minimal_speed_spectral",
    "minimal_speed_shooting",
    "minimal_speed_shooting_kpp",
    "reconstruct_profile",
    "asymptotic_rate",
    "count_zero_crossings",
    "FAMILIES",
]

FAMILIES = ("E1", "E2", "E3_center", "sign_changing")

ORBIT_CLASSES = (
    "positive_monotone_to_E0",
    "sign_changing_single_dip",
    "oscillatory_unbounded",
    "other",
)


class RegimeError(ValueError):
    """Requested object does not exist in this parameter regime."""


class BracketError(RuntimeError):
    """Bisection bracket does not straddle the threshold."""


class TailError(ValueError):
    """Profile has too few samples in the requested amplitude range."""


def saturating_reaction(s) -> ReactionTerm:
    """Cubic-over-quadratic saturating reaction u^3 / (1 + s u^2)."""
    s = as_fraction(s)
    if s <= 0:
        raise ValueError("saturation parameter must be positive")
    return parse_reaction("u^3 / (1 + s*u^2)", {"s": s})


def logistic_reaction(a=1, big_k=1) -> ReactionTerm:
    """Monostable logistic reaction a u (1 - u/K)."""
    return parse_reaction("a*u*(1 - u/K)", {"a": as_fraction(a), "K": as_fraction(big_k)})


def wave_system(s, c) -> PlanarSystem:
    """Desingularized polynomial wave system for the saturating reaction."""
    return desingularize(make_tw_system(saturating_reaction(s), c))


# ----------------------------------------------------------------------
# Seeds
# ----------------------------------------------------------------------

def _u1_roots(s, c) -> list[Equilibrium]:
    return boundary_equilibria(chart_system(wave_system(s, c), ChartId.U1))


def seed_at_infinity(s, c, which: str, eps: float = 1e-4) -> tuple[tuple[float, float], ChartId]:
    """Finite-plane seed displaced off a boundary equilibrium along lam1.

    The chart point (eps, M) maps to (phi, psi) = (1/eps, M/eps); the
    displacement lies in the unstable (E1, E2) or strong-unstable (E3)
    subspace of the equilibrium.
    """
    if which not in ("E1", "E2", "E3_center"):
        raise ValueError(f"unknown seed family {which!r}")
    if not (0 < eps <= 1e-2):
        raise ValueError("eps must lie in (0, 1e-2]")
    regime = regime_of(s, c)
    label = {"E1": "E1", "E2": "E2", "E3_center": "E3"}[which]
    needed = "supercritical" if which in ("E1", "E2") else "critical"
    if regime.tag != needed:
        raise RegimeError("equilibrium absent in this regime")
    eqs = {e.label: e for e in _u1_roots(s, c)}
    if label not in eqs:
        raise RegimeError("equilibrium absent in this regime")
    m = eqs[label].coords[1]
    return plane_from_chart(ChartId.U1, (eps, m)), ChartId.U1


def seed_near_origin(s, c, delta: float) -> tuple[float, float]:
    """Point on the leading-order center-manifold graph near the origin."""
    if not (0 < delta <= 0.1):
        raise ValueError("delta must lie in (0, 0.1]")
    c = float(c)
    if c <= 0 or float(s) <= 0:
        raise ValueError("s and c must be positive")
    return (delta, -delta**3 / c)


def seed_sign_changing(s, c, eps: float = 1e-4, drop: float = 1.0) -> tuple[tuple[float, float], ChartId]:
    """Seed for the sign-changing branch: displaced below the source
    equilibrium along the boundary so the orbit sweeps past the downward
    vertical direction before connecting to the origin."""
    regime = regime_of(s, c)
    if regime.tag == "subcritical":
        raise RegimeError("equilibrium absent in this regime")
    label = "E1" if regime.tag == "supercritical" else "E3"
    eqs = {e.label: e for e in _u1_roots(s, c)}
    m = eqs[label].coords[1]
    return plane_from_chart(ChartId.U1, (eps, m - drop)), ChartId.U1


# ----------------------------------------------------------------------
# Reports
# ----------------------------------------------------------------------

@dataclass
class ProfileSamples:
    xi: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    monotone_segments: list[int] = field(default_factory=list)

    def __post_init__(self):
        if len(self.xi) > 1 and not np.all(np.diff(self.xi) > 0):
            raise ValueError("xi samples must be strictly increasing")

    def csv_lines(self) -> list[str]:
        lines = ["xi,phi,psi"]
        for x, p, q in zip(self.xi, self.phi, self.psi):
            lines.append(f"{x:.17g},{p:.17g},{q:.17g}")
        return lines


@dataclass
class WaveReport:
    s: float
    c: float
    regime: Regime
    orbit_class: str
    seed_label: str | None
    phi_zero_crossings: int
    psi_zero_crossings: int
    asymptotic_rate: float | None
    fate: OrbitFate
    profile: ProfileSamples | None = None
    eps_robust: bool | None = None  # set when the seed-amplitude check ran

    def to_json(self) -> dict:
        return {
            "s": float(self.s),
            "c": float(self.c),
            "regime": {"tag": self.regime.tag, "discriminant": self.regime.discriminant},
            "orbit_class": self.orbit_class,
            "seed_label": self.seed_label,
            "phi_zero_crossings": self.phi_zero_crossings,
            "psi_zero_crossings": self.psi_zero_crossings,
            "asymptotic_rate": self.asymptotic_rate,
            "fate": self.fate.to_json(),
            "eps_robust": self.eps_robust,
        }


# ----------------------------------------------------------------------
# Classification
# ----------------------------------------------------------------------

_TRAP_RADIUS = 1e-2


def _slaved_to_manifold(point, c: float, radius: float) -> bool:
    """True when the point sits in the center-manifold funnel, where the
    remaining approach to the origin is monotone and crossing-free."""
    p, q = point
    envelope = 0.5 * abs(p) ** 3 / c + 1e-10
    return abs(q + p**3 / c) <= envelope and abs(p) <= radius


def classify_wave(s, c, seed, seed_label: str | None = None,
                  e0_radius: float = _TRAP_RADIUS, horizon: float = 1e12) -> WaveReport:
    """Integrate forward from a seed and classify the orbit.

    Events: phi and psi zero crossings plus entry into the origin trap
    ball. Inside the trap the orbit must lie in the center-manifold
    funnel (so the remaining descent to the rest state adds no further
    crossings); otherwise integration continues through the transverse
    collapse and re-checks. Classes: trap entry with (0, 0) crossings is
    a positive monotone connection, (1, 1) the single-dip sign-changing
    connection, three phi crossings before the horizon the oscillatory
    regime, anything else "other".
    """
    sfl, cfl = float(s), float(c)
    sys = wave_system(s, c)
    regime = regime_of(s, c)
    if isinstance(seed, tuple) and len(seed) == 2 and isinstance(seed[1], ChartId):
        start = seed[0]
    else:
        start = seed
    ball = enter_ball((0.0, 0.0), e0_radius)
    events = (phi_zero(), psi_zero(), ball)

    n_phi = n_psi = 0
    rate = None
    fate = OrbitFate("hit_horizon")
    remaining = horizon
    point = (float(start[0]), float(start[1]))
    for _round in range(50):
        traj = track_disk(sys, point, "forward", horizon=remaining,
                          events=events, stop_on=(ball,), max_phi_crossings=3)
        n_phi += traj.count("phi_zero_crossing")
        n_psi += traj.count("psi_zero_crossing")
        if rate is None:
            rate = _seed_side_rate(traj)
        if traj.stop_reason == "crossing_limit":
            fate = OrbitFate("hit_horizon")
            break
        if traj.stop_reason == "event:enter_ball":
            end = traj.frames[-1][2]
            if _slaved_to_manifold(end, cfl, e0_radius):
                fate = OrbitFate("reached_E0_ball")
                break
            # transverse collapse inside the ball: continue in short bursts
            sub = integrate(sys, end, "forward", horizon=8.0 / cfl,
                            events=(phi_zero(), psi_zero()))
            n_phi += sub.count("phi_zero_crossing")
            n_psi += sub.count("psi_zero_crossing")
            point = sub.frames[-1][2]
            remaining -= 8.0 / cfl
            if _slaved_to_manifold(point, cfl, e0_radius):
                fate = OrbitFate("reached_E0_ball")
                break
            continue
        fate = orbit_fate(traj, ((0.0, 0.0), e0_radius),
                          boundary_equilibria(chart_system(sys, ChartId.U1)))
        break

    if fate.tag == "reached_E0_ball" and n_phi == 0 and n_psi == 0:
        orbit_class = "positive_monotone_to_E0"
    elif fate.tag == "reached_E0_ball" and n_phi == 1 and n_psi == 1:
        orbit_class = "sign_changing_single_dip"
    elif n_phi >= 3:
        orbit_class = "oscillatory_unbounded"
    else:
        orbit_class = "other"
    return WaveReport(sfl, cfl, regime, orbit_class, seed_label,
                      n_phi, n_psi, rate, fate)


def _seed_side_rate(traj: Trajectory) -> float | None:
    """Slope psi/phi where the orbit is deepest into its starting chart."""
    best = None
    for _t, chart, p in traj.frames[: max(2, len(traj.frames) // 3)]:
        if chart in (ChartId.U1, ChartId.V1):
            if p[0] > 0 and (best is None or p[0] < best[0]):
                best = (p[0], p[1])
        elif chart in (ChartId.U2, ChartId.V2):
            if p[0] > 0 and p[1] != 0 and (best is None or p[0] < best[0]):
                best = (p[0], 1.0 / p[1])
    return best[1] if best else None


def run_family(s, c, which: str, eps: float = 1e-4, check_eps: bool = False) -> WaveReport:
    """Seed and classify one wave family at (s, c).

    With ``check_eps`` the classification is repeated at seed amplitudes
    {1e-3, 1e-4, 1e-5} and the report is flagged not robust when the
    orbit class depends on the amplitude.
    """
    def one(e):
        if which == "sign_changing":
            seed = seed_sign_changing(s, c, e)
            label = "E3" if regime_of(s, c).tag == "critical" else "E1"
        else:
            seed = seed_at_infinity(s, c, which, e)
            label = {"E1": "E1", "E2": "E2", "E3_center": "E3"}[which]
        return classify_wave(s, c, seed, seed_label=label)

    report = one(eps)
    if check_eps:
        classes = {one(e).orbit_class for e in (1e-3, 1e-4, 1e-5)}
        report.eps_robust = classes == {report.orbit_class}
    return report


# ----------------------------------------------------------------------
# Minimal speed, spectral route
# ----------------------------------------------------------------------

def _boundary_poly_coeffs(s, c) -> dict[int, Fraction]:
    cs = chart_system(wave_system(s, c), ChartId.U1)
    out: dict[int, Fraction] = {}
    for (i, j), v in cs.rhs[1].coeffs.items():
        if i == 0:
            out[j] = out.get(j, Fraction(0)) + v
    return out


def minimal_speed_spectral(s) -> float:
    """Smallest speed at which the boundary polynomial acquires a real root.

    The boundary polynomial's coefficients are affine in the speed, so
    its discriminant is an exact quadratic in c whose nonnegative root
    is the threshold.
    """
    s = as_fraction(s)
    if s <= 0:
        raise ValueError("s must be positive")
    p1 = _boundary_poly_coeffs(s, 1)
    p2 = _boundary_poly_coeffs(s, 2)
    p3 = _boundary_poly_coeffs(s, 3)
    degs = sorted(set(p1) | set(p2) | set(p3))
    if max(degs) != 2:
        raise ValueError("spectral route needs a quadratic boundary polynomial")
    aff = {}
    for j in degs:
        v1, v2, v3 = (p.get(j, Fraction(0)) for p in (p1, p2, p3))
        slope = v2 - v1
        if v3 - v2 != slope:
            raise ValueError("boundary coefficients are not affine in the speed")
        aff[j] = (v1 - slope, slope)  # value at c=0, slope
    a0, a1 = aff.get(2, (Fraction(0), Fraction(0)))
    b0, b1 = aff.get(1, (Fraction(0), Fraction(0)))
    d0, d1 = aff.get(0, (Fraction(0), Fraction(0)))
    # discriminant(c) = b(c)^2 - 4 a(c) d(c), exact quadratic in c
    qa = b1 * b1 - 4 * a1 * d1
    qb = 2 * b0 * b1 - 4 * (a0 * d1 + a1 * d0)
    qc = b0 * b0 - 4 * a0 * d0
    if qa == 0:
        raise ValueError("discriminant is not quadratic in the speed")
    inner = qb * qb - 4 * qa * qc
    if inner < 0:
        raise ValueError("no real speed threshold")
    root = math.sqrt(float(inner))
    cands = sorted(c for c in ((-float(qb) - root) / (2 * float(qa)),
                               (-float(qb) + root) / (2 * float(qa))) if c >= 0)
    if not cands:
        raise ValueError("no nonnegative speed threshold")
    return cands[0]


# ----------------------------------------------------------------------
# Minimal speed, shooting route
# ----------------------------------------------------------------------

def _oracle_at_or_above(s, c) -> bool:
    """True when the backward orbit from the origin funnel never crosses
    a coordinate axis on the phi > 0 side.

    Below the threshold the backward orbit winds: its direction sweeps
    counterclockwise through the positive phi-axis (a psi crossing with
    phi > 0) and on through the vertical. At or above it, the direction
    converges below the boundary roots and no crossing ever occurs.
    """
    sfl, cfl = float(s), float(c)
    delta = 1e-3
    # nudge to the fourth-quadrant side of the exact manifold so the fast
    # backward direction expels the orbit into the positive funnel
    seed = (delta, -(delta**3 / cfl) * (1.0 + 1e-3))
    # budget: slow passage near the threshold scales like s^(-3/4), and the
    # crawl out of the origin funnel like c/(2 delta^2); converged runs
    # coast to the horizon cheaply, so generosity costs little
    horizon = 2e3 / sfl**0.75 + 2e6 * cfl
    traj = track_disk(wave_system(s, c), seed, direction="backward", horizon=horizon,
                      events=(phi_zero(), psi_zero()), stop_on=(phi_zero(), psi_zero()),
                      stall_tol=1e-8)
    for ev in traj.events:
        if ev.spec.kind == "phi_zero_crossing":
            return False
        if ev.spec.kind == "psi_zero_crossing":
            if ev.chart is ChartId.V1:
                continue
            if ev.chart is ChartId.FINITE and ev.point[0] <= 0:
                continue
            return False
    return True


def minimal_speed_shooting(s, tol: float = 1e-3, bracket: tuple[float, float] | None = None) -> float:
    """Threshold speed by bisection on the backward-shooting oracle."""
    sfl = float(s)
    if sfl <= 0:
        raise ValueError("s must be positive")
    if tol < 1e-4:
        raise ValueError("tol must be at least 1e-4")
    lo, hi = bracket if bracket is not None else (1e-3, 10.0 / math.sqrt(sfl))
    if _oracle_at_or_above(s, lo) or not _oracle_at_or_above(s, hi):
        raise BracketError("bracket failure")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _oracle_at_or_above(s, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _kpp_oracle(a: float, c: float) -> bool:
    """Monostable cross-check oracle.

    Rides the unstable orbit of the saddle at (1, 0) toward the rest
    state. Above the threshold the approach is a node: the slope psi/phi
    stays within the eigenvalue funnel and the orbit falls into a tiny
    origin ball still positive. Below it the approach is a spiral: the
    slope wraps past any bound (phi turns negative at an exponentially
    small radius), caught by a cone event psi < -3c*phi long before the
    actual sign change would underflow.
    """
    from scipy.integrate import solve_ivp

    fr = logistic_reaction(a, 1)
    sysd = desingularize(make_tw_system(fr, c))
    p1, p2 = sysd.polynomial_components()
    from .equilibria import compile_float
    f1, f2 = compile_float(p1), compile_float(p2)
    rhs = lambda t, y: (f1(y[0], y[1]), f2(y[0], y[1]))
    mu_u = (-c + math.sqrt(c * c + 4.0 * a)) / 2.0
    d = 1e-3
    seed = [1.0 - d, -d * mu_u]

    g_ball = lambda t, y: math.hypot(y[0], y[1]) - 1e-9
    g_ball.terminal, g_ball.direction = True, -1
    g_phi = lambda t, y: y[0]
    g_phi.terminal, g_phi.direction = True, 0
    g_cone = lambda t, y: y[1] + 3.0 * c * y[0]
    g_cone.terminal, g_cone.direction = True, -1
    sol = solve_ivp(rhs, (0.0, 4e3), seed, method="RK45", rtol=1e-10, atol=1e-13,
                    events=[g_ball, g_phi, g_cone])
    return sol.status == 1 and len(sol.t_events[0]) > 0 and not (
        len(sol.t_events[1]) or len(sol.t_events[2]))


def minimal_speed_shooting_kpp(a=1.0, tol: float = 1e-3) -> float:
    """Minimal front speed of the monostable logistic reaction by
    bisection on the saddle-to-origin positivity oracle."""
    afl = float(a)
    if afl <= 0:
        raise ValueError("a must be positive")
    if tol < 1e-4:
        raise ValueError("tol must be at least 1e-4")
    lo, hi = 0.25 * math.sqrt(afl), 4.0 * math.sqrt(afl)
    if _kpp_oracle(afl, lo) or not _kpp_oracle(afl, hi):
        raise BracketError("bracket failure")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _kpp_oracle(afl, mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ----------------------------------------------------------------------
# Profiles
# ----------------------------------------------------------------------

def reconstruct_profile(s, c, seed, xi_span: float, n_samples: int = 2001,
                        anchor: str = "auto") -> ProfileSamples:
    """Wave profile phi(xi) by direct integration in the original wave
    coordinate (no time rescale; the seed is finite).

    The samples lie on a uniform xi grid. Translation invariance is
    fixed by placing xi = 0 where phi first crosses 1 (positive
    profiles) or at the phi zero crossing (sign-changing profiles).
    """
    if xi_span <= 0:
        raise ValueError("xi_span must be positive")
    if isinstance(seed, tuple) and len(seed) == 2 and isinstance(seed[1], ChartId):
        seed = seed[0]
    sysx = make_tw_system(saturating_reaction(s), c)
    grid = np.linspace(0.0, float(xi_span), int(n_samples))
    traj = integrate(sysx, seed, "forward", horizon=float(xi_span), t_eval=grid)
    ts = np.array([f[0] for f in traj.frames])
    phi = np.array([f[2][0] for f in traj.frames])
    psi = np.array([f[2][1] for f in traj.frames])

    shift = 0.0
    if anchor in ("auto", "phi_zero"):
        cross = np.nonzero(np.diff(np.sign(phi)) != 0)[0]
        if len(cross) and (anchor == "phi_zero" or np.any(phi <= -1e-12)):
            i = cross[0]
            t0, t1 = ts[i], ts[i + 1]
            p0, p1 = phi[i], phi[i + 1]
            shift = t0 - p0 * (t1 - t0) / (p1 - p0)
        elif anchor == "phi_zero":
            raise ValueError("profile has no phi zero crossing to anchor at")
        else:
            anchor = "phi_one"
    if anchor == "phi_one":
        above = phi >= 1.0
        if above.any() and not above.all():
            i = int(np.nonzero(above)[0][-1])
            if i + 1 < len(phi):
                t0, t1 = ts[i], ts[i + 1]
                p0, p1 = phi[i], phi[i + 1]
                shift = t0 + (1.0 - p0) * (t1 - t0) / (p1 - p0)

    segs: list[int] = []
    for v in np.sign(psi):
        sv = int(v)
        if sv != 0 and (not segs or segs[-1] != sv):
            segs.append(sv)
    return ProfileSamples(ts - shift, phi, psi, segs)


def asymptotic_rate(profile: ProfileSamples, phi_threshold: float) -> float:
    """Least-squares slope of log(phi) against xi over the deep tail
    phi >= phi_threshold; estimates the limiting logarithmic slope."""
    mask = profile.phi >= phi_threshold
    if int(mask.sum()) < 10:
        raise TailError("insufficient tail")
    x = profile.xi[mask]
    y = np.log(profile.phi[mask])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def count_zero_crossings(profile: ProfileSamples, target: str) -> int:
    """Sign changes of one profile column, ignoring |values| < 1e-12."""
    if target == "phi":
        col = profile.phi
    elif target == "psi":
        col = profile.psi
    else:
        raise ValueError("target must be 'phi' or 'psi'")
    sig = [1 if v > 0 else -1 for v in col if abs(v) >= 1e-12]
    return sum(1 for a, b in zip(sig, sig[1:]) if a != b)
