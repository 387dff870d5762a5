"""Numerical integration with dense event detection and disk tracking.

Integration is adaptive explicit Runge-Kutta 4(5) (scipy's RK45) at
rtol 1e-10 / atol 1e-12; events are located by sign-change bracketing
and root refinement on the dense output. Backward integration negates
the field so a single code path serves both directions.

``track_disk`` follows an orbit across the Poincare disk: it integrates
in finite coordinates while the radius stays below ``r_switch`` and in
the desingularized boundary-chart fields beyond, switching charts by
the largest-defining-coordinate rule with a hysteresis band. Because
every chart clock is a positive rescale of the previous one, the
concatenated segments trace the same solution curve.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .compactify import (
    ChartId,
    ChartSystem,
    boundary_chart_coords,
    chart_system,
    disk_embed,
    disk_from_chart,
    plane_from_chart,
    transition,
)
from .equilibria import Equilibrium, compile_float
from .polyfield import PlanarSystem

__all__ = [
    "EventSpec",
    "EventRecord",
    "OrbitFate",
    "Trajectory",
    "phi_zero",
    "psi_zero",
    "enter_ball",
    "exit_radius",
    "lambda1_zero",
    "integrate",
    "track_disk",
    "orbit_fate",
]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
DEFAULT_HORIZON = 1e3
DEFAULT_R_MAX = 1e6
R_SWITCH = 10.0


@dataclass(frozen=True)
class EventSpec:
    kind: str  # phi_zero_crossing | psi_zero_crossing | enter_ball | exit_radius | lambda1_zero
    center: tuple[float, float] | None = None
    radius: float | None = None
    r_max: float | None = None
    direction: str = "any"  # any | up | down

    def __post_init__(self):
        if self.kind in ("enter_ball",) and (self.center is None or not self.radius or self.radius <= 0):
            raise ValueError("enter_ball needs a center and a positive radius")
        if self.kind == "exit_radius" and (not self.r_max or self.r_max <= 0):
            raise ValueError("exit_radius needs a positive radius")
        if self.direction not in ("any", "up", "down"):
            raise ValueError(f"bad direction filter {self.direction!r}")


def phi_zero(direction: str = "any") -> EventSpec:
    return EventSpec("phi_zero_crossing", direction=direction)


def psi_zero(direction: str = "any") -> EventSpec:
    return EventSpec("psi_zero_crossing", direction=direction)


def enter_ball(center, radius: float) -> EventSpec:
    return EventSpec("enter_ball", center=(float(center[0]), float(center[1])), radius=float(radius))


def exit_radius(r_max: float = DEFAULT_R_MAX) -> EventSpec:
    return EventSpec("exit_radius", r_max=float(r_max))


def lambda1_zero(direction: str = "down") -> EventSpec:
    return EventSpec("lambda1_zero", direction=direction)


@dataclass
class EventRecord:
    time: float
    spec: EventSpec
    chart: ChartId
    point: tuple[float, float]


@dataclass
class OrbitFate:
    tag: str  # reached_E0_ball | escaped_R_max | hit_horizon | reached_boundary_equilibrium
    label: str | None = None

    def to_json(self) -> dict:
        return {"tag": self.tag, "label": self.label}


@dataclass
class Trajectory:
    frames: list[tuple[float, ChartId, tuple[float, float]]]
    events: list[EventRecord]
    terminal: OrbitFate
    time_frame: str
    stop_reason: str = ""
    note: str = ""

    def count(self, kind: str) -> int:
        return sum(1 for ev in self.events if ev.spec.kind == kind)

    def final_frame(self) -> tuple[float, ChartId, tuple[float, float]]:
        return self.frames[-1]

    def final_disk_point(self):
        _t, chart, p = self.frames[-1]
        if chart is ChartId.FINITE:
            return disk_embed(p)
        return disk_from_chart(chart, p)

    def to_csv_rows(self, max_rows: int = 10_000) -> list[tuple[float, str, float, float]]:
        frames = self.frames
        if len(frames) > max_rows:
            idx = np.linspace(0, len(frames) - 1, max_rows).astype(int)
            frames = [frames[i] for i in idx]
        return [(t, chart.value, p[0], p[1]) for t, chart, p in frames]

    def to_json(self) -> dict:
        return {
            "time_frame": self.time_frame,
            "stop_reason": self.stop_reason,
            "terminal": self.terminal.to_json(),
            "events": [
                {"time": ev.time, "kind": ev.spec.kind, "chart": ev.chart.value,
                 "point": [ev.point[0], ev.point[1]]}
                for ev in self.events
            ],
            "n_frames": len(self.frames),
        }


# ----------------------------------------------------------------------
# Field and event compilation
# ----------------------------------------------------------------------

def _compile_rhs(sys_like, negate: bool):
    sgn = -1.0 if negate else 1.0
    if isinstance(sys_like, ChartSystem):
        f1 = compile_float(sys_like.rhs[0])
        f2 = compile_float(sys_like.rhs[1])
        return lambda t, y: (sgn * f1(y[0], y[1]), sgn * f2(y[0], y[1]))
    if isinstance(sys_like, PlanarSystem):
        if sys_like.is_polynomial:
            p1, p2 = sys_like.polynomial_components()
            f1 = compile_float(p1)
            f2 = compile_float(p2)
            return lambda t, y: (sgn * f1(y[0], y[1]), sgn * f2(y[0], y[1]))
        n1 = compile_float(sys_like.rhs_phi.num)
        d1 = compile_float(sys_like.rhs_phi.den)
        n2 = compile_float(sys_like.rhs_psi.num)
        d2 = compile_float(sys_like.rhs_psi.den)
        return lambda t, y: (
            sgn * n1(y[0], y[1]) / d1(y[0], y[1]),
            sgn * n2(y[0], y[1]) / d2(y[0], y[1]),
        )
    raise TypeError(f"cannot integrate object of type {type(sys_like)!r}")


_DIRECTION_VALUE = {"any": 0, "up": 1, "down": -1}

# sign proxies g with sign(g) == sign(quantity) in each chart; None when the
# quantity cannot vanish inside the chart
_PHI_PROXY = {
    ChartId.FINITE: lambda y: y[0],
    ChartId.U2: lambda y: y[1],
    ChartId.V2: lambda y: -y[1],
}
_PSI_PROXY = {
    ChartId.FINITE: lambda y: y[1],
    ChartId.U1: lambda y: y[1],
    ChartId.V1: lambda y: -y[1],
}


def _event_callable(spec: EventSpec, chart: ChartId):
    """scipy event function for one spec in one chart, or None if the
    monitored quantity cannot cross zero there."""
    if spec.kind == "phi_zero_crossing":
        proxy = _PHI_PROXY.get(chart)
        if proxy is None:
            return None
        g = lambda t, y: proxy(y)
    elif spec.kind == "psi_zero_crossing":
        proxy = _PSI_PROXY.get(chart)
        if proxy is None:
            return None
        g = lambda t, y: proxy(y)
    elif spec.kind == "enter_ball":
        if chart is not ChartId.FINITE:
            return None
        cx, cy = spec.center
        r = spec.radius
        g = lambda t, y: math.hypot(y[0] - cx, y[1] - cy) - r
    elif spec.kind == "exit_radius":
        rmax = spec.r_max
        if chart is ChartId.FINITE:
            g = lambda t, y: math.hypot(y[0], y[1]) - rmax
        else:
            g = lambda t, y: (math.hypot(1.0, y[1]) / y[0] - rmax) if y[0] > 0 else 1.0
    elif spec.kind == "lambda1_zero":
        if chart is ChartId.FINITE:
            return None
        g = lambda t, y: y[0]
    else:
        raise ValueError(f"unknown event kind {spec.kind!r}")
    g.direction = _DIRECTION_VALUE[spec.direction]
    if spec.kind == "enter_ball":
        g.direction = -1
    return g


def _structural_event(g, direction: int):
    g.terminal = True
    g.direction = direction
    return g


# ----------------------------------------------------------------------
# Single-frame integration
# ----------------------------------------------------------------------

def integrate(sys_like, init, direction: str = "forward", horizon: float = DEFAULT_HORIZON,
              events: tuple[EventSpec, ...] = (), stop_on: tuple[EventSpec, ...] = (),
              rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
              t_eval=None, max_step: float = np.inf, max_restarts: int = 80) -> Trajectory:
    """Integrate one system in its own coordinates and clock.

    ``stop_on`` events terminate the run; every listed event is located
    on the dense output and recorded either way. An exit_radius event is
    always terminal. Backward runs negate the field, so recorded times
    increase along the integration clock in both directions.

    The stepper's minimum step is relative to elapsed time, which starves
    runs whose natural step shrinks as the state grows (polynomial
    blow-up); such runs are restarted on a fresh clock from the final
    state and the reported times accumulate across restarts. A run that
    can make no progress at all stops with reason "step_underflow".
    """
    if direction not in ("forward", "backward"):
        raise ValueError("direction must be 'forward' or 'backward'")
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    chart = sys_like.chart if isinstance(sys_like, ChartSystem) else ChartId.FINITE
    frame = "tau" if isinstance(sys_like, ChartSystem) else sys_like.time_frame
    rhs = _compile_rhs(sys_like, negate=(direction == "backward"))

    specs = list(events) + [s for s in stop_on if s not in events]
    stop_set = set(stop_on)
    callables, live_specs = [], []
    for spec in specs:
        g = _event_callable(spec, chart)
        if g is None:
            continue
        g.terminal = spec in stop_set or spec.kind == "exit_radius"
        callables.append(g)
        live_specs.append(spec)

    frames: list[tuple[float, ChartId, tuple[float, float]]] = []
    records: list[EventRecord] = []
    point = (float(init[0]), float(init[1]))
    t_acc, remaining = 0.0, horizon
    stop_reason, note = "horizon", ""
    for _attempt in range(max_restarts + 1):
        grid = None
        if t_eval is not None:
            grid = [t - t_acc for t in np.atleast_1d(t_eval) if t_acc <= t <= t_acc + remaining + 1e-300]
            if frames and grid and grid[0] == 0.0:
                grid = grid[1:]
        sol = solve_ivp(rhs, (0.0, remaining), list(point), method="RK45",
                        rtol=rtol, atol=atol, events=callables,
                        t_eval=grid, max_step=max_step, dense_output=False)
        for t, x, y in zip(sol.t, sol.y[0], sol.y[1]):
            gt = t_acc + float(t)
            if frames and gt <= frames[-1][0]:
                if (float(x), float(y)) == frames[-1][2]:
                    continue
                gt = math.nextafter(frames[-1][0], math.inf)
            frames.append((gt, chart, (float(x), float(y))))
        for spec, te, ye in zip(live_specs, sol.t_events, sol.y_events):
            for t, y in zip(te, ye):
                records.append(EventRecord(t_acc + float(t), spec, chart, (float(y[0]), float(y[1]))))
        if sol.status == 1:
            fired = _first_terminal(live_specs, callables, sol)
            stop_reason = f"event:{fired.kind}" if fired else "event"
            break
        if sol.status == 0:
            stop_reason = "horizon"
            break
        t_done = float(sol.t[-1]) if len(sol.t) else 0.0
        end = (float(sol.y[0][-1]), float(sol.y[1][-1])) if len(sol.t) else point
        if t_eval is not None:
            # with a sampling grid the solver only reports grid points, so a
            # restart cannot resume from the true final state
            stop_reason, note = "step_underflow", str(sol.message)
            break
        if t_done <= 0.0 and end == point:
            stop_reason, note = "step_underflow", str(sol.message)
            break
        t_acc += t_done
        remaining -= t_done
        point = end
        if remaining <= 0:
            stop_reason = "horizon"
            break
    else:
        stop_reason, note = "step_underflow", "restart budget exhausted"

    if not frames:
        frames = [(0.0, chart, (float(init[0]), float(init[1])))]
    records.sort(key=lambda ev: ev.time)
    terminal = _fate_from_stop(stop_reason)
    return Trajectory(frames, records, terminal, frame, stop_reason, note)


def _first_terminal(specs, callables, sol) -> EventSpec | None:
    best = None
    for spec, g, te in zip(specs, callables, sol.t_events):
        if not getattr(g, "terminal", False) or len(te) == 0:
            continue
        if best is None or te[-1] <= best[0]:
            best = (te[-1], spec)
    return best[1] if best else None


def _fate_from_stop(stop_reason: str) -> OrbitFate:
    if stop_reason == "event:enter_ball":
        return OrbitFate("reached_E0_ball")
    if stop_reason == "event:exit_radius":
        return OrbitFate("escaped_R_max")
    return OrbitFate("hit_horizon")


# ----------------------------------------------------------------------
# Chart-switching disk tracker
# ----------------------------------------------------------------------

_NEIGHBOR = {
    (ChartId.U1, 1): ChartId.U2, (ChartId.U1, -1): ChartId.V2,
    (ChartId.V1, 1): ChartId.V2, (ChartId.V1, -1): ChartId.U2,
    (ChartId.U2, 1): ChartId.U1, (ChartId.U2, -1): ChartId.V1,
    (ChartId.V2, 1): ChartId.V1, (ChartId.V2, -1): ChartId.U1,
}

_LAM2_BAND = 1.2
_SWITCH_BACK_FRACTION = 0.8
_SWITCH_MATCH_TOL = 1e-8


def track_disk(sys: PlanarSystem, init, direction: str = "forward",
               horizon: float = DEFAULT_HORIZON, events: tuple[EventSpec, ...] = (),
               stop_on: tuple[EventSpec, ...] = (), r_switch: float = R_SWITCH,
               max_phi_crossings: int | None = None, stall_tol: float | None = None,
               rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
               max_segments: int = 400) -> Trajectory:
    """Follow one orbit across the disk, switching charts as needed.

    ``init`` is a finite plane point or a (chart, coords) pair. The
    tracked clock concatenates the segment clocks (each segment's clock
    is a positive rescale of its neighbor's, so the curve is shared).
    Stops on any ``stop_on`` event, at the accumulated horizon, or after
    ``max_phi_crossings`` recorded phi crossings.

    With ``stall_tol`` set, a run also stops (reason "flow_stall") once
    the chart field's 1-norm falls below the tolerance in a boundary
    chart, i.e. when the orbit has parked at a boundary equilibrium.
    Off by default: slow passages *through* a degenerate corner would
    otherwise be cut short; callers that only need a converged verdict
    (the speed oracle) opt in and avoid coasting against the stepper's
    stability cap on the decayed transverse mode.
    """
    if sys.time_frame != "s_tilde" or not sys.is_polynomial:
        raise ValueError("track_disk needs the desingularized polynomial system")
    charts: dict[ChartId, ChartSystem] = {}

    def system_for(chart: ChartId):
        if chart is ChartId.FINITE:
            return sys
        if chart not in charts:
            charts[chart] = chart_system(sys, chart)
        return charts[chart]

    if isinstance(init[0], ChartId):
        chart, point = init[0], (float(init[1][0]), float(init[1][1]))
    else:
        p = (float(init[0]), float(init[1]))
        if math.hypot(*p) <= r_switch:
            chart, point = ChartId.FINITE, p
        else:
            chart, point = boundary_chart_coords(p)

    frames: list[tuple[float, ChartId, tuple[float, float]]] = []
    records: list[EventRecord] = []
    t_acc = 0.0
    remaining = horizon
    stop_reason, note = "horizon", ""
    stop_set = set(stop_on)

    for _segment in range(max_segments):
        if remaining <= 0:
            stop_reason = "horizon"
            break
        seg_sys = system_for(chart)
        rhs = _compile_rhs(seg_sys, negate=(direction == "backward"))

        callables, live_specs, structural = [], [], []
        for spec in list(events) + [s for s in stop_on if s not in events]:
            g = _event_callable(spec, chart)
            if g is None:
                continue
            g.terminal = spec in stop_set or spec.kind == "exit_radius"
            callables.append(g)
            live_specs.append(spec)
        n_user = len(callables)

        if chart is ChartId.FINITE:
            g_out = _structural_event(lambda t, y: math.hypot(y[0], y[1]) - r_switch, +1)
            callables.append(g_out)
            structural.append("to_boundary")
        else:
            r_back = _SWITCH_BACK_FRACTION * r_switch
            g_back = _structural_event(
                lambda t, y: (math.hypot(1.0, y[1]) / y[0] - r_back) if y[0] > 0 else 1.0, -1)
            callables.append(g_back)
            structural.append("to_finite")
            g_hi = _structural_event(lambda t, y: y[1] - _LAM2_BAND, +1)
            callables.append(g_hi)
            structural.append("neighbor_hi")
            g_lo = _structural_event(lambda t, y: y[1] + _LAM2_BAND, -1)
            callables.append(g_lo)
            structural.append("neighbor_lo")
            if stall_tol is not None:
                g_stall = _structural_event(
                    lambda t, y, f=rhs: abs(f(t, y)[0]) + abs(f(t, y)[1]) - stall_tol, -1)
                callables.append(g_stall)
                structural.append("flow_stall")

        sol = solve_ivp(rhs, (0.0, remaining), list(point), method="RK45",
                        rtol=rtol, atol=atol, events=callables)

        # keep every segment's initial frame: at a chart seam the previous
        # segment's final frame and this one describe the same geometric
        # point in two charts, which is what the seam invariant checks
        for t, x, y in zip(sol.t, sol.y[0], sol.y[1]):
            gt = t_acc + float(t)
            if frames and gt <= frames[-1][0]:
                gt = math.nextafter(frames[-1][0], math.inf)
            frames.append((gt, chart, (float(x), float(y))))
        for spec, te, ye in zip(live_specs, sol.t_events[:n_user], sol.y_events[:n_user]):
            for t, y in zip(te, ye):
                records.append(EventRecord(t_acc + float(t), spec, chart, (float(y[0]), float(y[1]))))
        records.sort(key=lambda ev: ev.time)

        if max_phi_crossings is not None:
            n_phi = sum(1 for ev in records if ev.spec.kind == "phi_zero_crossing")
            if n_phi >= max_phi_crossings:
                stop_reason = "crossing_limit"
                break

        if sol.status == 0:
            stop_reason = "horizon"
            break
        t_seg = float(sol.t[-1])
        end_point = (float(sol.y[0][-1]), float(sol.y[1][-1]))
        if sol.status == -1:
            # step starvation from the time-relative minimum step: restart
            # this segment on a fresh clock from the final state
            if t_seg <= 0.0 and end_point == point:
                stop_reason, note = "step_underflow", str(sol.message)
                break
            t_acc += t_seg
            remaining -= t_seg
            point = end_point
            continue

        # a terminal event fired: decide between user stop and structural switch
        fired_idx = None
        for i, (g, te) in enumerate(zip(callables, sol.t_events)):
            if getattr(g, "terminal", False) and len(te) and math.isclose(te[-1], t_seg, rel_tol=0, abs_tol=1e-12 * max(1.0, t_seg)):
                fired_idx = i
                break
        if fired_idx is None:
            stop_reason = "horizon"
            break
        t_acc += t_seg
        remaining -= t_seg

        if fired_idx < n_user:
            stop_reason = f"event:{live_specs[fired_idx].kind}"
            break
        kind = structural[fired_idx - n_user]
        if kind == "flow_stall":
            stop_reason = "flow_stall"
            break
        chart, point = _switch(chart, end_point, kind)

    else:
        stop_reason = "segment_limit"

    if not frames:
        frames = [(0.0, chart, point)]
    terminal = _fate_from_stop(stop_reason)
    return Trajectory(frames, records, terminal, "mixed", stop_reason, note)


def _switch(chart: ChartId, point, kind: str) -> tuple[ChartId, tuple[float, float]]:
    """Chart handoff with a round-trip consistency check at the seam."""
    if chart is not ChartId.FINITE and point[0] < 0.0:
        # lam1 can jitter below zero at the absolute-tolerance floor
        point = (0.0, point[1])
    if kind == "to_boundary":
        new_chart, new_point = boundary_chart_coords(point)
        back = plane_from_chart(new_chart, new_point)
        scale = max(1.0, math.hypot(*point))
        if math.hypot(back[0] - point[0], back[1] - point[1]) > _SWITCH_MATCH_TOL * scale:
            raise RuntimeError("chart switch mismatch at seam")
        return new_chart, new_point
    if kind == "to_finite":
        new_point = plane_from_chart(chart, point)
        return ChartId.FINITE, new_point
    sign = 1 if kind == "neighbor_hi" else -1
    new_chart = _NEIGHBOR[(chart, sign)]
    new_point = transition(chart, point, new_chart)
    back = transition(new_chart, new_point, chart)
    if math.hypot(back[0] - point[0], back[1] - point[1]) > _SWITCH_MATCH_TOL * max(1.0, math.hypot(*point)):
        raise RuntimeError("chart switch mismatch at seam")
    return new_chart, new_point


# ----------------------------------------------------------------------
# Orbit fate
# ----------------------------------------------------------------------

_ANGULAR_TOL = 1e-3


def _boundary_angle_distance(d, eq: Equilibrium) -> float:
    b = disk_from_chart(eq.chart, eq.coords)
    n1 = math.hypot(d.y1, d.y2)
    n2 = math.hypot(b.y1, b.y2)
    if n1 == 0 or n2 == 0:
        return math.pi
    dot = (d.y1 * b.y1 + d.y2 * b.y2) / (n1 * n2)
    return math.acos(max(-1.0, min(1.0, dot)))


def orbit_fate(traj: Trajectory, e0_ball: tuple[tuple[float, float], float] | None = None,
               boundary_eqs: list[Equilibrium] = (), direction: str = "forward") -> OrbitFate:
    """Deterministic fate from the stopping condition and final position.

    An escape through R_max is refined to reached_boundary_equilibrium
    when the final disk position lies within angular distance 1e-3 of a
    boundary equilibrium whose boundary-tangent flow (in the integrated
    direction) contracts toward it.
    """
    sgn = -1.0 if direction == "backward" else 1.0
    if traj.stop_reason == "event:enter_ball":
        return OrbitFate("reached_E0_ball")
    _t, final_chart, p = traj.frames[-1]
    if e0_ball is not None and final_chart is ChartId.FINITE:
        (cx, cy), radius = e0_ball
        if math.hypot(p[0] - cx, p[1] - cy) <= radius:
            return OrbitFate("reached_E0_ball")

    def _refined() -> OrbitFate | None:
        best = _nearest_boundary(traj, boundary_eqs)
        if best is None:
            return None
        tangent = sgn * best.jacobian[1][1]
        if _boundary_angle_distance(traj.final_disk_point(), best) <= _ANGULAR_TOL and tangent < 0:
            return OrbitFate("reached_boundary_equilibrium", best.label)
        return None

    if traj.stop_reason == "event:exit_radius":
        return _refined() or OrbitFate("escaped_R_max")
    if final_chart is not ChartId.FINITE and p[0] <= 1e-8:
        # parked on the circle at infinity when the run ended
        fate = _refined()
        if fate is not None:
            return fate
    return OrbitFate("hit_horizon")


def _nearest_boundary(traj: Trajectory, boundary_eqs) -> Equilibrium | None:
    if not boundary_eqs:
        return None
    d = traj.final_disk_point()
    return min(boundary_eqs, key=lambda eq: _boundary_angle_distance(d, eq))
