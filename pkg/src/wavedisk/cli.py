"""Command-line frontend: reproducible analyses emitting JSON/CSV/SVG.

Subcommands: analyze, minspeed, profile, portrait, sweep. Exit codes:
0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .compactify import (
    BOUNDARY_CHARTS,
    ChartId,
    chart_system,
    disk_embed,
    disk_from_chart,
)
from .degenerate import EigenstructureError, center_manifold, nilpotent_sector_report
from .equilibria import StabilityClass, boundary_equilibria, finite_equilibria, regime_of
from .flow import track_disk
from .polyfield import (
    as_fraction,
    desingularize,
    is_odd_symmetric,
    make_tw_system,
    parse_reaction,
)
from .serialize import csv_lines, dumps, write_text
from .waves import (
    BracketError,
    RegimeError,
    asymptotic_rate,
    minimal_speed_shooting,
    minimal_speed_spectral,
    reconstruct_profile,
    run_family,
    seed_at_infinity,
    seed_near_origin,
    seed_sign_changing,
    wave_system,
)

SCHEMA = "1"

DEFAULT_REACTION = "u^3 / (1 + s*u^2)"

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class ConfigError(ValueError):
    pass


NUMERIC_ERRORS = (BracketError, EigenstructureError, RuntimeError, FloatingPointError)


@dataclass
class RunConfig:
    s: Fraction | None = None
    c: Fraction | None = None
    reaction: str = DEFAULT_REACTION
    params: dict[str, Fraction] = field(default_factory=dict)
    tol: float = 1e-3
    rtol: float = 1e-10
    atol: float = 1e-12
    eps: float = 1e-4
    delta: float = 1e-3
    out_dir: str = "."
    formats: tuple[str, ...] = ("json", "csv", "svg")

    def validate(self) -> None:
        for name, v in (("tol", self.tol), ("rtol", self.rtol), ("atol", self.atol),
                        ("eps", self.eps), ("delta", self.delta)):
            if not (1e-14 <= v <= 1e-2):
                raise ConfigError(f"{name} = {v:g} outside [1e-14, 1e-2]")
        for name, v in (("s", self.s), ("c", self.c)):
            if v is not None and v <= 0:
                raise ConfigError(f"{name} must be positive")
        bad = set(self.formats) - {"json", "csv", "svg"}
        if bad:
            raise ConfigError(f"unknown output formats: {sorted(bad)}")

    def need(self, *names) -> None:
        for n in names:
            if getattr(self, n) is None:
                raise ConfigError(f"missing required parameter --{n}")

    def reaction_term(self):
        params = dict(self.params)
        if self.s is not None:
            params.setdefault("s", self.s)
        return parse_reaction(self.reaction, params)


def _parse_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{ln}: expected key=value")
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    return out


_CONFIG_KEYS = {
    "s": ("s", as_fraction),
    "c": ("c", as_fraction),
    "reaction": ("reaction", str),
    "tol": ("tol", float),
    "rtol": ("rtol", float),
    "atol": ("atol", float),
    "eps": ("eps", float),
    "delta": ("delta", float),
    "out": ("out_dir", str),
    "format": ("formats", lambda v: tuple(x.strip() for x in v.split(","))),
}


def build_config(args: argparse.Namespace) -> RunConfig:
    """Assemble the run configuration: CLI flags > config file > defaults."""
    cfg = RunConfig()
    if getattr(args, "config", None):
        file_vals = _parse_config_file(args.config)
        updates = {}
        params = dict(cfg.params)
        for k, v in file_vals.items():
            if k.startswith("param."):
                params[k[len("param."):]] = as_fraction(v)
            elif k in _CONFIG_KEYS:
                attr, conv = _CONFIG_KEYS[k]
                try:
                    updates[attr] = conv(v)
                except (ValueError, ZeroDivisionError) as exc:
                    raise ConfigError(f"bad config value {k}={v!r}: {exc}") from exc
            else:
                raise ConfigError(f"unknown config key {k!r}")
        cfg = replace(cfg, params=params, **updates)
    updates = {}
    try:
        if getattr(args, "s", None) is not None:
            updates["s"] = as_fraction(args.s)
        if getattr(args, "c", None) is not None:
            updates["c"] = as_fraction(args.c)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad numeric flag: {exc}") from exc
    if getattr(args, "reaction", None) is not None:
        updates["reaction"] = args.reaction
    for flag in ("tol", "rtol", "atol", "eps", "delta"):
        if getattr(args, flag, None) is not None:
            updates[flag] = float(getattr(args, flag))
    if getattr(args, "out", None) is not None:
        updates["out_dir"] = args.out
    if getattr(args, "format", None) is not None:
        updates["formats"] = tuple(x.strip() for x in args.format.split(","))
    if getattr(args, "param", None):
        params = dict(cfg.params)
        for item in args.param:
            if "=" not in item:
                raise ConfigError(f"--param expects k=v, got {item!r}")
            k, v = item.split("=", 1)
            try:
                params[k.strip()] = as_fraction(v.strip())
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"bad parameter {item!r}: {exc}") from exc
        updates["params"] = params
    cfg = replace(cfg, **updates)
    cfg.validate()
    return cfg


def _write(cfg: RunConfig, name: str, text: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, name)
    write_text(path, text)
    return path


# ----------------------------------------------------------------------
# analyze
# ----------------------------------------------------------------------

def cmd_analyze(cfg: RunConfig) -> dict:
    """Full local analysis: regime, equilibria, reductions, blow-up."""
    cfg.need("s", "c")
    reaction = cfg.reaction_term()
    sysx = make_tw_system(reaction, cfg.c)
    sysd = desingularize(sysx)
    regime = regime_of(cfg.s, cfg.c)
    doc: dict = {
        "schema": SCHEMA,
        "s": float(cfg.s),
        "c": float(cfg.c),
        "reaction": cfg.reaction,
        "regime": {"tag": regime.tag, "discriminant": regime.discriminant},
        "odd_symmetric": is_odd_symmetric(sysd),
    }
    finite = finite_equilibria(sysd)
    doc["finite_equilibria"] = [e.to_json() for e in finite]
    boundary: dict = {}
    charts: dict = {}
    for chart in (ChartId.U1, ChartId.U2):
        cs = chart_system(sysd, chart)
        charts[chart] = cs
        eqs = boundary_equilibria(cs)
        boundary[chart.value] = {
            "rescale_degree": cs.rescale_degree,
            "equilibria": [e.to_json() for e in eqs],
        }
    doc["boundary_equilibria"] = boundary

    manifolds = {}
    for e in finite:
        if e.stability == StabilityClass.NONHYP_ONE_ZERO:
            try:
                cm = center_manifold(sysd, e, order=5)
            except EigenstructureError:
                continue
            manifolds[e.label or f"finite@{e.coords}"] = cm.to_json()
    for chart in (ChartId.U1,):
        for e in boundary_equilibria(charts[chart]):
            if e.stability == StabilityClass.NONHYP_ONE_ZERO:
                try:
                    cm = center_manifold(charts[chart], e, order=5)
                except EigenstructureError:
                    continue
                manifolds[e.label or f"{chart.value}@{e.coords}"] = cm.to_json()
    doc["center_manifolds"] = manifolds

    blowups = {}
    for e in boundary_equilibria(charts[ChartId.U2]):
        if e.stability == StabilityClass.NONHYP_DOUBLE_ZERO:
            key = e.label or f"U2@{e.coords}"
            try:
                blowups[key] = nilpotent_sector_report(charts[ChartId.U2], e).to_json()
            except EigenstructureError as exc:
                # double-zero eigenvalues with a nonvanishing linear part:
                # outside the pure directional blow-up's scope
                blowups[key] = {"skipped": str(exc)}
    doc["blowups"] = blowups
    return doc


# ----------------------------------------------------------------------
# minspeed
# ----------------------------------------------------------------------

def cmd_minspeed(cfg: RunConfig, bracket: tuple[float, float] | None = None) -> tuple[dict, int]:
    cfg.need("s")
    spectral = minimal_speed_spectral(cfg.s)
    shooting = minimal_speed_shooting(cfg.s, cfg.tol, bracket=bracket)
    gap = abs(spectral - shooting)
    doc = {
        "schema": SCHEMA,
        "s": float(cfg.s),
        "tol": cfg.tol,
        "spectral": spectral,
        "shooting": shooting,
        "gap": gap,
    }
    status = EXIT_OK if gap <= 10 * cfg.tol else EXIT_NUMERIC
    return doc, status


# ----------------------------------------------------------------------
# profile
# ----------------------------------------------------------------------

PROFILE_FAMILIES = ("E1", "E2", "E3", "sign_changing")


def cmd_profile(cfg: RunConfig, family: str, xi_span: float,
                check_eps: bool = False) -> tuple[dict, list[str]]:
    cfg.need("s", "c")
    if family not in PROFILE_FAMILIES:
        raise ConfigError(f"family must be one of {PROFILE_FAMILIES}")
    if xi_span <= 0:
        raise ConfigError("xi span must be positive")
    which = "E3_center" if family == "E3" else family
    try:
        report = run_family(cfg.s, cfg.c, which, eps=cfg.eps, check_eps=check_eps)
        if family == "sign_changing":
            seed = seed_sign_changing(cfg.s, cfg.c, cfg.eps)
        else:
            seed = seed_at_infinity(cfg.s, cfg.c, which, cfg.eps)
    except RegimeError as exc:
        raise ConfigError(f"family {family} unavailable: {exc}") from exc
    profile = reconstruct_profile(cfg.s, cfg.c, seed, xi_span)
    report.profile = profile
    try:
        report.asymptotic_rate = asymptotic_rate(profile, 50.0)
    except ValueError:
        pass
    doc = {"schema": SCHEMA, "family": family, **report.to_json()}
    return doc, profile.csv_lines()


# ----------------------------------------------------------------------
# portrait
# ----------------------------------------------------------------------

def _disk_polyline(traj, max_pts: int = 600) -> list[list[float]]:
    frames = traj.frames
    if len(frames) > max_pts:
        idx = np.linspace(0, len(frames) - 1, max_pts).astype(int)
        frames = [frames[i] for i in idx]
    pts = []
    for _t, chart, p in frames:
        if chart is ChartId.FINITE:
            d = disk_embed(p)
        else:
            l1 = max(p[0], 0.0)
            d = disk_from_chart(chart, (l1, p[1]))
        pts.append([d.y1, d.y2, d.y3])
    return pts


def cmd_portrait(cfg: RunConfig, n_seeds: int) -> dict:
    """Disk portrait: boundary/finite equilibria plus a fan of orbits."""
    cfg.need("s", "c")
    if n_seeds < 1:
        raise ConfigError("portrait needs n_seeds >= 1")
    s, c = cfg.s, cfg.c
    sysd = wave_system(s, c)
    regime = regime_of(s, c)

    outline = []
    for k in range(257):
        th = 2.0 * math.pi * k / 256.0
        outline.append([math.cos(th), math.sin(th), 0.0])

    boundary = []
    for chart in BOUNDARY_CHARTS:
        for e in boundary_equilibria(chart_system(sysd, chart)):
            d = disk_from_chart(chart, e.coords)
            boundary.append({"label": e.label, "chart": chart.value,
                             "coords": [e.coords[0], e.coords[1]],
                             "stability": e.stability,
                             "disk": [d.y1, d.y2, d.y3]})
    finite = []
    for e in finite_equilibria(sysd):
        d = disk_embed(e.coords)
        finite.append({"label": e.label, "stability": e.stability,
                       "coords": [e.coords[0], e.coords[1]],
                       "disk": [d.y1, d.y2, d.y3]})

    trajectories = []

    def add(seed, label, color, direction="forward", horizon=300.0):
        traj = track_disk(sysd, seed, direction, horizon=horizon)
        trajectories.append({"label": label, "color": color,
                             "points": _disk_polyline(traj)})

    for k in range(int(n_seeds)):
        th = 2.0 * math.pi * k / float(n_seeds)
        add((5.0 * math.cos(th), 5.0 * math.sin(th)), f"ring{k}", "0.6")

    family_seeds = []
    if regime.tag == "supercritical":
        family_seeds = [("E1", seed_at_infinity(s, c, "E1", cfg.eps)[0]),
                        ("E2", seed_at_infinity(s, c, "E2", cfg.eps)[0]),
                        ("sign_changing", seed_sign_changing(s, c, cfg.eps)[0])]
    elif regime.tag == "critical":
        family_seeds = [("E3", seed_at_infinity(s, c, "E3_center", cfg.eps)[0]),
                        ("sign_changing", seed_sign_changing(s, c, cfg.eps)[0])]
    for name, seed in family_seeds:
        add(seed, name, "tab:blue")
        add((-seed[0], -seed[1]), name + "_mirror", "tab:cyan")
    d0 = seed_near_origin(s, c, cfg.delta)
    add(d0, "origin_unwind", "tab:orange", direction="backward", horizon=150.0)
    add((-d0[0], -d0[1]), "origin_unwind_mirror", "tab:orange", direction="backward", horizon=150.0)

    doc = {
        "schema": SCHEMA,
        "s": float(s),
        "c": float(c),
        "regime": regime.tag,
        "disk_outline": outline,
        "boundary_equilibria": boundary,
        "finite_equilibria": finite,
        "trajectories": trajectories,
    }
    return doc


# ----------------------------------------------------------------------
# sweep
# ----------------------------------------------------------------------

SWEEP_HEADER = ["s", "c", "regime", "discriminant", "c_star_spectral", "speed_gap",
                "class_E1", "class_E2", "class_E3", "class_sign_changing"]


def _sweep_cell(s: Fraction, c: Fraction) -> list:
    regime = regime_of(s, c)
    c_star = minimal_speed_spectral(s)
    row: list = [float(s), float(c), regime.tag, regime.discriminant,
                 c_star, float(c) - c_star]
    for fam in ("E1", "E2", "E3_center", "sign_changing"):
        try:
            rep = run_family(s, c, fam)
            row.append(rep.orbit_class)
        except RegimeError:
            row.append("-")
    return row


def cmd_sweep(s_list, c_list, max_workers: int = 4) -> list[list]:
    if not s_list or not c_list:
        raise ConfigError("sweep needs nonempty s and c lists")
    cells, seen = [], set()
    for s in s_list:
        for c in c_list:
            key = (Fraction(s), Fraction(c))
            if key in seen:
                print(f"warning: duplicate sweep cell s={s}, c={c} skipped", file=sys.stderr)
                continue
            seen.add(key)
            cells.append(key)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(pool.map(lambda sc: _sweep_cell(*sc), cells))
    return rows


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--s", help="saturation parameter (positive rational)")
    p.add_argument("--c", help="wave speed (positive rational)")
    p.add_argument("--tol", type=float, help="bisection tolerance")
    p.add_argument("--rtol", type=float, help="integrator relative tolerance")
    p.add_argument("--atol", type=float, help="integrator absolute tolerance")
    p.add_argument("--eps", type=float, help="seed displacement in chart coordinates")
    p.add_argument("--delta", type=float, help="origin seed amplitude")
    p.add_argument("--out", help="output directory")
    p.add_argument("--format", help="comma-separated subset of json,csv,svg")
    p.add_argument("--reaction", help='reaction string, e.g. "u^3 / (1 + s*u^2)"')
    p.add_argument("--param", action="append", help="bind a reaction parameter k=v")
    p.add_argument("--config", help="flat key=value config file")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavedisk",
                                 description="Global phase-plane analysis of traveling-wave systems")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("analyze", "equilibria, reductions and blow-ups at one (s, c)"),
        ("minspeed", "minimal wave speed by spectral and shooting routes"),
        ("profile", "reconstruct one wave profile"),
        ("portrait", "disk portrait with a fan of orbits"),
        ("sweep", "classify wave families over a parameter grid"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name == "minspeed":
            p.add_argument("--c-lo", type=float, help="override the lower bisection bracket")
            p.add_argument("--c-hi", type=float, help="override the upper bisection bracket")
        if name == "profile":
            p.add_argument("--family", required=True, choices=PROFILE_FAMILIES)
            p.add_argument("--xi-span", type=float, default=40.0)
            p.add_argument("--check-eps", action="store_true",
                           help="re-classify at seed amplitudes 1e-3..1e-5 and flag drift")
        if name == "portrait":
            p.add_argument("--n-seeds", type=int, default=8)
        if name == "sweep":
            p.add_argument("--s-list", required=True, help="comma-separated s values")
            p.add_argument("--c-list", required=True, help="comma-separated c values")
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = build_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "analyze":
            doc = cmd_analyze(cfg)
            if "json" in cfg.formats:
                print(_write(cfg, "analyze.json", dumps(doc)))
            return EXIT_OK
        if args.command == "minspeed":
            bracket = None
            if args.c_lo is not None or args.c_hi is not None:
                if args.c_lo is None or args.c_hi is None or not (0 < args.c_lo < args.c_hi):
                    raise ConfigError("bracket override needs 0 < --c-lo < --c-hi")
                bracket = (args.c_lo, args.c_hi)
            doc, status = cmd_minspeed(cfg, bracket=bracket)
            if "json" in cfg.formats:
                print(_write(cfg, "minspeed.json", dumps(doc)))
            return status
        if args.command == "profile":
            doc, csv_text = cmd_profile(cfg, args.family, args.xi_span, args.check_eps)
            if "csv" in cfg.formats:
                print(_write(cfg, "profile.csv", "\n".join(csv_text)))
            if "json" in cfg.formats:
                print(_write(cfg, "profile.json", dumps(doc)))
            return EXIT_OK
        if args.command == "portrait":
            doc = cmd_portrait(cfg, args.n_seeds)
            if "json" in cfg.formats:
                print(_write(cfg, "portrait.json", dumps(doc)))
            if "svg" in cfg.formats:
                from .plotting import render_portrait
                os.makedirs(cfg.out_dir, exist_ok=True)
                path = os.path.join(cfg.out_dir, "portrait.svg")
                render_portrait(doc, path)
                print(path)
            return EXIT_OK
        if args.command == "sweep":
            try:
                s_list = [as_fraction(x) for x in args.s_list.split(",") if x.strip()]
                c_list = [as_fraction(x) for x in args.c_list.split(",") if x.strip()]
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigError(f"bad sweep list: {exc}") from exc
            rows = cmd_sweep(s_list, c_list)
            if "csv" in cfg.formats:
                print(_write(cfg, "sweep.csv", "\n".join(csv_lines(SWEEP_HEADER, rows))))
            return EXIT_OK
        raise ConfigError(f"unknown command {args.command!r}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
