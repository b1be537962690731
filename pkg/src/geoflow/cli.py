"""Command-line entry point: configuration, suite dispatch, CSV and SVG output."""
from __future__ import annotations

import argparse
import configparser
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import experiments as ex
from .fuchsian import Bump, ConfigurationError, InvariantObservable, max_bump_radius, octagon_group
from .lie_core import GroupElement
from .reparam import QuadratureSpec

SURFACE = "octagon-genus2"

COMMANDS = ("verify-quadrilateral", "verify-cross-ratio", "verify-busemann", "verify-parry",
            "verify-main-theorem", "h-routes", "bounds", "mean-zero", "stokes", "cb-check",
            "constant-degeneration", "mixing", "density")

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    surface: str = SURFACE
    base: float = 1.0
    # (c-, c0, c+, amplitude, radius): center exp(c- X- + c0 G + c+ X+)
    bumps: list = field(default_factory=lambda: [(0.0, 0.0, 0.0, 0.1, 0.6)])
    step: float = 0.1
    nodes: int = 16
    tail_tolerance: float = 1e-10
    max_time: float = 60.0
    seed: int = 0
    deltas: tuple = (0.08, 0.04, 0.02)
    samples: int = 50
    route_samples: int = 20
    mean_samples: int = 100_000
    mean_zero_deltas: tuple = (0.1, 0.05)
    mean_zero_samples: int = 100_000
    circuits: int = 20
    stokes_side: float = 0.2
    tile_deltas: tuple = (0.04, 0.02, 0.01)
    mixing_samples: int = 100_000
    t_grid: tuple = tuple(float(t) for t in range(9))
    density_samples: int = 2000
    density_times: tuple = (0.0, 2.0, 4.0, 8.0)
    degeneration_constant: float = 1.7
    out: str = "results"
    plots: bool = True

    def observable(self) -> InvariantObservable:
        bumps = []
        for cm, c0, cp, amp, radius in self.bumps:
            center = ex._displace(np.eye(2)[None], np.array([[cm, c0, cp]]))[0]
            bumps.append(Bump(GroupElement.from_matrix(center), amp, radius))
        return InvariantObservable(self.base, bumps)

    def spec(self) -> QuadratureSpec:
        return QuadratureSpec(self.step, self.nodes, self.tail_tolerance, self.max_time)


def _floats(text) -> tuple:
    return tuple(float(x) for x in text.replace(",", " ").split())


def _bumps(text) -> list:
    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = _floats(chunk)
        if len(vals) != 5:
            raise ConfigError(f"bump entry {chunk.strip()!r} needs 5 numbers: c- c0 c+ amplitude radius")
        out.append(vals)
    return out


def _on_off(text) -> bool:
    low = str(text).strip().lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"expected on/off, got {text!r}")


# (section, key) -> (Config attribute, parser)
_KEYS = {
    ("surface", "name"): ("surface", str),
    ("observable", "base"): ("base", float),
    ("observable", "bumps"): ("bumps", _bumps),
    ("quadrature", "step"): ("step", float),
    ("quadrature", "nodes"): ("nodes", int),
    ("quadrature", "tail_tolerance"): ("tail_tolerance", float),
    ("quadrature", "max_time"): ("max_time", float),
    ("experiments", "seed"): ("seed", int),
    ("experiments", "deltas"): ("deltas", _floats),
    ("experiments", "samples"): ("samples", int),
    ("experiments", "route_samples"): ("route_samples", int),
    ("experiments", "mean_samples"): ("mean_samples", int),
    ("experiments", "mean_zero_deltas"): ("mean_zero_deltas", _floats),
    ("experiments", "mean_zero_samples"): ("mean_zero_samples", int),
    ("experiments", "circuits"): ("circuits", int),
    ("experiments", "stokes_side"): ("stokes_side", float),
    ("experiments", "tile_deltas"): ("tile_deltas", _floats),
    ("experiments", "mixing_samples"): ("mixing_samples", int),
    ("experiments", "t_grid"): ("t_grid", _floats),
    ("experiments", "density_samples"): ("density_samples", int),
    ("experiments", "density_times"): ("density_times", _floats),
    ("experiments", "degeneration_constant"): ("degeneration_constant", float),
    ("output", "dir"): ("out", str),
    ("output", "plots"): ("plots", _on_off),
}


def load_config(path=None) -> Config:
    """Read an INI file into a validated :class:`Config`; ``None`` gives the defaults."""
    cfg = Config()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} not found")
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise ConfigError(str(exc)) from exc
        for section in parser.sections():
            for key, text in parser.items(section):
                if (section, key) not in _KEYS:
                    raise ConfigError(f"unknown key [{section}] {key}")
                attr, parse = _KEYS[(section, key)]
                try:
                    setattr(cfg, attr, parse(text))
                except ValueError as exc:
                    raise ConfigError(f"[{section}] {key}: {exc}") from exc
    validate(cfg)
    return cfg


def validate(cfg: Config):
    if cfg.surface != SURFACE:
        raise ConfigError(f"only the surface {SURFACE!r} is supported")
    if not (cfg.base > 0 and math.isfinite(cfg.base)):
        raise ConfigError("observable base value must be positive")
    budget = sum(abs(b[3]) for b in cfg.bumps)
    if cfg.base - budget <= 0:
        raise ConfigError("bump amplitudes can make the observable non-positive")
    rmax = max_bump_radius(octagon_group())
    for b in cfg.bumps:
        if not (0 < b[4] < rmax):
            raise ConfigError(f"bump radius {b[4]} must lie in (0, {rmax:.6f})")
    if cfg.step <= 0 or cfg.nodes < 1 or cfg.tail_tolerance <= 0 or cfg.max_time <= 0:
        raise ConfigError("quadrature parameters must be positive")
    if any(not (0 < d <= 0.1) for d in cfg.deltas):
        raise ConfigError("deltas must lie in (0, 0.1]")
    if any(not (0 < d <= 0.2) for d in cfg.mean_zero_deltas):
        raise ConfigError("mean_zero_deltas must lie in (0, 0.2]")
    if len(cfg.deltas) < 2 or len(cfg.tile_deltas) < 2:
        raise ConfigError("order fits need at least two grid points")
    for name in ("samples", "route_samples", "circuits", "density_samples"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be positive")
    for name in ("mean_samples", "mean_zero_samples", "mixing_samples"):
        if getattr(cfg, name) < 1000:
            raise ConfigError(f"{name} must be at least 1000")
    if any(t < 0 for t in cfg.t_grid) or len(cfg.t_grid) < 3:
        raise ConfigError("t_grid needs at least three non-negative times")
    for d in cfg.tile_deltas:
        n = round(cfg.stokes_side / d)
        if n < 1 or abs(n * d - cfg.stokes_side) > 1e-9 * cfg.stokes_side:
            raise ConfigError("tile_deltas must divide stokes_side")
    try:
        cfg.observable()
    except ConfigurationError as exc:
        raise ConfigError(str(exc)) from exc


# ------------------------------------------------------------------ dispatch

def run_suite(command: str, cfg: Config) -> list:
    """Reports produced by one command."""
    psi, spec, seed = cfg.observable(), cfg.spec(), cfg.seed
    if command == "verify-quadrilateral":
        return [ex.quadrilateral_suite(seed=seed)]
    if command == "verify-cross-ratio":
        return [ex.cross_ratio_suite(psi, cfg.circuits, seed, spec)]
    if command == "verify-busemann":
        return [ex.busemann_suite(psi, cfg.circuits, seed, spec)]
    if command == "verify-parry":
        return [ex.parry_suite(psi, cfg.circuits, seed, spec)]
    if command == "verify-main-theorem":
        return [ex.verify_main_theorem(psi, cfg.deltas, cfg.samples, seed, cfg.mean_samples, spec)]
    if command == "h-routes":
        return [ex.h_delta_routes(psi, cfg.deltas, cfg.route_samples, seed, spec)]
    if command == "bounds":
        return [ex.bounds_check(psi, m_samples=cfg.samples, seed=seed, spec=spec)]
    if command == "mean-zero":
        return [ex.mean_zero_check(psi, d, cfg.mean_zero_samples, seed) for d in cfg.mean_zero_deltas]
    if command == "stokes":
        psi_bar, _ = ex.estimate_mean(psi, cfg.mean_samples, seed)
        return [ex.stokes_sweep(psi, cfg.stokes_side, cfg.tile_deltas, psi_bar=psi_bar, seed=seed,
                                spec=spec)]
    if command == "cb-check":
        return [ex.cb_suite(psi, seed=seed, spec=spec)]
    if command == "constant-degeneration":
        return [ex.constant_degeneration_suite(cfg.degeneration_constant, seed=seed, spec=spec)]
    if command == "mixing":
        return [ex.mixing_probe(psi, psi, t_grid=cfg.t_grid, n=cfg.mixing_samples, seed=seed)]
    if command == "density":
        return [ex.density_probe(cfg.density_times, cfg.density_samples, seed)]
    raise ConfigError(f"unknown command {command!r}")


# -------------------------------------------------------------------- output

def _cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    text = str(x)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def write_csv(path: Path, reports: list):
    """One block per report: an experiment row, the column header, then data rows."""
    lines = []
    for rep in reports:
        lines.append(f"experiment,{rep.name}")
        lines.append(",".join(rep.columns))
        lines.extend(",".join(_cell(x) for x in row) for row in rep.rows)
    path.write_text("\n".join(lines) + "\n")


# command -> (x column, y column, log x, log y, reduce y to its max per x)
_PLOTS = {
    "verify-quadrilateral": ("delta", "max_gap", True, True, False),
    "verify-main-theorem": ("delta", "deviation", True, True, True),
    "h-routes": ("delta", "difference", True, True, True),
    "stokes": ("delta_tile", "abs_residual", True, True, False),
    "mixing": ("t", "correlation", False, True, False),
    "density": ("T", "covering_radius", False, False, False),
}


def svg_plot(report, x_col, y_col, logx, logy, reduce_max, width=480, height=320) -> str:
    """Self-contained SVG line plot of one report column against another."""
    xs, ys = report.column(x_col).astype(float), np.abs(report.column(y_col).astype(float))
    if reduce_max:
        keys = sorted(set(xs.tolist()))
        ys = np.array([ys[xs == k].max() for k in keys])
        xs = np.array(keys)
    keep = np.isfinite(xs) & np.isfinite(ys)
    if logx:
        keep &= xs > 0
    if logy:
        keep &= ys > 0
    xs, ys = xs[keep], ys[keep]
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    px, py = (np.log10(xs) if logx else xs), (np.log10(ys) if logy else ys)
    pad = 50

    def scale(v, lo, hi, a, b):
        return a + (b - a) * (0.5 if hi == lo else (v - lo) / (hi - lo))

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
             f'viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>',
             f'<line x1="{pad}" y1="{height - pad}" x2="{width - 10}" y2="{height - pad}" stroke="black"/>',
             f'<line x1="{pad}" y1="10" x2="{pad}" y2="{height - pad}" stroke="black"/>',
             f'<text x="{width / 2:.1f}" y="{height - 12}" font-size="12" text-anchor="middle">'
             f'{"log10 " if logx else ""}{x_col}</text>',
             f'<text x="14" y="{height / 2:.1f}" font-size="12" text-anchor="middle" '
             f'transform="rotate(-90 14 {height / 2:.1f})">{"log10 |" if logy else "|"}{y_col}|</text>']
    if len(px):
        sx = [scale(v, px.min(), px.max(), pad, width - 20) for v in px]
        sy = [scale(v, py.min(), py.max(), height - pad, 20) for v in py]
        pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(sx, sy))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="steelblue" stroke-width="2"/>')
        parts.extend(f'<circle cx="{a:.2f}" cy="{b:.2f}" r="3" fill="steelblue"/>' for a, b in zip(sx, sy))
        for v, s in ((px.min(), sx[0]), (px.max(), sx[-1])):
            parts.append(f'<text x="{s:.2f}" y="{height - pad + 16}" font-size="10" '
                         f'text-anchor="middle">{v:.3g}</text>')
        for v in (py.min(), py.max()):
            s = scale(v, py.min(), py.max(), height - pad, 20)
            parts.append(f'<text x="{pad - 4}" y="{s:.2f}" font-size="10" text-anchor="end">{v:.3g}</text>')
    parts.append(f'<text x="{width / 2:.1f}" y="16" font-size="13" text-anchor="middle">{report.name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit(command: str, reports: list, cfg: Config, stream=None) -> bool:
    stream = sys.stdout if stream is None else stream
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(out / f"{command}.csv", reports)
    if cfg.plots and command in _PLOTS:
        (out / f"{command}.svg").write_text(svg_plot(reports[0], *_PLOTS[command]))
    ok = True
    for rep in reports:
        for check in rep.checks:
            print(f"[{command}] {check.line()}", file=stream)
        ok &= rep.passed
    return ok


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geoflow", description="Numerical checks for time-changed "
                                     "geodesic flows on a genus-two hyperbolic surface.")
    parser.add_argument("command", choices=COMMANDS + ("all",))
    parser.add_argument("--config", help="INI file with [surface], [observable], [quadrature], "
                        "[experiments] and [output] sections")
    parser.add_argument("--out", help="output directory (overrides [output] dir)")
    parser.add_argument("--seed", type=int, help="random seed (overrides [experiments] seed)")
    parser.add_argument("--tol", type=float, help="quadrature tail tolerance")
    parser.add_argument("--plots", choices=("on", "off"), help="write SVG plots")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors and 0 on --help
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.out is not None:
            overrides["out"] = args.out
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("seed must be an unsigned 64-bit integer")
            overrides["seed"] = args.seed
        if args.tol is not None:
            overrides["tail_tolerance"] = args.tol
        if args.plots is not None:
            overrides["plots"] = args.plots == "on"
        cfg = replace(cfg, **overrides)
        validate(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    commands = COMMANDS if args.command == "all" else (args.command,)
    ok = True
    for command in commands:
        ok &= emit(command, run_suite(command, cfg), cfg)
    return EXIT_PASS if ok else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
