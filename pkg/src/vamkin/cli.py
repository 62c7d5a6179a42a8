"""``vamk`` command-line front end.

Angles are degrees on the command line and in every output file; the
library works in radians. Settings come from built-in defaults, then an
optional ``--config`` file, then command-line flags (highest precedence).
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import List, Optional, Tuple, Union

import numpy as np

from . import io
from .exceptions import EmptyWorkspace
from .indices import evaluate_pose
from .mechanism import (
    ActuatingMode,
    MechanismGeometry,
    Pose,
    WorkingMode,
    full_ik,
    jacobian_pair,
    normalized_direct,
)
from .workspace import (
    PUBLISHED_RATIOS,
    VAM,
    CellClass,
    GridSpec,
    calibrate_char_length,
    classify_grid,
    compare_modes,
    rdw_search,
    scan_constant_phi_detail,
)

log = logging.getLogger("vamk")

EXIT_OK, EXIT_CONFIG, EXIT_UNREACHABLE = 0, 1, 2

DEFAULTS = {
    "mode": "1",
    "index": "angle",
    "threshold": None,
    "phi": "17.5",
    "phi_range": "5:25:21",
    "grid": "-9:9:400,-9:9:400",
    "working_mode": "+++",
    "char_length": "3.0",
    "jacobian": "kinematic",
    "out": None,
    "format": "csv",
    "workers": None,
    "base_side": "10.0",
    "platform_side": "5.0",
    "proximal_length": "3.0",
    "distal_length": "3.0",
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    geometry: MechanismGeometry
    mode: Union[int, str]
    index: str
    threshold: float  # library units (radians for the angle index)
    phi: float
    grid: GridSpec
    working_mode: WorkingMode
    char_length: Union[float, str]
    jacobian: str
    out: Optional[str]
    format: str
    workers: int

    @property
    def threshold_display(self) -> float:
        return math.degrees(self.threshold) if self.index == "angle" else self.threshold


def _interval(text: str, what: str) -> Tuple[float, float, int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"{what} must look like lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"bad {what} {text!r}: {exc}") from None
    return lo, hi, n


def parse_grid(text: str):
    halves = text.split(",")
    if len(halves) != 2:
        raise ConfigError(f"--grid must look like xlo:xhi:n,ylo:yhi:n, got {text!r}")
    (xlo, xhi, nx), (ylo, yhi, ny) = (_interval(h, "grid axis") for h in halves)
    if not (xhi > xlo and yhi > ylo) or nx < 2 or ny < 2:
        raise ConfigError(f"empty grid extents {text!r}")
    return (xlo, xhi, nx), (ylo, yhi, ny)


def build_config(ns: argparse.Namespace) -> RunConfig:
    settings = dict(DEFAULTS)
    if getattr(ns, "config", None):
        try:
            file_values = io.read_config(ns.config)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        unknown = set(file_values) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        settings.update(file_values)
    for key in DEFAULTS:
        value = getattr(ns, key, None)
        if value is not None:
            settings[key] = value

    try:
        geometry = MechanismGeometry.from_sides(
            float(settings["base_side"]),
            float(settings["platform_side"]),
            float(settings["proximal_length"]),
            float(settings["distal_length"]),
        )
    except ValueError as exc:
        raise ConfigError(f"bad geometry: {exc}") from None

    mode_text = str(settings["mode"]).strip().lower()
    if mode_text == VAM:
        mode: Union[int, str] = VAM
    else:
        try:
            mode = ActuatingMode(int(mode_text)).number
        except ValueError:
            raise ConfigError(f"--mode must be 1..8 or 'vam', got {settings['mode']!r}") from None

    index = str(settings["index"]).strip()
    if index not in ("cond", "angle"):
        raise ConfigError(f"--index must be 'cond' or 'angle', got {index!r}")

    if settings["threshold"] is None:
        threshold = 0.15 if index == "cond" else math.radians(75.0)
    else:
        try:
            t = float(settings["threshold"])
        except ValueError:
            raise ConfigError(f"bad threshold {settings['threshold']!r}") from None
        if not math.isfinite(t):
            raise ConfigError("threshold must be a finite number")
        hi = 90.0 if index == "angle" else 1.0
        if not 0.0 <= t <= hi:
            # out of range is legal, just trivially (un)satisfiable
            log.warning("threshold %g is outside [0, %g]; every cell will pass or fail alike", t, hi)
        threshold = math.radians(t) if index == "angle" else t

    try:
        phi = math.radians(float(settings["phi"]))
    except ValueError:
        raise ConfigError(f"bad phi {settings['phi']!r}") from None

    plo, phi_hi, pn = _interval(str(settings["phi_range"]), "phi range")
    (xlo, xhi, nx), (ylo, yhi, ny) = parse_grid(str(settings["grid"]))
    try:
        grid = GridSpec((xlo, xhi), (ylo, yhi), nx, ny, (math.radians(plo), math.radians(phi_hi)), pn)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    try:
        working_mode = WorkingMode.parse(str(settings["working_mode"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    cl = str(settings["char_length"]).strip()
    if cl == "calibrate":
        char_length: Union[float, str] = "calibrate"
    else:
        try:
            char_length = float(cl)
        except ValueError:
            raise ConfigError(f"--char-length must be a number or 'calibrate', got {cl!r}") from None
        if not char_length > 0:
            raise ConfigError("--char-length must be positive")

    jacobian = str(settings["jacobian"]).strip()
    if jacobian not in ("kinematic", "direct"):
        raise ConfigError(f"--jacobian must be 'kinematic' or 'direct', got {jacobian!r}")

    fmt_ = str(settings["format"]).strip()
    if fmt_ not in ("csv", "kv"):
        raise ConfigError(f"--format must be 'csv' or 'kv', got {fmt_!r}")

    workers = settings["workers"]
    try:
        workers = int(workers) if workers is not None else (os.cpu_count() or 1)
    except ValueError:
        raise ConfigError(f"bad worker count {workers!r}") from None
    if workers < 1:
        raise ConfigError("--workers must be at least 1")

    return RunConfig(
        geometry, mode, index, threshold, phi, grid, working_mode, char_length, jacobian, settings["out"], fmt_, workers
    )


def resolve_char_length(cfg: RunConfig) -> float:
    if cfg.char_length != "calibrate":
        return float(cfg.char_length)
    spec = cfg.grid
    length = calibrate_char_length(
        cfg.geometry,
        spec,
        PUBLISHED_RATIOS["cond"],
        threshold=cfg.threshold if cfg.index == "cond" else 0.15,
        working_mode=cfg.working_mode,
        phi=cfg.phi,
        jacobian=cfg.jacobian,
        workers=cfg.workers,
    )
    print(f"char_length={io.fmt(length)} (calibrated)")
    return length


# ---------------------------------------------------------------------------
# subcommands


def cmd_sample(cfg: RunConfig, x: float, y: float, phi_deg: float) -> int:
    mode_number = 1 if cfg.mode == VAM else cfg.mode
    mode = ActuatingMode(mode_number)
    char_length = resolve_char_length(cfg)
    pose = Pose.from_degrees(x, y, phi_deg)
    sample = evaluate_pose(cfg.geometry, pose, cfg.working_mode, mode, char_length, cfg.jacobian)
    if not sample.reachable:
        print(f"unreachable: leg {sample.unreachable_leg + 1}", file=sys.stderr)
        return EXIT_UNREACHABLE
    state = full_ik(cfg.geometry, pose, cfg.working_mode)
    pair = jacobian_pair(cfg.geometry, state, pose, mode)
    record = {
        "x": x,
        "y": y,
        "phi": phi_deg,
        "mode": mode.number,
        "working_mode": str(cfg.working_mode),
        "char_length": char_length,
        "reachable": True,
        "alpha": [math.degrees(a) for a in state.alpha],
        "delta": [math.degrees(d) for d in state.delta],
        "det_a": float(np.linalg.det(normalized_direct(pair, char_length))),
        "b": list(pair.inverse_b),
        "inv_condition": sample.inv_condition,
        "psi_legs": [math.degrees(p) for p in sample.transmission_angles],
        "psi": math.degrees(sample.transmission_angle),
        "serial_singular": sample.serial_singular,
        "parallel_singular": sample.parallel_singular,
    }
    for key, value in record.items():
        if isinstance(value, list):
            text = " ".join(io.fmt(v) for v in value)
        elif isinstance(value, float):
            text = io.fmt(value)
        else:
            text = str(value).lower() if isinstance(value, bool) else str(value)
        print(f"{key}={text}")
    if cfg.out:
        io.write_records(cfg.out, [record])
    return EXIT_OK


def cmd_scan(cfg: RunConfig) -> int:
    char_length = resolve_char_length(cfg) if cfg.index == "cond" else 3.0
    res = scan_constant_phi_detail(
        cfg.geometry, cfg.mode, cfg.phi, cfg.grid, cfg.index, cfg.threshold, cfg.working_mode, char_length,
        jacobian=cfg.jacobian, workers=cfg.workers,
    )
    cells = np.where(
        ~res.reachable, CellClass.DARK, np.where(res.passing, CellClass.LIGHT_GRAY, CellClass.DARK_GRAY)
    )
    values = np.where(res.reachable, res.values, np.nan)
    if cfg.index == "angle":
        values = np.degrees(values)
    if cfg.out:
        if cfg.format == "csv":
            io.write_grid_csv(cfg.out, cfg.grid.xs, cfg.grid.ys, cells, values)
        else:
            io.write_records(cfg.out, [_scan_record(cfg, res.ratio, char_length)])
    print(f"ratio={res.ratio * 100:.2f}")
    return EXIT_OK


def _scan_record(cfg, ratio, char_length):
    return {
        "command": "scan",
        "mode": cfg.mode,
        "index": cfg.index,
        "threshold": cfg.threshold_display,
        "phi": math.degrees(cfg.phi),
        "char_length": char_length,
        "ratio": ratio,
    }


def cmd_rdw(cfg: RunConfig) -> int:
    char_length = resolve_char_length(cfg) if cfg.index == "cond" else 3.0
    scan = classify_grid(
        cfg.geometry, cfg.mode, cfg.grid, cfg.index, cfg.threshold, cfg.working_mode, char_length, cfg.jacobian, cfg.workers
    )
    rdw = rdw_search(scan)
    if rdw.radius == 0.0:
        log.warning("no LightGray cell: regular dextrous workspace is empty")
    values = np.degrees(scan.values) if cfg.index == "angle" else scan.values
    record = {
        "command": "rdw",
        "mode": cfg.mode,
        "index": cfg.index,
        "threshold": cfg.threshold_display,
        "phi_range": [math.degrees(p) for p in cfg.grid.phi_range],
        "char_length": char_length,
        "center": list(rdw.center),
        "radius": rdw.radius,
    }
    if cfg.out:
        if cfg.format == "csv":
            io.write_grid_csv(cfg.out, cfg.grid.xs, cfg.grid.ys, scan.cells, values)
        else:
            io.write_records(cfg.out, [record])
    cx, cy = rdw.center
    print(f"center=({io.fmt(cx)},{io.fmt(cy)}) radius={rdw.radius:.3f}")
    return EXIT_OK


GROUP_LABELS = [("1", (1,)), ("2,3,4", (2, 3, 4)), ("5,6,7", (5, 6, 7)), ("8", (8,)), ("VAM", (VAM,))]


def cmd_compare(cfg: RunConfig) -> int:
    results = {}
    lengths = {}
    for index in ("angle", "cond"):
        if index == "cond":
            sub = RunConfig(**{**cfg.__dict__, "index": "cond", "threshold": 0.15 if cfg.index != "cond" else cfg.threshold})
            lengths[index] = resolve_char_length(sub)
            threshold = sub.threshold
        else:
            lengths[index] = 3.0
            threshold = cfg.threshold if cfg.index == "angle" else math.radians(75.0)
        results[index] = compare_modes(
            cfg.geometry, cfg.grid, index, threshold, cfg.working_mode, lengths[index], cfg.phi, cfg.jacobian, cfg.workers
        )
    records = []
    for index in ("cond", "angle"):
        for row in results[index]:
            records.append(
                {
                    "index": index,
                    "mode": row.mode,
                    "ratio": row.ratio,
                    "rdw_radius": row.rdw.radius,
                    "rdw_center": list(row.rdw.center),
                    "char_length": lengths[index],
                }
            )
    print(render_table(results))
    if cfg.out:
        if cfg.format == "kv":
            io.write_records(cfg.out, records)
        else:
            _write_compare_csv(cfg.out, records)
    return EXIT_OK


def _by_mode(rows):
    return {row.mode: row for row in rows}


def render_table(results) -> str:
    cond, angle = _by_mode(results["cond"]), _by_mode(results["angle"])
    head = f"{'mode':<7} {'ratio cond %':>13} {'ratio psi %':>12} {'rdw cond':>9} {'rdw psi':>8}"
    lines = [head, "-" * len(head)]
    for label, members in GROUP_LABELS:
        for m in members:
            tag = str(m).upper() if m == VAM else str(m)
            lines.append(
                f"{tag:<7} {cond[m].ratio * 100:>13.2f} {angle[m].ratio * 100:>12.2f} "
                f"{cond[m].rdw.radius:>9.3f} {angle[m].rdw.radius:>8.3f}"
            )
        if len(members) > 1:
            lines.append(
                f"{'  avg':<7} {np.mean([cond[m].ratio for m in members]) * 100:>13.2f} "
                f"{np.mean([angle[m].ratio for m in members]) * 100:>12.2f} "
                f"{np.mean([cond[m].rdw.radius for m in members]):>9.3f} "
                f"{np.mean([angle[m].rdw.radius for m in members]):>8.3f}"
            )
    return "\n".join(lines)


def _write_compare_csv(path, records):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("index,mode,ratio,rdw_radius,rdw_center_x,rdw_center_y,char_length\n")
        for r in records:
            cx, cy = r["rdw_center"]
            fh.write(
                f"{r['index']},{r['mode']},{io.fmt(r['ratio'])},{io.fmt(r['rdw_radius'])},"
                f"{io.fmt(cx)},{io.fmt(cy)},{io.fmt(r['char_length'])}\n"
            )


def cmd_calibrate(cfg: RunConfig) -> int:
    cfg = RunConfig(**{**cfg.__dict__, "char_length": "calibrate"})
    if cfg.index != "cond":
        cfg = RunConfig(**{**cfg.__dict__, "index": "cond", "threshold": 0.15})
    length = resolve_char_length(cfg)
    if cfg.out:
        io.write_records(cfg.out, [{"command": "calibrate", "jacobian": cfg.jacobian, "char_length": length}])
    return EXIT_OK


# ---------------------------------------------------------------------------


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("run settings")
    g.add_argument("--config", help="flat 'key = value' file; flags override it")
    g.add_argument("--mode", help="actuating mode 1..8 or 'vam'")
    g.add_argument("--index", help="'cond' (1/kappa_F) or 'angle' (transmission angle)")
    g.add_argument("--threshold", help="0.15 for cond, 75 (degrees) for angle by default")
    g.add_argument("--phi", help="fixed orientation in degrees (scan)")
    g.add_argument("--phi-range", dest="phi_range", help="lo:hi:steps in degrees (rdw)")
    g.add_argument("--grid", help="xlo:xhi:n,ylo:yhi:n")
    g.add_argument("--working-mode", dest="working_mode", help="elbow signs, e.g. +++ or +-+")
    g.add_argument("--char-length", dest="char_length", help="normalizing length or 'calibrate'")
    g.add_argument("--jacobian", help="'kinematic' (J = A^-1 B, default) or 'direct' (A alone)")
    g.add_argument("--out", help="output path")
    g.add_argument("--format", help="'csv' or 'kv' (JSON lines)")
    g.add_argument("--workers", help="worker threads (default: CPU count)")
    g.add_argument("--base-side", dest="base_side")
    g.add_argument("--platform-side", dest="platform_side")
    g.add_argument("--proximal-length", dest="proximal_length")
    g.add_argument("--distal-length", dest="distal_length")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vamk", description="Kinetostatic analysis of the 3-RRR variable actuated mechanism")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="evaluate one pose")
    p.add_argument("x", type=float)
    p.add_argument("y", type=float)
    p.add_argument("phi_deg", type=float, metavar="phi")
    _common(p)

    for name, help_ in (
        ("scan", "workspace size ratio at fixed phi"),
        ("rdw", "zone map over the phi range and its regular dextrous workspace"),
        ("compare", "ratios and RDW radii of modes 1..8 and the VAM, both indices"),
        ("calibrate", "characteristic length that best matches the published size ratios"),
    ):
        _common(sub.add_parser(name, help=help_))
    return parser


# value-taking flags whose values may start with '-' (e.g. --grid -9:9:400,...)
_VALUE_FLAGS = ("--grid", "--phi-range", "--threshold", "--phi")


def _glue_values(argv: List[str]) -> List[str]:
    out, it = [], iter(argv)
    for arg in it:
        if arg in _VALUE_FLAGS:
            nxt = next(it, None)
            out.append(arg if nxt is None else f"{arg}={nxt}")
        else:
            out.append(arg)
    return out


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(_glue_values(sys.argv[1:] if argv is None else list(argv)))
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = build_config(ns)
        if ns.command == "sample":
            return cmd_sample(cfg, ns.x, ns.y, ns.phi_deg)
        if ns.command == "scan":
            return cmd_scan(cfg)
        if ns.command == "rdw":
            return cmd_rdw(cfg)
        if ns.command == "compare":
            return cmd_compare(cfg)
        if ns.command == "calibrate":
            return cmd_calibrate(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyWorkspace as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    parser.error(f"unknown command {ns.command}")
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
