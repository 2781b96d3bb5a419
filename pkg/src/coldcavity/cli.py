"""Command-line interface.

Subcommands::

    pump     pumping curves N(t) on an intensity grid plus a beta table
    steady   steady states at one phase and the branch diagram over a phase range
    map      stability classes on a (drive, phi0) grid
    scan     time-domain run of a preset or configured protocol
    convert  laboratory units to dimensionless model parameters

Configuration files hold ``key = value`` lines; ``#`` starts a comment.
Keys are the field names of ``PhysicalConfig``, ``ModelParams`` and
``ScanProtocol`` (protocol keys: ``kind``, ``duration``, ``phi0_start``,
``phi0_end``, ``ramp_rate``, ``atom_decay_rate``, ``round_trip``).
Exit status is 0 on success, 1 on a usage or configuration error and 2
when a numerical method fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import re
import sys
from pathlib import Path

import numpy as np

from coldcavity.dynamics import (
    ScanKind,
    ScanProtocol,
    cycle_mechanism,
    detect_limit_cycle,
    detect_switches,
    integrate,
)
from coldcavity.emit import emit_csv, emit_json, emit_svg
from coldcavity.errors import ConfigError, NumericalError, WindowTooShortError
from coldcavity.model import ModelParams, Variant
from coldcavity.physical import PhysicalConfig, to_dimensionless
from coldcavity.presets import PRESET_NAMES, scenario
from coldcavity.steady import (
    bistability_threshold,
    branch_diagram,
    find_fixed_points,
    input_intensity,
    instability_map,
    peak_intensity,
)
from coldcavity.zeeman import (
    FIG5_DELTA,
    FIG5_INTENSITIES,
    SublevelPopulations,
    beta_for,
    evolve_populations,
    pumping_time_scale,
)

log = logging.getLogger("coldcavity")

FORMATS = ("csv", "json", "svg")
PRESET_GROUPS = {
    "fig3": tuple(n for n in PRESET_NAMES if n.startswith("fig3_")),
    "fig6": tuple(n for n in PRESET_NAMES if n.startswith("fig6_")),
}
PHYSICAL_KEYS = {f.name for f in dataclasses.fields(PhysicalConfig)}
MODEL_KEYS = {f.name for f in dataclasses.fields(ModelParams)}
PROTOCOL_KEYS = {f.name for f in dataclasses.fields(ScanProtocol)}
CONVERT_KEYS = {"phi0", "beta", "gamma_p", "variant"}


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """argparse parser that reports usage errors with exit status 1.

    Values such as ``-1.4,-1.1,7`` are taken as arguments, not flags.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._negative_number_matcher = re.compile(r"^-\.?\d[\d.,eE+-]*$")

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# -- configuration -------------------------------------------------------------

def read_config(path) -> dict[str, str]:
    entries = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror or exc}") from exc
    for number, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"{path}:{number}: expected 'key = value', got {raw.strip()!r}")
        known = PHYSICAL_KEYS | MODEL_KEYS | PROTOCOL_KEYS
        if key not in known:
            raise ConfigError(f"{path}:{number}: unknown key {key!r}; valid keys: "
                              + ", ".join(sorted(known)))
        entries[key] = value
    return entries


def _value(key, text):
    if key == "variant":
        try:
            return Variant(text.lower())
        except ValueError:
            raise ConfigError(f"variant must be one of {[v.value for v in Variant]}, got {text!r}")
    if key == "kind":
        try:
            return ScanKind(text)
        except ValueError:
            raise ConfigError(f"kind must be one of {[k.value for k in ScanKind]}, got {text!r}")
    if key == "round_trip":
        if text.lower() not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"round_trip must be true or false, got {text!r}")
        return text.lower() in ("true", "1", "yes")
    if key in ("dipole", "saturation_intensity", "mirror_transmission") and text.lower() == "none":
        return None
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {text!r}") from None


def _typed(entries, keys):
    return {k: _value(k, v) for k, v in entries.items() if k in keys}


def physical_from_config(entries) -> PhysicalConfig:
    return PhysicalConfig(**_typed(entries, PHYSICAL_KEYS))


def params_from_config(entries, base: ModelParams | None = None) -> ModelParams:
    """Model parameters from config entries.

    Laboratory keys are converted first; model keys then override. Without
    laboratory keys every model field must be given unless ``base`` supplies it.
    """
    model = _typed(entries, MODEL_KEYS)
    if entries.keys() & (PHYSICAL_KEYS - MODEL_KEYS):
        extra = {k: model[k] for k in CONVERT_KEYS if k in model}
        base = to_dimensionless(physical_from_config(entries), **extra)
    if base is not None:
        return base.replace(**model)
    missing = sorted(MODEL_KEYS - {"variant", "mirror_transmission"} - model.keys())
    if missing:
        raise ConfigError("config lacks model parameters: " + ", ".join(missing))
    return ModelParams(**model)


def protocol_from_config(entries, base: ScanProtocol | None = None) -> ScanProtocol | None:
    fields = _typed(entries, PROTOCOL_KEYS)
    if not fields:
        return base
    if base is not None:
        return dataclasses.replace(base, **fields)
    if "kind" not in fields or "duration" not in fields and fields["kind"] is not ScanKind.RAMP:
        raise ConfigError("a protocol needs at least 'kind' and 'duration'")
    if fields["kind"] is ScanKind.RAMP and "duration" not in fields:
        if not {"phi0_start", "phi0_end", "ramp_rate"} <= fields.keys():
            raise ConfigError("a ramp needs phi0_start, phi0_end and ramp_rate")
        leg = abs(fields["phi0_end"] - fields["phi0_start"]) / fields["ramp_rate"]
        fields["duration"] = leg * (2 if fields.get("round_trip") else 1)
    return ScanProtocol(**fields)


def _float_list(text, flag):
    try:
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"{flag}: expected comma-separated numbers, got {text!r}") from None
    if not values:
        raise UsageError(f"{flag}: empty list")
    return values


def _range(text, flag):
    values = _float_list(text, flag)
    if len(values) != 3 or values[2] < 1 or values[2] != int(values[2]):
        raise UsageError(f"{flag}: expected start,stop,count, got {text!r}")
    return np.linspace(values[0], values[1], int(values[2]))


def _resolve(args, need_protocol=False):
    """(name, params, protocol, initial) runs from --preset and/or --config."""
    entries = read_config(args.config) if args.config else {}
    names = []
    if args.preset:
        if args.preset in PRESET_GROUPS:
            names = list(PRESET_GROUPS[args.preset])
        elif args.preset in PRESET_NAMES:
            names = [args.preset]
        else:
            choices = ", ".join([*PRESET_NAMES, *PRESET_GROUPS])
            raise UsageError(f"--preset: unknown name {args.preset!r}; choose from {choices}")
    runs = []
    for name in names:
        sc = scenario(name)
        runs.append((name, params_from_config(entries, sc.params),
                     protocol_from_config(entries, sc.protocol), sc.initial))
    if not names:
        if not entries:
            raise UsageError("give --preset or --config")
        runs.append(("config", params_from_config(entries), protocol_from_config(entries), None))
    if need_protocol and any(r[2] is None for r in runs):
        raise ConfigError("this command needs a scan protocol (preset or 'kind' in the config)")
    return runs


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def params_dict(params: ModelParams) -> dict:
    d = dataclasses.asdict(params)
    d["variant"] = params.variant.value
    return d


# -- subcommands ---------------------------------------------------------------

def cmd_pump(args):
    intensities = _float_list(args.intensities, "--intensities")
    if any(i <= 0 for i in intensities):
        raise UsageError("--intensities: values must be > 0")
    out = _out_dir(args)
    t_end = args.t_end or 5.0 * pumping_time_scale(min(intensities), args.delta)
    table = []
    for intensity in intensities:
        traj = evolve_populations(SublevelPopulations.uniform_ground(), intensity, args.delta,
                                  t_end, n_points=args.samples, rtol=args.tol)
        # the shared grid is sized for the slowest curve; fit each on its own
        beta = beta_for(args.delta, intensity)
        table.append({"intensity": intensity, "beta": beta, "rate": beta * intensity,
                      "final_N": float(traj.stretched[-1])})
        stem = f"pump_I{intensity:g}"
        if args.format == "csv":
            emit_csv(traj, out / f"{stem}.csv", populations=args.populations)
        elif args.format == "svg":
            emit_svg(traj, out / f"{stem}.svg")
        print(f"I = {intensity:g}: beta = {beta:.6g}, beta*I = {beta * intensity:.3g}")
    emit_json({"delta": args.delta, "t_end": t_end, "beta_table": table}, out / "summary.json")
    return 0


def cmd_steady(args):
    out = _out_dir(args)
    summary = {}
    for name, params, _, _ in _resolve(args):
        points = find_fixed_points(params)
        lo, hi = params.phi0 - 1.0, params.phi0 + 1.0
        phi0_grid = _range(args.phi0_range, "--phi0-range") if args.phi0_range else \
            np.linspace(lo, hi, 201)
        diagram = branch_diagram(params, phi0_grid)
        max_roots = int(diagram.counts.max())
        entry = {
            "params": params_dict(params),
            "fixed_points": points,
            "turning_points": diagram.turning_points,
            "max_roots": max_roots,
            "three_root_region": max_roots >= 3,
            "peak_intensity": peak_intensity(params),
            "input_intensity": input_intensity(params),
        }
        try:
            entry["bistability_threshold"] = bistability_threshold(params)
        except ConfigError:
            entry["bistability_threshold"] = None
        summary[name] = entry
        if args.format == "csv":
            emit_csv(diagram, out / f"{name}_branches.csv")
        print(f"{name}: {len(points)} steady state(s) at phi0 = {params.phi0:g}; "
              f"up to {max_roots} roots over the phase range"
              + ("; 3-root region present" if max_roots >= 3 else ""))
        for a, b in zip(diagram.turning_points[::2], diagram.turning_points[1::2]):
            print(f"  3-root region: phi0 in [{a:.6f}, {b:.6f}]")
    emit_json(summary, out / "summary.json")
    return 0


def cmd_map(args):
    out = _out_dir(args)
    (name, params, _, _), *rest = _resolve(args)
    if rest:
        raise UsageError("--preset: map takes a single scenario")
    phi0 = _range(args.phi0_range, "--phi0-range")
    drive = _range(args.drive_range, "--drive-range") if args.drive_range else \
        np.linspace(0.25 * params.drive, 4.0 * params.drive, 16)
    smap = instability_map(params, phi0, drive, workers=args.workers)
    if args.format == "csv":
        emit_csv(smap, out / f"{name}_map.csv")
    elif args.format == "svg":
        emit_svg(smap, out / f"{name}_map.svg")
    counts = {}
    for row in smap.rows():
        for label in row[3].split(";"):
            counts[label] = counts.get(label, 0) + 1
    emit_json({"params": params_dict(params), "cells": int(smap.n_roots.size),
               "failed": int(smap.failed.sum()), "class_counts": dict(sorted(counts.items()))},
              out / "summary.json")
    print(f"{smap.n_roots.size} cells, {int(smap.failed.sum())} failed; "
          + ", ".join(f"{k}: {v}" for k, v in sorted(counts.items())))
    return 0


def cmd_scan(args):
    out = _out_dir(args)
    summary = {}
    for name, params, protocol, initial in _resolve(args, need_protocol=True):
        samples = args.samples or max(2001, int(protocol.duration) + 1)
        trace = integrate(params, protocol, initial, tol=args.tol, samples=samples)
        switches = detect_switches(trace) if len(trace) >= 100 else []
        try:
            cycle = detect_limit_cycle(trace)
        except WindowTooShortError as exc:
            log.warning("%s: %s", name, exc)
            cycle = None
        entry = {
            "params": params_dict(params),
            "protocol": {**dataclasses.asdict(protocol), "kind": protocol.kind.value},
            "steps": trace.meta["steps"],
            "switches": switches,
            "cycle": cycle,
        }
        if cycle is not None and cycle.detected:
            entry["mechanism"] = cycle_mechanism(trace, cycle)
        summary[name] = entry
        if args.format == "csv":
            emit_csv(trace, out / f"{name}_trace.csv")
        elif args.format == "svg":
            emit_svg(trace, out / f"{name}_trace.svg")
        ups = sum(e.direction == "up" for e in switches)
        downs = len(switches) - ups
        pulsing = f", pulsing at f = {cycle.frequency:.4g}" if cycle and cycle.detected else ""
        print(f"{name}: {ups} up-switch(es), {downs} down-switch(es){pulsing}")
    emit_json(summary, out / "summary.json")
    return 0


def cmd_convert(args):
    if not args.config:
        raise UsageError("--config is required for convert")
    entries = read_config(args.config)
    params = to_dimensionless(physical_from_config(entries),
                              **_typed({k: v for k, v in entries.items() if k in CONVERT_KEYS},
                                       CONVERT_KEYS))
    out = _out_dir(args)
    data = params_dict(params)
    emit_json(data, out / "params.json")
    if args.format == "csv":
        with (out / "params.csv").open("w") as fh:
            fh.write("key,value\n")
            for key, value in data.items():
                fh.write(f"{key},{value if isinstance(value, str) else format(value, '.17g')}\n")
    for key, value in data.items():
        print(f"{key} = {value}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="coldcavity", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def common(p, preset=True):
        p.add_argument("--config", help="key=value file")
        if preset:
            p.add_argument("--preset", help="scenario name: " + ", ".join(PRESET_NAMES)
                           + " (or the groups fig3, fig6)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=FORMATS, default="csv")
        p.add_argument("--tol", type=float, default=1e-8, help="integrator tolerance")

    p = sub.add_parser("pump", help="Zeeman pumping curves and beta table")
    common(p, preset=False)
    p.add_argument("--intensities", default=",".join(str(i) for i in FIG5_INTENSITIES))
    p.add_argument("--delta", type=float, default=FIG5_DELTA)
    p.add_argument("--t-end", type=float, default=None, help="default: 5 slowest pumping times")
    p.add_argument("--samples", type=int, default=4000)
    p.add_argument("--populations", action="store_true", help="write all sublevel columns")
    p.set_defaults(func=cmd_pump)

    p = sub.add_parser("steady", help="steady states and branch diagram")
    common(p)
    p.add_argument("--phi0-range", help="start,stop,count (default: phi0 +- 1, 201 points)")
    p.set_defaults(func=cmd_steady)

    p = sub.add_parser("map", help="instability map")
    common(p)
    p.add_argument("--phi0-range", default="-2,0,201", help="start,stop,count")
    p.add_argument("--drive-range", help="start,stop,count (default: 0.25-4 x the drive, 16 rows)")
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("scan", help="time-domain run")
    common(p)
    p.add_argument("--samples", type=int, default=None)
    p.set_defaults(func=cmd_scan)

    p = sub.add_parser("convert", help="laboratory units to model parameters")
    common(p, preset=False)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"coldcavity: error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"coldcavity: error: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"coldcavity: configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"coldcavity: numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"coldcavity: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
