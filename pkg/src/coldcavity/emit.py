"""CSV, JSON and SVG output.

CSV floats are written with 17 significant digits so that re-parsing them
reproduces the doubles exactly; identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from coldcavity.dynamics import ScanTrace
from coldcavity.steady import BranchDiagram, Stability, StabilityMap
from coldcavity.zeeman import PumpTrajectory

__all__ = [
    "MAP_COLUMNS",
    "PUMP_COLUMNS",
    "TRACE_COLUMNS",
    "emit_csv",
    "emit_json",
    "emit_svg",
    "read_csv",
]

TRACE_COLUMNS = ("t", "P_out", "I", "p", "phi_cav")
PUMP_COLUMNS = ("t", "N")
MAP_COLUMNS = ("phi0", "drive", "n_roots", "classes")
DIAGRAM_COLUMNS = ("phi0", "intensity", "orientation", "phase", "stability", "multiplicity")

CLASS_COLORS = {
    Stability.STABLE_NODE.value: "#2b6cb0",
    Stability.STABLE_FOCUS.value: "#4fa3e0",
    Stability.SADDLE.value: "#a0aec0",
    Stability.UNSTABLE_FOCUS.value: "#e53e3e",
    Stability.UNSTABLE_NODE.value: "#f6ad55",
}


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return format(float(x), ".17g")


def _write_rows(path, header, rows):
    path = Path(path)
    try:
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def _trace_rows(trace: ScanTrace):
    return zip(trace.times, trace.output_power, trace.intensity, trace.orientation, trace.phi_cav)


def _pump_rows(traj: PumpTrajectory, populations: bool):
    if populations and traj.populations is not None:
        return (tuple([t, n, *pop]) for t, n, pop in zip(traj.times, traj.stretched, traj.populations))
    return zip(traj.times, traj.stretched)


def _pump_header(traj: PumpTrajectory, populations: bool):
    if not (populations and traj.populations is not None):
        return PUMP_COLUMNS
    n_g = (traj.populations.shape[1] - 2) // 2
    f = (n_g - 1) // 2
    ground = [f"g{m}" for m in range(-f, f + 1)]
    excited = [f"e{m}" for m in range(-f - 1, f + 2)]
    return PUMP_COLUMNS + tuple(ground + excited)


def _diagram_rows(diagram: BranchDiagram):
    for phi, points in zip(diagram.phi0_grid, diagram.branches):
        for p in points:
            yield phi, p.intensity, p.orientation, p.phase, p.stability.value, p.multiplicity


def emit_csv(obj, path, populations: bool = False) -> Path:
    """Write a trace, pump trajectory, branch diagram or stability map as CSV."""
    if isinstance(obj, ScanTrace):
        return _write_rows(path, TRACE_COLUMNS, _trace_rows(obj))
    if isinstance(obj, PumpTrajectory):
        return _write_rows(path, _pump_header(obj, populations), _pump_rows(obj, populations))
    if isinstance(obj, StabilityMap):
        return _write_rows(path, MAP_COLUMNS, obj.rows())
    if isinstance(obj, BranchDiagram):
        return _write_rows(path, DIAGRAM_COLUMNS, _diagram_rows(obj))
    raise TypeError(f"cannot write {type(obj).__name__} as CSV")


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float array of a numeric CSV written by :func:`emit_csv`."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path} is empty")
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body], dtype=float)
    return header, data.reshape(len(body), len(header))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "value") and isinstance(obj.value, str):
        return obj.value
    if hasattr(obj, "to_dict"):
        return _jsonable(obj.to_dict())
    if hasattr(obj, "__dataclass_fields__"):
        return {name: _jsonable(getattr(obj, name)) for name in obj.__dataclass_fields__}
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def emit_json(report, path) -> Path:
    """Write ``report`` as JSON with sorted keys; non-finite floats become null."""
    path = Path(path)
    text = json.dumps(_jsonable(report), indent=2, sort_keys=True) + "\n"
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


# -- SVG ---------------------------------------------------------------------

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=20, top=20, bottom=50)


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def _axes(x_lo, x_hi, y_lo, y_hi, xlabel, ylabel):
    x0, y0 = MARGIN["left"], HEIGHT - MARGIN["bottom"]
    x1, y1 = WIDTH - MARGIN["right"], MARGIN["top"]
    parts = [f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
             'fill="none" stroke="black"/>']
    for v in _ticks(x_lo, x_hi):
        x = x0 + (v - x_lo) / ((x_hi - x_lo) or 1) * (x1 - x0)
        parts.append(f'<text x="{x:.2f}" y="{y0 + 16}" font-size="11" '
                     f'text-anchor="middle">{v:.4g}</text>')
    for v in _ticks(y_lo, y_hi):
        y = y0 - (v - y_lo) / ((y_hi - y_lo) or 1) * (y0 - y1)
        parts.append(f'<text x="{x0 - 6}" y="{y + 4:.2f}" font-size="11" '
                     f'text-anchor="end">{v:.4g}</text>')
    parts.append(f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 10}" font-size="13" '
                 f'text-anchor="middle">{escape(xlabel)}</text>')
    parts.append(f'<text x="16" y="{(y0 + y1) / 2}" font-size="13" text-anchor="middle" '
                 f'transform="rotate(-90 16 {(y0 + y1) / 2})">{escape(ylabel)}</text>')
    return parts, (x0, y0, x1, y1)


def _svg_document(parts):
    head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">')
    return "\n".join([head, *parts, "</svg>"]) + "\n"


def _line_plot(x, y, xlabel, ylabel):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x_lo, x_hi = (float(x.min()), float(x.max())) if x.size else (0.0, 1.0)
    y_lo, y_hi = (float(y.min()), float(y.max())) if y.size else (0.0, 1.0)
    parts, (x0, y0, x1, y1) = _axes(x_lo, x_hi, y_lo, y_hi, xlabel, ylabel)
    if x.size:
        px = x0 + (x - x_lo) / ((x_hi - x_lo) or 1) * (x1 - x0)
        py = y0 - (y - y_lo) / ((y_hi - y_lo) or 1) * (y0 - y1)
        points = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        parts.append(f'<polyline fill="none" stroke="#2b6cb0" stroke-width="1" points="{points}"/>')
    return _svg_document(parts)


def _map_raster(smap: StabilityMap):
    phi, drive = smap.phi0, smap.drive
    parts, (x0, y0, x1, y1) = _axes(phi.min(), phi.max(), drive.min(), drive.max(),
                                    "phi0 (rad)", "drive (dimensionless)")
    cw = (x1 - x0) / len(phi)
    ch = (y0 - y1) / len(drive)
    for j in range(len(drive)):
        for i in range(len(phi)):
            if smap.failed[j, i]:
                color = "#000000"
            else:
                labels = [s.value for s in smap.classes[j, i]]
                # most unstable class present decides the colour
                order = [Stability.UNSTABLE_FOCUS.value, Stability.UNSTABLE_NODE.value,
                         Stability.SADDLE.value, Stability.STABLE_FOCUS.value,
                         Stability.STABLE_NODE.value]
                color = next((CLASS_COLORS[c] for c in order if c in labels), "#ffffff")
            parts.append(f'<rect x="{x0 + i * cw:.2f}" y="{y0 - (j + 1) * ch:.2f}" '
                         f'width="{cw + 0.05:.2f}" height="{ch + 0.05:.2f}" fill="{color}"/>')
    for k, (name, color) in enumerate(CLASS_COLORS.items()):
        parts.append(f'<rect x="{x0 + 6 + 120 * k}" y="{y1 + 4}" width="10" height="10" '
                     f'fill="{color}" stroke="black" stroke-width="0.3"/>')
        parts.append(f'<text x="{x0 + 20 + 120 * k}" y="{y1 + 13}" font-size="10">{name}</text>')
    return _svg_document(parts)


def emit_svg(obj, path) -> Path:
    """Line plot of output power versus time (trace) or class raster (map)."""
    if isinstance(obj, ScanTrace):
        text = _line_plot(obj.times, obj.output_power, "t (1/Gamma)", "P_out (normalized)")
    elif isinstance(obj, PumpTrajectory):
        text = _line_plot(obj.times, obj.stretched, "t (1/Gamma)", "N")
    elif isinstance(obj, StabilityMap):
        text = _map_raster(obj)
    else:
        raise TypeError(f"cannot plot {type(obj).__name__}")
    path = Path(path)
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path
