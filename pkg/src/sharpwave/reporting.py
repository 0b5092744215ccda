"""Artifact emission: CSV tables, JSON reports, SVG maps, run manifests.

Everything here is deterministic: fixed float formatting (shortest
round-trip repr), sorted JSON keys, fixed element ordering in the SVG.
Identical runs produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .singmap import LightConeGeometry, SingularityMap


def fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    return path


def write_json(path, payload) -> Path:
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def sup_table_csv(path, epsilons, values) -> Path:
    return write_csv(path, ["epsilon", "value"], zip(epsilons, values))


def profile_csv(path, profile) -> Path:
    rows = []
    for n in range(profile.values.shape[0]):
        for eps, v in zip(profile.ladder.epsilons, profile.values[n]):
            rows.append((n, eps, v))
    return write_csv(path, ["n", "epsilon", "value"], rows)


def valuation_csv(path, rows) -> Path:
    return write_csv(path, ["exponent", "shape", "n", "slope", "r_squared",
                            "window_lo", "window_hi"], rows)


def trace_csv(path, trace, epsilons) -> Path:
    rows = []
    for entry in trace:
        for eps, ch in zip(epsilons, entry.sup_changes):
            rows.append((entry.iteration, eps, ch, entry.d_tilde))
    return write_csv(path, ["iter", "epsilon", "sup_change", "d_tilde"], rows)


def singularity_csv(path, smap: SingularityMap) -> Path:
    return write_csv(path, ["t_lo", "t_hi", "x_lo", "x_hi", "verdict",
                            "worst_slope", "witness_order"], smap.rows())


def ultra_report_json(path, report) -> Path:
    return write_json(path, {
        "p_values": [float(p) for p in report.p_values],
        "distance": float(report.distance),
        "truncation": report.truncation,
        "tail_bound": report.tail_bound,
    })


def contraction_json(path, report) -> Path:
    return write_json(path, {
        "pairs_tested": report.pairs_tested,
        "ratios": [float(r) for r in report.ratios],
        "bound": float(report.bound),
        "max_ratio": float(report.max_ratio),
        "contracting": report.contracting,
    })


# ---------------------------------------------------------------------------
# SVG singularity map


def _slope_color(slope: float) -> str:
    # diverging scale centered at slope 0: growth (negative) in reds,
    # decay (positive, incl. saturated rows) in blues
    if math.isinf(slope):
        c = 1.0
    else:
        c = max(-1.0, min(1.0, slope / 2.0))
    if c < 0:
        level = int(round(255 * (1.0 + c)))
        return f"rgb(255,{level},{level})"
    level = int(round(255 * (1.0 - c)))
    return f"rgb({level},{level},255)"


def emit_svg_heatmap(smap: SingularityMap, geom: LightConeGeometry,
                     path) -> Path:
    """One rectangle per cell colored by its worst slope, with the
    light-cone lines (band edges when widened) drawn on top."""
    cells = smap.cells
    scale = 12.0
    pad = 20.0
    width = cells.n_x * scale + 2 * pad
    height = cells.n_t * scale + 2 * pad

    def X(x):
        return pad + (x - cells.x0) / cells.cell_h * scale

    def Y(t):
        return height - pad - (t - cells.t0) / cells.cell_h * scale

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
        f'height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
        f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" '
        f'fill="white"/>',
    ]
    for p in range(cells.n_t):
        for q in range(cells.n_x):
            (t0, t1), (x0, _) = cells.box(p, q)
            parts.append(
                f'<rect x="{X(x0):.2f}" y="{Y(t1):.2f}" width="{scale:.2f}" '
                f'height="{scale:.2f}" fill="{_slope_color(float(smap.worst_slope[p, q]))}"/>')
    t_lo, t_hi = cells.t0, cells.t0 + cells.n_t * cells.cell_h
    offsets = ([0.0] if geom.half_width == 0.0
               else [-geom.half_width, geom.half_width])
    for sgn in (+1.0, -1.0):
        for off in offsets:
            x_a, x_b = sgn * t_lo + off, sgn * t_hi + off
            parts.append(
                f'<line x1="{X(x_a):.2f}" y1="{Y(t_lo):.2f}" '
                f'x2="{X(x_b):.2f}" y2="{Y(t_hi):.2f}" '
                f'stroke="black" stroke-width="1.5"/>')
    parts.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(parts) + "\n")
    return path


# ---------------------------------------------------------------------------
# manifests


def sha256_of(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, files, extra=None) -> Path:
    from .backend import backend_name

    out_dir = Path(out_dir)
    entries = []
    for f in sorted(Path(f) for f in files):
        entries.append({
            "name": f.name if f.parent == out_dir else str(f.relative_to(out_dir)),
            "sha256": sha256_of(f),
            "bytes": f.stat().st_size,
        })
    payload = {"files": entries, "backend": backend_name()}
    if extra:
        payload.update(extra)
    return write_json(out_dir / "manifest.json", payload)
