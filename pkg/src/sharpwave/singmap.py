"""Cell-by-cell regularity classification of solved fields.

Each classification cell gets, per ladder entry, the sup of every mixed
characteristic derivative D_+^i D_-^j u with i+j <= max_order.  Pure
derivatives are read off the characteristic fields (D_+ u = W/sqrt2 and
D_- u = V/sqrt2, higher ones by diagonal differences of W and V); mixed
ones route through the wave identity D_+ D_- u = G with G half the
source, lattice-differenced beyond first order.  A cell is regular when
every combination's fitted decay slope stays above -tol, i.e. nothing
grows as eps -> 0; the singular set of the solution shows up as the
cells whose sups blow up like negative powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import (
    DEFAULT_SLOPE_TOL,
    RegionLadder,
    SeminormProfile,
    directional_term_columns,
    fit_decay_exponent,
    stencil_noise_floor,
)
from .charsolve import CharacteristicPair
from .errors import BadRegionLadder, BadSpec, InsufficientLadder
from .nets import EpsilonLadder, RepresentativeNet, nonlinearity
from .streaming import COMBO_LABELS, COMBO_ORDERS, CellGrid, cell_sups_from_fields


@dataclass(frozen=True)
class LightConeGeometry:
    """The light-cone lines |x| = t, fattened to bands of half-width b
    for band-singular data.  Distances are horizontal (along x)."""

    T: float
    half_width: float = 0.0

    def cell_distance(self, box) -> float:
        """Horizontal distance from a cell box to the nearer line/band."""
        (t0, t1), (x0, x1) = box
        dists = []
        for sign in (+1.0, -1.0):
            # range of x - sign*t over the box
            lo = x0 - sign * (t1 if sign > 0 else t0)
            hi = x1 - sign * (t0 if sign > 0 else t1)
            lo, hi = min(lo, hi), max(lo, hi)
            if hi < -self.half_width:
                dists.append(-self.half_width - hi)
            elif lo > self.half_width:
                dists.append(lo - self.half_width)
            else:
                dists.append(0.0)
        return min(dists)


@dataclass
class SingularityMap:
    """Per-cell verdicts with the slope evidence behind each one."""

    cells: CellGrid
    regular: np.ndarray          # bool (n_t, n_x)
    worst_slope: np.ndarray      # float (n_t, n_x)
    witness_order: np.ndarray    # int (n_t, n_x), total derivative order
    orders_tested: int
    tol: float

    def rows(self):
        """CSV rows, row-major: t ascending, then x ascending."""
        for p in range(self.cells.n_t):
            for q in range(self.cells.n_x):
                (t0, t1), (x0, x1) = self.cells.box(p, q)
                yield (t0, t1, x0, x1,
                       "regular" if self.regular[p, q] else "singular",
                       float(self.worst_slope[p, q]),
                       int(self.witness_order[p, q]))

    def singular_cells(self):
        return [(p, q) for p in range(self.cells.n_t)
                for q in range(self.cells.n_x) if not self.regular[p, q]]


def classify_from_sups(sup_stack: np.ndarray, ladder: EpsilonLadder,
                       cells: CellGrid, max_order: int,
                       tol: float = DEFAULT_SLOPE_TOL,
                       noise_floors: np.ndarray | None = None) -> SingularityMap:
    """Slope-fit every (cell, derivative combination) over the ladder.

    sup_stack has shape (ladder, n_t, n_x, combos).  Rows falling below
    ``noise_floors`` (per ladder entry and combination) are zeroed; cells
    whose every tested row saturates count as regular.
    """
    combo_idx = [m for m in range(len(COMBO_ORDERS))
                 if COMBO_ORDERS[m] <= max_order]
    eps = ladder.epsilons
    regular = np.ones((cells.n_t, cells.n_x), dtype=bool)
    worst = np.full((cells.n_t, cells.n_x), math.inf)
    witness = np.zeros((cells.n_t, cells.n_x), dtype=int)
    for p in range(cells.n_t):
        for q in range(cells.n_x):
            w_slope, w_order = math.inf, 0
            for m in combo_idx:
                vals = sup_stack[:, p, q, m].copy()
                if noise_floors is not None:
                    vals[vals <= noise_floors[:, m]] = 0.0
                try:
                    est = fit_decay_exponent(eps, vals)
                    slope = math.inf if est.saturated else est.slope
                except InsufficientLadder:
                    slope = math.inf
                if slope < w_slope:
                    w_slope, w_order = slope, int(COMBO_ORDERS[m])
            worst[p, q] = w_slope
            witness[p, q] = w_order
            regular[p, q] = w_slope >= -tol
    return SingularityMap(cells=cells, regular=regular, worst_slope=worst,
                          witness_order=witness, orders_tested=max_order,
                          tol=tol)


def combo_noise_floors(ladder: EpsilonLadder, hs, scale: float,
                       amp_exponent: float, x_range: float,
                       safety: float = 64.0) -> np.ndarray:
    """Per (ladder entry, combination) rounding floors for the cell sups.

    Three noise paths: the solution itself integrates O(scale) rounding
    over the x-range; pure derivative combinations difference the
    characteristic fields, which already carry one central difference of
    the data (an extra 1/h); mixed combinations difference the source
    identity field, whose own noise is amp-scaled and integral-smoothed.
    Measured sups at or below these levels carry no slope information.
    """
    from .asymptotics import MACHINE_EPS

    floors = np.zeros((len(ladder), len(COMBO_ORDERS)))
    for k, (eps, h) in enumerate(zip(ladder.epsilons, hs)):
        step = math.sqrt(2.0) * h
        amp = eps ** amp_exponent
        base = safety * MACHINE_EPS * scale
        for m, (i, j) in enumerate(COMBO_LABELS):
            r = i + j
            if r == 0:
                floors[k, m] = base * x_range
            elif i == 0 or j == 0:
                floors[k, m] = base / (h * step ** (r - 1))
            else:
                floors[k, m] = base * amp * x_range / step ** (r - 2)
    return floors


def classify_cells(U: RepresentativeNet, pair: CharacteristicPair,
                   geom: LightConeGeometry, cell_h: float,
                   max_order: int = 4, tol: float = DEFAULT_SLOPE_TOL,
                   x_extent: float = 2.0,
                   source: tuple | None = None) -> SingularityMap:
    """Classify a materialized solve.

    ``source=(f_name, E_exponent)`` evaluates the wave identity
    D_+ D_- u = eps^q f(u)/2 exactly; without it the identity field is
    lattice-differenced from u.
    """
    if max_order > COMBO_ORDERS.max():
        raise BadSpec(f"max_order limited to {COMBO_ORDERS.max()}")
    cells = CellGrid.over(geom.T, x_extent, cell_h)
    stacks = []
    hs = []
    for k, eps in enumerate(pair.ladder):
        gv, gw, gu = pair.V.functions[k], pair.W.functions[k], U.functions[k]
        h = gv.spacing[0]
        hs.append(h)
        if source is not None:
            fname, q = source
            G = 0.5 * (eps ** q) * nonlinearity(fname)(gu.values)
        else:
            G = np.zeros_like(gu.values)
            u = gu.values
            G[1:-1, 1:-1] = ((u[2:, 1:-1] - 2 * u[1:-1, 1:-1] + u[:-2, 1:-1])
                             - (u[1:-1, 2:] - 2 * u[1:-1, 1:-1] + u[1:-1, :-2])
                             ) / (2.0 * h * h)
        stacks.append(cell_sups_from_fields(gv.values, gw.values, G, gu.values,
                                            h, gv.box[1][0], cells))
    scale = max(max(float(np.max(np.abs(g.values))) for g in pair.W.functions),
                max(float(np.max(np.abs(g.values))) for g in pair.V.functions),
                1.0)
    x_range = pair.V.functions[0].box[1][1] - pair.V.functions[0].box[1][0]
    floors = combo_noise_floors(pair.ladder, hs, scale,
                                source[1] if source else 1.0, x_range)
    return classify_from_sups(np.stack(stacks), pair.ladder, cells, max_order,
                              tol, noise_floors=floors)


def band_classify(U: RepresentativeNet, pair: CharacteristicPair,
                  geom: LightConeGeometry, cell_h: float,
                  max_order: int = 4, tol: float = DEFAULT_SLOPE_TOL,
                  x_extent: float = 2.0,
                  source: tuple | None = None) -> SingularityMap:
    """Band-data variant: identical cell tests; the band geometry only
    changes which cells are allowed to come out singular."""
    return classify_cells(U, pair, geom, cell_h, max_order, tol, x_extent,
                          source)


def confinement_check(smap: SingularityMap, geom: LightConeGeometry,
                      dilation_cells: float = 2.0) -> dict:
    """Compare a singularity map against the light-cone geometry.

    Returns which singular cells escape the dilated lines/bands, whether
    each line carries at least one singular cell, and whether every cell
    beyond the dilation is regular.
    """
    reach = dilation_cells * smap.cells.cell_h
    escaped = []
    far_singular = []
    on_plus, on_minus = False, False
    for p in range(smap.cells.n_t):
        for q in range(smap.cells.n_x):
            box = smap.cells.box(p, q)
            d = geom.cell_distance(box)
            if not smap.regular[p, q]:
                if d > reach:
                    escaped.append((p, q))
                (t0, t1), (x0, x1) = box
                if x0 <= t1 + geom.half_width and x1 >= t0 - geom.half_width:
                    on_plus = True
                if x0 <= -t0 + geom.half_width and x1 >= -t1 - geom.half_width:
                    on_minus = True
            if d >= reach and not smap.regular[p, q]:
                far_singular.append((p, q))
    return {
        "confined": not escaped,
        "escaped_cells": escaped,
        "touches_plus_line": on_plus,
        "touches_minus_line": on_minus,
        "far_cells_regular": not far_singular,
        "far_singular_cells": far_singular,
    }


# ---------------------------------------------------------------------------
# directional seminorm audits of solved pairs


def directional_profile(pair: CharacteristicPair,
                        regions: RegionLadder) -> SeminormProfile:
    """Three-term directional seminorms of the pair (V plus W), per
    (n, ladder entry); the input ladder must carry the line-avoiding
    region families."""
    if regions.flavor != "directional":
        raise BadRegionLadder("directional profile needs a directional ladder")
    depth = regions.depth
    values = np.zeros((depth, len(pair.ladder)))
    for k in range(len(pair.ladder)):
        for g in (pair.V.functions[k], pair.W.functions[k]):
            tp, tm, pl = directional_term_columns(g, regions)
            values[:, k] += tp + tm + pl
    return SeminormProfile(values=values, ladder=pair.ladder,
                           flavor="directional")


def characteristic_class_audit(pair: CharacteristicPair, regions: RegionLadder,
                               tol: float = DEFAULT_SLOPE_TOL) -> dict:
    """Slope audit of the defining properties of solved characteristic
    fields: bounded type on compacts, ascending derivatives bounded off
    the descending line, descending derivatives bounded off the ascending
    line.  (The exterior-zero property is audited separately.)"""
    from .charsolve import exterior_zero_audit

    if regions.flavor != "directional":
        raise BadRegionLadder("audit needs a directional region ladder")
    eps = pair.ladder.epsilons
    verdicts = {}
    for name, net in (("V", pair.V), ("W", pair.W)):
        cols = {"plus": [], "minus": [], "plain": []}
        for k, g in enumerate(net.functions):
            tp, tm, pl = directional_term_columns(g, regions)
            scale = max(float(np.max(np.abs(g.values))), 1e-30)
            h = g.spacing[0]
            for key, col in (("plus", tp), ("minus", tm), ("plain", pl)):
                # row n of the plus/minus terms is an order-<=n stencil
                # measurement; the plain sup needs no stencil at all
                floors = np.array([stencil_noise_floor(
                    scale, math.sqrt(2.0) * h, n if key != "plain" else 0)
                    for n in range(regions.depth)])
                cols[key].append(np.where(col > floors, col, 0.0))
        for key in cols:
            mat = np.stack(cols[key], axis=1)
            slopes = []
            for n in range(regions.depth):
                if key != "plain" and n == 0:
                    continue
                try:
                    est = fit_decay_exponent(eps, mat[n])
                    slopes.append(math.inf if est.saturated else est.slope)
                except InsufficientLadder:
                    slopes.append(math.inf)
            verdicts[f"{name}_{key}"] = {
                "slopes": slopes,
                "passed": bool(all(s >= -tol for s in slopes)),
            }
    ext = exterior_zero_audit(pair)
    verdicts["exterior"] = {
        "sups": {k: v.tolist() for k, v in ext.items()},
        "passed": bool(max(np.max(v) for v in ext.values()) <= 1e-8),
    }
    verdicts["passed"] = bool(all(v["passed"] for v in verdicts.values()
                                  if isinstance(v, dict) and "passed" in v))
    return verdicts
