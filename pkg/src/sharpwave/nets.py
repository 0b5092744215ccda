"""Epsilon-indexed families of sampled smooth functions on uniform grids.

A representative net is a finite ladder of regularization parameters
eps_0 > eps_1 > ... together with one sampled grid function per ladder
entry.  All quantitative machinery in this package (valuations,
ultra-metrics, solvers, singularity maps) operates on these nets.

Grid conventions
----------------
* A grid covers a closed axis-aligned box; nodes include both endpoints,
  node k on an axis sits at ``lo + k*h``.
* 2-D boxes are ordered (t, x); value arrays have shape (nt, nx),
  row-major with t varying slowest.
* Derivatives are compositions of central first differences, O(h^2),
  shrinking the domain by h per differentiated axis and order.
* The diagonal directions ``plus``/``minus`` (unit vectors along
  t+x and t-x) require equal spacing in t and x so stencils run along
  exact lattice diagonals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import (
    BadSpec,
    EmptyDomain,
    GridTooCoarse,
    LadderMismatch,
    LatticeMismatch,
    OutOfDomain,
    UnknownNonlinearity,
)

GEOMETRIC_RTOL = 1e-12
NODE_SNAP_TOL = 1e-9
BOX_TOL = 1e-12

SQRT2 = math.sqrt(2.0)

# Pointwise nonlinearity catalog.  Every entry satisfies f(0) = 0 and has
# polynomially bounded derivatives; ``zero`` is the linear (source-free) case.
NONLINEARITIES: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "zero": lambda u: np.zeros_like(u),
    "square": lambda u: u * u,
    "cube": lambda u: u * u * u,
    "sine": np.sin,
    "rational": lambda u: u / (1.0 + u * u),
}

# Integer codes used by the compiled kernels.
NONLINEARITY_CODES = {"zero": 0, "square": 1, "cube": 2, "sine": 3, "rational": 4}


def nonlinearity(name: str) -> Callable[[np.ndarray], np.ndarray]:
    try:
        return NONLINEARITIES[name]
    except KeyError:
        raise UnknownNonlinearity(f"unknown nonlinearity {name!r}; "
                                  f"catalog: {sorted(NONLINEARITIES)}") from None


@dataclass(frozen=True)
class EpsilonLadder:
    """Finite geometric ladder of regularization parameters in (0, 1]."""

    epsilons: np.ndarray
    ratio: float

    def __post_init__(self):
        eps = np.asarray(self.epsilons, dtype=float)
        object.__setattr__(self, "epsilons", eps)
        if eps.ndim != 1 or len(eps) < 4:
            raise BadSpec("ladder needs at least 4 entries for slope regression")
        if np.any(eps <= 0.0) or np.any(eps > 1.0):
            raise BadSpec("ladder entries must lie in (0, 1]")
        if np.any(np.diff(eps) >= 0.0):
            raise BadSpec("ladder entries must be strictly decreasing")
        if not (0.0 < self.ratio < 1.0):
            raise BadSpec("ladder ratio must lie in (0, 1)")
        expected = eps[0] * self.ratio ** np.arange(len(eps))
        if np.max(np.abs(eps - expected) / expected) > 1e3 * GEOMETRIC_RTOL:
            raise BadSpec("ladder entries are not geometric within tolerance")

    @classmethod
    def geometric(cls, eps0: float, ratio: float, count: int) -> "EpsilonLadder":
        eps = eps0 * ratio ** np.arange(count, dtype=float)
        return cls(epsilons=eps, ratio=ratio)

    @classmethod
    def dyadic(cls, k_hi: int, k_lo: int) -> "EpsilonLadder":
        """Ladder 2^-k_hi .. 2^-k_lo with ratio 1/2 (k_lo > k_hi)."""
        ks = np.arange(k_hi, k_lo + 1)
        return cls(epsilons=2.0 ** (-ks.astype(float)), ratio=0.5)

    def __len__(self) -> int:
        return len(self.epsilons)

    def __iter__(self):
        return iter(self.epsilons)

    def same_as(self, other: "EpsilonLadder") -> bool:
        return len(self) == len(other) and np.allclose(
            self.epsilons, other.epsilons, rtol=GEOMETRIC_RTOL, atol=0.0)


@dataclass(frozen=True)
class SpacingRule:
    """Grid spacing as a function of epsilon: h = eps/denom or a fixed h."""

    kind: str = "eps_over"   # 'eps_over' | 'fixed'
    value: float = 16.0

    def h(self, eps: float) -> float:
        if self.kind == "eps_over":
            return eps / self.value
        if self.kind == "fixed":
            return self.value
        raise BadSpec(f"unknown spacing rule kind {self.kind!r}")


def axis_nodes(lo: float, hi: float, h: float) -> np.ndarray:
    """Node coordinates lo, lo+h, ..., hi.  The extent must be a near-integer
    multiple of h (both endpoints are nodes)."""
    extent = hi - lo
    n = int(round(extent / h)) + 1
    if n < 2 or abs(extent - (n - 1) * h) > NODE_SNAP_TOL * max(1.0, abs(extent)):
        raise BadSpec(f"axis [{lo}, {hi}] is not commensurate with spacing {h}")
    return lo + h * np.arange(n)


@dataclass(frozen=True)
class CompactRegion:
    """Closed axis-aligned box used as the carrier of a sup-norm."""

    box: tuple
    label: str = ""

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        object.__setattr__(self, "box", box)
        for lo, hi in box:
            if hi < lo:
                raise BadSpec(f"empty region axis [{lo}, {hi}]")

    @property
    def ndim(self) -> int:
        return len(self.box)

    def contains_box(self, other: tuple) -> bool:
        return all(lo <= olo + BOX_TOL and ohi <= hi + BOX_TOL
                   for (lo, hi), (olo, ohi) in zip(self.box, other))


class GridFunction:
    """Real values sampled on a uniform grid over a closed box (1-D or 2-D)."""

    def __init__(self, box, spacing, values, check_finite=True):
        self.box = tuple((float(lo), float(hi)) for lo, hi in box)
        spacing = (spacing,) if np.isscalar(spacing) else tuple(spacing)
        self.spacing = tuple(float(h) for h in spacing)
        self.values = np.asarray(values, dtype=float)
        if len(self.box) not in (1, 2) or len(self.spacing) != len(self.box):
            raise BadSpec("grids are 1-D or 2-D with one spacing per axis")
        for ax, (lo, hi) in enumerate(self.box):
            n = int(round((hi - lo) / self.spacing[ax])) + 1
            if self.values.shape[ax] != n:
                raise BadSpec(
                    f"axis {ax}: {self.values.shape[ax]} values for extent "
                    f"[{lo}, {hi}] at spacing {self.spacing[ax]} (expected {n})")
        if check_finite and not np.all(np.isfinite(self.values)):
            raise BadSpec("grid values must be finite")

    @property
    def ndim(self) -> int:
        return len(self.box)

    def axis_coords(self, ax: int) -> np.ndarray:
        lo, _ = self.box[ax]
        return lo + self.spacing[ax] * np.arange(self.values.shape[ax])

    @classmethod
    def sample(cls, fn, box, spacing) -> "GridFunction":
        spacing = (spacing,) if np.isscalar(spacing) else tuple(spacing)
        coords = [axis_nodes(lo, hi, h) for (lo, hi), h in zip(box, spacing)]
        if len(coords) == 1:
            vals = fn(coords[0])
        else:
            vals = fn(coords[0][:, None], coords[1][None, :])
        vals = np.broadcast_to(np.asarray(vals, dtype=float),
                               tuple(len(c) for c in coords)).copy()
        return cls(box, spacing, vals)

    def index_range(self, ax: int, lo: float, hi: float) -> tuple[int, int]:
        """Node index range [i0, i1] covering [lo, hi] on an axis (inclusive)."""
        alo, ahi = self.box[ax]
        h = self.spacing[ax]
        if lo < alo - NODE_SNAP_TOL or hi > ahi + NODE_SNAP_TOL:
            raise OutOfDomain(f"[{lo}, {hi}] outside axis [{alo}, {ahi}]")
        i0 = int(math.ceil((lo - alo) / h - NODE_SNAP_TOL))
        i1 = int(math.floor((hi - alo) / h + NODE_SNAP_TOL))
        if i1 < i0:
            raise EmptyDomain(f"no grid nodes inside [{lo}, {hi}]")
        return max(i0, 0), min(i1, self.values.shape[ax] - 1)

    def restrict(self, box) -> "GridFunction":
        """Restriction to a sub-box; node values are reused exactly."""
        ranges = [self.index_range(ax, lo, hi) for ax, (lo, hi) in enumerate(box)]
        slicer = tuple(slice(i0, i1 + 1) for i0, i1 in ranges)
        new_box = [(self.box[ax][0] + i0 * self.spacing[ax],
                    self.box[ax][0] + i1 * self.spacing[ax])
                   for ax, (i0, i1) in enumerate(ranges)]
        return GridFunction(new_box, self.spacing, self.values[slicer],
                            check_finite=False)

    def resample(self, spacing) -> "GridFunction":
        """Resample onto the same box at new spacing (clamped cubic splines,
        applied axis by axis)."""
        spacing = (spacing,) if np.isscalar(spacing) else tuple(spacing)
        vals = self.values
        for ax, h_new in enumerate(spacing):
            if abs(h_new - self.spacing[ax]) <= NODE_SNAP_TOL * h_new:
                continue
            old = self.axis_coords(ax)
            new = axis_nodes(*self.box[ax], h_new)
            spl = CubicSpline(old, np.moveaxis(vals, ax, 0),
                              bc_type="clamped", axis=0)
            vals = np.moveaxis(spl(new), 0, ax)
        return GridFunction(self.box, spacing, vals, check_finite=False)


@dataclass
class RepresentativeNet:
    """One grid function per ladder entry, all covering a common box."""

    ladder: EpsilonLadder
    functions: list
    logical_domain: tuple = None

    def __post_init__(self):
        if len(self.functions) != len(self.ladder):
            raise BadSpec("need exactly one grid per ladder entry")
        if self.logical_domain is None:
            self.logical_domain = self.functions[0].box
        self.logical_domain = tuple((float(lo), float(hi))
                                    for lo, hi in self.logical_domain)
        dom = CompactRegion(self.logical_domain)
        for g in self.functions:
            if not CompactRegion(g.box).contains_box(dom.box):
                raise BadSpec("every grid must cover the logical domain")
        for ax in range(self.ndim):
            hs = np.array([g.spacing[ax] for g in self.functions])
            if np.any(np.diff(hs) > NODE_SNAP_TOL):
                raise BadSpec("spacing must be non-increasing along the ladder")

    @property
    def ndim(self) -> int:
        return self.functions[0].ndim

    def map(self, fn) -> "RepresentativeNet":
        grids = [fn(eps, g) for eps, g in zip(self.ladder, self.functions)]
        dom = grids[0].box
        for g in grids[1:]:
            dom = tuple((max(alo, blo), min(ahi, bhi))
                        for (alo, ahi), (blo, bhi) in zip(dom, g.box))
        return RepresentativeNet(ladder=self.ladder, functions=grids,
                                 logical_domain=dom)


def synthetic_net(ladder: EpsilonLadder, box, rule: SpacingRule,
                  fn: Callable) -> RepresentativeNet:
    """Build a net by sampling ``fn(eps, *coords)`` on each ladder grid."""
    grids = []
    for eps in ladder:
        h = rule.h(eps)
        spacing = (h,) * len(box)
        grids.append(GridFunction.sample(lambda *cs, e=eps: fn(e, *cs),
                                         box, spacing))
    return RepresentativeNet(ladder=ladder, functions=grids, logical_domain=box)


# ---------------------------------------------------------------------------
# pointwise algebra


def _common_grid(a: GridFunction, b: GridFunction):
    box = []
    for (alo, ahi), (blo, bhi) in zip(a.box, b.box):
        lo, hi = max(alo, blo), min(ahi, bhi)
        if hi <= lo - BOX_TOL:
            raise EmptyDomain("grids do not overlap")
        box.append((lo, hi))
    h = tuple(min(ha, hb) for ha, hb in zip(a.spacing, b.spacing))
    ra = a.restrict(box) if a.box != tuple(box) else a
    rb = b.restrict(box) if b.box != tuple(box) else b
    if ra.spacing != h:
        ra = ra.resample(h)
    if rb.spacing != h:
        rb = rb.resample(h)
    return ra, rb


_BINARY = {"add": np.add, "sub": np.subtract, "mul": np.multiply}


def net_binary(op: str, u: RepresentativeNet, v: RepresentativeNet) -> RepresentativeNet:
    """Pointwise add/sub/mul of two nets on their common domain.

    Grids with mismatched spacing are resampled to the finer one (clamped
    cubic), so the result stays O(h^2) accurate.
    """
    if op not in _BINARY:
        raise BadSpec(f"unknown binary op {op!r}")
    if not u.ladder.same_as(v.ladder):
        raise LadderMismatch("nets live on different epsilon ladders")
    fn = _BINARY[op]
    grids = []
    for gu, gv in zip(u.functions, v.functions):
        ga, gb = _common_grid(gu, gv)
        grids.append(GridFunction(ga.box, ga.spacing, fn(ga.values, gb.values),
                                  check_finite=False))
    dom = tuple((max(alo, blo), min(ahi, bhi))
                for (alo, ahi), (blo, bhi) in zip(u.logical_domain, v.logical_domain))
    return RepresentativeNet(ladder=u.ladder, functions=grids, logical_domain=dom)


def superpose(f: str, u: RepresentativeNet) -> RepresentativeNet:
    """Apply a catalog nonlinearity pointwise; domain and ladder unchanged."""
    fn = nonlinearity(f)
    return u.map(lambda eps, g: GridFunction(g.box, g.spacing, fn(g.values),
                                             check_finite=False))


# ---------------------------------------------------------------------------
# differentiation and quadrature


def _central_diff_axis(g: GridFunction, ax: int) -> GridFunction:
    h = g.spacing[ax]
    if g.values.shape[ax] < 3:
        raise GridTooCoarse("need at least 3 nodes per differentiated axis")
    sl_p = [slice(None)] * g.ndim
    sl_m = [slice(None)] * g.ndim
    sl_p[ax] = slice(2, None)
    sl_m[ax] = slice(None, -2)
    vals = (g.values[tuple(sl_p)] - g.values[tuple(sl_m)]) / (2.0 * h)
    box = list(g.box)
    box[ax] = (g.box[ax][0] + h, g.box[ax][1] - h)
    return GridFunction(box, g.spacing, vals, check_finite=False)


def _diag_diff(g: GridFunction, sign: int) -> GridFunction:
    # sign +1: derivative along t+x; sign -1: along t-x (unit directions).
    if g.ndim != 2:
        raise LatticeMismatch("diagonal derivatives need a 2-D grid")
    ht, hx = g.spacing
    if abs(ht - hx) > NODE_SNAP_TOL * ht:
        raise LatticeMismatch("diagonal derivatives need equal t and x spacing")
    if min(g.values.shape) < 3:
        raise GridTooCoarse("need at least 3 nodes per axis")
    v = g.values
    if sign > 0:
        vals = (v[2:, 2:] - v[:-2, :-2]) / (2.0 * SQRT2 * ht)
    else:
        vals = (v[2:, :-2] - v[:-2, 2:]) / (2.0 * SQRT2 * ht)
    box = [(g.box[0][0] + ht, g.box[0][1] - ht),
           (g.box[1][0] + hx, g.box[1][1] - hx)]
    return GridFunction(box, g.spacing, vals, check_finite=False)


def diff(u: RepresentativeNet, direction: str, order: int = 1) -> RepresentativeNet:
    """Central finite difference of given order composition, O(h^2).

    direction 't'/'x' are the coordinate axes; 'plus'/'minus' the unit
    diagonal directions (require a diagonal lattice).  The domain shrinks
    by order*h per differentiated axis.
    """
    if order < 0 or order > 6:
        raise BadSpec("derivative order must be in 0..6")
    if order == 0:
        return u

    def one(eps, g):
        if direction in ("t", "x"):
            ax = {"t": 0, "x": 1}[direction] if g.ndim == 2 else 0
            if direction == "t" and g.ndim == 1:
                raise BadSpec("1-D grids have no t axis")
            if g.values.shape[ax] < 2 * order + 1:
                raise GridTooCoarse(f"need {2*order+1} nodes on axis {ax}")
            for _ in range(order):
                g = _central_diff_axis(g, ax)
            return g
        if direction in ("plus", "minus"):
            if min(g.values.shape) < 2 * order + 1:
                raise GridTooCoarse(f"need {2*order+1} nodes per axis")
            for _ in range(order):
                g = _diag_diff(g, +1 if direction == "plus" else -1)
            return g
        raise BadSpec(f"unknown direction {direction!r}")

    return u.map(one)


def cumtrapz_along(values: np.ndarray, h: float, axis: int,
                   start_index: int) -> np.ndarray:
    """Cumulative trapezoid along an axis, zero at ``start_index``."""
    v = np.moveaxis(values, axis, -1)
    steps = 0.5 * h * (v[..., 1:] + v[..., :-1])
    out = np.zeros_like(v)
    np.cumsum(steps, axis=-1, out=out[..., 1:])
    if start_index != 0:
        out = out - out[..., start_index:start_index + 1]
    return np.moveaxis(out, -1, axis)


def integrate_x(u: RepresentativeNet, lower: float,
                t_slice: float | None = None) -> RepresentativeNet:
    """Cumulative trapezoid integral along x from ``lower``, per t and eps."""
    def one(eps, g):
        ax = g.ndim - 1
        lo, hi = g.box[ax]
        if lower < lo - NODE_SNAP_TOL or lower > hi + NODE_SNAP_TOL:
            raise OutOfDomain(f"lower limit {lower} outside [{lo}, {hi}]")
        k = int(round((lower - lo) / g.spacing[ax]))
        vals = cumtrapz_along(g.values, g.spacing[ax], ax, k)
        return GridFunction(g.box, g.spacing, vals, check_finite=False)

    out = u.map(one)
    if t_slice is not None and u.ndim == 2:
        def take(eps, g):
            i = int(round((t_slice - g.box[0][0]) / g.spacing[0]))
            if not (0 <= i < g.values.shape[0]):
                raise OutOfDomain(f"t={t_slice} outside {g.box[0]}")
            return GridFunction((g.box[1],), (g.spacing[1],), g.values[i],
                                check_finite=False)
        out = out.map(take)
        out.logical_domain = out.functions[0].box
    return out


def sup_on(u: RepresentativeNet, K: CompactRegion) -> np.ndarray:
    """max |u| over lattice nodes inside K, one value per ladder entry."""
    if not CompactRegion(u.logical_domain).contains_box(K.box):
        raise OutOfDomain(f"region {K.box} outside domain {u.logical_domain}")
    out = np.empty(len(u.ladder))
    for k, g in enumerate(u.functions):
        ranges = [g.index_range(ax, lo, hi) for ax, (lo, hi) in enumerate(K.box)]
        slicer = tuple(slice(i0, i1 + 1) for i0, i1 in ranges)
        out[k] = np.max(np.abs(g.values[slicer]))
    return out


# ---------------------------------------------------------------------------
# serialization (directory layout: manifest + one binary per epsilon)


def save_net(net: RepresentativeNet, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {
        "ladder": {"epsilons": [float(e) for e in net.ladder.epsilons],
                   "ratio": net.ladder.ratio},
        "logical_domain": [list(ax) for ax in net.logical_domain],
        "grids": [],
    }
    for k, g in enumerate(net.functions):
        fname = f"eps_{k:03d}.bin"
        manifest["grids"].append({
            "file": fname,
            "box": [list(ax) for ax in g.box],
            "spacing": list(g.spacing),
            "shape": list(g.values.shape),
        })
        (d / fname).write_bytes(np.ascontiguousarray(g.values).astype("<f8").tobytes())
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))


def load_net(directory) -> RepresentativeNet:
    d = Path(directory)
    manifest = json.loads((d / "manifest.json").read_text())
    ladder = EpsilonLadder(np.array(manifest["ladder"]["epsilons"]),
                           manifest["ladder"]["ratio"])
    grids = []
    for entry in manifest["grids"]:
        raw = np.frombuffer((d / entry["file"]).read_bytes(), dtype="<f8")
        vals = raw.reshape(entry["shape"]).astype(float)
        grids.append(GridFunction([tuple(ax) for ax in entry["box"]],
                                  tuple(entry["spacing"]), vals,
                                  check_finite=False))
    return RepresentativeNet(
        ladder=ladder, functions=grids,
        logical_domain=tuple(tuple(ax) for ax in manifest["logical_domain"]))
