"""Decay-exponent estimation and the sharp ultra-metric on nets.

The central quantity is the valuation of a net: the asymptotic exponent b
such that the n-th seminorm of the eps-ladder behaves like eps^b.  We
realize it as the least-squares slope of log(seminorm) against log(eps),
fitted over the smallest-eps half of the ladder, with r^2 reported as a
diagnostic.  Ultra-pseudo-seminorms are exp(-slope) and the ultra-metric
is the truncated series sum 2^{-n-1} * min(p_n, 1).

Two seminorm flavors exist:

* ``standard``  -- sup of all mixed partials of order <= n over a nested
  region K_n.
* ``directional`` -- the three-term seminorm used on characteristic
  fields: sup of D_+ derivatives over regions avoiding the descending
  light-cone line, sup of D_- derivatives over regions avoiding the
  ascending line, plus a plain sup.  This flavor feeds the contraction
  measurements of the fixed-point solver.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BadRegionLadder, BadSpec, InsufficientLadder, LadderMismatch
from .nets import (
    BOX_TOL,
    NODE_SNAP_TOL,
    CompactRegion,
    EpsilonLadder,
    GridFunction,
    RepresentativeNet,
    net_binary,
)

ZERO_FLOOR = 1e-300
DEFAULT_SLOPE_TOL = 0.15   # calibrated on closed-form mollified data
DEFAULT_NMAX = 6

MACHINE_EPS = float(np.finfo(float).eps)
NOISE_SAFETY = 32.0


def stencil_noise_floor(scale: float, step: float, order: int,
                        safety: float = NOISE_SAFETY) -> float:
    """Smallest order-``order`` difference quotient resolvable on values of
    magnitude ``scale`` sampled with stencil step ``step``.

    Composed central differences divide rounding noise of the samples by
    the step once per order; anything below this level is measurement
    noise, not signal."""
    if order == 0:
        return safety * MACHINE_EPS * scale
    return safety * MACHINE_EPS * scale / step ** order


# ---------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class DirectionalRegion:
    """Box minus an open diagonal band around one light-cone line.

    ``avoid='gamma_minus'`` excludes |x + t| < gap (the descending line),
    ``avoid='gamma_plus'`` excludes |x - t| < gap (the ascending line).
    Distances are horizontal (measured along x at fixed t).
    """

    box: tuple
    avoid: str
    gap: float

    def __post_init__(self):
        if self.avoid not in ("gamma_plus", "gamma_minus"):
            raise BadRegionLadder(f"unknown line tag {self.avoid!r}")
        (t0, t1), (x0, x1) = self.box
        line_lo, line_hi = (-t1, -t0) if self.avoid == "gamma_minus" else (t0, t1)
        meets_line = not (x1 < line_lo - BOX_TOL or x0 > line_hi + BOX_TOL)
        if meets_line and self.gap <= 0.0:
            raise BadRegionLadder(
                f"region {self.box} meets the avoided line with no gap")

    def line_distance(self, tt: np.ndarray, xx: np.ndarray) -> np.ndarray:
        return np.abs(xx + tt) if self.avoid == "gamma_minus" else np.abs(xx - tt)


@dataclass
class RegionLadder:
    """Nested compact regions K_0 <= K_1 <= ... with derivative order n at
    index n; the directional flavor adds line-avoiding region families."""

    regions: list
    flavor: str = "standard"
    plus_regions: list = field(default_factory=list)
    minus_regions: list = field(default_factory=list)

    def __post_init__(self):
        if self.flavor not in ("standard", "directional"):
            raise BadSpec(f"unknown flavor {self.flavor!r}")
        for a, b in zip(self.regions, self.regions[1:]):
            if not CompactRegion(b.box).contains_box(a.box):
                raise BadRegionLadder("plain regions must be nested increasing")
        if self.flavor == "directional":
            if (len(self.plus_regions) != len(self.regions)
                    or len(self.minus_regions) != len(self.regions)):
                raise BadRegionLadder("directional flavor needs one plus/minus "
                                      "region per index")
            for r in self.plus_regions:
                if r.avoid != "gamma_minus":
                    raise BadRegionLadder("plus regions must avoid the "
                                          "descending line x = -t")
            for r in self.minus_regions:
                if r.avoid != "gamma_plus":
                    raise BadRegionLadder("minus regions must avoid the "
                                          "ascending line x = t")

    @property
    def depth(self) -> int:
        return len(self.regions)


def standard_region_ladder(domain, depth: int, margin0: float = 0.25) -> RegionLadder:
    """Boxes shrunk from the domain by margins margin0 * 2^-n per side."""
    regions = []
    for n in range(depth):
        m = margin0 * 2.0 ** (-n)
        box = tuple((lo + m, hi - m) for lo, hi in domain)
        if any(hi <= lo for lo, hi in box):
            raise BadSpec("margin too large for domain")
        regions.append(CompactRegion(box, label=f"K{n}"))
    return RegionLadder(regions=regions)


def directional_region_ladder(domain, depth: int, gap0: float = 0.25,
                              gap_floor: float = 1.0 / 64.0,
                              margin0: float = 0.125) -> RegionLadder:
    """Directional ladder over a (t, x) box: plain regions as in the
    standard flavor, plus/minus regions with shrinking diagonal gaps
    (floored so the smallest tested region still clears the mollified
    layer of the coarsest ladder entries)."""
    plain = standard_region_ladder(domain, depth, margin0=margin0).regions
    plus, minus = [], []
    for n in range(depth):
        gap = max(gap0 * 2.0 ** (-n), gap_floor)
        plus.append(DirectionalRegion(plain[n].box, "gamma_minus", gap))
        minus.append(DirectionalRegion(plain[n].box, "gamma_plus", gap))
    return RegionLadder(regions=plain, flavor="directional",
                        plus_regions=plus, minus_regions=minus)


# ---------------------------------------------------------------------------
# seminorm profiles


def _clip_box_to_grid(g: GridFunction, box):
    out = []
    for ax, (lo, hi) in enumerate(box):
        glo, ghi = g.box[ax]
        lo, hi = max(lo, glo), min(hi, ghi)
        if hi < lo - BOX_TOL:
            return None
        out.append((max(lo, glo), min(hi, ghi)))
    return tuple(out)


def _box_slice(g: GridFunction, box):
    box = _clip_box_to_grid(g, box)
    if box is None:
        return None
    ranges = [g.index_range(ax, lo, hi) for ax, (lo, hi) in enumerate(box)]
    return tuple(slice(i0, i1 + 1) for i0, i1 in ranges)


def _sup_abs_box(g: GridFunction, box) -> float:
    sl = _box_slice(g, box)
    if sl is None or any(s.start >= s.stop for s in sl):
        return 0.0
    return float(np.max(np.abs(g.values[sl])))


def _sup_abs_directional(g: GridFunction, region: DirectionalRegion) -> float:
    # Per row the excluded diagonal band is one x-interval, so the sup
    # over the region is two contiguous-slice maxima per row.
    sl = _box_slice(g, region.box)
    if sl is None:
        return 0.0
    t = g.axis_coords(0)[sl[0]]
    x_lo_box, _ = g.box[1]
    h = g.spacing[1]
    j0, j1 = sl[1].start, sl[1].stop - 1
    vals = g.values
    out = 0.0
    tol = NODE_SNAP_TOL
    for i, ti in zip(range(sl[0].start, sl[0].stop), t):
        center = -ti if region.avoid == "gamma_minus" else ti
        # excluded columns: |x - center| < gap
        jb_lo = int(math.ceil((center - region.gap + tol - x_lo_box) / h))
        jb_hi = int(math.floor((center + region.gap - tol - x_lo_box) / h))
        if j0 < jb_lo:
            m = np.max(np.abs(vals[i, j0: min(jb_lo, j1 + 1)]))
            if m > out:
                out = float(m)
        if j1 > jb_hi:
            m = np.max(np.abs(vals[i, max(jb_hi + 1, j0): j1 + 1]))
            if m > out:
                out = float(m)
    return out


def _mixed_partial_sups(g: GridFunction, ladder: RegionLadder) -> np.ndarray:
    """sups of |d^alpha u| over K_n for all |alpha| <= n, folded into the
    running max per row; returns the length-depth column of a profile."""
    from .nets import _central_diff_axis  # local: avoids a public-API detour

    depth = ladder.depth
    col = np.zeros(depth)
    # level[j] holds d_t^i d_x^j at current total order, built incrementally
    level = {(0, 0) if g.ndim == 2 else 0: g}
    for total in range(depth):
        if total > 0:
            new = {}
            if g.ndim == 1:
                new[total] = _central_diff_axis(level[total - 1], 0)
            else:
                for (i, j), gf in level.items():
                    if i + j != total - 1:
                        continue
                    new[(i + 1, j)] = _central_diff_axis(gf, 0)
                    if j + 1 <= total and (i, j + 1) not in new:
                        new[(i, j + 1)] = _central_diff_axis(gf, 1)
            level.update(new)
        for n in range(total, depth):
            K = ladder.regions[n]
            for key, gf in level.items():
                order = key if isinstance(key, int) else sum(key)
                if order != total:
                    continue
                col[n] = max(col[n], _sup_abs_box(gf, K.box))
    return col


def directional_term_columns(g: GridFunction, ladder: RegionLadder):
    """The three ingredients of the directional seminorm, one column each:
    D_+ sups over the plus regions, D_- sups over the minus regions, and
    the plain sup over K_n."""
    from .nets import _diag_diff

    depth = ladder.depth
    term_plus = np.zeros(depth)
    term_minus = np.zeros(depth)
    dp, dm = g, g
    for alpha in range(1, depth):
        dp = _diag_diff(dp, +1)
        dm = _diag_diff(dm, -1)
        for n in range(alpha, depth):
            term_plus[n] = max(term_plus[n],
                               _sup_abs_directional(dp, ladder.plus_regions[n]))
            term_minus[n] = max(term_minus[n],
                                _sup_abs_directional(dm, ladder.minus_regions[n]))
    plain = np.array([_sup_abs_box(g, K.box) for K in ladder.regions])
    return term_plus, term_minus, plain


def _directional_sups(g: GridFunction, ladder: RegionLadder) -> np.ndarray:
    term_plus, term_minus, plain = directional_term_columns(g, ladder)
    return term_plus + term_minus + plain


@dataclass
class SeminormProfile:
    """Matrix of seminorm values indexed by (n, ladder entry)."""

    values: np.ndarray
    ladder: EpsilonLadder
    flavor: str = "standard"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if np.any(v < 0.0):
            raise BadSpec("seminorm values must be non-negative")
        if np.any(np.diff(v, axis=0) < -1e-9 * np.maximum(v[:-1], 1e-30)):
            raise BadSpec("seminorm rows must be non-decreasing in n")


def seminorm_profile(u: RepresentativeNet, ladder: RegionLadder) -> SeminormProfile:
    """Evaluate the seminorm ladder on every epsilon entry of a net."""
    cols = []
    for g in u.functions:
        if ladder.flavor == "standard":
            cols.append(_mixed_partial_sups(g, ladder))
        else:
            cols.append(_directional_sups(g, ladder))
    return SeminormProfile(values=np.stack(cols, axis=1), ladder=u.ladder,
                           flavor=ladder.flavor)


# ---------------------------------------------------------------------------
# valuations and the ultra-metric


@dataclass
class ValuationEstimate:
    """Fitted decay exponent of one seminorm row with fit diagnostics."""

    slope: float
    intercept: float
    r_squared: float
    window: tuple
    saturated: bool = False


def _auto_window(count: int) -> int:
    # smallest-eps half of the ladder, never fewer than 3 points
    return max(3, (count + 1) // 2)


def fit_decay_exponent(epsilons: np.ndarray, values: np.ndarray,
                       window=None) -> ValuationEstimate:
    """Least-squares slope of log(values) vs log(eps).

    ``window=None`` selects the smallest-eps half of the ladder.  Values at
    or below the zero floor are dropped; if the whole window sits below the
    floor the row is reported as saturated (slope +inf, the operational
    stand-in for an infinite valuation).
    """
    epsilons = np.asarray(epsilons, dtype=float)
    values = np.asarray(values, dtype=float)
    count = len(epsilons)
    if window is None:
        k = _auto_window(count)
        i0, i1 = count - k, count - 1
    else:
        i0, i1 = window
    if i1 - i0 + 1 < 3:
        raise InsufficientLadder("slope window must span at least 3 entries")
    eps_w = epsilons[i0:i1 + 1]
    val_w = values[i0:i1 + 1]
    usable = val_w > ZERO_FLOOR
    if not usable.any():
        return ValuationEstimate(slope=math.inf, intercept=-math.inf,
                                 r_squared=1.0, window=(i0, i1), saturated=True)
    if usable.sum() < 3:
        raise InsufficientLadder(
            f"only {int(usable.sum())} usable points in window [{i0}, {i1}]")
    x = np.log(eps_w[usable])
    y = np.log(val_w[usable])
    n = len(x)
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    sxy = float(np.sum((x - xm) * (y - ym)))
    slope = sxy / sxx
    intercept = ym - slope * xm
    ss_res = float(np.sum((y - (slope * x + intercept)) ** 2))
    ss_tot = float(np.sum((y - ym) ** 2))
    if ss_tot < 1e-24:
        r2 = 1.0 if ss_res < 1e-18 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return ValuationEstimate(slope=slope, intercept=intercept, r_squared=r2,
                             window=(i0, i1), saturated=False)


def estimate_valuation(profile: SeminormProfile, n: int,
                       window=None) -> ValuationEstimate:
    if not (0 <= n < profile.values.shape[0]):
        raise BadSpec(f"profile has no row {n}")
    return fit_decay_exponent(profile.ladder.epsilons, profile.values[n], window)


def ultra_pseudo_seminorm(v: ValuationEstimate) -> float:
    """exp(-valuation); saturated rows map to 0."""
    if v.saturated or math.isinf(v.slope):
        return 0.0
    return math.exp(-v.slope)


@dataclass
class UltraMetricReport:
    """Truncated ultra-metric with its per-level pseudo-seminorms."""

    p_values: list
    distance: float
    truncation: int

    @property
    def tail_bound(self) -> float:
        return 2.0 ** (-self.truncation - 1)


def seminorm_noise_floors(u: RepresentativeNet, v: RepresentativeNet,
                          flavor: str, depth: int) -> np.ndarray:
    """Per-(n, ladder entry) noise floors for seminorms of u - v.

    The subtraction leaves absolute rounding noise at the scale of the
    larger input field, which order-n stencils then amplify by step^-n.
    On epsilon-coupled grids this noise grows as eps shrinks, so rows
    below the floor must be treated as unmeasurable (zero)."""
    count = len(u.ladder)
    floors = np.zeros((depth, count))
    for k, (gu, gv) in enumerate(zip(u.functions, v.functions)):
        scale = max(float(np.max(np.abs(gu.values))),
                    float(np.max(np.abs(gv.values))), 1e-30)
        h = min(gu.spacing)
        step = math.sqrt(2.0) * h if flavor == "directional" else h
        for n in range(depth):
            floors[n, k] = stencil_noise_floor(scale, step, n)
    return floors


def sharp_distance(u: RepresentativeNet, v: RepresentativeNet,
                   ladder: RegionLadder, n_max: int = DEFAULT_NMAX,
                   noise_floor: bool = True) -> UltraMetricReport:
    """Ultra-metric distance sum_{n<=n_max} 2^-n-1 min(p_n(u-v), 1).

    The flavor of the region ladder selects the plain metric (standard) or
    the characteristic-field metric (directional).  With ``noise_floor``
    (default), seminorm rows below the finite-difference rounding
    resolution are zeroed before fitting; otherwise cancellation noise on
    fine grids masquerades as growth.
    """
    if not u.ladder.same_as(v.ladder):
        raise LadderMismatch("nets live on different epsilon ladders")
    if ladder.depth < n_max + 1:
        raise BadSpec(f"region ladder depth {ladder.depth} < n_max+1")
    dnet = net_binary("sub", u, v)
    profile = seminorm_profile(dnet, ladder)
    floors = (seminorm_noise_floors(u, v, ladder.flavor, ladder.depth)
              if noise_floor else None)
    return distance_from_profile(profile, n_max, floors=floors)


def distance_from_profile(profile: SeminormProfile, n_max: int = DEFAULT_NMAX,
                          floors: np.ndarray | None = None) -> UltraMetricReport:
    values = profile.values
    if floors is not None:
        values = np.where(values > floors[: values.shape[0]], values, 0.0)
    ps = []
    dist = 0.0
    for n in range(n_max + 1):
        try:
            est = fit_decay_exponent(profile.ladder.epsilons, values[n])
            p = ultra_pseudo_seminorm(est)
        except InsufficientLadder:
            # row drops below measurement resolution inside the fit window:
            # decay faster than resolvable, infinite valuation operationally
            p = 0.0
        ps.append(p)
        dist += 2.0 ** (-n - 1) * min(p, 1.0)
    return UltraMetricReport(p_values=ps, distance=dist, truncation=n_max)


# ---------------------------------------------------------------------------
# verdicts


@dataclass
class SlopeVerdict:
    """Outcome of a family of decay-slope tests with the evidence kept."""

    passed: bool
    estimates: dict
    threshold: float


def _normalize_orders(u: RepresentativeNet, orders):
    out = []
    for o in orders:
        if isinstance(o, int):
            out.append(("x" if u.ndim >= 1 else "x", o))
        else:
            direction, k = o
            out.append((direction, int(k)))
    return out


def bounded_type(u: RepresentativeNet, K: CompactRegion, orders,
                 tol: float = DEFAULT_SLOPE_TOL,
                 noise_floor: bool = True) -> SlopeVerdict:
    """True iff every requested derivative's decay slope is >= -tol on K.

    ``orders`` entries are (direction, order) pairs with direction in
    {'t','x','plus','minus'}; bare integers mean x-derivatives.  Stencil
    values below the rounding resolution of the grid count as zero.
    """
    from .nets import diff

    estimates = {}
    ok = True
    for direction, k in _normalize_orders(u, orders):
        dnet = diff(u, direction, k)
        vals = np.empty(len(u.ladder))
        for i, (g0, g) in enumerate(zip(u.functions, dnet.functions)):
            box = _clip_box_to_grid(g, K.box)
            v = 0.0 if box is None else _sup_abs_box(g, box)
            if noise_floor:
                h = min(g0.spacing)
                step = math.sqrt(2.0) * h if direction in ("plus", "minus") else h
                scale = float(np.max(np.abs(g0.values)))
                if v <= stencil_noise_floor(scale, step, k):
                    v = 0.0
            vals[i] = v
        try:
            est = fit_decay_exponent(u.ladder.epsilons, vals)
        except InsufficientLadder:
            est = ValuationEstimate(slope=math.inf, intercept=-math.inf,
                                    r_squared=1.0, window=(0, len(vals) - 1),
                                    saturated=True)
        estimates[(direction, k)] = est
        if not est.saturated and est.slope < -tol:
            ok = False
    return SlopeVerdict(passed=ok, estimates=estimates, threshold=-tol)


def is_negligible(u: RepresentativeNet, regions: RegionLadder, a_max: float,
                  tol: float = DEFAULT_SLOPE_TOL) -> SlopeVerdict:
    """Finite test of negligibility: every seminorm row up to the ladder
    depth must decay with slope >= a_max - tol.  (An under-approximation:
    exponents above a_max and orders above the depth are not probed.)"""
    if a_max < 2:
        raise BadSpec("a_max must be >= 2 for a meaningful negligibility test")
    profile = seminorm_profile(u, regions)
    estimates = {}
    ok = True
    for n in range(regions.depth):
        est = estimate_valuation(profile, n)
        estimates[n] = est
        if not est.saturated and est.slope < a_max - tol:
            ok = False
    return SlopeVerdict(passed=ok, estimates=estimates, threshold=a_max - tol)
