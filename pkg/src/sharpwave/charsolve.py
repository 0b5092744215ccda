"""Fixed-point solver for the small-nonlinearity wave equation.

The second-order problem is solved per ladder entry through its
first-order characteristic system: with V = u_t - u_x and W = u_t + u_x,
both fields satisfy transport equations along the lattice diagonals with
the common source g = eps^q * f(u), where u is recovered from the running
x-integral of (W - V)/2.  The solver iterates the integral-equation map

    (V, W)  ->  (V0(x-t) + int_0^t g ds  along the ascending diagonal,
                 W0(x+t) + int_0^t g ds  along the descending diagonal)

from the free linear evolution until the per-epsilon sup change drops
below ``stop_distance * eps^2``; the directional ultra-metric distance
between consecutive iterates is recorded as the contraction trace.

Everything runs on diagonal lattices (equal spacing in t and x), so the
characteristic integrals hit lattice nodes exactly and no interpolation
enters.  A marching scheme (``marching_reference``) provides an
independent cross-check, and the row-streaming path in ``streaming``
covers lattices too large to materialize.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import backend
from .asymptotics import (
    DEFAULT_NMAX,
    RegionLadder,
    directional_region_ladder,
    fit_decay_exponent,
    sharp_distance,
)
from .errors import (
    BadSpec,
    LatticeMismatch,
    LatticeTooLarge,
    NoConvergence,
)
from .initial_data import DATA_RULE
from .nets import (
    NODE_SNAP_TOL,
    NONLINEARITY_CODES,
    EpsilonLadder,
    GridFunction,
    RepresentativeNet,
    SpacingRule,
    cumtrapz_along,
    nonlinearity,
)

LOG2 = math.log(2.0)

# Largest per-epsilon lattice the materialized solver will allocate
# (several float64 fields of this size must fit in memory at once).
MAX_MATERIALIZED_NODES = int(os.environ.get("SHARPWAVE_MAX_NODES", 2 ** 25))


@dataclass(frozen=True)
class PicardParams:
    max_iters: int = 40
    stop_distance: float = 1e-6


@dataclass(frozen=True)
class SolveConfig:
    """Geometry, nonlinearity and iteration control for one solve."""

    T: float
    a: float
    f: str = "square"
    E_exponent: float = 1.0
    ladder: EpsilonLadder = None
    h_rule: SpacingRule = SpacingRule("eps_over", 16.0)
    picard: PicardParams = field(default_factory=PicardParams)
    x_margin: float = 1.0
    corrector_passes: int = 3
    n_max: int = DEFAULT_NMAX

    def __post_init__(self):
        if self.T <= 0.0 or self.a <= 0.0:
            raise BadSpec("horizon T and support radius a must be positive")
        if self.E_exponent < 0.0:
            raise BadSpec("source decay exponent must be >= 0")
        if self.picard.stop_distance <= 0.0 or self.picard.max_iters < 1:
            raise BadSpec("bad iteration parameters")
        nonlinearity(self.f)
        if self.ladder is None:
            raise BadSpec("a solve needs an epsilon ladder")

    @property
    def contraction_bound(self) -> float:
        """Analytic contraction factor of the integral map, 2*exp(-q)."""
        return 2.0 * math.exp(-self.E_exponent)

    @property
    def contraction_guaranteed(self) -> bool:
        # the factor is < 1 exactly when the decay exponent exceeds log 2
        return self.E_exponent > LOG2

    @property
    def x_lo(self) -> float:
        return -(self.a + self.T + self.x_margin)

    @property
    def x_hi(self) -> float:
        return self.a + self.T + self.x_margin

    @property
    def domain(self):
        return ((0.0, self.T), (self.x_lo, self.x_hi))

    def lattice(self, eps: float):
        """(h, nt, nx) of the diagonal lattice for one ladder entry."""
        h = self.h_rule.h(eps)
        nt = int(round(self.T / h)) + 1
        nx = int(round((self.x_hi - self.x_lo) / h)) + 1
        if abs((nt - 1) * h - self.T) > NODE_SNAP_TOL * max(1.0, self.T):
            raise BadSpec(f"horizon {self.T} not commensurate with h={h}")
        if abs((nx - 1) * h - (self.x_hi - self.x_lo)) > NODE_SNAP_TOL * 10:
            raise BadSpec("lattice width not commensurate with spacing")
        return h, nt, nx


@dataclass
class CharacteristicPair:
    """The two characteristic fields on a common diagonal lattice."""

    V: RepresentativeNet
    W: RepresentativeNet
    a: float
    T: float

    def __post_init__(self):
        if not self.V.ladder.same_as(self.W.ladder):
            raise BadSpec("characteristic fields must share the ladder")

    @property
    def ladder(self) -> EpsilonLadder:
        return self.V.ladder


@dataclass
class TraceEntry:
    iteration: int
    d_tilde: float
    sup_changes: np.ndarray


@dataclass
class SolveResult:
    pair: CharacteristicPair
    trace: list
    iterations: int
    converged: bool


@dataclass
class ContractionReport:
    """Measured map-contraction ratios against the analytic bound."""

    pairs_tested: int
    ratios: list
    bound: float
    max_ratio: float

    @property
    def contracting(self) -> bool:
        return self.max_ratio < 1.0


# ---------------------------------------------------------------------------
# lattice/data plumbing


def _require_diagonal(g: GridFunction):
    if g.ndim != 2:
        raise LatticeMismatch("characteristic integrals need a 2-D grid")
    ht, hx = g.spacing
    if abs(ht - hx) > NODE_SNAP_TOL * ht:
        raise LatticeMismatch("characteristic integrals need equal t/x spacing")
    return ht


def _to_solver_spacing(g: GridFunction, h: float) -> GridFunction:
    stride = h / g.spacing[0]
    s = int(round(stride))
    if s >= 1 and abs(stride - s) < 1e-9:
        if (g.values.shape[0] - 1) % s:
            raise BadSpec("data grid does not subsample onto the lattice")
        return GridFunction(g.box, (h,), g.values[::s], check_finite=False)
    return g.resample((h,))


def _extend_to(ext_lo: float, length: int, h: float, g: GridFunction) -> np.ndarray:
    """Zero-pad 1-D grid values onto a longer aligned axis."""
    out = np.zeros(length)
    k0 = (g.box[0][0] - ext_lo) / h
    k = int(round(k0))
    if abs(k0 - k) > 1e-6:
        raise BadSpec("data grid is not aligned with the solver lattice")
    out[k: k + len(g.values)] = g.values
    return out


class LatticeData:
    """Per-epsilon boundary data extended over [x_lo - T, x_hi + T]."""

    def __init__(self, cfg: SolveConfig, k: int, v0: GridFunction,
                 w0: GridFunction, u0: GridFunction | None = None):
        eps = cfg.ladder.epsilons[k]
        self.eps = eps
        self.h, self.nt, self.nx = cfg.lattice(eps)
        self.ext_lo = cfg.x_lo - cfg.T
        self.length = self.nx + 2 * (self.nt - 1)
        self.offset = self.nt - 1
        self.v0ext = _extend_to(self.ext_lo, self.length, self.h,
                                _to_solver_spacing(v0, self.h))
        self.w0ext = _extend_to(self.ext_lo, self.length, self.h,
                                _to_solver_spacing(w0, self.h))
        if u0 is not None:
            self.u0ext = _extend_to(self.ext_lo, self.length, self.h,
                                    _to_solver_spacing(u0, self.h))
        else:
            self.u0ext = np.zeros(self.length)


def lattice_data(cfg: SolveConfig, data, u0: RepresentativeNet | None = None):
    v0net, w0net = data
    if not v0net.ladder.same_as(cfg.ladder):
        raise BadSpec("data ladder does not match the solve ladder")
    return [LatticeData(cfg, k, v0net.functions[k], w0net.functions[k],
                        None if u0 is None else u0.functions[k])
            for k in range(len(cfg.ladder))]


def _guard_size(nt: int, nx: int):
    if nt * nx > MAX_MATERIALIZED_NODES:
        raise LatticeTooLarge(
            f"lattice {nt}x{nx} exceeds the materialized budget "
            f"({MAX_MATERIALIZED_NODES} nodes); use the streaming solver")


def _shifted_rows(ext: np.ndarray, offset: int, nt: int, nx: int,
                  sign: int) -> np.ndarray:
    out = np.empty((nt, nx))
    for i in range(nt):
        start = offset + sign * i
        out[i, :] = ext[start: start + nx]
    return out


def free_evolution(cfg: SolveConfig, data) -> CharacteristicPair:
    """Source-free transport of the boundary data: the start iterate."""
    v_grids, w_grids = [], []
    for ld in lattice_data(cfg, data):
        _guard_size(ld.nt, ld.nx)
        box = cfg.domain
        spacing = (ld.h, ld.h)
        v_grids.append(GridFunction(box, spacing,
                                    _shifted_rows(ld.v0ext, ld.offset, ld.nt,
                                                  ld.nx, -1),
                                    check_finite=False))
        w_grids.append(GridFunction(box, spacing,
                                    _shifted_rows(ld.w0ext, ld.offset, ld.nt,
                                                  ld.nx, +1),
                                    check_finite=False))
    V = RepresentativeNet(ladder=cfg.ladder, functions=v_grids,
                          logical_domain=cfg.domain)
    W = RepresentativeNet(ladder=cfg.ladder, functions=w_grids,
                          logical_domain=cfg.domain)
    return CharacteristicPair(V=V, W=W, a=cfg.a, T=cfg.T)


# ---------------------------------------------------------------------------
# the integral-equation building blocks


def line_integral(A: RepresentativeNet, sign: str) -> RepresentativeNet:
    """Integral of A from the initial line along the backward diagonal
    through each node, d-tau parametrization, trapezoid rule.

    ``sign='plus'`` follows the ascending characteristic (the one along
    which V propagates), ``'minus'`` the descending one.
    """
    if sign not in ("plus", "minus"):
        raise BadSpec(f"sign must be plus or minus, got {sign!r}")
    sgn = +1 if sign == "plus" else -1

    def one(eps, g):
        h = _require_diagonal(g)
        vals = backend.kernels.diag_cumtrapz(
            np.ascontiguousarray(g.values), h, sgn)
        return GridFunction(g.box, g.spacing, vals, check_finite=False)

    return A.map(one)


def inner_integral(pair: CharacteristicPair) -> RepresentativeNet:
    """Running x-integral of (W - V)/2 from the left lattice edge.

    The lattice edge sits one margin (>= 1 > eps) left of the support
    cone base at -(a+T), so this is the mollification-consistent reading
    of the lower limit: for data with exact supports the two agree, while
    the eps-widened cone of mollified data can poke slightly left of
    -(a+T) near t = T and would otherwise leave a spurious exterior
    residue."""
    grids = []
    for gv, gw in zip(pair.V.functions, pair.W.functions):
        h = _require_diagonal(gv)
        s = 0.5 * (gw.values - gv.values)
        vals = cumtrapz_along(s, h, 1, 0)
        grids.append(GridFunction(gv.box, gv.spacing, vals, check_finite=False))
    return RepresentativeNet(ladder=pair.ladder, functions=grids,
                             logical_domain=pair.V.logical_domain)


def source_field(pair: CharacteristicPair, cfg: SolveConfig) -> RepresentativeNet:
    """g = eps^q * f(u) with u the reconstructed solution."""
    f = nonlinearity(cfg.f)
    u = inner_integral(pair)

    def one(eps, g):
        amp = eps ** cfg.E_exponent
        return GridFunction(g.box, g.spacing, amp * f(g.values),
                            check_finite=False)

    return u.map(one)


def apply_picard_map(pair: CharacteristicPair, cfg: SolveConfig,
                     data) -> CharacteristicPair:
    """One application of the integral-equation map to a pair."""
    g = source_field(pair, cfg)
    bplus = line_integral(g, "plus")
    bminus = line_integral(g, "minus")
    v_grids, w_grids = [], []
    for ld, gp, gm in zip(lattice_data(cfg, data), bplus.functions,
                          bminus.functions):
        v_grids.append(GridFunction(
            gp.box, gp.spacing,
            _shifted_rows(ld.v0ext, ld.offset, ld.nt, ld.nx, -1) + gp.values,
            check_finite=False))
        w_grids.append(GridFunction(
            gm.box, gm.spacing,
            _shifted_rows(ld.w0ext, ld.offset, ld.nt, ld.nx, +1) + gm.values,
            check_finite=False))
    V = RepresentativeNet(ladder=cfg.ladder, functions=v_grids,
                          logical_domain=cfg.domain)
    W = RepresentativeNet(ladder=cfg.ladder, functions=w_grids,
                          logical_domain=cfg.domain)
    return CharacteristicPair(V=V, W=W, a=cfg.a, T=cfg.T)


def pair_distance(p1: CharacteristicPair, p2: CharacteristicPair,
                  regions: RegionLadder, n_max: int = DEFAULT_NMAX) -> float:
    """Ultra-metric on pairs: sum of the directional field distances."""
    dv = sharp_distance(p1.V, p2.V, regions, n_max)
    dw = sharp_distance(p1.W, p2.W, regions, n_max)
    return dv.distance + dw.distance


def default_directional_regions(cfg: SolveConfig) -> RegionLadder:
    return directional_region_ladder(cfg.domain, cfg.n_max + 1)


def picard_solve(cfg: SolveConfig, data) -> SolveResult:
    """Iterate the integral map from the free evolution to its fixed point.

    Stops when each ladder entry's sup change drops below
    ``stop_distance * eps^2`` (the natural scale of one more power of the
    source); raises NoConvergence with the trace attached otherwise.
    """
    regions = default_directional_regions(cfg)
    current = free_evolution(cfg, data)
    eps = cfg.ladder.epsilons
    thresholds = cfg.picard.stop_distance * eps ** 2
    trace = []
    for it in range(1, cfg.picard.max_iters + 1):
        new = apply_picard_map(current, cfg, data)
        sup_changes = np.array([
            max(float(np.max(np.abs(a.values - b.values))),
                float(np.max(np.abs(c.values - d.values))))
            for a, b, c, d in zip(new.V.functions, current.V.functions,
                                  new.W.functions, current.W.functions)])
        d_t = pair_distance(current, new, regions, cfg.n_max)
        trace.append(TraceEntry(iteration=it, d_tilde=d_t,
                                sup_changes=sup_changes))
        current = new
        if np.all(sup_changes <= thresholds):
            return SolveResult(pair=current, trace=trace, iterations=it,
                               converged=True)
    raise NoConvergence(
        f"no fixed point within {cfg.picard.max_iters} iterations", trace=trace)


def reconstruct_solution(pair: CharacteristicPair) -> RepresentativeNet:
    """Solution u from the solved pair; restriction to t=0 matches the
    initial position to O(h^2) and the discrete t-derivative matches the
    initial velocity to O(h)."""
    return inner_integral(pair)


# ---------------------------------------------------------------------------
# independent marching scheme (cross-check)


def marching_reference(cfg: SolveConfig, data) -> CharacteristicPair:
    """Heun (predictor-corrector) stepping along the characteristics with
    the running x-integral refreshed every stage.  Same O(h^2) order as
    the fixed point of the integral map, but a genuinely different update
    rule; used to cross-validate the solvers."""
    f = nonlinearity(cfg.f)
    v_grids, w_grids = [], []
    for ld in lattice_data(cfg, data):
        _guard_size(ld.nt, ld.nx)
        h, nt, nx, off = ld.h, ld.nt, ld.nx, ld.offset
        amp = ld.eps ** cfg.E_exponent
        V = np.zeros((nt, nx))
        W = np.zeros((nt, nx))
        V[0] = ld.v0ext[off: off + nx]
        W[0] = ld.w0ext[off: off + nx]

        def source(vrow, wrow):
            u = cumtrapz_along(0.5 * (wrow - vrow), h, 0, 0)
            return amp * f(u)

        g_row = source(V[0], W[0])
        for i in range(1, nt):
            v_pred = np.empty(nx)
            w_pred = np.empty(nx)
            v_pred[1:] = V[i - 1, :-1] + h * g_row[:-1]
            w_pred[:-1] = W[i - 1, 1:] + h * g_row[1:]
            v_pred[0] = ld.v0ext[off - i]
            w_pred[-1] = ld.w0ext[off + i + nx - 1]
            g_pred = source(v_pred, w_pred)
            V[i, 1:] = V[i - 1, :-1] + 0.5 * h * (g_row[:-1] + g_pred[1:])
            W[i, :-1] = W[i - 1, 1:] + 0.5 * h * (g_row[1:] + g_pred[:-1])
            V[i, 0] = ld.v0ext[off - i]
            W[i, -1] = ld.w0ext[off + i + nx - 1]
            g_row = source(V[i], W[i])
        box = cfg.domain
        v_grids.append(GridFunction(box, (h, h), V, check_finite=False))
        w_grids.append(GridFunction(box, (h, h), W, check_finite=False))
    Vn = RepresentativeNet(ladder=cfg.ladder, functions=v_grids,
                           logical_domain=cfg.domain)
    Wn = RepresentativeNet(ladder=cfg.ladder, functions=w_grids,
                           logical_domain=cfg.domain)
    return CharacteristicPair(V=Vn, W=Wn, a=cfg.a, T=cfg.T)


# ---------------------------------------------------------------------------
# support-cone audits


@dataclass
class MembershipVerdict:
    passed: bool
    exterior_sups: np.ndarray
    slope: float
    tol: float


def _exterior_sup(g: GridFunction, a: float, eps: float) -> float:
    t = g.axis_coords(0)
    x = g.axis_coords(1)
    mask = np.abs(x)[None, :] > (t[:, None] + a + eps + 1e-12)
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(g.values[mask])))


def support_cone_membership(pair: CharacteristicPair, tol: float = 1e-8
                            ) -> MembershipVerdict:
    """The running x-integral of (W - V)/2 must vanish outside the
    (mollification-widened) support cone |x| > t + a + eps."""
    u = inner_integral(pair)
    sups = np.array([_exterior_sup(g, pair.a, eps)
                     for g, eps in zip(u.functions, pair.ladder)])
    est = fit_decay_exponent(pair.ladder.epsilons, sups)
    slope = math.inf if est.saturated else est.slope
    passed = bool(np.all(sups <= tol) or slope >= 4.0)
    return MembershipVerdict(passed=passed, exterior_sups=sups, slope=slope,
                             tol=tol)


def exterior_zero_audit(pair: CharacteristicPair) -> dict:
    """Sups of |V|, |W| and |u| outside the widened support cone."""
    u = inner_integral(pair)
    out = {}
    for name, net in (("V", pair.V), ("W", pair.W), ("U", u)):
        out[name] = np.array([_exterior_sup(g, pair.a, eps)
                              for g, eps in zip(net.functions, pair.ladder)])
    return out
