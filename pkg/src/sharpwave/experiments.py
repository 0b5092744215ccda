"""End-to-end experiment runners used by both the CLI and the test suite.

Each runner wires data construction, a solve, and the measurement layer
into one reproducible unit: valuation calibration on synthetic power
laws, the source-free evolution against its closed form, light-cone
classification runs, contraction-ratio measurements on perturbed pairs,
and the stationary radial example.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .asymptotics import (
    DEFAULT_SLOPE_TOL,
    fit_decay_exponent,
    standard_region_ladder,
    seminorm_profile,
    estimate_valuation,
)
from .charsolve import (
    CharacteristicPair,
    ContractionReport,
    SolveConfig,
    apply_picard_map,
    default_directional_regions,
    free_evolution,
    pair_distance,
    picard_solve,
)
from .initial_data import (
    DataSpec,
    build_initial_data,
    derive_characteristic_data,
    make_mollifier,
    smooth_step,
)
from .nets import (
    EpsilonLadder,
    GridFunction,
    RepresentativeNet,
    SpacingRule,
    synthetic_net,
)
from .radial3d import RadialNet, radial_residual, radial_singsupp
from .singmap import (
    LightConeGeometry,
    SingularityMap,
    classify_from_sups,
    combo_noise_floors,
    confinement_check,
)
from .streaming import CellGrid, stream_solve


# ---------------------------------------------------------------------------
# valuation calibration (synthetic power laws)

CALIBRATION_SHAPES = {
    "sine": lambda x: np.sin(3.0 * x + 0.7),
    "gaussian": lambda x: np.exp(-((x - 0.3) ** 2) * 4.0) + 0.5,
    "polynomial": lambda x: 1.0 + x * x * (1.0 - x),
}


def valuation_calibration(exponents, ladder: EpsilonLadder,
                          box=((0.0, 1.0),), h: float = 1.0 / 256.0,
                          depth: int = 3):
    """Fit decay slopes of eps^b * g(x) nets; returns one row per
    (exponent, shape, seminorm index): (b, shape, n, slope, r2, lo, hi)."""
    rule = SpacingRule("fixed", h)
    regions = standard_region_ladder(box, depth, margin0=1.0 / 16.0)
    rows = []
    for b in exponents:
        for name, g in CALIBRATION_SHAPES.items():
            net = synthetic_net(ladder, box, rule,
                                lambda e, x, gg=g, bb=b: (e ** bb) * gg(x))
            prof = seminorm_profile(net, regions)
            for n in range(depth):
                est = estimate_valuation(prof, n)
                rows.append((float(b), name, n, est.slope, est.r_squared,
                             est.window[0], est.window[1]))
    return rows


# ---------------------------------------------------------------------------
# source-free evolution against the closed form


@dataclass
class LinearOracleRun:
    epsilons: np.ndarray
    errors: np.ndarray           # sup |reconstructed - closed form| per entry
    halved_errors: np.ndarray    # same at half the spacing
    exterior: list               # per-entry exterior sups {V, W, U}

    @property
    def richardson_ratios(self) -> np.ndarray:
        return self.errors / self.halved_errors


def run_linear_oracle(ladder: EpsilonLadder, a: float = 1.0, T: float = 1.0,
                      denom: float = 16.0) -> LinearOracleRun:
    """Solve with the zero nonlinearity and compare the reconstruction to
    the closed-form average of shifted initial positions, streamed so the
    finest entries never materialize."""
    moll = make_mollifier()
    u0, u1 = build_initial_data(DataSpec(kind="kink", a=a), moll, ladder)
    v0, w0 = derive_characteristic_data(u0, u1)
    errors, exterior = [], []
    for d in (denom, 2.0 * denom):
        cfg = SolveConfig(T=T, a=a, f="zero", ladder=ladder,
                          h_rule=SpacingRule("eps_over", d))
        ms = stream_solve(cfg, (v0, w0), u0=u0, oracle=True)
        errors.append(np.array([m.oracle_error for m in ms]))
        if d == denom:
            exterior = [m.exterior for m in ms]
    return LinearOracleRun(epsilons=ladder.epsilons.copy(), errors=errors[0],
                           halved_errors=errors[1], exterior=exterior)


# ---------------------------------------------------------------------------
# classification runs


@dataclass
class ClassificationRun:
    config: SolveConfig
    data: DataSpec
    geometry: LightConeGeometry
    map: SingularityMap
    confinement: dict
    exterior: list               # per-entry exterior sups {V, W, U}

    @property
    def audits_pass(self) -> bool:
        worst = max(max(e.values()) for e in self.exterior)
        return bool(worst <= 1e-8)


def run_classification(data: DataSpec, f: str, ladder: EpsilonLadder,
                       T: float = 1.0, E_exponent: float = 1.0,
                       denom: float = 4.0, cell_h: float = 1.0 / 16.0,
                       max_order: int = 4, tol: float = DEFAULT_SLOPE_TOL,
                       x_extent: float = 2.0) -> ClassificationRun:
    """Solve (streamed) over the ladder and classify every cell of
    [0,T] x [-X, X]; also collects the support-cone audits."""
    moll = make_mollifier()
    u0, u1 = build_initial_data(data, moll, ladder)
    v0, w0 = derive_characteristic_data(u0, u1)
    cfg = SolveConfig(T=T, a=data.a, f=f, E_exponent=E_exponent, ladder=ladder,
                      h_rule=SpacingRule("eps_over", denom))
    cells = CellGrid.over(T, x_extent, cell_h)
    measurements = stream_solve(cfg, (v0, w0), cells=cells)
    stack = np.stack([m.cell_sups for m in measurements])
    scale = max(max(float(np.max(np.abs(g.values))) for g in v0.functions),
                max(float(np.max(np.abs(g.values))) for g in w0.functions), 1.0)
    floors = combo_noise_floors(ladder, [m.h for m in measurements], scale,
                                E_exponent, cfg.x_hi - cfg.x_lo)
    smap = classify_from_sups(stack, ladder, cells, max_order, tol,
                              noise_floors=floors)
    geom = LightConeGeometry(T=T, half_width=data.singular_half_width)
    return ClassificationRun(
        config=cfg, data=data, geometry=geom, map=smap,
        confinement=confinement_check(smap, geom, 2.0),
        exterior=[m.exterior for m in measurements])


# ---------------------------------------------------------------------------
# contraction measurements on perturbed pairs


def _bump(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


def _perturbation(cfg: SolveConfig, rng: np.random.Generator) -> CharacteristicPair:
    """A smooth cone-supported perturbation pair whose (W-V)/2 x-integral
    telescopes to exact zero: amplitude eps^q times a time window times
    the exact central difference of a sampled bump."""
    q = rng.uniform(0.4, 1.5)
    amp = rng.uniform(0.5, 2.0)
    grids_v, grids_w = [], []
    centers = rng.uniform(-0.3, 0.3, size=2)
    widths = rng.uniform(0.08, 0.2, size=2)
    for eps in cfg.ladder:
        h, nt, nx = cfg.lattice(eps)
        t = h * np.arange(nt)
        x = cfg.x_lo + h * np.arange(nx)
        window = (smooth_step((t - 0.15 * cfg.T) / (0.1 * cfg.T))
                  * smooth_step((0.85 * cfg.T - t) / (0.1 * cfg.T)))
        fields = []
        for c, w in zip(centers, widths):
            prof = _bump((x - c) / w)
            dprof = np.zeros_like(prof)
            dprof[1:-1] = (prof[2:] - prof[:-2]) / (2.0 * h)
            fields.append(amp * eps ** q * window[:, None] * dprof[None, :])
        grids_v.append(GridFunction(cfg.domain, (h, h), fields[0],
                                    check_finite=False))
        grids_w.append(GridFunction(cfg.domain, (h, h), fields[1],
                                    check_finite=False))
    V = RepresentativeNet(ladder=cfg.ladder, functions=grids_v,
                          logical_domain=cfg.domain)
    W = RepresentativeNet(ladder=cfg.ladder, functions=grids_w,
                          logical_domain=cfg.domain)
    return CharacteristicPair(V=V, W=W, a=cfg.a, T=cfg.T)


def _pair_add(p: CharacteristicPair, d: CharacteristicPair) -> CharacteristicPair:
    from .nets import net_binary

    return CharacteristicPair(V=net_binary("add", p.V, d.V),
                              W=net_binary("add", p.W, d.W), a=p.a, T=p.T)


@dataclass
class ContractionRun:
    report: ContractionReport
    trace: list                  # picard trace entries of the reference solve
    membership: list             # membership verdicts of the audited pairs


def run_contraction(ladder: EpsilonLadder, n_pairs: int = 20, seed: int = 0,
                    a: float = 1.0, T: float = 1.0, f: str = "square",
                    E_exponent: float = 1.0, denom: float = 4.0) -> ContractionRun:
    """Measure d(F p1, F p2) / d(p1, p2) over seeded random perturbed
    pairs around the free evolution, against the analytic bound
    2 exp(-E_exponent); also runs the fixed-point iteration and keeps its
    distance trace."""
    from .charsolve import support_cone_membership

    rng = np.random.default_rng(seed)
    moll = make_mollifier()
    u0, u1 = build_initial_data(DataSpec(kind="kink", a=a), moll, ladder)
    data = derive_characteristic_data(u0, u1)
    cfg = SolveConfig(T=T, a=a, f=f, E_exponent=E_exponent, ladder=ladder,
                      h_rule=SpacingRule("eps_over", denom))
    base = free_evolution(cfg, data)
    regions = default_directional_regions(cfg)
    ratios = []
    membership = []
    for i in range(n_pairs):
        p1 = _pair_add(base, _perturbation(cfg, rng))
        p2 = _pair_add(base, _perturbation(cfg, rng))
        d0 = pair_distance(p1, p2, regions, cfg.n_max)
        f1 = apply_picard_map(p1, cfg, data)
        f2 = apply_picard_map(p2, cfg, data)
        d1 = pair_distance(f1, f2, regions, cfg.n_max)
        ratios.append(d1 / d0 if d0 > 0 else 0.0)
        if i < 3:  # audit a sample of inputs and images
            membership.append(support_cone_membership(p1))
            membership.append(support_cone_membership(f1))
    report = ContractionReport(pairs_tested=n_pairs, ratios=ratios,
                               bound=cfg.contraction_bound,
                               max_ratio=max(ratios))
    solve = picard_solve(cfg, data)
    mem_final = support_cone_membership(solve.pair)
    membership.append(mem_final)
    return ContractionRun(report=report, trace=solve.trace,
                          membership=membership)


# ---------------------------------------------------------------------------
# stationary radial example


@dataclass
class RadialRun:
    residuals: list              # ResidualReport per epsilon
    ratios: list                 # Richardson ratios under h -> h/2
    verdicts: list               # RadialCellVerdict per cell


def run_radial(residual_epsilons=(0.25, 2.0 ** -4, 2.0 ** -6),
               R: float = 2.0, denom: int = 64,
               slope_ladder: EpsilonLadder | None = None) -> RadialRun:
    if slope_ladder is None:
        slope_ladder = EpsilonLadder.dyadic(4, 14)
    net = RadialNet(ladder=slope_ladder, R=R, h_rule=f"sqrt_eps_over_{denom}")
    fine = RadialNet(ladder=slope_ladder, R=R, h_rule=f"sqrt_eps_over_{2 * denom}")
    residuals, ratios = [], []
    for eps in residual_epsilons:
        rep = radial_residual(net, eps)
        rep2 = radial_residual(fine, eps)
        residuals.append(rep)
        ratios.append(rep.sup_absolute / rep2.sup_absolute)
    cells = [(0.0, 0.25), (0.5, R)]
    verdicts = radial_singsupp(net, cells, tol=DEFAULT_SLOPE_TOL, max_order=3)
    return RadialRun(residuals=residuals, ratios=ratios, verdicts=verdicts)
