"""Singular initial data built by cutoff and mollification.

The catalog holds the weakest singularities that make light-cone
propagation visible at the slope level:

* ``kink``: position profile |x| (derivative bounded but discontinuous at
  the origin), zero velocity;
* ``smoothed_heaviside_derivative``: zero position, velocity sign(x);
* ``band_kink``: position profile max(|x| - b, 0), singular at x = +-b.

Each profile is multiplied by a smooth cutoff supported in [-a, a] and
equal to 1 on [-a/2, a/2], then convolved with the scaled bump
phi_eps(x) = phi(x/eps)/eps by direct trapezoid quadrature at the grid
nodes, one ladder entry at a time.  The cutoff transition uses the
standard C-infinity step exp(-1/u) / (exp(-1/u) + exp(-1/(1-u))); a
merely C^1 polynomial step would leak spurious high-order growth at the
transition edges and spoil bounded-type tests at orders >= 2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadSpec
from .nets import (
    EpsilonLadder,
    GridFunction,
    RepresentativeNet,
    SpacingRule,
    axis_nodes,
)

REFERENCE_NODES = 2 ** 13 + 1
DATA_RULE = SpacingRule("eps_over", 16.0)


def _bump_raw(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    xi = x[inside]
    out[inside] = np.exp(-1.0 / (1.0 - xi * xi))
    return out


def smooth_step(u: np.ndarray) -> np.ndarray:
    """C-infinity monotone step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    hi = u >= 1.0
    mid = (u > 0.0) & ~hi
    out[hi] = 1.0
    um = u[mid]
    a = np.exp(-1.0 / um)
    b = np.exp(-1.0 / (1.0 - um))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class Mollifier:
    """Unit-mass smooth bump supported on [-1, 1]."""

    profile: np.ndarray     # sampled at REFERENCE_NODES points on [-1, 1]
    scale: float            # normalization constant Z with phi = bump/Z
    name: str = "bump"

    def __call__(self, y) -> np.ndarray:
        return _bump_raw(y) / self.scale


def make_mollifier(name: str = "bump") -> Mollifier:
    if name != "bump":
        raise BadSpec(f"unknown mollifier {name!r}")
    x = np.linspace(-1.0, 1.0, REFERENCE_NODES)
    raw = _bump_raw(x)
    z = float(np.trapezoid(raw, x))
    return Mollifier(profile=raw / z, scale=z, name=name)


@dataclass(frozen=True)
class DataSpec:
    """Initial-data selection: kind, support radius a, band half-width b."""

    kind: str = "kink"
    a: float = 1.0
    b: float = 0.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in ("kink", "smoothed_heaviside_derivative", "band_kink"):
            raise BadSpec(f"unknown data kind {self.kind!r}")
        if self.a <= 0.0:
            raise BadSpec("support radius a must be positive")
        if self.kind == "band_kink" and not (0.0 < self.b < self.a):
            raise BadSpec("band half-width must satisfy 0 < b < a")

    @property
    def singular_half_width(self) -> float:
        return self.b if self.kind == "band_kink" else 0.0


def cutoff(x: np.ndarray, a: float) -> np.ndarray:
    """Smooth cutoff: 1 on [-a/2, a/2], 0 outside [-a, a]."""
    return smooth_step((a - np.abs(x)) / (a / 2.0))


def _singular_profile(spec: DataSpec, x: np.ndarray) -> np.ndarray:
    if spec.kind == "kink":
        return np.abs(x)
    if spec.kind == "band_kink":
        return np.maximum(np.abs(x) - spec.b, 0.0)
    return np.sign(x)   # velocity profile of smoothed_heaviside_derivative


def mollify_samples(vals: np.ndarray, h: float, eps: float,
                    moll: Mollifier) -> np.ndarray:
    """(vals * phi_eps) at the same nodes, direct trapezoid quadrature.

    The kernel support must be node-aligned (eps an integer multiple of h);
    samples of phi vanish at the support endpoints, so the trapezoid sum is
    the plain convolution sum.  Zeros away from the support stay exact.
    """
    m = int(round(eps / h))
    if m < 2 or abs(m * h - eps) > 1e-9 * eps:
        raise BadSpec(f"kernel width eps={eps} not resolved by spacing h={h}")
    offsets = h * np.arange(-m, m + 1)
    kernel = moll(offsets / eps) / eps
    return np.convolve(vals, kernel, mode="same") * h


def build_initial_data(spec: DataSpec, moll: Mollifier, ladder: EpsilonLadder,
                       rule: SpacingRule = DATA_RULE,
                       halo: float = 1.0):
    """Construct the (position, velocity) nets over [-a-halo, a+halo].

    Returns a pair of representative nets; supports stay inside
    [-a-eps, a+eps] with node-exact zeros beyond.
    """
    box = ((-spec.a - halo, spec.a + halo),)
    u0_grids, u1_grids = [], []
    for eps in ladder:
        h = rule.h(eps)
        x = axis_nodes(box[0][0], box[0][1], h)
        chi = cutoff(x, spec.a)
        profile = spec.amplitude * chi * _singular_profile(spec, x)
        smooth = mollify_samples(profile, h, eps, moll)
        zero = np.zeros_like(x)
        if spec.kind == "smoothed_heaviside_derivative":
            u0_grids.append(GridFunction(box, h, zero, check_finite=False))
            u1_grids.append(GridFunction(box, h, smooth, check_finite=False))
        else:
            u0_grids.append(GridFunction(box, h, smooth, check_finite=False))
            u1_grids.append(GridFunction(box, h, zero, check_finite=False))
    u0 = RepresentativeNet(ladder=ladder, functions=u0_grids, logical_domain=box)
    u1 = RepresentativeNet(ladder=ladder, functions=u1_grids, logical_domain=box)
    return u0, u1


def _interior_derivative(vals: np.ndarray, h: float) -> np.ndarray:
    """Central difference keeping the grid size; the data vanish near the
    box ends, so zero endpoint derivatives are exact."""
    out = np.zeros_like(vals)
    out[1:-1] = (vals[2:] - vals[:-2]) / (2.0 * h)
    return out


def derive_characteristic_data(u0: RepresentativeNet, u1: RepresentativeNet):
    """Characteristic traces at t=0: (velocity - slope, velocity + slope)."""
    v_grids, w_grids = [], []
    for g0, g1 in zip(u0.functions, u1.functions):
        if g0.spacing != g1.spacing or g0.box != g1.box:
            raise BadSpec("position and velocity grids must coincide")
        d = _interior_derivative(g0.values, g0.spacing[0])
        v_grids.append(GridFunction(g0.box, g0.spacing, g1.values - d,
                                    check_finite=False))
        w_grids.append(GridFunction(g0.box, g0.spacing, g1.values + d,
                                    check_finite=False))
    v0 = RepresentativeNet(ladder=u0.ladder, functions=v_grids,
                           logical_domain=u0.logical_domain)
    w0 = RepresentativeNet(ladder=u0.ladder, functions=w_grids,
                           logical_domain=u0.logical_domain)
    return v0, w0
