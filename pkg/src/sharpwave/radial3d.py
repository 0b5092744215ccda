"""Time-independent radial family in three space dimensions.

The family u_eps(r) = (r^2 + eps)^(-1/2) solves the radial wave problem
with source 3*eps*u^5 and zero initial velocity: the time derivative
vanishes and the radial Laplacian u'' + (2/r) u' equals -3*eps*u^5
identically.  Its singular behavior concentrates on r = 0 for all times
(sup growth eps^(-1/2)), the opposite of light-cone confinement: in
three dimensions the origin singularity contaminates the time axis.

The grid is staggered (nodes at (j+1/2)*h) so the 2/r term never hits
r = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .asymptotics import fit_decay_exponent, stencil_noise_floor
from .errors import BadSpec, GridTooCoarse, InsufficientLadder
from .nets import EpsilonLadder


@dataclass
class RadialNet:
    """Radial samples of (r^2 + eps)^(-1/2) on a staggered grid."""

    ladder: EpsilonLadder
    R: float
    h_rule: str = "sqrt_eps_over_64"

    def spacing(self, eps: float) -> float:
        if self.h_rule.startswith("sqrt_eps_over_"):
            denom = float(self.h_rule.rsplit("_", 1)[1])
            return math.sqrt(eps) / denom
        if self.h_rule.startswith("fixed_"):
            return float(self.h_rule.rsplit("_", 1)[1])
        raise BadSpec(f"unknown radial spacing rule {self.h_rule!r}")

    def grid(self, eps: float) -> np.ndarray:
        h = self.spacing(eps)
        n = int(round(self.R / h))
        if n < 8:
            raise GridTooCoarse("radial grid needs at least 8 nodes")
        return (np.arange(n) + 0.5) * h

    def values(self, eps: float) -> np.ndarray:
        r = self.grid(eps)
        return 1.0 / np.sqrt(r * r + eps)


def radial_profile(eps: float, r: np.ndarray) -> np.ndarray:
    return 1.0 / np.sqrt(r * r + eps)


def laplacian_closed_form(eps: float, r: np.ndarray) -> np.ndarray:
    """Exact radial Laplacian of the profile: -3*eps*(r^2+eps)^(-5/2)."""
    return -3.0 * eps * (r * r + eps) ** -2.5


@dataclass
class ResidualReport:
    eps: float
    h: float
    sup_absolute: float
    sup_relative: float   # normalized by the peak source 3*eps^(-3/2)


def radial_residual(net: RadialNet, eps: float) -> ResidualReport:
    """Discrete residual of the stationary problem at one ladder entry.

    Five-point central differences for u'' and u'; the time term
    contributes nothing (the family is t-independent).  The sup runs over
    stencil-interior nodes with r >= h.  The relative value divides by
    the source peak 3*eps^(-3/2), the natural common size of both sides:
    the absolute residual inherits that eps^(-3/2) factor and is not a
    meaningful accuracy measure across the ladder.
    """
    h = net.spacing(eps)
    r = net.grid(eps)
    u = radial_profile(eps, r)
    upp = (-u[4:] + 16.0 * u[3:-1] - 30.0 * u[2:-2] + 16.0 * u[1:-3]
           - u[:-4]) / (12.0 * h * h)
    up = (-u[4:] + 8.0 * u[3:-1] - 8.0 * u[1:-3] + u[:-4]) / (12.0 * h)
    rr = r[2:-2]
    lap = upp + 2.0 * up / rr
    resid = np.abs(-lap - 3.0 * eps * u[2:-2] ** 5)
    keep = rr >= h - 1e-12
    sup = float(np.max(resid[keep]))
    peak = 3.0 * eps ** -1.5
    return ResidualReport(eps=eps, h=h, sup_absolute=sup,
                          sup_relative=sup / peak)


@dataclass
class RadialCellVerdict:
    r_lo: float
    r_hi: float
    regular: bool
    worst_slope: float
    witness_order: int


def radial_singsupp(net: RadialNet, cells, tol: float = 0.15,
                    max_order: int = 3) -> list:
    """Slope-classify radial intervals: derivative sups per cell fitted
    over the ladder, regular iff nothing grows as eps -> 0."""
    ladder = net.ladder
    out = []
    for (r_lo, r_hi) in cells:
        worst, witness = math.inf, 0
        for order in range(max_order + 1):
            sups = np.empty(len(ladder))
            for k, eps in enumerate(ladder):
                h = net.spacing(eps)
                r = net.grid(eps)
                u = radial_profile(eps, r)
                for _ in range(order):
                    u = (u[2:] - u[:-2]) / (2.0 * h)
                    r = r[1:-1]
                mask = (r >= r_lo - 1e-12) & (r <= r_hi + 1e-12)
                v = float(np.max(np.abs(u[mask]))) if mask.any() else 0.0
                if v <= stencil_noise_floor(eps ** -0.5, h, order):
                    v = 0.0
                sups[k] = v
            try:
                est = fit_decay_exponent(ladder.epsilons, sups)
                slope = math.inf if est.saturated else est.slope
            except InsufficientLadder:
                slope = math.inf
            if slope < worst:
                worst, witness = slope, order
        out.append(RadialCellVerdict(r_lo=r_lo, r_hi=r_hi,
                                     regular=worst >= -tol,
                                     worst_slope=worst, witness_order=witness))
    return out
