"""Constant-control reference solutions and the multiplier maps.

The three control problems over a separable system reduce (whenever the
terminal Lie derivative Phi_h is nonzero) to problems with only the integral
constraints I(mu) = int mu dt and G(mu) = int g(mu) dt, whose stationary
controls are positive constants:

* budgeted reach:    stationary I(mu) subject to G(mu) = C1, horizon T fixed.
* prescribed reach:  stationary G(mu) subject to I(mu) = C2, horizon T fixed.
* minimum horizon:   stationary T subject to G(mu) = C1 and I(mu) = C2.

For g(mu) = mu^2 everything is closed-form; for general g the defining
scalar equations are inverted by safeguarded Newton on an expanding bracket.
The ``map_multipliers`` function converts reference multipliers into the
multipliers of the corresponding observable-constrained problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .control import CostFunction
from .errors import DegenerateCostError, DegenerateObservableError, NoRootError

_BRACKET_LO = 1e-8
_BRACKET_CAP = 1e6
_SCAN_POINTS = 2048
PHI_H_MIN = 1e-10


@dataclass(frozen=True)
class ReferenceSolution:
    """Constant control mu_star with horizon and reference multipliers."""

    problem: str                  # "budgeted-reach" | "prescribed-reach" | "min-horizon"
    mu_star: float
    T: float
    lambda_ref: Optional[float] = None      # single-constraint problems
    lambda1_ref: Optional[float] = None     # min-horizon, cost constraint
    lambda2_ref: Optional[float] = None     # min-horizon, reach constraint
    gamma_star: Optional[float] = None      # mu g'(mu) - g(mu) at mu_star
    root_count: int = 1


def _scan_and_refine(f, fprime, target):
    """Smallest positive root of f(mu) = target on an expanding bracket.

    Returns (root, count of sign changes seen on the scan grid).  The bracket
    starts at [1e-8, 10] and doubles its upper end until the offset function
    changes sign somewhere, capping at 1e6.
    """
    lo = _BRACKET_LO
    hi = 10.0
    while True:
        grid = np.linspace(lo, hi, _SCAN_POINTS)
        vals = np.array([f(m) - target for m in grid])
        signs = np.sign(vals)
        idx = np.where(np.diff(signs) != 0)[0]
        exact = np.where(vals == 0.0)[0]
        if idx.size or exact.size:
            break
        if hi >= _BRACKET_CAP:
            raise NoRootError(f"no root of the cost equation in [{_BRACKET_LO}, {_BRACKET_CAP:g}]")
        hi *= 2.0
    if exact.size and (not idx.size or exact[0] <= idx[0]):
        return float(grid[exact[0]]), int(idx.size + exact.size)
    a, b = float(grid[idx[0]]), float(grid[idx[0] + 1])
    fa = f(a) - target
    x = 0.5 * (a + b)
    for _ in range(200):
        fx = f(x) - target
        if fx == 0.0:
            break
        if (fx > 0) == (fa > 0):
            a = x
            fa = fx
        else:
            b = x
        # Newton step, kept only if it stays inside the bracket
        dfx = fprime(x)
        if dfx != 0.0:
            xn = x - fx / dfx
            if a < xn < b:
                x = xn
            else:
                x = 0.5 * (a + b)
        else:
            x = 0.5 * (a + b)
        if b - a <= 1e-15 * max(1.0, abs(x)):
            break
    return float(x), int(idx.size)


def solve_budgeted_reach(T: float, C1: float, g: CostFunction) -> ReferenceSolution:
    """Constant control making total rescaled time stationary under cost C1.

    Defining equations: T g(mu*) = C1 and 1 + lambda g'(mu*) = 0.
    Closed form for the square cost: mu* = sqrt(C1/T), lambda = -sqrt(T/C1)/2.
    """
    _require_positive(T=T, C1=C1)
    if g.is_square:
        mu = math.sqrt(C1 / T)
        return ReferenceSolution("budgeted-reach", mu, T, lambda_ref=-0.5 * math.sqrt(T / C1))
    mu, count = _scan_and_refine(g.g, g.gprime, C1 / T)
    gp = g.gprime(mu)
    if abs(gp) < 1e-12:
        raise DegenerateCostError(f"g'({mu:.6g}) = {gp:.3g}, multiplier undefined")
    return ReferenceSolution("budgeted-reach", mu, T, lambda_ref=-1.0 / gp, root_count=count)


def solve_prescribed_reach(T: float, C2: float, g: CostFunction) -> ReferenceSolution:
    """Constant control minimizing cost with prescribed total rescaled time C2.

    mu* = C2/T independently of g; lambda = -g'(mu*).
    """
    _require_positive(T=T, C2=C2)
    mu = C2 / T
    return ReferenceSolution("prescribed-reach", mu, T, lambda_ref=-g.gprime(mu))


def solve_min_horizon(C1: float, C2: float, g: CostFunction) -> ReferenceSolution:
    """Constant control and horizon minimizing T under both integral constraints.

    Defining equations: T g(mu*) = C1, T mu* = C2, lambda1 g'(mu*) + lambda2 = 0
    and 1 + lambda1 g(mu*) + lambda2 mu* = 0.  The scalar equation inverted is
    ghat(mu*) = g(mu*)/mu* = C1/C2; the multiplier scale is
    gamma* = mu* g'(mu*) - g(mu*).
    """
    _require_positive(C1=C1, C2=C2)
    if g.is_square:
        mu = C1 / C2
        return ReferenceSolution(
            "min-horizon", mu, C2 * C2 / C1,
            lambda1_ref=(C2 * C2) / (C1 * C1), lambda2_ref=-2.0 * C2 / C1,
            gamma_star=mu * mu,
        )

    def ghat(m):
        return g.g(m) / m

    def ghat_prime(m):
        return (m * g.gprime(m) - g.g(m)) / (m * m)

    mu, count = _scan_and_refine(ghat, ghat_prime, C1 / C2)
    gamma = mu * g.gprime(mu) - g.g(mu)
    if abs(gamma) < 1e-12:
        raise DegenerateCostError(f"gamma*({mu:.6g}) = {gamma:.3g}, multipliers undefined")
    return ReferenceSolution(
        "min-horizon", mu, C2 / mu,
        lambda1_ref=1.0 / gamma, lambda2_ref=-g.gprime(mu) / gamma,
        gamma_star=gamma, root_count=count,
    )


def map_multipliers(kind: str, ref: ReferenceSolution, phi_h: float) -> tuple:
    """Reference multipliers -> multipliers of the observable-constrained problem.

    kind "max-objective": lambda = lambda_ref * Phi_h
    kind "min-effort":    lambda = lambda_ref / Phi_h
    kind "min-time":      (lambda1, lambda2) = (lambda1_ref, lambda2_ref / Phi_h)
    """
    if abs(phi_h) <= PHI_H_MIN:
        raise DegenerateObservableError(f"|Phi_h| = {abs(phi_h):.3g} <= {PHI_H_MIN}")
    if kind == "max-objective":
        return (ref.lambda_ref * phi_h,)
    if kind == "min-effort":
        return (ref.lambda_ref / phi_h,)
    if kind == "min-time":
        return (ref.lambda1_ref, ref.lambda2_ref / phi_h)
    raise ValueError(f"unknown problem kind {kind!r}")


def _require_positive(**kwargs):
    for name, val in kwargs.items():
        if not val > 0:
            raise ValueError(f"{name} must be positive, got {val}")
