"""Coupling between observable targets and total rescaled time.

For a target level of the observable, the constant-control theory needs the
rescaled time C2 at which the unit-input flow attains that level:
Phi(zhat(C2)) = target.  This module inverts that condition by a dense scan
plus bisection, and locates the zeros of the Lie derivative Phi_h along the
rescaled flow, which index the families of non-constant stationary controls.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (DEFAULT_TOL, SeparableSystem, integrate_rescaled,
                   lie_derivative_phi, rescaled_state)
from .errors import DegenerateObservableError, TargetUnreachableError

SCAN_POINTS = 2000


@dataclass(frozen=True)
class CouplingResult:
    c2: float
    phi_at_c2: float
    phi_h_at_c2: float
    branch_count: int


def _phi_on_grid(sys, z0, grid, tol):
    traj = integrate_rescaled(sys, z0, grid[-1], tol, tau_eval=grid)
    return np.array([sys.phi(s) for s in traj.states]), traj


def _bisect_phi(sys, z0, a, b, fa, target, tol):
    """Bisection on Phi(zhat(tau)) - target, each midpoint re-integrated."""
    x = 0.5 * (a + b)
    for _ in range(200):
        x = 0.5 * (a + b)
        fx = sys.phi(rescaled_state(sys, z0, x, tol)) - target
        if abs(fx) <= 1e-11 or (b - a) <= 4e-16 * max(1.0, x):
            break
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b = x
    return x


def solve_c2(sys: SeparableSystem, z0, phi_target: float, tau_max: float,
             tol: float = DEFAULT_TOL, points: int = SCAN_POINTS) -> CouplingResult:
    """Smallest tau > 0 with Phi(zhat(tau)) = phi_target, plus the root count.

    Scans a uniform grid of ``points`` cells over (0, tau_max], brackets
    every sign change and refines each by bisection to |Phi - target| <= 1e-10.
    Raises TargetUnreachableError when no bracket exists; a root exactly at
    tau = 0 does not count.
    """
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    grid = np.linspace(0.0, tau_max, points + 1)
    vals, _ = _phi_on_grid(sys, z0, grid, tol)
    offs = vals - phi_target
    start = 1 if abs(offs[0]) < 1e-14 else 0  # boundary root at tau=0 is excluded
    idx = [i for i in range(start, points) if offs[i] == 0.0 or (offs[i] > 0) != (offs[i + 1] > 0)]
    if not idx:
        raise TargetUnreachableError(
            f"Phi never meets {phi_target:.6g} on (0, {tau_max:.6g}] "
            f"(range seen: [{vals.min():.6g}, {vals.max():.6g}])")
    roots = []
    for i in idx:
        if offs[i] == 0.0:
            roots.append(grid[i])
        else:
            roots.append(_bisect_phi(sys, z0, grid[i], grid[i + 1], offs[i], phi_target, tol))
    c2 = float(min(roots))
    state = rescaled_state(sys, z0, c2, tol)
    try:
        phi_h = lie_derivative_phi(sys, state)
    except DegenerateObservableError:
        phi_h = math.nan
    return CouplingResult(c2=c2, phi_at_c2=float(sys.phi(state)),
                          phi_h_at_c2=float(phi_h), branch_count=len(roots))


def _phi_h_at(sys, z0, tau, tol):
    if tau == 0.0:
        return lie_derivative_phi(sys, np.asarray(z0, dtype=float))
    return lie_derivative_phi(sys, rescaled_state(sys, z0, tau, tol))


def find_phi_h_roots(sys: SeparableSystem, z0, tau_max: float,
                     tol: float = DEFAULT_TOL, refine_width: float = 1e-12,
                     points: int = SCAN_POINTS) -> list:
    """Zeros of Phi_h(zhat(tau)) on (0, tau_max], sorted ascending.

    Sign-change scan on a ``points`` grid with one halving refinement pass
    when consecutive roots land closer than two grid cells, then bisection on
    tau down to ``refine_width``.  Grid states where the observable gradient
    is undefined are skipped.  An empty list is a valid outcome.
    """
    if tau_max <= 0:
        raise ValueError("tau_max must be positive")
    grid = np.linspace(0.0, tau_max, points + 1)
    traj = integrate_rescaled(sys, z0, tau_max, tol, tau_eval=grid)
    vals = np.empty(grid.size)
    for i, s in enumerate(traj.states):
        try:
            vals[i] = lie_derivative_phi(sys, s)
        except DegenerateObservableError:
            vals[i] = np.nan

    brackets = _sign_change_cells(grid, vals)
    # halving pass: re-scan around suspiciously close pairs at double resolution
    dtau = grid[1] - grid[0]
    extra = []
    for (a1, *_), (a2, *_) in zip(brackets, brackets[1:]):
        if a2 - a1 < 2.0 * dtau:
            lo, hi = max(0.0, a1 - dtau), min(tau_max, a2 + 2.0 * dtau)
            sub = np.linspace(lo, hi, 33)
            subvals = np.array([_phi_h_at(sys, z0, t, tol) if t > 0 else np.nan for t in sub])
            extra.extend(_sign_change_cells(sub, subvals))
    if extra:
        merged = {round(a, 12): (a, b, fa) for a, b, fa in brackets + extra}
        brackets = [merged[k] for k in sorted(merged)]

    roots = []
    for a, b, fa in brackets:
        x = 0.5 * (a + b)
        for _ in range(200):
            x = 0.5 * (a + b)
            fx = _phi_h_at(sys, z0, x, tol)
            if (b - a) <= refine_width * max(1.0, x):
                break
            if (fx > 0) == (fa > 0):
                a, fa = x, fx
            else:
                b = x
        roots.append(float(x))
    roots.sort()
    # deduplicate anything bisection collapsed onto the same point
    out = []
    for r in roots:
        if not out or r - out[-1] > 10 * refine_width * max(1.0, r):
            out.append(r)
    return out


def _sign_change_cells(grid, vals):
    cells = []
    for i in range(len(grid) - 1):
        a, b = vals[i], vals[i + 1]
        if np.isnan(a) or np.isnan(b) or grid[i + 1] <= 0.0:
            continue
        if a == 0.0 and grid[i] > 0.0:
            cells.append((grid[i], grid[i], a))
        elif (a > 0) != (b > 0):
            cells.append((grid[i], grid[i + 1], a))
    return cells
