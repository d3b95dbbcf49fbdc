"""Numeric stationary-point solver for the observable-constrained problems.

Three problem kinds over a separable system, all optimized over the
coefficients of a Chebyshev control expansion (discretize-then-optimize):

* "max-objective": stationary Phi(z(T)) subject to G(mu) = C1, T fixed.
* "min-effort":    stationary G(mu) subject to Phi(z(T)) = target, T fixed.
* "min-time":      stationary T subject to G(mu) = C1 and Phi(z(T)) = target;
                   T is an explicit unknown with a transversality equation.

The first-order system stacks the coefficient-stationarity rows (built from
forward sensitivities and quadrature gradients), the constraint residuals,
and for min-time the transversality scalar
1 + lambda1 g(mu(T)) + lambda2 Phi_h mu(T).  ``solve_stationary`` runs the
staged strategy: constant-control feasibility first, multipliers by least
squares second, then damped Newton on the full system.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import coupling as coupling_mod
from .control import (ControlPolynomial, CostFunction, NORM0, eval_mu,
                      grad_G, grad_I, integral_G, integral_I, is_positive)
from .core import SeparableSystem, terminal_state_and_sens
from .errors import ConvergenceError, IntegrationFailureError, SepocError

KIND_MAX = "max-objective"
KIND_EFFORT = "min-effort"
KIND_TIME = "min-time"
KINDS = (KIND_MAX, KIND_EFFORT, KIND_TIME)


@dataclass(frozen=True)
class OCProblem:
    kind: str
    sys: SeparableSystem
    z0: np.ndarray
    g: CostFunction
    q: int = 10
    T: Optional[float] = None
    C1: Optional[float] = None
    phi_target: Optional[float] = None
    tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "z0", np.asarray(self.z0, dtype=float))
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        need = {KIND_MAX: ("T", "C1"), KIND_EFFORT: ("T", "phi_target"),
                KIND_TIME: ("C1", "phi_target")}[self.kind]
        for name in need:
            val = getattr(self, name)
            if val is None or not val > 0:
                raise ValueError(f"{self.kind} needs positive {name}")
        if self.q < 1:
            raise ValueError("q must be at least 1")


@dataclass
class StationaryPoint:
    control: ControlPolynomial
    multipliers: tuple
    objective: float
    phi_h: float
    kkt_residual: float
    positivity: bool
    T: float
    converged: bool = True
    iterations: int = 0

    @property
    def coeffs(self) -> np.ndarray:
        return self.control.coeffs

    def mu_values(self, samples: int = 200) -> np.ndarray:
        return eval_mu(self.control, np.linspace(0.0, self.T, samples))

    def to_json_dict(self) -> dict:
        return {
            "coeffs": [float(v) for v in self.control.coeffs],
            "multipliers": [float(v) for v in self.multipliers],
            "objective": float(self.objective),
            "phi_h": float(self.phi_h),
            "kkt_residual": float(self.kkt_residual),
            "positivity_flag": bool(self.positivity),
            "T": float(self.T),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 100
    residual_tol: float = 1e-8
    fd_step: float = 1e-7
    step_tol: float = 1e-12
    armijo: float = 1e-4
    cond_limit: float = 1e12


def _terminal(prob: OCProblem, c: ControlPolynomial, T: float):
    zT, S = terminal_state_and_sens(prob.sys, c, prob.z0, T, prob.tol)
    gphi = prob.sys.grad_phi(zT)
    return zT, S, gphi


def kkt_residual(prob: OCProblem, coeffs, multipliers, T_free: Optional[float] = None) -> np.ndarray:
    """First-order residual: stationarity rows, constraints, transversality.

    Row layout: q coefficient-stationarity entries, then G - C1 and/or
    Phi(z(T)) - target, then (min-time only) the transversality scalar.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    T = prob.T if prob.kind != KIND_TIME else float(T_free)
    if T is None or not T > 0:
        raise ValueError("positive horizon required")
    c = ControlPolynomial(coeffs, T)
    zT, S, gphi = _terminal(prob, c, T)
    dphi_dp = S.T @ gphi
    gG = grad_G(c, prob.g)
    Gval = integral_G(c, prob.g)
    phi = prob.sys.phi(zT)

    if prob.kind == KIND_MAX:
        (lam,) = multipliers
        return np.concatenate([dphi_dp + lam * gG, [Gval - prob.C1]])
    if prob.kind == KIND_EFFORT:
        (lam,) = multipliers
        return np.concatenate([gG + lam * dphi_dp, [phi - prob.phi_target]])
    lam1, lam2 = multipliers
    mu_T = eval_mu(c, T)
    phi_h = float(np.dot(gphi, prob.sys.rhs(zT)))
    trans = 1.0 + lam1 * prob.g.g(mu_T) + lam2 * phi_h * mu_T
    return np.concatenate([
        lam1 * gG + lam2 * dphi_dp,
        [Gval - prob.C1, phi - prob.phi_target, trans],
    ])


def _solve_scalar(f, x0, xtol=1e-13, ftol=1e-12, max_expand=60):
    """Root of a scalar function on x > 0: bracket by geometric expansion
    outward from x0, then bisection with secant acceleration."""
    x0 = max(x0, 1e-6)
    pts = [(x0, f(x0))]
    if abs(pts[0][1]) <= ftol:
        return x0
    lo, hi = x0, x0
    bracket = None
    for _ in range(max_expand):
        hi *= 2.0
        pts.append((hi, f(hi)))
        pts.sort()
        bracket = _adjacent_sign_change(pts)
        if bracket:
            break
        if lo > 1e-9:
            lo /= 2.0
            pts.append((lo, f(lo)))
            pts.sort()
            bracket = _adjacent_sign_change(pts)
            if bracket:
                break
    if not bracket:
        raise ConvergenceError("scalar bracket expansion found no sign change")
    (a, fa), (b, fb) = bracket
    x = 0.5 * (a + b)
    for _ in range(200):
        x = 0.5 * (a + b)
        fx = f(x)
        if abs(fx) <= ftol or (b - a) <= xtol * max(1.0, abs(x)):
            break
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b, fb = x, fx
        # secant acceleration within the bracket
        if fb != fa:
            xs = b - fb * (b - a) / (fb - fa)
            if a < xs < b:
                fs = f(xs)
                if abs(fs) <= ftol:
                    return xs
                if (fs > 0) == (fa > 0):
                    a, fa = xs, fs
                else:
                    b, fb = xs, fs
    return x


def _adjacent_sign_change(pts):
    for (a, fa), (b, fb) in zip(pts, pts[1:]):
        if (fa > 0) != (fb > 0):
            return (a, fa), (b, fb)
    return None


def _stage_a(prob: OCProblem, p1_init: float):
    """Constant-control feasibility: solve the constraint block in p1 (and T)."""
    if prob.kind == KIND_MAX:
        def f(p1):
            return prob.T * prob.g.g(p1 * NORM0) - prob.C1

        p1 = _solve_scalar(f, abs(p1_init) or 1.0)
        return p1, prob.T

    if prob.kind == KIND_EFFORT:
        def f(p1):
            c = ControlPolynomial(np.array([p1]), prob.T)
            zT, _, _ = _terminal_no_sens(prob, c, prob.T)
            return prob.sys.phi(zT) - prob.phi_target

        p1 = _solve_scalar(f, abs(p1_init) or 1.0)
        return p1, prob.T

    # min-time: inner solve pins p1 through the cost budget, outer solve picks T
    def p1_of_T(T, p1_guess):
        return _solve_scalar(lambda p1: T * prob.g.g(p1 * NORM0) - prob.C1, p1_guess)

    state = {"p1": abs(p1_init) or 1.0}

    def f(T):
        p1 = p1_of_T(T, state["p1"])
        state["p1"] = p1
        c = ControlPolynomial(np.array([p1]), T)
        zT, _, _ = _terminal_no_sens(prob, c, T)
        return prob.sys.phi(zT) - prob.phi_target

    T = _solve_scalar(f, 1.0)
    return state["p1"], T


def _terminal_no_sens(prob, c, T):
    from .core import integrate_controlled

    traj = integrate_controlled(prob.sys, c, prob.z0, T, prob.tol,
                                t_eval=np.array([0.0, T]))
    zT = traj.final_state
    return zT, None, None


def _stage_b(prob: OCProblem, coeffs, T):
    """Multipliers by least squares on the stationarity (and transversality) rows."""
    c = ControlPolynomial(coeffs, T)
    zT, S, gphi = _terminal(prob, c, T)
    dphi_dp = S.T @ gphi
    gG = grad_G(c, prob.g)
    if prob.kind == KIND_MAX:
        denom = float(np.dot(gG, gG))
        return (-(float(np.dot(gG, dphi_dp)) / denom) if denom else 0.0,)
    if prob.kind == KIND_EFFORT:
        denom = float(np.dot(dphi_dp, dphi_dp))
        return (-(float(np.dot(dphi_dp, gG)) / denom) if denom else 0.0,)
    mu_T = eval_mu(c, T)
    phi_h = float(np.dot(gphi, prob.sys.rhs(zT)))
    A = np.vstack([np.column_stack([gG, dphi_dp]), [prob.g.g(mu_T), phi_h * mu_T]])
    b = np.zeros(A.shape[0])
    b[-1] = -1.0
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    return (float(sol[0]), float(sol[1]))


def _pack(prob, coeffs, multipliers, T):
    if prob.kind == KIND_TIME:
        return np.concatenate([coeffs, [T], multipliers])
    return np.concatenate([coeffs, multipliers])


def _unpack(prob, x):
    q = prob.q
    if prob.kind == KIND_TIME:
        return x[:q], (x[q + 1], x[q + 2]), x[q]
    return x[:q], (x[q],), prob.T


def _residual_x(prob, x):
    coeffs, mults, T = _unpack(prob, x)
    if T is not None and T <= 0:
        raise IntegrationFailureError(0.0, "horizon driven non-positive")
    return kkt_residual(prob, coeffs, mults, T_free=T)


def solve_stationary(prob: OCProblem, init_guess=None,
                     options: Optional[SolverOptions] = None) -> StationaryPoint:
    """Staged solve: constant feasibility, least-squares multipliers, Newton.

    ``init_guess`` seeds the constant stage with its first coefficient; the
    remaining coefficients start at zero, matching the expected constant
    stationary controls.  Raises ConvergenceError when Newton stalls or the
    KKT Jacobian degenerates (condition estimate above options.cond_limit).
    """
    opts = options or SolverOptions()
    q = prob.q
    guess = np.zeros(q)
    if init_guess is not None:
        ig = np.asarray(init_guess, dtype=float)
        guess[: min(q, ig.size)] = ig[: min(q, ig.size)]
    if not np.isfinite(guess).all():
        raise ValueError("init_guess must be finite")

    p1, T = _stage_a(prob, guess[0] if guess[0] != 0 else 1.0)
    coeffs = guess.copy()
    coeffs[0] = p1
    mults = _stage_b(prob, coeffs, T)

    x = _pack(prob, coeffs, mults, T)
    x, r, iters = _newton(prob, x, opts)
    coeffs, mults, T = _unpack(prob, x)
    return _make_sp(prob, coeffs, mults, T, float(np.max(np.abs(r))), iters)


def _newton(prob, x, opts, residual_fn=None):
    res = residual_fn or _residual_x
    r = res(prob, x)
    phi_merit = 0.5 * float(np.dot(r, r))
    for it in range(opts.max_iters):
        rnorm = float(np.max(np.abs(r)))
        if rnorm <= opts.residual_tol:
            return x, r, it
        delta = opts.fd_step * (1.0 + float(np.max(np.abs(x))))
        J = np.empty((r.size, x.size))
        for i in range(x.size):
            xp = x.copy()
            xp[i] += delta
            J[:, i] = (res(prob, xp) - r) / delta
        if np.linalg.cond(J) > opts.cond_limit:
            raise ConvergenceError(
                f"degenerate KKT Jacobian (cond > {opts.cond_limit:g}) at iteration {it}",
                iterate=x.copy(), residual_norm=rnorm)
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            dx, *_ = np.linalg.lstsq(J, -r, rcond=None)
        alpha = 1.0
        while True:
            try:
                r_new = res(prob, x + alpha * dx)
                phi_new = 0.5 * float(np.dot(r_new, r_new))
            except (IntegrationFailureError, SepocError):
                phi_new = math.inf
            if phi_new <= (1.0 - 2.0 * opts.armijo * alpha) * phi_merit or phi_new < 1e-30:
                break
            alpha *= 0.5
            if alpha * float(np.max(np.abs(dx))) <= opts.step_tol * (1.0 + float(np.max(np.abs(x)))):
                raise ConvergenceError(
                    f"line search stalled at iteration {it} (residual {rnorm:.3e})",
                    iterate=x.copy(), residual_norm=rnorm)
        x = x + alpha * dx
        r = r_new
        phi_merit = phi_new
    rnorm = float(np.max(np.abs(r)))
    if rnorm <= opts.residual_tol:
        return x, r, opts.max_iters
    raise ConvergenceError(
        f"no convergence after {opts.max_iters} iterations (residual {rnorm:.3e})",
        iterate=x.copy(), residual_norm=rnorm)


def _make_sp(prob, coeffs, mults, T, rnorm, iters=0) -> StationaryPoint:
    c = ControlPolynomial(np.asarray(coeffs, dtype=float), T)
    zT, S, gphi = _terminal(prob, c, T)
    phi = prob.sys.phi(zT)
    phi_h = float(np.dot(gphi, prob.sys.rhs(zT)))
    if prob.kind == KIND_MAX:
        objective = phi
    elif prob.kind == KIND_EFFORT:
        objective = integral_G(c, prob.g)
    else:
        objective = T
    return StationaryPoint(
        control=c, multipliers=tuple(float(m) for m in mults), objective=float(objective),
        phi_h=phi_h, kkt_residual=float(rnorm), positivity=is_positive(c), T=float(T),
        iterations=iters,
    )


def _two_coeff_family(prob: OCProblem, tau_star: float):
    """Representative controls with I = tau_star, G = C1 over (p1, p2).

    The first basis function integrates to T/sqrt(pi) and the second to zero,
    so p1 is pinned by tau_star alone; for the square cost p2 follows in
    closed form, otherwise a 2x2 Newton solve runs on (I, G).
    """
    T = prob.T
    p1 = tau_star * math.sqrt(math.pi) / T
    p2sq = 3.0 * math.pi / (2.0 * T) * (prob.C1 - tau_star * tau_star / T)
    if prob.g.is_square:
        if p2sq <= 1e-14:
            return None
        return p1, math.sqrt(p2sq)
    seed = math.sqrt(max(p2sq, 1e-4))
    x = np.array([p1, seed])
    for _ in range(80):
        c = ControlPolynomial(np.concatenate([x, np.zeros(max(prob.q - 2, 0))]), T)
        F = np.array([integral_I(c) - tau_star, integral_G(c, prob.g) - prob.C1])
        if np.max(np.abs(F)) <= 1e-12:
            return float(x[0]), float(abs(x[1]))
        gI = grad_I(c)[:2]
        gG = grad_G(c, prob.g)[:2]
        J = np.vstack([gI, gG])
        try:
            dx = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None
        x = x + dx
    return None


def enumerate_sps(prob: OCProblem, phi_domain=(0.01, 1.0)) -> list:
    """All stationary points of a max-objective problem in a Phi window.

    Returns the constant stationary control first, then one +/- pair of
    two-coefficient representatives for every zero of Phi_h along the
    rescaled flow with tau* inside the reachable band tau* <= sqrt(C1 T)
    (the reach bound on the cost sphere for the square cost).  Every
    returned point satisfies the first-order system to the solver tolerance;
    members of a +/- pair share I and G exactly, hence the objective.
    """
    if prob.kind != KIND_MAX:
        raise ValueError("enumerate_sps applies to max-objective problems")
    out = []
    sp_const = solve_stationary(prob)
    if phi_domain[0] <= sp_const.objective <= phi_domain[1]:
        out.append(sp_const)
    tau_cap = math.sqrt(prob.C1 * prob.T)
    roots = coupling_mod.find_phi_h_roots(prob.sys, prob.z0, tau_cap, prob.tol)
    for tau_star in roots:
        pair = _two_coeff_family(prob, tau_star)
        if pair is None:
            continue
        p1, p2 = pair
        for sign in (+1.0, -1.0):
            coeffs = np.zeros(prob.q)
            coeffs[0] = p1
            if prob.q > 1:
                coeffs[1] = sign * p2
            r = kkt_residual(prob, coeffs, (0.0,))
            sp = _make_sp(prob, coeffs, (0.0,), prob.T, float(np.max(np.abs(r))))
            if phi_domain[0] <= sp.objective <= phi_domain[1]:
                out.append(sp)
    return out


def classify_sp(prob: OCProblem, sp: StationaryPoint) -> str:
    """First-order classification: one of local-max, local-min, saddle/unknown."""
    if prob.kind == KIND_MAX:
        if sp.phi_h > 1e-10:
            return "local-max"
        if sp.phi_h < -1e-10:
            return "local-min"
        return "saddle/unknown"
    if prob.kind == KIND_EFFORT:
        return "global-min" if _cost_convex(prob.g) else "saddle/unknown"
    return "saddle/unknown"


def _cost_convex(g: CostFunction, lo=1e-3, hi=10.0, samples=200) -> bool:
    if g.is_square:
        return True
    mu = np.linspace(lo, hi, samples)
    gp = np.array([g.gprime(m) for m in mu])
    return bool(np.all(np.diff(gp) >= -1e-12))


def min_time_p1_curvature(prob: OCProblem, sp: StationaryPoint, delta: float = 0.02,
                          options: Optional[SolverOptions] = None) -> float:
    """Second difference of the solved horizon under a frozen first coefficient.

    Re-solves the first-order system with p1 pinned at p1* (1 +/- delta) (all
    remaining first-order conditions enforced, stationarity in p1 released)
    and returns (T(+) - 2 T(0) + T(-)) / step^2.  A positive value means the
    stationary horizon is a minimum along this one-parameter family.
    """
    if prob.kind != KIND_TIME:
        raise ValueError("curvature probe applies to min-time problems")
    opts = options or SolverOptions()
    p1_0 = float(sp.control.coeffs[0])

    def solved_T(p1_fixed):
        def reduced(pr, xr):
            coeffs = np.concatenate([[p1_fixed], xr[: prob.q - 1]])
            T = xr[prob.q - 1]
            if not T > 0:
                raise IntegrationFailureError(0.0, "horizon driven non-positive")
            mults = (xr[prob.q], xr[prob.q + 1])
            full = kkt_residual(pr, coeffs, mults, T_free=T)
            return np.concatenate([full[1:prob.q], full[prob.q:]])  # drop the p1 row

        x0 = np.concatenate([sp.control.coeffs[1:], [sp.T], sp.multipliers])
        x, _, _ = _newton(prob, x0, opts, residual_fn=reduced)
        return float(x[prob.q - 1])

    step = delta * (abs(p1_0) if abs(p1_0) > 1e-8 else 1.0)
    tp = solved_T(p1_0 + step)
    tm = solved_T(p1_0 - step)
    return (tp - 2.0 * sp.T + tm) / (step * step)
