"""Invariant suite behind the ``sepoc validate`` subcommand.

Each check exercises one documented invariant of a module and returns a
CheckResult; ``run_all`` executes the whole battery.  The test suite calls
the same functions, so the CLI and pytest agree on what "valid" means.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import coupling, reference
from .control import (ControlPolynomial, CostFunction, NORM0,
                      constant_control, eval_mu, fit, grad_G, grad_I,
                      integral_G, integral_I, chebyshev_nodes)
from .core import (forward_sensitivities, integrate_controlled,
                   integrate_rescaled, lie_derivative_phi)
from .models import (adn_initial_state, adn_system, default_graph,
                     kuramoto_system, oa_initial_state, oa_system,
                     power_law_distribution, splay_state)
from .ocp import KIND_EFFORT, KIND_MAX, KIND_TIME, OCProblem, solve_stationary
from .reference import map_multipliers

SQ = CostFunction.square()


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def random_positive_control(rng, q: int, T: float, floor: float = 0.05) -> ControlPolynomial:
    """Random expansion nudged upward until min_t mu(t) >= floor."""
    p = rng.normal(size=q) * 0.5 * (0.6 ** np.arange(q))
    c = ControlPolynomial(p, T)
    m = float(np.min(eval_mu(c, np.linspace(0.0, T, 400))))
    if m < floor:
        p = p.copy()
        p[0] += (floor - m) / NORM0
        c = ControlPolynomial(p, T)
    return c


def _rel_err(a, b, floor=1e-12):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / (np.maximum(np.abs(b), floor) + floor)))


def _models(seed=0):
    g = default_graph()
    kur = kuramoto_system(g)
    kur_z0 = splay_state(g.n)
    oad = power_law_distribution(np.arange(1.0, 11.0), 2.2)
    oa = oa_system(oad)
    oa_z0 = oa_initial_state(10, 0.1)
    add = power_law_distribution(0.2 + 0.4 * np.arange(5.0), 2.2)
    adn = adn_system(add)
    adn_z0 = adn_initial_state(5, 0.02)
    return [(kur, kur_z0, 3.0), (oa, oa_z0, 3.0), (adn, adn_z0, 3.0)]


# ---------------------------------------------------------------- control --

def check_sphere_bound(seed=0):
    """On the sphere G = C1 (square cost), I <= sqrt(C1 T) with constant-only equality."""
    rng = np.random.default_rng(seed)
    T, C1 = 3.0, 1.0
    worst = -np.inf
    for _ in range(1000):
        p = rng.normal(size=10)
        c = ControlPolynomial(p, T)
        scale = math.sqrt(C1 / integral_G(c, SQ))
        c = ControlPolynomial(p * scale, T)
        worst = max(worst, integral_I(c) - math.sqrt(C1 * T))
    return worst <= 1e-10, f"max I - sqrt(C1 T) over sphere = {worst:.3e}"


def check_functional_gradients(seed=0):
    """dI/dp and dG/dp match central finite differences to 1e-8."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(10):
        c = ControlPolynomial(rng.normal(size=8), 2.5)
        gi, gg = grad_I(c), grad_G(c, SQ)
        step = 1e-6
        for i in range(c.q):
            dp = np.zeros(c.q)
            dp[i] = step
            cp, cm = ControlPolynomial(c.coeffs + dp, c.T), ControlPolynomial(c.coeffs - dp, c.T)
            fd_i = (integral_I(cp) - integral_I(cm)) / (2 * step)
            fd_g = (integral_G(cp, SQ) - integral_G(cm, SQ)) / (2 * step)
            worst = max(worst, abs(gi[i] - fd_i) / max(1.0, abs(fd_i)))
            worst = max(worst, abs(gg[i] - fd_g) / max(1.0, abs(fd_g)))
    return worst <= 1e-8, f"max gradient deviation = {worst:.3e}"


def check_fit_roundtrip(seed=0):
    """Evaluate at the Chebyshev nodes, refit, recover coefficients to 1e-12."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        c = ControlPolynomial(rng.normal(size=10), 1.7)
        t_nodes = 0.5 * c.T * (chebyshev_nodes(c.q) + 1.0)
        c2 = fit(eval_mu(c, t_nodes), c.T)
        worst = max(worst, float(np.max(np.abs(c2.coeffs - c.coeffs))))
    return worst <= 1e-12, f"max refit coefficient error = {worst:.3e}"


# ----------------------------------------------------------------- models --

def check_model_derivatives(seed=0):
    """Hand-coded grad Phi and J_h match central differences at random states."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for sys, z0, _T in _models(seed):
        for _ in range(100):
            if sys.label.startswith("kuramoto"):
                z = rng.uniform(0.0, 2 * math.pi, size=sys.state_dim)
            elif sys.label.startswith("oa"):
                mags = rng.uniform(0.1, 0.95, size=sys.state_dim // 2)
                angs = rng.uniform(0.0, 2 * math.pi, size=sys.state_dim // 2)
                z = np.empty(sys.state_dim)
                z[0::2] = mags * np.cos(angs)
                z[1::2] = mags * np.sin(angs)
            else:
                z = rng.uniform(0.05, 0.9, size=sys.state_dim)
            if sys.phi(z) < 1e-3:
                continue
            step = 1e-6
            gfd = np.empty(sys.state_dim)
            Jfd = np.empty((sys.state_dim, sys.state_dim))
            for j in range(sys.state_dim):
                dz = np.zeros(sys.state_dim)
                dz[j] = step
                gfd[j] = (sys.phi(z + dz) - sys.phi(z - dz)) / (2 * step)
                Jfd[:, j] = (sys.rhs(z + dz) - sys.rhs(z - dz)) / (2 * step)
            worst = max(worst, _rel_err(sys.grad_phi(z), gfd, floor=1e-6))
            worst = max(worst, _rel_err(sys.jacobian(z), Jfd, floor=1e-6))
    return worst <= 1e-5, f"max derivative deviation = {worst:.3e}"


def check_state_bounds(seed=0):
    """Kuramoto |centroid| <= 1, OA class amplitudes <= 1, SI fractions in [0,1]."""
    mods = _models(seed)
    ok, details = True, []
    kur, kz0, _ = mods[0]
    traj = integrate_rescaled(kur, kz0, 10.0, tau_eval=np.linspace(0, 10, 400))
    worst = max(abs(kur.phi(s)) for s in traj.states) - 1.0
    ok &= worst <= 1e-9
    details.append(f"|r|-1 max {worst:.2e}")
    phase_sum = np.array([s.sum() for s in traj.states])
    drift = float(np.max(np.abs(phase_sum - phase_sum[0])))
    ok &= drift <= 1e-8
    details.append(f"phase-sum drift {drift:.2e}")
    oa, oz0, _ = mods[1]
    traj = integrate_rescaled(oa, oz0, 10.0, tau_eval=np.linspace(0, 10, 400))
    amax = max(float(np.max(np.hypot(s[0::2], s[1::2]))) for s in traj.states)
    ok &= amax <= 1.0 + 1e-6
    details.append(f"max |alpha| {amax:.8f}")
    adn, az0, _ = mods[2]
    traj = integrate_rescaled(adn, az0, 30.0, tau_eval=np.linspace(0, 30, 400))
    lo = min(float(np.min(s)) for s in traj.states)
    hi = max(float(np.max(s)) for s in traj.states)
    means = np.array([adn.phi(s) for s in traj.states])
    ok &= lo >= 0.0 and hi <= 1.0 + 1e-9 and bool(np.all(np.diff(means) >= -1e-12)) and means[-1] < 1.0
    details.append(f"I range [{lo:.2e}, {hi:.8f}]")
    return bool(ok), "; ".join(details)


# ------------------------------------------------------------------- core --

def check_rescaling_equivalence(seed=0, n_controls=50):
    """Controlled terminal state equals the unit-input flow at I(mu), 1e-6."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for sys, z0, T in _models(seed):
        for _ in range(n_controls):
            c = random_positive_control(rng, 8, T)
            zT = integrate_controlled(sys, c, z0, T, t_eval=np.array([0.0, T])).final_state
            tau = integral_I(c)
            zhat = integrate_rescaled(sys, z0, tau, tau_eval=np.array([0.0, tau])).final_state
            worst = max(worst, float(np.max(np.abs(zT - zhat))))
    return worst <= 1e-6, f"max |z(T) - zhat(I)| = {worst:.3e} over {3 * n_controls} controls"


def check_control_degeneracy(seed=0):
    """Two positive controls with equal I land on the same terminal state."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for sys, z0, T in _models(seed):
        for _ in range(5):
            c_a = random_positive_control(rng, 8, T)
            p = c_a.coeffs.copy()
            p[1] += 0.05  # second basis function integrates to zero
            c_b = ControlPolynomial(p, T)
            if not (integral_I(c_a) > 0 and abs(integral_I(c_a) - integral_I(c_b)) < 1e-13):
                return False, "perturbation failed to preserve I"
            za = integrate_controlled(sys, c_a, z0, T, t_eval=np.array([0.0, T])).final_state
            zb = integrate_controlled(sys, c_b, z0, T, t_eval=np.array([0.0, T])).final_state
            worst = max(worst, float(np.max(np.abs(za - zb))))
    return worst <= 1e-6, f"max terminal gap = {worst:.3e}"


def check_sensitivities(seed=0):
    """Variational sensitivities match central differences on coefficients.

    The finite-difference step is 1e-6, so the oracle integrations run at a
    tolerance of 1e-12: a looser tolerance would leave more noise in the
    differenced endpoints than the comparison allows."""
    rng = np.random.default_rng(seed)
    tol = 1e-12
    worst = 0.0
    for sys, z0, T in _models(seed):
        c = random_positive_control(rng, 6, T)
        S = forward_sensitivities(sys, c, z0, T, tol)
        step = 1e-6
        fd_all = np.empty_like(S)
        for i in range(c.q):
            dp = np.zeros(c.q)
            dp[i] = step
            zp = integrate_controlled(sys, ControlPolynomial(c.coeffs + dp, T), z0, T, tol,
                                      t_eval=np.array([0.0, T])).final_state
            zm = integrate_controlled(sys, ControlPolynomial(c.coeffs - dp, T), z0, T, tol,
                                      t_eval=np.array([0.0, T])).final_state
            fd_all[:, i] = (zp - zm) / (2 * step)
        floor = max(1e-10, 1e-2 * float(np.max(np.abs(fd_all))))
        for i in range(c.q):
            scale = max(floor, float(np.max(np.abs(fd_all[:, i]))))
            worst = max(worst, float(np.max(np.abs(S[:, i] - fd_all[:, i]))) / scale)
    return worst <= 1e-4, f"max sensitivity deviation = {worst:.3e}"


# -------------------------------------------------------------- reference --

def check_reference_closed_forms(seed=0, n=1000):
    """Closed forms satisfy their stationarity systems to 1e-10; the general
    inversion path agrees with the closed forms for the square cost."""
    rng = np.random.default_rng(seed)
    gen = CostFunction(g=lambda m: m * m, gprime=lambda m: 2.0 * m, tag="generic-square")
    worst = 0.0
    for _ in range(n):
        T, C1, C2 = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=3))
        r4 = reference.solve_budgeted_reach(T, C1, SQ)
        worst = max(worst, abs(T * SQ.g(r4.mu_star) - C1),
                    abs(1.0 + r4.lambda_ref * SQ.gprime(r4.mu_star)))
        r5 = reference.solve_prescribed_reach(T, C2, SQ)
        worst = max(worst, abs(T * r5.mu_star - C2),
                    abs(r5.lambda_ref + SQ.gprime(r5.mu_star)))
        r6 = reference.solve_min_horizon(C1, C2, SQ)
        worst = max(worst, abs(r6.T * SQ.g(r6.mu_star) - C1), abs(r6.T * r6.mu_star - C2),
                    abs(r6.lambda1_ref * SQ.gprime(r6.mu_star) + r6.lambda2_ref),
                    abs(1.0 + r6.lambda1_ref * SQ.g(r6.mu_star) + r6.lambda2_ref * r6.mu_star))
    for _ in range(50):
        T, C1, C2 = np.exp(rng.uniform(math.log(0.1), math.log(10.0), size=3))
        worst = max(worst,
                    abs(reference.solve_budgeted_reach(T, C1, gen).mu_star
                        - reference.solve_budgeted_reach(T, C1, SQ).mu_star),
                    abs(reference.solve_min_horizon(C1, C2, gen).mu_star
                        - reference.solve_min_horizon(C1, C2, SQ).mu_star))
    return worst <= 1e-10, f"max stationarity/agreement residual = {worst:.3e}"


# --------------------------------------------------------------- coupling --

def check_coupling_roundtrip(seed=0):
    """Constant control mu* = c2/T reproduces the target observable to 1e-6."""
    worst = 0.0
    cases = []
    mods = _models(seed)
    cases.append((mods[0][0], mods[0][1], 0.9, 20.0))   # kuramoto
    cases.append((mods[2][0], mods[2][1], 0.5, 30.0))   # adn
    for sys, z0, target, tau_max in cases:
        res = coupling.solve_c2(sys, z0, target, tau_max)
        T = 3.0
        c = constant_control(res.c2 / T, T, 10)
        zT = integrate_controlled(sys, c, z0, T, t_eval=np.array([0.0, T])).final_state
        worst = max(worst, abs(sys.phi(zT) - target))
    return worst <= 1e-6, f"max |Phi(z(T)) - target| = {worst:.3e}"


def check_root_grid_independence(seed=0):
    """Phi_h roots are stable when the scan grid is twice as fine."""
    kur, kz0, _ = _models(seed)[0]
    r1 = coupling.find_phi_h_roots(kur, kz0, 8.0)
    r2 = coupling.find_phi_h_roots(kur, kz0, 8.0, points=2 * coupling.SCAN_POINTS)
    if len(r1) != len(r2):
        return False, f"root count changed: {len(r1)} vs {len(r2)}"
    worst = max((abs(a - b) for a, b in zip(r1, r2)), default=0.0)
    return worst <= 1e-9, f"{len(r1)} roots, max shift {worst:.3e}"


# -------------------------------------------------------------------- ocp --

def check_numeric_constant_and_multipliers(seed=0):
    """Numeric stationary controls are constant and their multipliers match
    the mapped reference multipliers (on the spreading model)."""
    mods = _models(seed)
    adn, az0, _ = mods[2]
    worst_const, worst_mult = 0.0, 0.0
    T, C1, target = 3.0, 1.0, 0.5
    c2 = coupling.solve_c2(adn, az0, target, 30.0).c2

    p1 = OCProblem(KIND_MAX, adn, az0, SQ, q=10, T=T, C1=C1)
    sp1 = solve_stationary(p1)
    mu = sp1.mu_values()
    worst_const = max(worst_const, float(np.max(np.abs(mu - mu.mean()))))
    lam_th = map_multipliers("max-objective", reference.solve_budgeted_reach(T, C1, SQ), sp1.phi_h)
    worst_mult = max(worst_mult, _rel_err(sp1.multipliers[0], lam_th[0]))

    p2 = OCProblem(KIND_EFFORT, adn, az0, SQ, q=10, T=T, phi_target=target)
    sp2 = solve_stationary(p2)
    mu = sp2.mu_values()
    worst_const = max(worst_const, float(np.max(np.abs(mu - mu.mean()))))
    lam_th = map_multipliers("min-effort", reference.solve_prescribed_reach(T, c2, SQ), sp2.phi_h)
    worst_mult = max(worst_mult, _rel_err(sp2.multipliers[0], lam_th[0]))

    p3 = OCProblem(KIND_TIME, adn, az0, SQ, q=10, C1=C1, phi_target=target)
    sp3 = solve_stationary(p3)
    mu = sp3.mu_values()
    worst_const = max(worst_const, float(np.max(np.abs(mu - mu.mean()))))
    l1_th, l2_th = map_multipliers("min-time", reference.solve_min_horizon(C1, c2, SQ), sp3.phi_h)
    worst_mult = max(worst_mult, _rel_err(sp3.multipliers[0], l1_th),
                     _rel_err(sp3.multipliers[1], l2_th))
    worst_tc = max(abs(sp3.T * SQ.g(sp3.mu_values().mean()) - C1),
                   abs(sp3.T * sp3.mu_values().mean() - c2))
    ok = worst_const <= 1e-6 and worst_mult <= 1e-6 and worst_tc <= 1e-6
    return ok, (f"constancy {worst_const:.2e}, multiplier dev {worst_mult:.2e}, "
                f"min-time consistency {worst_tc:.2e}")


ALL_CHECKS = [
    ("control-sphere-bound", check_sphere_bound),
    ("control-functional-gradients", check_functional_gradients),
    ("control-fit-roundtrip", check_fit_roundtrip),
    ("models-analytic-derivatives", check_model_derivatives),
    ("models-state-bounds", check_state_bounds),
    ("core-rescaling-equivalence", check_rescaling_equivalence),
    ("core-control-degeneracy", check_control_degeneracy),
    ("core-forward-sensitivities", check_sensitivities),
    ("reference-closed-forms", check_reference_closed_forms),
    ("coupling-roundtrip", check_coupling_roundtrip),
    ("coupling-grid-independence", check_root_grid_independence),
    ("ocp-constant-and-multipliers", check_numeric_constant_and_multipliers),
]


def run_all(seed: int = 0, names=None) -> list:
    results = []
    for name, fn in ALL_CHECKS:
        if names and name not in names:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = fn(seed)
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(passed), detail, time.perf_counter() - t0))
    return results
