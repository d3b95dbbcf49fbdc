"""Shared oracles for the test suite.

Everything here is deliberately independent of the package's integration and
quadrature paths: fixed-step RK4, adaptive Simpson, plain central
differences, and two tiny hand-solvable systems.
"""

import numpy as np

from sepoc.core import SeparableSystem


def rk4(f, y0, t_end, dt):
    """Classical fixed-step RK4 from t=0 to t_end (t_end an exact multiple of dt)."""
    y = np.array(y0, dtype=float)
    n = int(round(t_end / dt))
    t = 0.0
    for _ in range(n):
        k1 = f(t, y)
        k2 = f(t + dt / 2, y + dt / 2 * k1)
        k3 = f(t + dt / 2, y + dt / 2 * k2)
        k4 = f(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t += dt
    return y


def adaptive_simpson(f, a, b, tol=1e-13, depth=60):
    """Adaptive Simpson quadrature."""

    def simpson(fa, fm, fb, a_, b_):
        return (b_ - a_) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a_, b_, fa, fm, fb, whole, tol_, d):
        m = 0.5 * (a_ + b_)
        lm, rm = 0.5 * (a_ + m), 0.5 * (m + b_)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a_, m)
        right = simpson(fm, frm, fb, m, b_)
        if d <= 0 or abs(left + right - whole) <= 15.0 * tol_:
            return left + right + (left + right - whole) / 15.0
        return (recurse(a_, m, fa, flm, fm, left, tol_ / 2, d - 1)
                + recurse(m, b_, fm, frm, fb, right, tol_ / 2, d - 1))

    fa, fb = f(a), f(b)
    fm = f(0.5 * (a + b))
    whole = simpson(fa, fm, fb, a, b)
    return recurse(a, b, fa, fm, fb, whole, tol, depth)


def central_diff(f, x, step=1e-6):
    """Central difference gradient of a scalar or vector function of a vector."""
    x = np.asarray(x, dtype=float)
    f0 = np.asarray(f(x), dtype=float)
    out = np.empty((f0.size, x.size)) if f0.ndim else np.empty(x.size)
    for j in range(x.size):
        dx = np.zeros_like(x)
        dx[j] = step * (1.0 + abs(x[j]))
        hi = np.asarray(f(x + dx), dtype=float)
        lo = np.asarray(f(x - dx), dtype=float)
        col = (hi - lo) / (2.0 * dx[j])
        if f0.ndim:
            out[:, j] = col
        else:
            out[j] = col
    return out


def rotor_system():
    """Planar rotation zhat' = (-z2, z1), Phi = z1.

    Along the unit-input flow from (1, 0): Phi(tau) = cos(tau) and
    Phi_h(tau) = -sin(tau), so Phi_h vanishes exactly at multiples of pi.
    """

    def h(z, p):
        return np.array([-z[1], z[0]])

    def jac(z, p):
        return np.array([[0.0, -1.0], [1.0, 0.0]])

    return SeparableSystem(
        state_dim=2, h=h, params=np.empty(0),
        phi=lambda z: float(z[0]), grad_phi=lambda z: np.array([1.0, 0.0]),
        label="rotor", jac=jac,
    )


def gudermannian_system():
    """1-D flow zhat' = cos(zhat) from 0: zhat(tau) = arcsin(tanh tau).

    Phi = z, so Phi_h = cos(zhat) > 0 for all finite tau, approaching zero
    only asymptotically; a sign-change scan must come back empty.
    """

    def h(z, p):
        return np.array([np.cos(z[0])])

    def jac(z, p):
        return np.array([[-np.sin(z[0])]])

    return SeparableSystem(
        state_dim=1, h=h, params=np.empty(0),
        phi=lambda z: float(z[0]), grad_phi=lambda z: np.array([1.0]),
        label="gudermannian", jac=jac,
    )


def line_system(slope: float):
    """1-D unit flow zhat' = 1 with Phi = slope * z; Phi(zhat(tau)) = slope*tau."""

    def h(z, p):
        return np.array([1.0])

    def jac(z, p):
        return np.array([[0.0]])

    return SeparableSystem(
        state_dim=1, h=h, params=np.empty(0),
        phi=lambda z: slope * float(z[0]), grad_phi=lambda z: np.array([slope]),
        label="line", jac=jac,
    )
