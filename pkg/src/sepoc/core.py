"""Controlled separable systems and their time-rescaled counterparts.

A separable system is a controlled ODE dz/dt = mu(t) h(z, p) together with a
scalar observable Phi.  Because the control enters multiplicatively, the
substitution tau(t) = int_0^t mu(s) ds maps every positive control onto the
single autonomous flow zhat' = h(zhat, p); the terminal state then depends on
mu only through the total rescaled time I(mu).  This module integrates both
forms, propagates forward sensitivities with respect to the control
coefficients, and evaluates the observable and its Lie derivative Phi_h along
the flow.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .control import ControlPolynomial, basis_values
from .errors import DegenerateObservableError
from .kernels.dp45 import dp45

DEFAULT_TOL = 1e-10
_TOL_RANGE = (1e-13, 1e-2)


@dataclass(frozen=True)
class SeparableSystem:
    """A controlled system dz/dt = mu(t) h(z, p) with observable Phi.

    ``h`` and ``phi`` must be deterministic functions of their inputs.
    ``jac`` is the analytic state Jacobian of h used by the variational
    equations; when absent it is replaced by central finite differences.
    ``kernel`` is an optional packed-array handle that lets the compiled
    backend integrate this model without Python callbacks.
    """

    state_dim: int
    h: Callable[[np.ndarray, np.ndarray], np.ndarray]
    params: np.ndarray
    phi: Callable[[np.ndarray], float]
    grad_phi: Callable[[np.ndarray], np.ndarray]
    label: str = "system"
    jac: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    kernel: Optional[kernels.KernelSpec] = None

    def __post_init__(self):
        object.__setattr__(self, "params", np.atleast_1d(np.asarray(self.params, dtype=float)))

    def rhs(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(self.h(z, self.params), dtype=float)

    def jacobian(self, z: np.ndarray) -> np.ndarray:
        if self.jac is not None:
            return np.asarray(self.jac(z, self.params), dtype=float)
        return _fd_jacobian(self.rhs, z)


@dataclass(frozen=True)
class Trajectory:
    """States sampled on a strictly increasing time grid starting at 0."""

    times: np.ndarray
    states: np.ndarray
    clock: str  # "physical" or "rescaled"

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        if t.size < 2:
            raise ValueError("trajectory needs at least two grid nodes")
        if abs(t[0]) > 0.0:
            raise ValueError("time grid must start at 0")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if self.clock not in ("physical", "rescaled"):
            raise ValueError("clock must be 'physical' or 'rescaled'")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]


def _fd_jacobian(f, z, step=1e-7):
    z = np.asarray(z, dtype=float)
    n = z.size
    J = np.empty((n, n))
    for j in range(n):
        dz = step * (1.0 + abs(z[j]))
        zp = z.copy()
        zm = z.copy()
        zp[j] += dz
        zm[j] -= dz
        J[:, j] = (f(zp) - f(zm)) / (2.0 * dz)
    return J


def _check_tol(tol):
    if not (_TOL_RANGE[0] < tol < _TOL_RANGE[1]):
        raise ValueError(f"tol must lie in {_TOL_RANGE}")


def _default_grid(span, t_eval):
    if t_eval is None:
        return np.linspace(0.0, span, 201)
    te = np.asarray(t_eval, dtype=float)
    if np.any(te < 0) or np.any(te > span * (1 + 1e-12)):
        raise ValueError("sample times must lie in [0, span]")
    if np.any(np.diff(te) <= 0):
        raise ValueError("sample times must be strictly increasing")
    return te


def integrate_controlled(sys: SeparableSystem, mu: ControlPolynomial, z0, T: float,
                         tol: float = DEFAULT_TOL, t_eval=None) -> Trajectory:
    """Integrate dz/dt = mu(t) h(z, p) over [0, T] with dense output."""
    if T <= 0:
        raise ValueError("T must be positive")
    if abs(mu.T - T) > 1e-12 * max(1.0, T):
        raise ValueError("control horizon does not match integration horizon")
    _check_tol(tol)
    z0 = np.asarray(z0, dtype=float)
    te = _default_grid(T, t_eval)
    if sys.kernel is not None:
        Y, _, zf = kernels.solve_model(sys.kernel, z0, mu.chebyshev_coeffs(), T, tol, te, False)
    else:
        ck = mu.chebyshev_coeffs()

        def f(t, y):
            return _clenshaw(ck, 2.0 * t / T - 1.0) * sys.rhs(y)

        Y, zf = dp45(f, z0, T, tol, te)
    if te[-1] >= T * (1 - 1e-14):
        Y[-1] = zf
    return Trajectory(te, Y, "physical")


def integrate_rescaled(sys: SeparableSystem, z0, tau_end: float,
                       tol: float = DEFAULT_TOL, tau_eval=None) -> Trajectory:
    """Integrate the unit-input flow zhat' = h(zhat, p) up to tau_end."""
    if tau_end <= 0:
        raise ValueError("tau_end must be positive")
    _check_tol(tol)
    z0 = np.asarray(z0, dtype=float)
    te = _default_grid(tau_end, tau_eval)
    if sys.kernel is not None:
        Y, _, zf = kernels.solve_model(sys.kernel, z0, None, tau_end, tol, te, False)
    else:
        Y, zf = dp45(lambda t, y: sys.rhs(y), z0, tau_end, tol, te)
    if te[-1] >= tau_end * (1 - 1e-14):
        Y[-1] = zf
    return Trajectory(te, Y, "rescaled")


def rescaled_state(sys: SeparableSystem, z0, tau: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """State of the unit-input flow at a single rescaled time."""
    if tau == 0.0:
        return np.asarray(z0, dtype=float).copy()
    return integrate_rescaled(sys, z0, tau, tol, tau_eval=np.array([0.0, tau])).final_state


def lie_derivative_phi(sys: SeparableSystem, z) -> float:
    """Phi_h(z) = grad Phi(z) . h(z, p), defined where Phi is differentiable."""
    z = np.asarray(z, dtype=float)
    return float(np.dot(sys.grad_phi(z), sys.rhs(z)))


def observable_curve(sys: SeparableSystem, z0, tau_max: float, dtau: float,
                     tol: float = DEFAULT_TOL) -> np.ndarray:
    """Sample (tau, Phi, Phi_h) on a uniform grid along the rescaled flow.

    Phi_h entries are NaN at states where the observable gradient is
    undefined (for the centroid observable: at zero centroid amplitude).
    """
    if not (0 < dtau < tau_max):
        raise ValueError("need 0 < dtau < tau_max")
    m = int(np.floor(tau_max / dtau + 1e-9)) + 1
    grid = np.arange(m) * dtau
    traj = integrate_rescaled(sys, z0, tau_max, tol, tau_eval=grid)
    out = np.empty((m, 3))
    out[:, 0] = grid
    for i in range(m):
        out[i, 1] = sys.phi(traj.states[i])
        try:
            out[i, 2] = lie_derivative_phi(sys, traj.states[i])
        except DegenerateObservableError:
            out[i, 2] = np.nan
    return out


def terminal_state_and_sens(sys: SeparableSystem, mu: ControlPolynomial, z0, T: float,
                            tol: float = DEFAULT_TOL):
    """z(T) and the (n, q) matrix dz(T)/dp of coefficient sensitivities.

    The variational system dS_j/dt = mu(t) J_h(z) S_j + That_j(sigma) h(z)
    runs alongside the state; analytic Jacobians are used for the built-in
    models, finite differences otherwise.
    """
    if abs(mu.T - T) > 1e-12 * max(1.0, T):
        raise ValueError("control horizon does not match integration horizon")
    _check_tol(tol)
    z0 = np.asarray(z0, dtype=float)
    n = sys.state_dim
    q = mu.q
    if sys.kernel is not None:
        _, sens, zf = kernels.solve_model(sys.kernel, z0, mu.chebyshev_coeffs(), T, tol,
                                          np.empty(0), True)
        return zf, sens
    ck = mu.chebyshev_coeffs()

    def f(t, y):
        s = 2.0 * t / T - 1.0
        muv = _clenshaw(ck, s)
        z = y[:n]
        S = y[n:].reshape(q, n)
        hv = sys.rhs(z)
        J = sys.jacobian(z)
        out = np.empty_like(y)
        out[:n] = muv * hv
        out[n:] = (muv * (S @ J.T) + np.outer(basis_values(q, s), hv)).ravel()
        return out

    y0 = np.concatenate([z0, np.zeros(n * q)])
    _, yf = dp45(f, y0, T, tol, None)
    return yf[:n], yf[n:].reshape(q, n).T.copy()


def forward_sensitivities(sys: SeparableSystem, mu: ControlPolynomial, z0, T: float,
                          tol: float = DEFAULT_TOL) -> np.ndarray:
    """Terminal sensitivities dz(T)/dp_i, shape (n, q)."""
    return terminal_state_and_sens(sys, mu, z0, T, tol)[1]


def _clenshaw(ck, s):
    b1 = 0.0
    b2 = 0.0
    for k in range(ck.size - 1, 0, -1):
        b1, b2 = ck[k] + 2.0 * s * b1 - b2, b1
    return ck[0] + s * b1 - b2
