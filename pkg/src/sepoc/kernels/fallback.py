"""Pure-Python backend for the built-in model kernels.

Vector fields and analytic Jacobians for the three built-in models, wired
into the generic DP45 loop.  The compiled backend in ``_core`` mirrors these
formulas exactly; this module is the import-time fallback and the reference
for the backend parity test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dp45 import dp45

KIND_KURAMOTO = 1
KIND_OA = 2
KIND_ADN = 3

_NORM0 = 0.5641895835477563  # 1/sqrt(pi)
_NORMK = 0.7978845608028654  # sqrt(2/pi)


@dataclass(frozen=True)
class KernelSpec:
    """Packed arrays a backend needs to integrate one built-in model."""

    kind: int
    n: int
    edges: np.ndarray | None = None  # kuramoto: (E, 2) int64
    w1: np.ndarray | None = None     # oa/adn: class weights p_hat
    w2: np.ndarray | None = None     # oa: degrees k;  adn: activity rates a


def _clenshaw(ck, s):
    b1 = 0.0
    b2 = 0.0
    for k in range(ck.size - 1, 0, -1):
        b1, b2 = ck[k] + 2.0 * s * b1 - b2, b1
    return ck[0] + s * b1 - b2


def _basis(q, s):
    out = np.empty(q)
    out[0] = _NORM0
    if q > 1:
        out[1] = _NORMK * s
    tprev, tcur = 1.0, s
    for k in range(2, q):
        tprev, tcur = tcur, 2.0 * s * tcur - tprev
        out[k] = _NORMK * tcur
    return out


def _kuramoto_builders(spec):
    n = spec.n
    A = np.zeros((n, n))
    for i, j in spec.edges:
        A[i, j] = A[j, i] = 1.0

    def h(x):
        z = np.exp(1j * x)
        return (np.conj(z) * (A @ z)).imag

    def jac(x):
        C = A * np.cos(np.subtract.outer(x, x).T)  # C[i, j] = a_ij cos(x_j - x_i)
        J = C.copy()
        np.fill_diagonal(J, J.diagonal() - C.sum(axis=1))
        return J

    return h, jac


def _oa_builders(spec):
    w = spec.w1
    k = spec.w2
    rw = k * w / np.dot(k, w)  # order-parameter weights
    ck = -0.5 * k

    def h(y):
        u, v = y[0::2], y[1::2]
        rr = np.dot(rw, u)
        ri = -np.dot(rw, v)
        a2 = u * u - v * v
        p = u * v
        out = np.empty_like(y)
        out[0::2] = ck * (rr * (a2 - 1.0) - 2.0 * ri * p)
        out[1::2] = ck * (ri * (a2 + 1.0) + 2.0 * rr * p)
        return out

    def jac(y):
        u, v = y[0::2], y[1::2]
        rr = np.dot(rw, u)
        ri = -np.dot(rw, v)
        a2 = u * u - v * v
        p = u * v
        m = u.size
        J = np.zeros((2 * m, 2 * m))
        J[0::2, 0::2] = np.outer(ck * (a2 - 1.0), rw)
        J[0::2, 1::2] = np.outer(ck * 2.0 * p, rw)
        J[1::2, 0::2] = np.outer(ck * 2.0 * p, rw)
        J[1::2, 1::2] = np.outer(-ck * (a2 + 1.0), rw)
        duu = ck * (2.0 * u * rr - 2.0 * v * ri)
        duv = ck * (-2.0 * v * rr - 2.0 * u * ri)
        dvu = ck * (2.0 * u * ri + 2.0 * v * rr)
        idx = np.arange(m)
        J[2 * idx, 2 * idx] += duu
        J[2 * idx, 2 * idx + 1] += duv
        J[2 * idx + 1, 2 * idx] += dvu
        J[2 * idx + 1, 2 * idx + 1] += duu  # dvdot/dv shares the local part of dudot/du
        return J

    return h, jac


def _adn_builders(spec):
    w = spec.w1
    a = spec.w2

    def h(I):
        mean_i = np.dot(w, I)
        mean_ai = np.dot(w * a, I)
        return (1.0 - I) * (a * mean_i + mean_ai)

    def jac(I):
        mean_i = np.dot(w, I)
        mean_ai = np.dot(w * a, I)
        J = np.outer(1.0 - I, w) * np.add.outer(a, a)
        np.fill_diagonal(J, J.diagonal() - (a * mean_i + mean_ai))
        return J

    return h, jac


_BUILDERS = {KIND_KURAMOTO: _kuramoto_builders, KIND_OA: _oa_builders, KIND_ADN: _adn_builders}


def solve_model(spec, z0, cheb, span, tol, t_eval, with_sens):
    """Integrate a built-in model; see kernels.__init__ for the contract."""
    h, jac = _BUILDERS[spec.kind](spec)
    n = spec.n
    controlled = cheb is not None
    if with_sens and not controlled:
        raise ValueError("sensitivities are defined for controlled runs only")

    if not with_sens:
        if controlled:
            ckv = np.asarray(cheb, dtype=float)

            def f(t, y):
                return _clenshaw(ckv, 2.0 * t / span - 1.0) * h(y)

        else:
            def f(t, y):
                return h(y)

        Y, yf = dp45(f, z0, span, tol, t_eval)
        return Y, None, yf

    ckv = np.asarray(cheb, dtype=float)
    q = ckv.size

    def f(t, y):
        s = 2.0 * t / span - 1.0
        mu = _clenshaw(ckv, s)
        z = y[:n]
        S = y[n:].reshape(q, n)
        hv = h(z)
        J = jac(z)
        out = np.empty_like(y)
        out[:n] = mu * hv
        out[n:] = (mu * (S @ J.T) + np.outer(_basis(q, s), hv)).ravel()
        return out

    y0 = np.concatenate([np.asarray(z0, dtype=float), np.zeros(n * q)])
    Y, yf = dp45(f, y0, span, tol, t_eval)
    sens = yf[n:].reshape(q, n).T.copy()
    return Y[:, :n], sens, yf[:n]
