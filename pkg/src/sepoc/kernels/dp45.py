"""Adaptive Dormand-Prince 5(4) integrator, pure Python.

Generic right-hand sides only; the compiled extension in ``_core`` runs the
identical stepping logic with the built-in model kernels inlined.  Both
implementations share the tableau, the error controller
err <= tol * (1 + |y|_inf) and the quartic dense-output interpolant, so
results agree to rounding when the same problem runs through either path.
"""

from __future__ import annotations

import numpy as np

from ..errors import IntegrationFailureError

# classic DP5(4) tableau
C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# embedded 4th-order error weights, e = b5 - b4
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)
# dense-output weights (Hairer's contd5)
D1 = -12715105075.0 / 11282082432.0
D3 = 87487479700.0 / 32700410799.0
D4 = -10690763975.0 / 1880347072.0
D5 = 701980252875.0 / 199316789632.0
D6 = -1453857185.0 / 822651844.0
D7 = 69997945.0 / 29380423.0

MAX_STEPS = 2_000_000
_SAFETY, _FAC_MIN, _FAC_MAX = 0.9, 0.2, 5.0


def dp45(f, y0, span, tol, t_eval=None):
    """Integrate y' = f(t, y) from t=0 to t=span.

    Returns (Y, y_final) where Y holds the dense-output states at the sorted
    sample times ``t_eval`` (may be None for no sampling) and y_final is the
    state at t=span computed by stepping, not interpolation.
    """
    y = np.array(y0, dtype=float)
    dim = y.size
    if t_eval is None:
        t_eval = np.empty(0)
    te = np.asarray(t_eval, dtype=float)
    Y = np.empty((te.size, dim))
    pending = 0
    # samples at t=0 need no interpolation
    while pending < te.size and te[pending] <= 0.0:
        Y[pending] = y
        pending += 1

    t = 0.0
    h = span / 100.0
    k1 = np.asarray(f(t, y), dtype=float)
    nsteps = 0
    while t < span:
        if nsteps >= MAX_STEPS:
            raise IntegrationFailureError(t, f"step budget exhausted at t={t:.6g}")
        if h < 3.6e-15 * max(1.0, abs(t)):
            raise IntegrationFailureError(t)
        last = t + h >= span
        if last:
            h = span - t

        k2 = f(t + C2 * h, y + h * (A21 * k1))
        k3 = f(t + C3 * h, y + h * (A31 * k1 + A32 * k2))
        k4 = f(t + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))
        k5 = f(t + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4))
        k6 = f(t + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5))
        ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6)
        k7 = np.asarray(f(t + h, ynew), dtype=float)

        err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
        err = float(np.max(np.abs(err_vec)))
        scale = tol * (1.0 + max(float(np.max(np.abs(y))), float(np.max(np.abs(ynew)))))
        nsteps += 1
        if err <= scale:
            # dense output for samples inside (t, t+h]
            if pending < te.size and te[pending] <= t + h + 1e-14 * max(1.0, t + h):
                ydiff = ynew - y
                bspl = h * k1 - ydiff
                c4v = ydiff - h * k7 - bspl
                c5v = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7)
                while pending < te.size and te[pending] <= t + h + 1e-14 * max(1.0, t + h):
                    th = (te[pending] - t) / h
                    Y[pending] = y + th * (ydiff + (1.0 - th) * (bspl + th * (c4v + (1.0 - th) * c5v)))
                    pending += 1
            t += h
            y = ynew
            k1 = k7
            fac = _FAC_MAX if err == 0.0 else min(_FAC_MAX, max(_FAC_MIN, _SAFETY * (scale / err) ** 0.2))
            h *= fac
            if last and t >= span:
                break
        else:
            h *= max(_FAC_MIN, _SAFETY * (scale / err) ** 0.2)

    while pending < te.size:
        Y[pending] = y
        pending += 1
    return Y, y
