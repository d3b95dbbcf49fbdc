# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: DP45 stepping with the built-in model vector fields
and their variational (sensitivity) systems inlined.

Mirrors kernels.fallback exactly; keep the two in sync."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, fabs, pow, sin

cnp.import_array()

DEF KIND_KURAMOTO = 1
DEF KIND_OA = 2
DEF KIND_ADN = 3

cdef double NORM0 = 0.5641895835477563   # 1/sqrt(pi)
cdef double NORMK = 0.7978845608028654   # sqrt(2/pi)

# DP5(4) tableau
cdef double C2 = 1.0/5.0, C3 = 3.0/10.0, C4 = 4.0/5.0, C5 = 8.0/9.0
cdef double A21 = 1.0/5.0
cdef double A31 = 3.0/40.0, A32 = 9.0/40.0
cdef double A41 = 44.0/45.0, A42 = -56.0/15.0, A43 = 32.0/9.0
cdef double A51 = 19372.0/6561.0, A52 = -25360.0/2187.0, A53 = 64448.0/6561.0, A54 = -212.0/729.0
cdef double A61 = 9017.0/3168.0, A62 = -355.0/33.0, A63 = 46732.0/5247.0
cdef double A64 = 49.0/176.0, A65 = -5103.0/18656.0
cdef double B1 = 35.0/384.0, B3 = 500.0/1113.0, B4 = 125.0/192.0
cdef double B5 = -2187.0/6784.0, B6 = 11.0/84.0
cdef double E1 = 71.0/57600.0, E3 = -71.0/16695.0, E4 = 71.0/1920.0
cdef double E5 = -17253.0/339200.0, E6 = 22.0/525.0, E7 = -1.0/40.0
cdef double D1 = -12715105075.0/11282082432.0
cdef double D3 = 87487479700.0/32700410799.0
cdef double D4 = -10690763975.0/1880347072.0
cdef double D5 = 701980252875.0/199316789632.0
cdef double D6 = -1453857185.0/822651844.0
cdef double D7 = 69997945.0/29380423.0


cdef double _clenshaw(double[::1] ck, double s) noexcept nogil:
    cdef double b1 = 0.0, b2 = 0.0, tmp
    cdef Py_ssize_t k
    for k in range(ck.shape[0] - 1, 0, -1):
        tmp = ck[k] + 2.0 * s * b1 - b2
        b2 = b1
        b1 = tmp
    return ck[0] + s * b1 - b2


cdef void _basis(Py_ssize_t q, double s, double* out) noexcept nogil:
    cdef double tprev = 1.0, tcur = s, tnext
    cdef Py_ssize_t k
    out[0] = NORM0
    if q > 1:
        out[1] = NORMK * s
    for k in range(2, q):
        tnext = 2.0 * s * tcur - tprev
        tprev = tcur
        tcur = tnext
        out[k] = NORMK * tcur


cdef void _eval_h(int kind, Py_ssize_t n, double* z,
                  long[:, ::1] edges, double[::1] w1, double[::1] w2,
                  double* out) noexcept nogil:
    cdef Py_ssize_t i, j, e, m
    cdef double s, rr, ri, mi, mai, a2, p, ck
    if kind == KIND_KURAMOTO:
        for i in range(n):
            out[i] = 0.0
        for e in range(edges.shape[0]):
            i = edges[e, 0]
            j = edges[e, 1]
            s = sin(z[j] - z[i])
            out[i] += s
            out[j] -= s
    elif kind == KIND_OA:
        m = n // 2
        rr = 0.0
        ri = 0.0
        mi = 0.0
        for j in range(m):
            mi += w2[j] * w1[j]
        for j in range(m):
            rr += w2[j] * w1[j] / mi * z[2 * j]
            ri -= w2[j] * w1[j] / mi * z[2 * j + 1]
        for i in range(m):
            ck = -0.5 * w2[i]
            a2 = z[2 * i] * z[2 * i] - z[2 * i + 1] * z[2 * i + 1]
            p = z[2 * i] * z[2 * i + 1]
            out[2 * i] = ck * (rr * (a2 - 1.0) - 2.0 * ri * p)
            out[2 * i + 1] = ck * (ri * (a2 + 1.0) + 2.0 * rr * p)
    else:
        mi = 0.0
        mai = 0.0
        for j in range(n):
            mi += w1[j] * z[j]
            mai += w1[j] * w2[j] * z[j]
        for i in range(n):
            out[i] = (1.0 - z[i]) * (w2[i] * mi + mai)


cdef void _eval_jac(int kind, Py_ssize_t n, double* z,
                    long[:, ::1] edges, double[::1] w1, double[::1] w2,
                    double* J) noexcept nogil:
    cdef Py_ssize_t i, j, e, m
    cdef double c, rr, ri, mi, mai, a2, p, ck, rwj, duu, duv, dvu
    for i in range(n * n):
        J[i] = 0.0
    if kind == KIND_KURAMOTO:
        for e in range(edges.shape[0]):
            i = edges[e, 0]
            j = edges[e, 1]
            c = cos(z[j] - z[i])
            J[i * n + j] += c
            J[j * n + i] += c
            J[i * n + i] -= c
            J[j * n + j] -= c
    elif kind == KIND_OA:
        m = n // 2
        mi = 0.0
        for j in range(m):
            mi += w2[j] * w1[j]
        rr = 0.0
        ri = 0.0
        for j in range(m):
            rr += w2[j] * w1[j] / mi * z[2 * j]
            ri -= w2[j] * w1[j] / mi * z[2 * j + 1]
        for i in range(m):
            ck = -0.5 * w2[i]
            a2 = z[2 * i] * z[2 * i] - z[2 * i + 1] * z[2 * i + 1]
            p = z[2 * i] * z[2 * i + 1]
            for j in range(m):
                rwj = w2[j] * w1[j] / mi
                J[(2 * i) * n + 2 * j] = ck * (a2 - 1.0) * rwj
                J[(2 * i) * n + 2 * j + 1] = ck * 2.0 * p * rwj
                J[(2 * i + 1) * n + 2 * j] = ck * 2.0 * p * rwj
                J[(2 * i + 1) * n + 2 * j + 1] = -ck * (a2 + 1.0) * rwj
            duu = ck * (2.0 * z[2 * i] * rr - 2.0 * z[2 * i + 1] * ri)
            duv = ck * (-2.0 * z[2 * i + 1] * rr - 2.0 * z[2 * i] * ri)
            dvu = ck * (2.0 * z[2 * i] * ri + 2.0 * z[2 * i + 1] * rr)
            J[(2 * i) * n + 2 * i] += duu
            J[(2 * i) * n + 2 * i + 1] += duv
            J[(2 * i + 1) * n + 2 * i] += dvu
            J[(2 * i + 1) * n + 2 * i + 1] += duu
    else:
        mi = 0.0
        mai = 0.0
        for j in range(n):
            mi += w1[j] * z[j]
            mai += w1[j] * w2[j] * z[j]
        for i in range(n):
            for j in range(n):
                J[i * n + j] = (1.0 - z[i]) * w1[j] * (w2[i] + w2[j])
            J[i * n + i] -= w2[i] * mi + mai


cdef void _rhs(int kind, Py_ssize_t n, Py_ssize_t q, bint controlled, bint with_sens,
               double span, double t, double* y,
               long[:, ::1] edges, double[::1] w1, double[::1] w2, double[::1] ck,
               double* hbuf, double* jbuf, double* bbuf, double* out) noexcept nogil:
    cdef Py_ssize_t i, j, col
    cdef double mu = 1.0, s = 0.0, acc
    if controlled:
        s = 2.0 * t / span - 1.0
        mu = _clenshaw(ck, s)
    _eval_h(kind, n, y, edges, w1, w2, hbuf)
    for i in range(n):
        out[i] = mu * hbuf[i]
    if with_sens:
        _eval_jac(kind, n, y, edges, w1, w2, jbuf)
        _basis(q, s, bbuf)
        for col in range(q):
            for i in range(n):
                acc = bbuf[col] * hbuf[i]
                for j in range(n):
                    acc += mu * jbuf[i * n + j] * y[n + col * n + j]
                out[n + col * n + i] = acc


def solve(int kind, long[:, ::1] edges, double[::1] w1, double[::1] w2,
          double[::1] z0, cheb, double span, double tol,
          double[::1] t_eval, bint with_sens):
    """Integrate one built-in model from t=0 to t=span.

    Returns (Y, sens, z_final, status, t_fail) with Y the dense-output state
    block at t_eval, sens the terminal (n, q) coefficient sensitivities or
    None, and status 0 on success / 1 on step underflow / 2 on step budget.
    """
    cdef Py_ssize_t n = z0.shape[0]
    cdef bint controlled = cheb is not None
    cdef double[::1] ck
    cdef Py_ssize_t q = 0
    if controlled:
        ck = np.ascontiguousarray(cheb, dtype=np.float64)
        q = ck.shape[0]
    else:
        ck = np.empty(0)
    cdef Py_ssize_t dim = n * (1 + q) if with_sens else n
    cdef Py_ssize_t ns = t_eval.shape[0]

    y_arr = np.zeros(dim)
    cdef double[::1] y = y_arr
    cdef Py_ssize_t i, j
    for i in range(n):
        y[i] = z0[i]

    Y_arr = np.empty((ns, n))
    cdef double[:, ::1] Y = Y_arr

    work = np.zeros((9, dim))
    cdef double[:, ::1] W = work
    # rows: k1..k7, ytmp, ynew
    jac_arr = np.zeros(n * n)
    cdef double[::1] jbuf = jac_arr
    hb_arr = np.zeros(n)
    cdef double[::1] hbuf = hb_arr
    bb_arr = np.zeros(q if q > 0 else 1)
    cdef double[::1] bbuf = bb_arr

    cdef double t = 0.0, h = span / 100.0
    cdef double err, scale, amax, th, fac, tnext
    cdef double ydiff, bspl, c4v, c5v
    cdef Py_ssize_t pending = 0, nsteps = 0
    cdef bint last
    cdef int status = 0
    cdef double t_fail = 0.0

    while pending < ns and t_eval[pending] <= 0.0:
        for j in range(n):
            Y[pending, j] = y[j]
        pending += 1

    _rhs(kind, n, q, controlled, with_sens, span, t, &y[0],
         edges, w1, w2, ck, &hbuf[0], &jbuf[0], &bbuf[0], &W[0, 0])

    with nogil:
        while t < span:
            if nsteps >= 2000000:
                status = 2
                t_fail = t
                break
            if h < 3.6e-15 * (1.0 if fabs(t) < 1.0 else fabs(t)):
                status = 1
                t_fail = t
                break
            last = t + h >= span
            if last:
                h = span - t

            for j in range(dim):
                W[7, j] = y[j] + h * A21 * W[0, j]
            _rhs(kind, n, q, controlled, with_sens, span, t + C2 * h, &W[7, 0],
                 edges, w1, w2, ck, &hbuf[0], &jbuf[0], &bbuf[0], &W[1, 0])
            for j in range(dim):
                W[7, j] = y[j] + h * (A31 * W[0, j] + A32 * W[1, j])
            _rhs(kind, n, q, controlled, with_sens, span, t + C3 * h, &W[7, 0],
                 edges, w1, w2, ck, &hbuf[0], &jbuf[0], &bbuf[0], &W[2, 0])
            for j in range(dim):
                W[7, j] = y[j] + h * (A41 * W[0, j] + A42 * W[1, j] + A43 * W[2, j])
            _rhs(kind, n, q, controlled, with_sens, span, t + C4 * h, &W[7, 0],
                 edges, w1, w2, ck, &hbuf[0], &jbuf[0], &bbuf[0], &W[3, 0])
            for j in range(dim):
                W[7, j] = y[j] + h * (A51 * W[0, j] + A52 * W[1, j] + A53 * W[2, j] + A54 * W[3, j])
            _rhs(kind, n, q, controlled, with_sens, span, t + C5 * h, &W[7, 0],
                 edges, w1, w2, ck, &hbuf[0], &jbuf[0], &bbuf[0], &W[4, 0])
            for j in range(dim):
                W[7, j] = y[j] + h * (A61 * W[0, j] + A62 * W[1, j] + A63 * W[2, j]
                                      + A64 * W[3, j] + A65 * W[4, j])
            _rhs(kind, n, q, controlled, with_sens, span, t + h, &W[7, 0],
                 edges, w1, w2, ck, &hbuf[0], &jbuf[0], &bbuf[0], &W[5, 0])
            for j in range(dim):
                W[8, j] = y[j] + h * (B1 * W[0, j] + B3 * W[2, j] + B4 * W[3, j]
                                      + B5 * W[4, j] + B6 * W[5, j])
            _rhs(kind, n, q, controlled, with_sens, span, t + h, &W[8, 0],
                 edges, w1, w2, ck, &hbuf[0], &jbuf[0], &bbuf[0], &W[6, 0])

            err = 0.0
            amax = 0.0
            for j in range(dim):
                scale = fabs(h * (E1 * W[0, j] + E3 * W[2, j] + E4 * W[3, j]
                                  + E5 * W[4, j] + E6 * W[5, j] + E7 * W[6, j]))
                if scale > err:
                    err = scale
                if fabs(y[j]) > amax:
                    amax = fabs(y[j])
                if fabs(W[8, j]) > amax:
                    amax = fabs(W[8, j])
            scale = tol * (1.0 + amax)
            nsteps += 1

            if err <= scale:
                while pending < ns and t_eval[pending] <= t + h + 1e-14 * (1.0 if t + h < 1.0 else t + h):
                    th = (t_eval[pending] - t) / h
                    for j in range(n):
                        ydiff = W[8, j] - y[j]
                        bspl = h * W[0, j] - ydiff
                        c4v = ydiff - h * W[6, j] - bspl
                        c5v = h * (D1 * W[0, j] + D3 * W[2, j] + D4 * W[3, j]
                                   + D5 * W[4, j] + D6 * W[5, j] + D7 * W[6, j])
                        Y[pending, j] = y[j] + th * (ydiff + (1.0 - th) * (bspl + th * (c4v + (1.0 - th) * c5v)))
                    pending += 1
                t = t + h
                for j in range(dim):
                    y[j] = W[8, j]
                    W[0, j] = W[6, j]
                if err == 0.0:
                    fac = 5.0
                else:
                    fac = 0.9 * pow(scale / err, 0.2)
                    if fac > 5.0:
                        fac = 5.0
                    if fac < 0.2:
                        fac = 0.2
                h = h * fac
                if last and t >= span:
                    break
            else:
                fac = 0.9 * pow(scale / err, 0.2)
                if fac < 0.2:
                    fac = 0.2
                h = h * fac

    while pending < ns:
        for j in range(n):
            Y[pending, j] = y[j]
        pending += 1

    z_final = np.asarray(y_arr[:n]).copy()
    sens = None
    if with_sens:
        sens = y_arr[n:].reshape(q, n).T.copy()
    return Y_arr, sens, z_final, status, t_fail
