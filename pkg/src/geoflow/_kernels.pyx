# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stepping kernels; same contract as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, expm1, fabs, isfinite

cnp.import_array()

cdef enum:
    E3 = 0
    NIL = 1
    SOL = 2


cdef inline void _euler(int model, double a, double b, double c, double* out) noexcept nogil:
    if model == NIL:
        out[0] = -b * c
        out[1] = a * c
        out[2] = 0.0
    elif model == SOL:
        out[0] = c * c - b * b
        out[1] = a * b
        out[2] = -a * c
    else:
        out[0] = 0.0
        out[1] = 0.0
        out[2] = 0.0


def euler(int model, double a, double b, double c):
    cdef double out[3]
    _euler(model, a, b, c, out)
    return out[0], out[1], out[2]


cdef inline double _max3(double a, double b, double c) noexcept nogil:
    a = fabs(a)
    b = fabs(b)
    c = fabs(c)
    if b > a:
        a = b
    if c > a:
        a = c
    return a


cdef bint _solve3(double* J, double* r, double* x) noexcept nogil:
    # Gaussian elimination with partial pivoting on a row-major 3x3 system
    cdef double a[12]
    cdef int i, j, c, piv
    cdef double f, t, s
    for i in range(3):
        for j in range(3):
            a[i * 4 + j] = J[i * 3 + j]
        a[i * 4 + 3] = r[i]
    for c in range(3):
        piv = c
        for i in range(c + 1, 3):
            if fabs(a[i * 4 + c]) > fabs(a[piv * 4 + c]):
                piv = i
        if a[piv * 4 + c] == 0.0:
            return False
        if piv != c:
            for j in range(4):
                t = a[c * 4 + j]
                a[c * 4 + j] = a[piv * 4 + j]
                a[piv * 4 + j] = t
        for i in range(c + 1, 3):
            f = a[i * 4 + c] / a[c * 4 + c]
            for j in range(c, 4):
                a[i * 4 + j] -= f * a[c * 4 + j]
    for i in range(2, -1, -1):
        s = a[i * 4 + 3]
        for j in range(i + 1, 3):
            s -= a[i * 4 + j] * x[j]
        x[i] = s / a[i * 4 + i]
    return True


cdef bint _midpoint_step(int model, double* u, double h, double tol, int maxit) noexcept nogil:
    cdef double a0 = u[3], b0 = u[4], c0 = u[5]
    cdef double p1[3]
    cdef double e[3]
    cdef double r[3]
    cdef double d[3]
    cdef double J[9]
    cdef double ma, mb, mc, hh, scale, x0, x1, xm, y0, y1, ym
    cdef int it, i
    cdef bint ok = True
    if model == E3:
        p1[0] = a0
        p1[1] = b0
        p1[2] = c0
    else:
        ok = False
        _euler(model, a0, b0, c0, e)
        p1[0] = a0 + h * e[0]
        p1[1] = b0 + h * e[1]
        p1[2] = c0 + h * e[2]
        scale = _max3(a0, b0, c0)
        if scale < 1.0:
            scale = 1.0
        hh = 0.5 * h
        for it in range(maxit):
            ma = 0.5 * (a0 + p1[0])
            mb = 0.5 * (b0 + p1[1])
            mc = 0.5 * (c0 + p1[2])
            _euler(model, ma, mb, mc, e)
            r[0] = p1[0] - a0 - h * e[0]
            r[1] = p1[1] - b0 - h * e[1]
            r[2] = p1[2] - c0 - h * e[2]
            if _max3(r[0], r[1], r[2]) <= tol * scale:
                ok = True
                break
            if model == NIL:
                J[0] = 1.0; J[1] = hh * mc; J[2] = hh * mb
                J[3] = -hh * mc; J[4] = 1.0; J[5] = -hh * ma
                J[6] = 0.0; J[7] = 0.0; J[8] = 1.0
            else:
                J[0] = 1.0; J[1] = 2.0 * hh * mb; J[2] = -2.0 * hh * mc
                J[3] = -hh * mb; J[4] = 1.0 - hh * ma; J[5] = 0.0
                J[6] = hh * mc; J[7] = 0.0; J[8] = 1.0 + hh * ma
            if _solve3(J, r, d):
                for i in range(3):
                    p1[i] -= d[i]
            else:
                p1[0] = a0 + h * e[0]
                p1[1] = b0 + h * e[1]
                p1[2] = c0 + h * e[2]
        if not ok:
            return False
    ma = 0.5 * (a0 + p1[0])
    mb = 0.5 * (b0 + p1[1])
    mc = 0.5 * (c0 + p1[2])
    x0 = u[0]
    y0 = u[1]
    x1 = x0 + h * ma
    xm = 0.5 * (x0 + x1)
    if model == E3:
        u[1] = y0 + h * mb
        u[2] = u[2] + h * mc
    elif model == NIL:
        y1 = y0 + h * mb
        ym = 0.5 * (y0 + y1)
        u[2] = u[2] + h * (mc + 0.5 * (xm * mb - ym * ma))
        u[1] = y1
    else:
        u[1] = y0 + h * exp(xm) * mb
        u[2] = u[2] + h * exp(-xm) * mc
    u[0] = x1
    u[3] = p1[0]
    u[4] = p1[1]
    u[5] = p1[2]
    return True


cdef inline void _exp(int model, double cx, double cy, double cz, double t, double* out) noexcept nogil:
    cdef double a, a2, fy, fz
    if model != SOL:
        out[0] = t * cx
        out[1] = t * cy
        out[2] = t * cz
        return
    a = t * cx
    if fabs(a) < 1e-6:
        a2 = a * a
        fy = t * (1.0 + a / 2.0 + a2 / 6.0 + a2 * a / 24.0)
        fz = t * (1.0 - a / 2.0 + a2 / 6.0 - a2 * a / 24.0)
    else:
        fy = expm1(a) / cx
        fz = -expm1(-a) / cx
    out[0] = a
    out[1] = cy * fy
    out[2] = cz * fz


cdef inline void _coad(int model, double* k, double a, double b, double c, double* out) noexcept nogil:
    cdef double ex, emx
    if model == NIL:
        out[0] = a + k[1] * c
        out[1] = b - k[0] * c
        out[2] = c
    else:
        ex = exp(k[0])
        emx = exp(-k[0])
        out[0] = a + k[1] * emx * b - k[2] * ex * c
        out[1] = emx * b
        out[2] = ex * c


cdef bint _leapfrog_step(int model, double* u, double h, double tol, int maxit) noexcept nogil:
    cdef double a0 = u[3], b0 = u[4], c0 = u[5]
    cdef double p1[3]
    cdef double nw[3]
    cdef double k[3]
    cdef double scale, err, x0
    cdef int it
    cdef bint ok = False
    if model == E3:
        u[0] += h * a0
        u[1] += h * b0
        u[2] += h * c0
        return True
    scale = _max3(a0, b0, c0)
    if scale < 1.0:
        scale = 1.0
    p1[0] = a0
    p1[1] = b0
    p1[2] = c0
    for it in range(maxit):
        _exp(model, 0.5 * (a0 + p1[0]), 0.5 * (b0 + p1[1]), 0.5 * (c0 + p1[2]), -h, k)
        _coad(model, k, a0, b0, c0, nw)
        err = _max3(nw[0] - p1[0], nw[1] - p1[1], nw[2] - p1[2])
        p1[0] = nw[0]
        p1[1] = nw[1]
        p1[2] = nw[2]
        if err <= tol * scale:
            ok = True
            break
    if not ok:
        return False
    _exp(model, 0.5 * (a0 + p1[0]), 0.5 * (b0 + p1[1]), 0.5 * (c0 + p1[2]), h, k)
    x0 = u[0]
    if model == NIL:
        u[2] = u[2] + k[2] + 0.5 * (x0 * k[1] - k[0] * u[1])
        u[1] = u[1] + k[1]
    else:
        u[1] = exp(x0) * k[1] + u[1]
        u[2] = exp(-x0) * k[2] + u[2]
    u[0] = x0 + k[0]
    u[3] = p1[0]
    u[4] = p1[1]
    u[5] = p1[2]
    return True


cdef _run(int which, int model, u0, double h, long nsteps, long stride, double tol, int maxit):
    cdef long m = nsteps // stride + 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, 6), dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.empty(m, dtype=np.int64)
    cdef double u[6]
    cdef double prev[6]
    cdef long n, k = 0
    cdef int c
    cdef bint ok
    for c in range(6):
        u[c] = u0[c]
        out[0, c] = u[c]
    idx[0] = 0
    k = 1
    for n in range(1, nsteps + 1):
        for c in range(6):
            prev[c] = u[c]
        if which == 0:
            ok = _midpoint_step(model, u, h, tol, maxit)
        else:
            ok = _leapfrog_step(model, u, h, tol, maxit)
        if not ok:
            return out[:k].copy(), idx[:k].copy(), 1, n, np.array([prev[c] for c in range(6)])
        if n % stride == 0 or n == nsteps:
            for c in range(6):
                out[k, c] = u[c]
            idx[k] = n
            k += 1
    return out[:k].copy(), idx[:k].copy(), 0, -1, np.array([u[c] for c in range(6)])


def midpoint_run(int model, u0, double h, long nsteps, long stride, double tol, int maxit):
    return _run(0, model, u0, h, nsteps, stride, tol, maxit)


def leapfrog_run(int model, u0, double h, long nsteps, long stride, double tol, int maxit):
    return _run(1, model, u0, h, nsteps, stride, tol, maxit)


cdef inline void _canonical_rhs(int model, double* q, double* f) noexcept nogil:
    cdef double pa, pb, e2, em2
    if model == E3:
        f[0] = q[3]; f[1] = q[4]; f[2] = q[5]
        f[3] = 0.0; f[4] = 0.0; f[5] = 0.0
    elif model == NIL:
        pa = q[3] - 0.5 * q[1] * q[5]
        pb = q[4] + 0.5 * q[0] * q[5]
        f[0] = pa
        f[1] = pb
        f[2] = q[5] - 0.5 * q[1] * pa + 0.5 * q[0] * pb
        f[3] = -0.5 * q[5] * pb
        f[4] = 0.5 * q[5] * pa
        f[5] = 0.0
    else:
        e2 = exp(2.0 * q[0])
        em2 = exp(-2.0 * q[0])
        f[0] = q[3]
        f[1] = e2 * q[4]
        f[2] = em2 * q[5]
        f[3] = em2 * q[5] * q[5] - e2 * q[4] * q[4]
        f[4] = 0.0
        f[5] = 0.0


def rk_run(int model, q0, double h, long nsteps, long stride, A, B):
    cdef double[:, ::1] Av = np.ascontiguousarray(A, dtype=np.float64)
    cdef double[::1] Bv = np.ascontiguousarray(B, dtype=np.float64)
    cdef int s = Bv.shape[0]
    cdef long m = nsteps // stride + 2
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((m, 6), dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] idx = np.empty(m, dtype=np.int64)
    cdef double[:, ::1] K = np.zeros((s, 6), dtype=np.float64)
    cdef double q[6]
    cdef double y[6]
    cdef double acc
    cdef long n, k
    cdef int i, j, c
    for c in range(6):
        q[c] = q0[c]
        out[0, c] = q[c]
    idx[0] = 0
    k = 1
    for n in range(1, nsteps + 1):
        for i in range(s):
            for c in range(6):
                acc = 0.0
                for j in range(i):
                    acc += Av[i, j] * K[j, c]
                y[c] = q[c] + h * acc
            _canonical_rhs(model, y, &K[i, 0])
        for c in range(6):
            acc = 0.0
            for i in range(s):
                acc += Bv[i] * K[i, c]
            q[c] += h * acc
        for c in range(6):
            if not isfinite(q[c]):
                return out[:k].copy(), idx[:k].copy(), 2, n, np.array([q[c] for c in range(6)])
        if n % stride == 0 or n == nsteps:
            for c in range(6):
                out[k, c] = q[c]
            idx[k] = n
            k += 1
    return out[:k].copy(), idx[:k].copy(), 0, -1, np.array([q[c] for c in range(6)])
