"""Pure-Python stepping kernels.

Reference implementation of the loops in ``_kernels.pyx``. Both modules expose
the same functions with the same signatures; :mod:`geoflow._backend` picks one
at import time. State vectors are ``(x, y, z, pa, pb, pg)`` for the
left-trivialised schemes and ``(x, y, z, px, py, pz)`` for the canonical RK8.

Every ``*_run`` returns ``(samples, step_index, status, fail_step, last)``:
samples at step 0, every ``stride`` steps and at the final step; ``status`` is
0 on success and 1 when the implicit solve did not converge, in which case
``fail_step`` is the step that failed and ``last`` the state it started from.
"""
import math

import numpy as np

E3, NIL, SOL = 0, 1, 2


def euler(model, pa, pb, pg):
    if model == NIL:
        return -pb * pg, pa * pg, 0.0
    if model == SOL:
        return pg * pg - pb * pb, pa * pb, -pa * pg
    return 0.0, 0.0, 0.0


def _solve3(J, r):
    # Gaussian elimination with partial pivoting on a 3x3 system
    a = [row[:] + [r[i]] for i, row in enumerate(J)]
    for c in range(3):
        piv = max(range(c, 3), key=lambda i: abs(a[i][c]))
        if a[piv][c] == 0.0:
            return None
        a[c], a[piv] = a[piv], a[c]
        for i in range(c + 1, 3):
            f = a[i][c] / a[c][c]
            for j in range(c, 4):
                a[i][j] -= f * a[c][j]
    x = [0.0, 0.0, 0.0]
    for i in (2, 1, 0):
        s = a[i][3] - sum(a[i][j] * x[j] for j in range(i + 1, 3))
        x[i] = s / a[i][i]
    return x


def _midpoint_momentum(model, p0, h, tol, maxit):
    if model == E3:
        return list(p0), True
    a0, b0, c0 = p0
    da, db, dc = euler(model, a0, b0, c0)
    p1 = [a0 + h * da, b0 + h * db, c0 + h * dc]
    scale = max(1.0, abs(a0), abs(b0), abs(c0))
    for _ in range(maxit):
        ma, mb, mc = 0.5 * (a0 + p1[0]), 0.5 * (b0 + p1[1]), 0.5 * (c0 + p1[2])
        ea, eb, ec = euler(model, ma, mb, mc)
        r = [p1[0] - a0 - h * ea, p1[1] - b0 - h * eb, p1[2] - c0 - h * ec]
        if max(abs(r[0]), abs(r[1]), abs(r[2])) <= tol * scale:
            return p1, True
        hh = 0.5 * h
        if model == NIL:
            D = [[0.0, -mc, -mb], [mc, 0.0, ma], [0.0, 0.0, 0.0]]
        else:
            D = [[0.0, -2.0 * mb, 2.0 * mc], [mb, ma, 0.0], [-mc, 0.0, -ma]]
        J = [[(1.0 if i == j else 0.0) - hh * D[i][j] for j in range(3)] for i in range(3)]
        d = _solve3(J, r)
        if d is None:
            # singular Jacobian: fall back to one fixed-point sweep
            p1 = [a0 + h * ea, b0 + h * eb, c0 + h * ec]
        else:
            p1 = [p1[0] - d[0], p1[1] - d[1], p1[2] - d[2]]
    return p1, False


def midpoint_step(model, u, h, tol, maxit):
    x0, y0, z0 = u[0], u[1], u[2]
    p1, ok = _midpoint_momentum(model, (u[3], u[4], u[5]), h, tol, maxit)
    ma, mb, mc = 0.5 * (u[3] + p1[0]), 0.5 * (u[4] + p1[1]), 0.5 * (u[5] + p1[2])
    x1 = x0 + h * ma
    xm = 0.5 * (x0 + x1)
    if model == E3:
        y1 = y0 + h * mb
        z1 = z0 + h * mc
    elif model == NIL:
        y1 = y0 + h * mb
        ym = 0.5 * (y0 + y1)
        z1 = z0 + h * (mc + 0.5 * (xm * mb - ym * ma))
    else:
        y1 = y0 + h * math.exp(xm) * mb
        z1 = z0 + h * math.exp(-xm) * mc
    return [x1, y1, z1, p1[0], p1[1], p1[2]], ok


def _exp(model, v, t):
    cx, cy, cz = v
    if model != SOL:
        return t * cx, t * cy, t * cz
    a = t * cx
    if abs(a) < 1e-6:
        a2 = a * a
        fy = t * (1.0 + a / 2.0 + a2 / 6.0 + a2 * a / 24.0)
        fz = t * (1.0 - a / 2.0 + a2 / 6.0 - a2 * a / 24.0)
    else:
        fy = math.expm1(a) / cx
        fz = -math.expm1(-a) / cx
    return a, cy * fy, cz * fz


def _coad(model, k, p):
    x, y, z = k
    pa, pb, pg = p
    if model == NIL:
        return pa + y * pg, pb - x * pg, pg
    ex, emx = math.exp(x), math.exp(-x)
    return pa + y * emx * pb - z * ex * pg, emx * pb, ex * pg


def _mul(model, a, b):
    if model == E3:
        return a[0] + b[0], a[1] + b[1], a[2] + b[2]
    if model == NIL:
        return a[0] + b[0], a[1] + b[1], a[2] + b[2] + 0.5 * (a[0] * b[1] - b[0] * a[1])
    return a[0] + b[0], math.exp(a[0]) * b[1] + a[1], math.exp(-a[0]) * b[2] + a[2]


def leapfrog_step(model, u, h, tol, maxit):
    g0 = (u[0], u[1], u[2])
    p0 = (u[3], u[4], u[5])
    if model == E3:
        return [u[0] + h * u[3], u[1] + h * u[4], u[2] + h * u[5], u[3], u[4], u[5]], True
    scale = max(1.0, abs(p0[0]), abs(p0[1]), abs(p0[2]))
    p1 = p0
    ok = False
    for _ in range(maxit):
        xi = (0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]), 0.5 * (p0[2] + p1[2]))
        new = _coad(model, _exp(model, xi, -h), p0)
        err = max(abs(new[0] - p1[0]), abs(new[1] - p1[1]), abs(new[2] - p1[2]))
        p1 = new
        if err <= tol * scale:
            ok = True
            break
    xi = (0.5 * (p0[0] + p1[0]), 0.5 * (p0[1] + p1[1]), 0.5 * (p0[2] + p1[2]))
    g1 = _mul(model, g0, _exp(model, xi, h))
    return [g1[0], g1[1], g1[2], p1[0], p1[1], p1[2]], ok


def _run(stepper, model, u0, h, nsteps, stride, tol, maxit):
    u = [float(v) for v in u0]
    out = [list(u)]
    idx = [0]
    for n in range(1, nsteps + 1):
        new, ok = stepper(model, u, h, tol, maxit)
        if not ok:
            return np.array(out), np.array(idx, dtype=np.int64), 1, n, np.array(u)
        u = new
        if n % stride == 0 or n == nsteps:
            out.append(list(u))
            idx.append(n)
    return np.array(out), np.array(idx, dtype=np.int64), 0, -1, np.array(u)


def midpoint_run(model, u0, h, nsteps, stride, tol, maxit):
    return _run(midpoint_step, model, u0, h, nsteps, stride, tol, maxit)


def leapfrog_run(model, u0, h, nsteps, stride, tol, maxit):
    return _run(leapfrog_step, model, u0, h, nsteps, stride, tol, maxit)


def canonical_rhs(model, q):
    x, y, z, px, py, pz = q
    if model == E3:
        return [px, py, pz, 0.0, 0.0, 0.0]
    if model == NIL:
        pa = px - 0.5 * y * pz
        pb = py + 0.5 * x * pz
        return [pa, pb, pz - 0.5 * y * pa + 0.5 * x * pb, -0.5 * pz * pb, 0.5 * pz * pa, 0.0]
    e2, em2 = math.exp(2.0 * x), math.exp(-2.0 * x)
    return [px, e2 * py, em2 * pz, em2 * pz * pz - e2 * py * py, 0.0, 0.0]


def rk_run(model, q0, h, nsteps, stride, A, B):
    """Fixed-step explicit Runge-Kutta with tableau (A, B) in the canonical chart."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    s = B.shape[0]
    q = [float(v) for v in q0]
    out = [list(q)]
    idx = [0]
    for n in range(1, nsteps + 1):
        K = []
        for i in range(s):
            y = list(q)
            for j in range(i):
                aij = A[i, j]
                if aij != 0.0:
                    kj = K[j]
                    for c in range(6):
                        y[c] += h * aij * kj[c]
            K.append(canonical_rhs(model, y))
        for c in range(6):
            q[c] += h * sum(B[i] * K[i][c] for i in range(s))
        if not all(math.isfinite(v) for v in q):
            return np.array(out), np.array(idx, dtype=np.int64), 2, n, np.array(q)
        if n % stride == 0 or n == nsteps:
            out.append(list(q))
            idx.append(n)
    return np.array(out), np.array(idx, dtype=np.int64), 0, -1, np.array(q)
