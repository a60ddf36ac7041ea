# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled gossip kernels.

Argument conventions and semantics are documented in ``_pykernels``, the
pure-Python twin of this module.  Each loop below mirrors that file line by
line so both backends perform the same floating-point operations.
"""

import numpy as np

from libc.math cimport sqrt, fabs

cdef double DIVERGE = 1e6


cdef long long[::1] _arange(Py_ssize_t n):
    return np.arange(n, dtype=np.int64)


cdef double[::1] _zeros(Py_ssize_t n):
    return np.zeros(n, dtype=np.float64)


cdef inline double _werr(double[::1] x, double[::1] w, double[::1] xs) noexcept nogil:
    cdef Py_ssize_t q
    cdef double s = 0.0, d
    for q in range(x.shape[0]):
        d = x[q] - xs[q]
        s += w[q] * d * d
    return s


cdef inline double _uerr(double[::1] x, double[::1] xs) noexcept nogil:
    cdef Py_ssize_t q
    cdef double s = 0.0, d
    for q in range(x.shape[0]):
        d = x[q] - xs[q]
        s += d * d
    return s


cdef inline double _sum(double[::1] x) noexcept nogil:
    cdef Py_ssize_t q
    cdef double s = 0.0
    for q in range(x.shape[0]):
        s += x[q]
    return s


cdef inline double _wsum(double[::1] x, double[::1] w) noexcept nogil:
    cdef Py_ssize_t q
    cdef double s = 0.0
    for q in range(x.shape[0]):
        s += x[q] * w[q]
    return s


cdef inline int _status(double rel, double tol) noexcept nogil:
    if rel <= tol:
        return 1
    if not rel <= DIVERGE:
        return 2
    return 0


cdef inline double _sq(double a) noexcept nogil:
    return a * a


def pairwise_run(double[::1] x, double[::1] w, double[::1] xs,
                 const long long[::1] ei, const long long[::1] ej,
                 const long long[::1] samples, double omega,
                 double err0, double tol, long long k0, long long stride,
                 long long[::1] rec_k, double[::1] rec_e, double[::1] rec_m, Py_ssize_t nrec):
    cdef Py_ssize_t n = x.shape[0], K = samples.shape[0], t
    cdef long long e, i, j, k
    cdef double s, rel, xi, xj, wi, wj, d, ni, nj
    cdef int status = 0
    cdef Py_ssize_t steps = 0
    with nogil:
        s = _werr(x, w, xs)
        rel = s / err0
        for t in range(K):
            e = samples[t]
            i = ei[e]
            j = ej[e]
            xi = x[i]
            xj = x[j]
            wi = w[i]
            wj = w[j]
            d = xi - xj
            ni = xi - omega * wj / (wi + wj) * d
            nj = xj + omega * wi / (wi + wj) * d
            s += wi * (_sq(ni - xs[i]) - _sq(xi - xs[i])) + wj * (_sq(nj - xs[j]) - _sq(xj - xs[j]))
            x[i] = ni
            x[j] = nj
            k = k0 + t + 1
            steps = t + 1
            if k % n == 0:
                s = _werr(x, w, xs)
            rel = s / err0
            status = _status(rel, tol)
            if status == 1:
                s = _werr(x, w, xs)
                rel = s / err0
                status = _status(rel, tol)
            if status or k % stride == 0:
                rec_k[nrec] = k
                rec_e[nrec] = rel
                rec_m[nrec] = _wsum(x, w)
                nrec += 1
            if status:
                break
    return steps, nrec, status, rel


def laplacian_run(double[::1] x, double[::1] w, double[::1] xs,
                  const long long[::1] indptr, const long long[::1] nbr,
                  const long long[::1] samples, double omega,
                  double err0, double tol, long long k0, long long stride,
                  long long[::1] rec_k, double[::1] rec_e, double[::1] rec_m, Py_ssize_t nrec):
    cdef Py_ssize_t n = x.shape[0], K = samples.shape[0], t
    cdef long long i, j, k, lo, hi, p, di
    cdef double s, rel, r, den, coef, xi, ni, xj, nj
    cdef int status = 0
    cdef Py_ssize_t steps = 0
    with nogil:
        s = _werr(x, w, xs)
        rel = s / err0
        for t in range(K):
            i = samples[t]
            lo = indptr[i]
            hi = indptr[i + 1]
            di = hi - lo
            r = di * x[i]
            den = <double>(di * di) / w[i]
            for p in range(lo, hi):
                j = nbr[p]
                r -= x[j]
                den += 1.0 / w[j]
            coef = omega * r / den
            xi = x[i]
            ni = xi - coef * di / w[i]
            s += w[i] * (_sq(ni - xs[i]) - _sq(xi - xs[i]))
            x[i] = ni
            for p in range(lo, hi):
                j = nbr[p]
                xj = x[j]
                nj = xj + coef / w[j]
                s += w[j] * (_sq(nj - xs[j]) - _sq(xj - xs[j]))
                x[j] = nj
            k = k0 + t + 1
            steps = t + 1
            if k % n == 0:
                s = _werr(x, w, xs)
            rel = s / err0
            status = _status(rel, tol)
            if status == 1:
                s = _werr(x, w, xs)
                rel = s / err0
                status = _status(rel, tol)
            if status or k % stride == 0:
                rec_k[nrec] = k
                rec_e[nrec] = rel
                rec_m[nrec] = _wsum(x, w)
                nrec += 1
            if status:
                break
    return steps, nrec, status, rel


def gge_run(double[::1] x, double[::1] xs,
            const long long[::1] ei, const long long[::1] ej,
            const long long[::1] indptr, const long long[::1] nbr, const long long[::1] eid,
            const long long[::1] samples, const double[::1] ties,
            double err0, double tol, long long k0, long long stride,
            long long[::1] rec_k, double[::1] rec_e, double[::1] rec_m, Py_ssize_t nrec):
    cdef Py_ssize_t n = x.shape[0], K = samples.shape[0], t
    cdef long long i, k, lo, hi, p, e, a, b, cnt, pick
    cdef double s, rel, best, g, xa, xb, r, na, nb
    cdef int status = 0
    cdef Py_ssize_t steps = 0
    with nogil:
        s = _uerr(x, xs)
        rel = s / err0
        for t in range(K):
            i = samples[t]
            lo = indptr[i]
            hi = indptr[i + 1]
            best = -1.0
            cnt = 0
            for p in range(lo, hi):
                g = fabs(x[i] - x[nbr[p]])
                if g > best:
                    best = g
                    cnt = 1
                elif g == best:
                    cnt += 1
            pick = <long long>(ties[t] * cnt)
            e = -1
            for p in range(lo, hi):
                if fabs(x[i] - x[nbr[p]]) == best:
                    if pick == 0:
                        e = eid[p]
                        break
                    pick -= 1
            a = ei[e]
            b = ej[e]
            xa = x[a]
            xb = x[b]
            r = xa - xb
            na = xa - r / 2.0
            nb = xb + r / 2.0
            s += _sq(na - xs[a]) - _sq(xa - xs[a]) + _sq(nb - xs[b]) - _sq(xb - xs[b])
            x[a] = na
            x[b] = nb
            k = k0 + t + 1
            steps = t + 1
            if k % n == 0:
                s = _uerr(x, xs)
            rel = s / err0
            status = _status(rel, tol)
            if status == 1:
                s = _uerr(x, xs)
                rel = s / err0
                status = _status(rel, tol)
            if status or k % stride == 0:
                rec_k[nrec] = k
                rec_e[nrec] = rel
                rec_m[nrec] = _sum(x)
                nrec += 1
            if status:
                break
    return steps, nrec, status, rel


def mrk_run(double[::1] x, double[::1] xp, double[::1] w, double[::1] xs,
            const long long[::1] ei, const long long[::1] ej,
            const long long[::1] samples, double omega, double beta,
            double err0, double tol, long long k0, long long stride,
            long long[::1] rec_k, double[::1] rec_e, double[::1] rec_m, Py_ssize_t nrec):
    cdef Py_ssize_t n = x.shape[0], K = samples.shape[0], t, q
    cdef long long e, i, j, k
    cdef double rel, wi, wj, d, xq, ni, nj
    cdef int status = 0
    cdef Py_ssize_t steps = 0
    with nogil:
        rel = _werr(x, w, xs) / err0
        for t in range(K):
            e = samples[t]
            i = ei[e]
            j = ej[e]
            wi = w[i]
            wj = w[j]
            d = x[i] - x[j]
            ni = x[i] + beta * (x[i] - xp[i])
            nj = x[j] + beta * (x[j] - xp[j])
            ni -= omega * wj / (wi + wj) * d
            nj += omega * wi / (wi + wj) * d
            for q in range(n):
                xq = x[q]
                x[q] = xq + beta * (xq - xp[q])
                xp[q] = xq
            x[i] = ni
            x[j] = nj
            k = k0 + t + 1
            steps = t + 1
            rel = _werr(x, w, xs) / err0
            status = _status(rel, tol)
            if status or k % stride == 0:
                rec_k[nrec] = k
                rec_e[nrec] = rel
                rec_m[nrec] = _wsum(x, w)
                nrec += 1
            if status:
                break
    return steps, nrec, status, rel


def shift_run(double[::1] x, double[::1] xp, double[::1] xs,
              const long long[::1] ei, const long long[::1] ej,
              const long long[::1] samples, double omega,
              double err0, double tol, long long k0, long long stride,
              long long[::1] rec_k, double[::1] rec_e, double[::1] rec_m, Py_ssize_t nrec):
    cdef Py_ssize_t n = x.shape[0], K = samples.shape[0], t
    cdef long long e, i, j, k
    cdef double s, rel, xi, xj, h, ni, nj
    cdef int status = 0
    cdef Py_ssize_t steps = 0
    with nogil:
        s = _uerr(x, xs)
        rel = s / err0
        for t in range(K):
            e = samples[t]
            i = ei[e]
            j = ej[e]
            xi = x[i]
            xj = x[j]
            h = omega * (xi + xj) / 2.0
            ni = h + (1.0 - omega) * xp[i]
            nj = h + (1.0 - omega) * xp[j]
            s += _sq(ni - xs[i]) - _sq(xi - xs[i]) + _sq(nj - xs[j]) - _sq(xj - xs[j])
            xp[i] = xi
            xp[j] = xj
            x[i] = ni
            x[j] = nj
            k = k0 + t + 1
            steps = t + 1
            if k % n == 0:
                s = _uerr(x, xs)
            rel = s / err0
            status = _status(rel, tol)
            if status == 1:
                s = _uerr(x, xs)
                rel = s / err0
                status = _status(rel, tol)
            if status or k % stride == 0:
                rec_k[nrec] = k
                rec_e[nrec] = rel
                rec_m[nrec] = _sum(x) - (omega - 1.0) * _sum(xp)
                nrec += 1
            if status:
                break
    return steps, nrec, status, rel


def block_run(double[::1] x, double[::1] xp, double[::1] w, double[::1] xs,
              const long long[::1] ei, const long long[::1] ej,
              const long long[:, ::1] samples, double omega, double beta,
              double err0, double tol, long long k0, long long stride,
              long long[::1] rec_k, double[::1] rec_e, double[::1] rec_m, Py_ssize_t nrec):
    cdef Py_ssize_t n = x.shape[0], K = samples.shape[0], tau = samples.shape[1]
    cdef Py_ssize_t t, c, q, nt
    cdef long long e, a, b, v, r, k
    cdef double s, rel, xv, nv
    cdef int status = 0
    cdef Py_ssize_t steps = 0
    cdef bint momentum = beta != 0.0
    cdef long long[::1] parent = _arange(n)
    cdef long long[::1] touched = _arange(n)
    cdef unsigned char[::1] mark = bytearray(n)
    cdef double[::1] num = _zeros(n)
    cdef double[::1] den = _zeros(n)
    cdef double[::1] nx = _zeros(n)
    with nogil:
        s = _werr(x, w, xs)
        rel = s / err0
        for t in range(K):
            nt = 0
            for c in range(tau):
                e = samples[t, c]
                a = ei[e]
                b = ej[e]
                if not mark[a]:
                    mark[a] = 1
                    touched[nt] = a
                    nt += 1
                if not mark[b]:
                    mark[b] = 1
                    touched[nt] = b
                    nt += 1
                while parent[a] != a:
                    parent[a] = parent[parent[a]]
                    a = parent[a]
                while parent[b] != b:
                    parent[b] = parent[parent[b]]
                    b = parent[b]
                if a != b:
                    if a < b:
                        parent[b] = a
                    else:
                        parent[a] = b
            for c in range(nt):
                v = touched[c]
                r = v
                while parent[r] != r:
                    r = parent[r]
                parent[v] = r
            for c in range(nt):
                v = touched[c]
                num[v] = 0.0
                den[v] = 0.0
            for c in range(nt):
                v = touched[c]
                r = parent[v]
                num[r] += w[v] * x[v]
                den[r] += w[v]
            if momentum:
                for q in range(nt):
                    v = touched[q]
                    r = parent[v]
                    nx[v] = omega * (num[r] / den[r] - x[v])
                for q in range(n):
                    xv = x[q]
                    nv = xv + beta * (xv - xp[q])
                    if mark[q]:
                        nv += nx[q]
                    x[q] = nv
                    xp[q] = xv
            else:
                for c in range(nt):
                    v = touched[c]
                    r = parent[v]
                    xv = x[v]
                    nv = xv + omega * (num[r] / den[r] - xv)
                    s += w[v] * (_sq(nv - xs[v]) - _sq(xv - xs[v]))
                    nx[v] = nv
                for c in range(nt):
                    v = touched[c]
                    x[v] = nx[v]
            for c in range(nt):
                v = touched[c]
                parent[v] = v
                mark[v] = 0
            k = k0 + t + 1
            steps = t + 1
            if momentum or k % n == 0:
                s = _werr(x, w, xs)
            rel = s / err0
            status = _status(rel, tol)
            if status == 1 and not momentum:
                s = _werr(x, w, xs)
                rel = s / err0
                status = _status(rel, tol)
            if status or k % stride == 0:
                rec_k[nrec] = k
                rec_e[nrec] = rel
                rec_m[nrec] = _wsum(x, w)
                nrec += 1
            if status:
                break
        if not momentum:
            for q in range(n):
                xp[q] = x[q]
    return steps, nrec, status, rel


def acc_run(double[::1] x, double[::1] v, double[::1] xs,
            const long long[::1] ei, const long long[::1] ej,
            const long long[::1] samples,
            const double[::1] alpha, const double[::1] beta, const double[::1] gamma,
            double err0, double tol, long long k0, long long stride,
            long long[::1] rec_k, double[::1] rec_e, double[::1] rec_m, Py_ssize_t nrec):
    cdef Py_ssize_t n = x.shape[0], K = samples.shape[0], t, q
    cdef long long e, i, j, k
    cdef double rel, a, b, g, yq, yi, yj, h, m
    cdef int status = 0
    cdef Py_ssize_t steps = 0
    with nogil:
        rel = _uerr(x, xs) / err0
        for t in range(K):
            a = alpha[t]
            b = beta[t]
            g = gamma[t]
            e = samples[t]
            i = ei[e]
            j = ej[e]
            for q in range(n):
                yq = a * v[q] + (1.0 - a) * x[q]
                if q == i:
                    yi = yq
                elif q == j:
                    yj = yq
                x[q] = yq
                v[q] = b * v[q] + (1.0 - b) * yq
            h = (yi - yj) / 2.0
            m = (yi + yj) / 2.0
            x[i] = m
            x[j] = m
            v[i] -= g * h
            v[j] += g * h
            k = k0 + t + 1
            steps = t + 1
            rel = _uerr(x, xs) / err0
            status = _status(rel, tol)
            if status or k % stride == 0:
                rec_k[nrec] = k
                rec_e[nrec] = rel
                rec_m[nrec] = _sum(x)
                nrec += 1
            if status:
                break
    return steps, nrec, status, rel


def jacobi_eigh(double[:, ::1] a, double[:, ::1] vec, double tol=1e-15, int max_sweeps=100):
    cdef Py_ssize_t n = a.shape[0], p, q, r
    cdef int sweep, sweeps = -1
    cdef double fro = 0.0, off, thresh, apq, theta, t, c, s, arp, arq, apr, aqr, vrp, vrq
    with nogil:
        for p in range(n):
            for q in range(n):
                vec[p, q] = 1.0 if p == q else 0.0
                fro += a[p, q] * a[p, q]
        fro = sqrt(fro)
        thresh = tol * (fro if fro > 1e-300 else 1e-300)
        for sweep in range(max_sweeps):
            off = 0.0
            for p in range(n):
                for q in range(p + 1, n):
                    off += a[p, q] * a[p, q]
            if sqrt(2.0 * off) <= thresh:
                sweeps = sweep
                break
            for p in range(n):
                for q in range(p + 1, n):
                    apq = a[p, q]
                    if apq == 0.0:
                        continue
                    theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                    t = 1.0 / (fabs(theta) + sqrt(theta * theta + 1.0))
                    if theta < 0.0:
                        t = -t
                    c = 1.0 / sqrt(t * t + 1.0)
                    s = t * c
                    for r in range(n):
                        arp = a[r, p]
                        arq = a[r, q]
                        a[r, p] = c * arp - s * arq
                        a[r, q] = s * arp + c * arq
                    for r in range(n):
                        apr = a[p, r]
                        aqr = a[q, r]
                        a[p, r] = c * apr - s * aqr
                        a[q, r] = s * apr + c * aqr
                    a[p, q] = 0.0
                    a[q, p] = 0.0
                    for r in range(n):
                        vrp = vec[r, p]
                        vrq = vec[r, q]
                        vec[r, p] = c * vrp - s * vrq
                        vec[r, q] = s * vrp + c * vrq
    return sweeps

