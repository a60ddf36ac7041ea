"""Pure-Python twin of the compiled ``_kernels`` module.

Every function here mirrors its Cython counterpart argument for argument and
performs the same floating-point operations in the same order, so the two
backends agree to rounding.  Arrays are converted to Python lists on entry
and written back on exit.

Run kernels share one calling convention::

    fn(<state arrays>, <structure>, samples, <params>,
       err0, tol, k0, stride, rec_k, rec_e, rec_m, nrec)
        -> (steps, nrec, status, rel)

``err0`` normalizes the squared B-error, ``tol`` is the stopping threshold
on that ratio, ``k0`` is the global index of the first step in the chunk,
and a sample ``(k, rel, mass)`` is written whenever ``k % stride == 0`` or
the run stops.  ``status`` is 0 (chunk exhausted), 1 (converged) or
2 (diverged: ratio above ``DIVERGE`` or not finite).
"""

from __future__ import annotations

import math

DIVERGE = 1e6


def _sq(a):
    # a * a, not a ** 2: float.__pow__ goes through libm pow and can differ by an ulp
    return a * a


def _werr(xl, wl, sl):
    s = 0.0
    for a, b, c in zip(xl, wl, sl):
        d = a - c
        s += b * d * d
    return s


def _uerr(xl, sl):
    s = 0.0
    for a, c in zip(xl, sl):
        d = a - c
        s += d * d
    return s


def _status(rel, tol):
    if rel <= tol:
        return 1
    if not rel <= DIVERGE:
        return 2
    return 0


def _sum(xl):
    s = 0.0
    for a in xl:
        s += a
    return s


def _wsum(xl, wl):
    s = 0.0
    for a, b in zip(xl, wl):
        s += a * b
    return s


def pairwise_run(x, w, xs, ei, ej, samples, omega,
                 err0, tol, k0, stride, rec_k, rec_e, rec_m, nrec):
    """Scaled randomized Kaczmarz on the incidence system, one edge per step."""
    xl, wl, sl = x.tolist(), w.tolist(), xs.tolist()
    il, jl, el = ei.tolist(), ej.tolist(), samples.tolist()
    n = len(xl)
    s = _werr(xl, wl, sl)
    rel = s / err0
    status = 0
    steps = 0
    for t in range(len(el)):
        e = el[t]
        i = il[e]
        j = jl[e]
        xi = xl[i]
        xj = xl[j]
        wi = wl[i]
        wj = wl[j]
        d = xi - xj
        ni = xi - omega * wj / (wi + wj) * d
        nj = xj + omega * wi / (wi + wj) * d
        s += wi * (_sq(ni - sl[i]) - _sq(xi - sl[i])) + wj * (_sq(nj - sl[j]) - _sq(xj - sl[j]))
        xl[i] = ni
        xl[j] = nj
        k = k0 + t + 1
        steps = t + 1
        if k % n == 0:
            s = _werr(xl, wl, sl)
        rel = s / err0
        status = _status(rel, tol)
        if status == 1:
            s = _werr(xl, wl, sl)
            rel = s / err0
            status = _status(rel, tol)
        if status or k % stride == 0:
            rec_k[nrec] = k
            rec_e[nrec] = rel
            rec_m[nrec] = _wsum(xl, wl)
            nrec += 1
        if status:
            break
    x[:] = xl
    return steps, nrec, status, rel


def laplacian_run(x, w, xs, indptr, nbr, samples, omega,
                  err0, tol, k0, stride, rec_k, rec_e, rec_m, nrec):
    """Scaled randomized Kaczmarz on the Laplacian system, one node per step."""
    xl, wl, sl = x.tolist(), w.tolist(), xs.tolist()
    pl, nl, vl = indptr.tolist(), nbr.tolist(), samples.tolist()
    n = len(xl)
    s = _werr(xl, wl, sl)
    rel = s / err0
    status = 0
    steps = 0
    for t in range(len(vl)):
        i = vl[t]
        lo = pl[i]
        hi = pl[i + 1]
        di = hi - lo
        r = di * xl[i]
        den = di * di / wl[i]
        for p in range(lo, hi):
            j = nl[p]
            r -= xl[j]
            den += 1.0 / wl[j]
        coef = omega * r / den
        xi = xl[i]
        ni = xi - coef * di / wl[i]
        s += wl[i] * (_sq(ni - sl[i]) - _sq(xi - sl[i]))
        xl[i] = ni
        for p in range(lo, hi):
            j = nl[p]
            xj = xl[j]
            nj = xj + coef / wl[j]
            s += wl[j] * (_sq(nj - sl[j]) - _sq(xj - sl[j]))
            xl[j] = nj
        k = k0 + t + 1
        steps = t + 1
        if k % n == 0:
            s = _werr(xl, wl, sl)
        rel = s / err0
        status = _status(rel, tol)
        if status == 1:
            s = _werr(xl, wl, sl)
            rel = s / err0
            status = _status(rel, tol)
        if status or k % stride == 0:
            rec_k[nrec] = k
            rec_e[nrec] = rel
            rec_m[nrec] = _wsum(xl, wl)
            nrec += 1
        if status:
            break
    x[:] = xl
    return steps, nrec, status, rel


def gge_run(x, xs, ei, ej, indptr, nbr, eid, samples, ties,
            err0, tol, k0, stride, rec_k, rec_e, rec_m, nrec):
    """Greedy gossip with eavesdropping; ``ties[t]`` in [0, 1) picks among maximizers."""
    xl, sl = x.tolist(), xs.tolist()
    il, jl = ei.tolist(), ej.tolist()
    pl, nl, dl = indptr.tolist(), nbr.tolist(), eid.tolist()
    vl, ul = samples.tolist(), ties.tolist()
    n = len(xl)
    s = _uerr(xl, sl)
    rel = s / err0
    status = 0
    steps = 0
    for t in range(len(vl)):
        i = vl[t]
        lo = pl[i]
        hi = pl[i + 1]
        best = -1.0
        cnt = 0
        for p in range(lo, hi):
            g = abs(xl[i] - xl[nl[p]])
            if g > best:
                best = g
                cnt = 1
            elif g == best:
                cnt += 1
        pick = int(ul[t] * cnt)
        e = -1
        for p in range(lo, hi):
            if abs(xl[i] - xl[nl[p]]) == best:
                if pick == 0:
                    e = dl[p]
                    break
                pick -= 1
        a = il[e]
        b = jl[e]
        xa = xl[a]
        xb = xl[b]
        r = xa - xb
        na = xa - r / 2.0
        nb = xb + r / 2.0
        s += _sq(na - sl[a]) - _sq(xa - sl[a]) + _sq(nb - sl[b]) - _sq(xb - sl[b])
        xl[a] = na
        xl[b] = nb
        k = k0 + t + 1
        steps = t + 1
        if k % n == 0:
            s = _uerr(xl, sl)
        rel = s / err0
        status = _status(rel, tol)
        if status == 1:
            s = _uerr(xl, sl)
            rel = s / err0
            status = _status(rel, tol)
        if status or k % stride == 0:
            rec_k[nrec] = k
            rec_e[nrec] = rel
            rec_m[nrec] = _sum(xl)
            nrec += 1
        if status:
            break
    x[:] = xl
    return steps, nrec, status, rel


def mrk_run(x, xp, w, xs, ei, ej, samples, omega, beta,
            err0, tol, k0, stride, rec_k, rec_e, rec_m, nrec):
    """Heavy-ball randomized Kaczmarz, one edge per step; every node moves."""
    xl, pl, wl, sl = x.tolist(), xp.tolist(), w.tolist(), xs.tolist()
    il, jl, el = ei.tolist(), ej.tolist(), samples.tolist()
    n = len(xl)
    nx = [0.0] * n
    rel = _werr(xl, wl, sl) / err0
    status = 0
    steps = 0
    for t in range(len(el)):
        e = el[t]
        i = il[e]
        j = jl[e]
        for q in range(n):
            nx[q] = xl[q] + beta * (xl[q] - pl[q])
        wi = wl[i]
        wj = wl[j]
        d = xl[i] - xl[j]
        nx[i] -= omega * wj / (wi + wj) * d
        nx[j] += omega * wi / (wi + wj) * d
        pl, xl, nx = xl, nx, pl
        k = k0 + t + 1
        steps = t + 1
        rel = _werr(xl, wl, sl) / err0
        status = _status(rel, tol)
        if status or k % stride == 0:
            rec_k[nrec] = k
            rec_e[nrec] = rel
            rec_m[nrec] = _wsum(xl, wl)
            nrec += 1
        if status:
            break
    x[:] = xl
    xp[:] = pl
    return steps, nrec, status, rel


def shift_run(x, xp, xs, ei, ej, samples, omega,
              err0, tol, k0, stride, rec_k, rec_e, rec_m, nrec):
    """Shift-register gossip; only the active pair refreshes its previous value."""
    xl, pl, sl = x.tolist(), xp.tolist(), xs.tolist()
    il, jl, el = ei.tolist(), ej.tolist(), samples.tolist()
    n = len(xl)
    s = _uerr(xl, sl)
    rel = s / err0
    status = 0
    steps = 0
    for t in range(len(el)):
        e = el[t]
        i = il[e]
        j = jl[e]
        xi = xl[i]
        xj = xl[j]
        h = omega * (xi + xj) / 2.0
        ni = h + (1.0 - omega) * pl[i]
        nj = h + (1.0 - omega) * pl[j]
        s += _sq(ni - sl[i]) - _sq(xi - sl[i]) + _sq(nj - sl[j]) - _sq(xj - sl[j])
        pl[i] = xi
        pl[j] = xj
        xl[i] = ni
        xl[j] = nj
        k = k0 + t + 1
        steps = t + 1
        if k % n == 0:
            s = _uerr(xl, sl)
        rel = s / err0
        status = _status(rel, tol)
        if status == 1:
            s = _uerr(xl, sl)
            rel = s / err0
            status = _status(rel, tol)
        if status or k % stride == 0:
            rec_k[nrec] = k
            rec_e[nrec] = rel
            rec_m[nrec] = _sum(xl) - (omega - 1.0) * _sum(pl)
            nrec += 1
        if status:
            break
    x[:] = xl
    xp[:] = pl
    return steps, nrec, status, rel


def block_run(x, xp, w, xs, ei, ej, samples, omega, beta,
              err0, tol, k0, stride, rec_k, rec_e, rec_m, nrec):
    """Block Kaczmarz with heavy-ball momentum; ``samples`` is a (K, tau) edge array.

    Each step merges the sampled edges with union-find and moves every touched
    node toward the weighted mean of its component.  With ``beta == 0`` only
    touched nodes change and the error is tracked incrementally.
    """
    xl, pl, wl, sl = x.tolist(), xp.tolist(), w.tolist(), xs.tolist()
    il, jl = ei.tolist(), ej.tolist()
    rows = samples.tolist()
    n = len(xl)
    parent = list(range(n))
    mark = [False] * n
    num = [0.0] * n
    den = [0.0] * n
    nx = [0.0] * n
    touched = []
    momentum = beta != 0.0
    s = _werr(xl, wl, sl)
    rel = s / err0
    status = 0
    steps = 0
    for t in range(len(rows)):
        touched.clear()
        for e in rows[t]:
            a = il[e]
            b = jl[e]
            if not mark[a]:
                mark[a] = True
                touched.append(a)
            if not mark[b]:
                mark[b] = True
                touched.append(b)
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
        for v in touched:
            r = v
            while parent[r] != r:
                r = parent[r]
            parent[v] = r
        for v in touched:
            num[v] = 0.0
            den[v] = 0.0
        for v in touched:
            r = parent[v]
            num[r] += wl[v] * xl[v]
            den[r] += wl[v]
        if momentum:
            for q in range(n):
                nx[q] = xl[q] + beta * (xl[q] - pl[q])
            for v in touched:
                r = parent[v]
                nx[v] += omega * (num[r] / den[r] - xl[v])
            pl, xl, nx = xl, nx, pl
        else:
            for v in touched:
                r = parent[v]
                xv = xl[v]
                nv = xv + omega * (num[r] / den[r] - xv)
                s += wl[v] * (_sq(nv - sl[v]) - _sq(xv - sl[v]))
                nx[v] = nv
            for v in touched:
                xl[v] = nx[v]
        for v in touched:
            parent[v] = v
            mark[v] = False
        k = k0 + t + 1
        steps = t + 1
        if momentum or k % n == 0:
            s = _werr(xl, wl, sl)
        rel = s / err0
        status = _status(rel, tol)
        if status == 1 and not momentum:
            s = _werr(xl, wl, sl)
            rel = s / err0
            status = _status(rel, tol)
        if status or k % stride == 0:
            rec_k[nrec] = k
            rec_e[nrec] = rel
            rec_m[nrec] = _wsum(xl, wl)
            nrec += 1
        if status:
            break
    x[:] = xl
    xp[:] = pl if momentum else xl
    return steps, nrec, status, rel


def acc_run(x, v, xs, ei, ej, samples, alpha, beta, gamma,
            err0, tol, k0, stride, rec_k, rec_e, rec_m, nrec):
    """Accelerated gossip on the normalized incidence system.

    ``alpha``, ``beta`` and ``gamma`` hold the per-step scalars aligned with
    ``samples``.
    """
    xl, vl, sl = x.tolist(), v.tolist(), xs.tolist()
    il, jl, el = ei.tolist(), ej.tolist(), samples.tolist()
    al, bl, gl = alpha.tolist(), beta.tolist(), gamma.tolist()
    n = len(xl)
    y = [0.0] * n
    rel = _uerr(xl, sl) / err0
    status = 0
    steps = 0
    for t in range(len(el)):
        a = al[t]
        b = bl[t]
        g = gl[t]
        for q in range(n):
            yq = a * vl[q] + (1.0 - a) * xl[q]
            y[q] = yq
            xl[q] = yq
            vl[q] = b * vl[q] + (1.0 - b) * yq
        e = el[t]
        i = il[e]
        j = jl[e]
        h = (y[i] - y[j]) / 2.0
        m = (y[i] + y[j]) / 2.0
        xl[i] = m
        xl[j] = m
        vl[i] -= g * h
        vl[j] += g * h
        k = k0 + t + 1
        steps = t + 1
        rel = _uerr(xl, sl) / err0
        status = _status(rel, tol)
        if status or k % stride == 0:
            rec_k[nrec] = k
            rec_e[nrec] = rel
            rec_m[nrec] = _sum(xl)
            nrec += 1
        if status:
            break
    x[:] = xl
    v[:] = vl
    return steps, nrec, status, rel


def jacobi_eigh(a, vec, tol=1e-15, max_sweeps=100):
    """Cyclic Jacobi on symmetric ``a`` (overwritten, diagonal left holding eigenvalues).

    ``vec`` receives the accumulated rotations.  Returns the sweep count, or
    -1 if ``max_sweeps`` passed without convergence.
    """
    n = a.shape[0]
    A = a.tolist()
    V = [[1.0 if r == c else 0.0 for c in range(n)] for r in range(n)]
    fro = math.sqrt(sum(v * v for row in A for v in row))
    thresh = tol * max(fro, 1e-300)
    sweeps = -1
    for sweep in range(max_sweeps):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                off += A[p][q] * A[p][q]
        if math.sqrt(2.0 * off) <= thresh:
            sweeps = sweep
            break
        for p in range(n):
            for q in range(p + 1, n):
                apq = A[p][q]
                if apq == 0.0:
                    continue
                theta = (A[q][q] - A[p][p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                for r in range(n):
                    arp = A[r][p]
                    arq = A[r][q]
                    A[r][p] = c * arp - s * arq
                    A[r][q] = s * arp + c * arq
                for r in range(n):
                    apr = A[p][r]
                    aqr = A[q][r]
                    A[p][r] = c * apr - s * aqr
                    A[q][r] = s * apr + c * aqr
                A[p][q] = 0.0
                A[q][p] = 0.0
                for r in range(n):
                    vrp = V[r][p]
                    vrq = V[r][q]
                    V[r][p] = c * vrp - s * vrq
                    V[r][q] = s * vrp + c * vrq
    a[:, :] = A
    vec[:, :] = V
    return sweeps
