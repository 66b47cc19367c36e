# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; contract identical to :mod:`psos_gibbs._fallback`."""

import numpy as np

from libc.math cimport exp, log, fabs, INFINITY

cdef double _MAX_STEP = 10.0
cdef int _BACKTRACK = 30


cdef double _evaluate(const double[:, ::1] W, double k, const double[::1] h, int m,
                      double[::1] hext, double[::1] lse, double[:, ::1] S,
                      double[::1] G) noexcept nogil:
    # fills G = h - k F(h) and the row softmaxes S; returns max |G|
    cdef int i, j
    cdef int n1 = m + 1
    cdef double top, acc, v
    cdef double worst = 0.0
    for j in range(m):
        hext[j] = h[j]
    hext[m] = 0.0
    for i in range(n1):
        top = -INFINITY
        for j in range(n1):
            v = W[i, j] + hext[j]
            S[i, j] = v
            if v > top:
                top = v
        acc = 0.0
        for j in range(n1):
            S[i, j] = exp(S[i, j] - top)
            acc += S[i, j]
        for j in range(n1):
            S[i, j] /= acc
        lse[i] = top + log(acc)
    for i in range(m):
        G[i] = h[i] - k * (lse[i] - lse[m])
        if G[i] != G[i] or fabs(G[i]) == INFINITY:
            return INFINITY
        if fabs(G[i]) > worst:
            worst = fabs(G[i])
    return worst


cdef int _solve(double[:, ::1] A, double[::1] b, int m) noexcept nogil:
    # Gaussian elimination with partial pivoting; solution left in b
    cdef int i, j, c, piv
    cdef double best, tmp, f
    for c in range(m):
        piv = c
        best = fabs(A[c, c])
        for i in range(c + 1, m):
            if fabs(A[i, c]) > best:
                best = fabs(A[i, c])
                piv = i
        if best == 0.0 or best != best:
            return -1
        if piv != c:
            for j in range(m):
                tmp = A[c, j]
                A[c, j] = A[piv, j]
                A[piv, j] = tmp
            tmp = b[c]
            b[c] = b[piv]
            b[piv] = tmp
        for i in range(c + 1, m):
            f = A[i, c] / A[c, c]
            for j in range(c, m):
                A[i, j] -= f * A[c, j]
            b[i] -= f * b[c]
    for i in range(m - 1, -1, -1):
        tmp = b[i]
        for j in range(i + 1, m):
            tmp -= A[i, j] * b[j]
        b[i] = tmp / A[i, i]
    return 0


def multistart(H0, W, double k, double damping, int max_iter, int newton_iter,
               double tol, double newton_tol=0.0):
    H_arr = np.array(H0, dtype=np.float64, order="C", copy=True)
    W_arr = np.ascontiguousarray(W, dtype=np.float64)
    cdef double[:, ::1] H = H_arr
    cdef const double[:, ::1] Wv = W_arr
    cdef Py_ssize_t n = H.shape[0]
    cdef int m = <int>H.shape[1]
    norm_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = norm_arr

    cdef double[::1] hext = np.empty(m + 1)
    cdef double[::1] lse = np.empty(m + 1)
    cdef double[:, ::1] S = np.empty((m + 1, m + 1))
    cdef double[::1] G = np.empty(m)
    cdef double[:, ::1] J = np.empty((m, m))
    cdef double[::1] delta = np.empty(m)
    cdef double[::1] trial = np.empty(m)

    cdef Py_ssize_t s
    cdef int it, bt, i, j
    cdef double nrm, tn, alpha, big
    cdef bint improved

    with nogil:
        for s in range(n):
            for it in range(max_iter):
                nrm = _evaluate(Wv, k, H[s], m, hext, lse, S, G)
                if nrm < tol or nrm == INFINITY:
                    break
                for i in range(m):
                    H[s, i] -= damping * G[i]

            nrm = _evaluate(Wv, k, H[s], m, hext, lse, S, G)
            for it in range(newton_iter):
                if nrm <= newton_tol or nrm == INFINITY:
                    break
                for i in range(m):
                    for j in range(m):
                        J[i, j] = (1.0 if i == j else 0.0) - k * (S[i, j] - S[m, j])
                    delta[i] = -G[i]
                if _solve(J, delta, m) != 0:
                    break
                big = 0.0
                for i in range(m):
                    if fabs(delta[i]) > big:
                        big = fabs(delta[i])
                if big != big or big == INFINITY:
                    break
                if big > _MAX_STEP:
                    for i in range(m):
                        delta[i] *= _MAX_STEP / big
                alpha = 1.0
                improved = False
                for bt in range(_BACKTRACK):
                    for i in range(m):
                        trial[i] = H[s, i] + alpha * delta[i]
                    tn = _evaluate(Wv, k, trial, m, hext, lse, S, G)
                    if tn < nrm:
                        for i in range(m):
                            H[s, i] = trial[i]
                        nrm = tn
                        improved = True
                        break
                    alpha *= 0.5
                if not improved:
                    break
            out[s] = nrm
    return H_arr, norm_arr


cdef inline void _softmax3(double a0, double a1, double a2, double* p) noexcept nogil:
    cdef double top = a0
    if a1 > top:
        top = a1
    if a2 > top:
        top = a2
    p[0] = exp(a0 - top)
    p[1] = exp(a1 - top)
    p[2] = exp(a2 - top)
    cdef double acc = p[0] + p[1] + p[2]
    p[0] /= acc
    p[1] /= acc
    p[2] /= acc


cdef inline void _point(double t, double mid, double u, double lx2, double ly2,
                        double lt, double lT, double* best) noexcept nogil:
    cdef double P0[3]
    cdef double P1[3]
    cdef double P2[3]
    cdef double la = log(t) if t > 0.0 else -INFINITY
    cdef double lb = log(mid) if mid > 0.0 else -INFINITY
    cdef double lc = log(u) if u > 0.0 else -INFINITY
    _softmax3(lx2 + la, lt + ly2 + lb, lT + lc, P0)
    _softmax3(lt + lx2 + la, ly2 + lb, lt + lc, P1)
    _softmax3(lT + lx2 + la, lt + ly2 + lb, lc, P2)
    cdef double v
    v = fabs(P0[0] - P2[0])
    if v > best[0]:
        best[0] = v
    v = fabs(P0[0] - P1[0])
    if v > best[1]:
        best[1] = v
    v = fabs(P1[1] - P0[1])
    if v > best[2]:
        best[2] = v
    v = fabs(P2[2] - P0[2])
    if v > best[3]:
        best[3] = v


def gamma_grid_max(double lx2, double ly2, double lt, double lT, int n):
    cdef double best[4]
    best[0] = best[1] = best[2] = best[3] = 0.0
    cdef int i, j
    cdef Py_ssize_t s, N = <Py_ssize_t>n * n
    cdef double t, u, mid, r
    cdef double inv = 1.0 / (n - 1.0)
    with nogil:
        for i in range(n):
            for j in range(n - i):
                t = i * inv
                u = j * inv
                mid = 0.0 if i + j == n - 1 else 1.0 - t - u
                if mid < 0.0:
                    mid = 0.0
                _point(t, mid, u, lx2, ly2, lt, lT, best)
        for s in range(N):
            r = s / (N - 1.0)
            _point(r, 1.0 - r, 0.0, lx2, ly2, lt, lT, best)
            _point(0.0, 1.0 - r, r, lx2, ly2, lt, lT, best)
            _point(r, 0.0, 1.0 - r, lx2, ly2, lt, lT, best)
    return best[0], best[1], best[2], best[3]
