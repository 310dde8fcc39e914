# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-round kernels.

Mirrors ``_pykernels`` function for function. Loops are written for the
small dense shapes used here (n <= 128 agents, d <= a few dozen), and the
mixing loop skips zero weights so sparse one-peer matrices cost O(n d).
"""
import numpy as np


cdef void _grads(const double[:, :, ::1] A, const double[:, ::1] b, double mu,
                 const double[:, ::1] X, double[:, ::1] out,
                 double[::1] resid) noexcept nogil:
    cdef Py_ssize_t n = A.shape[0], m = A.shape[1], d = A.shape[2]
    cdef Py_ssize_t i, r, c
    cdef double s, t, u
    for i in range(n):
        for r in range(m):
            s = 0.0
            for c in range(d):
                s = s + A[i, r, c] * X[i, c]
            resid[r] = s - b[i, r]
        for c in range(d):
            t = X[i, c]
            u = 1.0 + t * t
            out[i, c] = mu * 2.0 * t / (u * u)
        for r in range(m):
            s = 2.0 * resid[r]
            for c in range(d):
                out[i, c] = out[i, c] + A[i, r, c] * s


cdef void _mix(const double[:, ::1] W, const double[:, ::1] V,
               double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = W.shape[0], d = V.shape[1]
    cdef Py_ssize_t i, j, c
    cdef double w
    for i in range(n):
        for c in range(d):
            out[i, c] = 0.0
        for j in range(n):
            w = W[j, i]
            if w != 0.0:
                for c in range(d):
                    out[i, c] = out[i, c] + w * V[j, c]


def local_gradients(A, b, double mu, X):
    cdef const double[:, :, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] b_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[:, ::1] X_ = np.ascontiguousarray(X, dtype=np.float64)
    out = np.empty((A_.shape[0], A_.shape[2]))
    resid = np.empty(A_.shape[1])
    cdef double[:, ::1] out_ = out
    cdef double[::1] resid_ = resid
    with nogil:
        _grads(A_, b_, mu, X_, out_, resid_)
    return out


def mix(W, V):
    cdef const double[:, ::1] W_ = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[:, ::1] V_ = np.ascontiguousarray(V, dtype=np.float64)
    out = np.empty((V_.shape[0], V_.shape[1]))
    cdef double[:, ::1] out_ = out
    with nogil:
        _mix(W_, V_, out_)
    return out


def gt_round(W, X, G, F_prev, A, b, double mu, double alpha, noise=None):
    cdef const double[:, ::1] W_ = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[:, ::1] X_ = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] G_ = np.ascontiguousarray(G, dtype=np.float64)
    cdef const double[:, ::1] Fp = np.ascontiguousarray(F_prev, dtype=np.float64)
    cdef const double[:, :, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] b_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = X_.shape[0], d = X_.shape[1], i, c
    cdef bint noisy = noise is not None
    cdef const double[:, ::1] S_
    if noisy:
        S_ = np.ascontiguousarray(noise, dtype=np.float64)
    else:
        S_ = np.zeros((1, 1))

    step = np.empty((n, d))
    X_new = np.empty((n, d))
    G_new = np.empty((n, d))
    T_new = np.empty((n, d))
    F_new = np.empty((n, d)) if noisy else T_new
    resid = np.empty(A_.shape[1])
    cdef double[:, ::1] st = step, xn = X_new, gn = G_new, tn = T_new, fn = F_new
    cdef double[::1] rs = resid

    with nogil:
        for i in range(n):
            for c in range(d):
                st[i, c] = X_[i, c] - alpha * G_[i, c]
        _mix(W_, st, xn)
        _grads(A_, b_, mu, xn, tn, rs)
        if noisy:
            for i in range(n):
                for c in range(d):
                    fn[i, c] = tn[i, c] + S_[i, c]
        _mix(W_, G_, gn)
        for i in range(n):
            for c in range(d):
                gn[i, c] = gn[i, c] + (fn[i, c] - Fp[i, c])
    return X_new, G_new, F_new, T_new


def dgd_round(W, X, F, A, b, double mu, double alpha, noise=None):
    cdef const double[:, ::1] W_ = np.ascontiguousarray(W, dtype=np.float64)
    cdef const double[:, ::1] X_ = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] F_ = np.ascontiguousarray(F, dtype=np.float64)
    cdef const double[:, :, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] b_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = X_.shape[0], d = X_.shape[1], i, c
    cdef bint noisy = noise is not None
    cdef const double[:, ::1] S_
    if noisy:
        S_ = np.ascontiguousarray(noise, dtype=np.float64)
    else:
        S_ = np.zeros((1, 1))

    step = np.empty((n, d))
    X_new = np.empty((n, d))
    T_new = np.empty((n, d))
    F_new = np.empty((n, d)) if noisy else T_new
    resid = np.empty(A_.shape[1])
    cdef double[:, ::1] st = step, xn = X_new, tn = T_new, fn = F_new
    cdef double[::1] rs = resid

    with nogil:
        for i in range(n):
            for c in range(d):
                st[i, c] = X_[i, c] - alpha * F_[i, c]
        _mix(W_, st, xn)
        _grads(A_, b_, mu, xn, tn, rs)
        if noisy:
            for i in range(n):
                for c in range(d):
                    fn[i, c] = tn[i, c] + S_[i, c]
    return X_new, F_new, T_new


cdef double _objective_grad(const double[:, :, ::1] A, const double[:, ::1] b,
                            double mu, const double[::1] x,
                            double[::1] grad) noexcept nogil:
    cdef Py_ssize_t n = A.shape[0], m = A.shape[1], d = A.shape[2]
    cdef Py_ssize_t i, r, c
    cdef double s, f = 0.0, reg = 0.0, t, u
    for c in range(d):
        grad[c] = 0.0
    for i in range(n):
        for r in range(m):
            s = 0.0
            for c in range(d):
                s = s + A[i, r, c] * x[c]
            s = s - b[i, r]
            f = f + s * s
            s = 2.0 * s
            for c in range(d):
                grad[c] = grad[c] + A[i, r, c] * s
    for c in range(d):
        t = x[c]
        u = 1.0 + t * t
        reg = reg + t * t / u
        grad[c] = grad[c] / n + mu * 2.0 * t / (u * u)
    return f / n + mu * reg


def objective_and_gradient(A, b, double mu, x):
    cdef const double[:, :, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] b_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[::1] x_ = np.ascontiguousarray(x, dtype=np.float64)
    grad = np.empty(A_.shape[2])
    cdef double[::1] g_ = grad
    cdef double f
    with nogil:
        f = _objective_grad(A_, b_, mu, x_, g_)
    return f, grad


def metrics_row(A, b, double mu, X, T):
    cdef const double[:, :, ::1] A_ = np.ascontiguousarray(A, dtype=np.float64)
    cdef const double[:, ::1] b_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[:, ::1] X_ = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] T_ = np.ascontiguousarray(T, dtype=np.float64)
    cdef Py_ssize_t n = X_.shape[0], d = X_.shape[1], i, c
    xbar = np.zeros(d)
    tbar = np.zeros(d)
    grad = np.empty(d)
    cdef double[::1] xb = xbar, tb = tbar, g_ = grad
    cdef double f, gm = 0.0, ga = 0.0, cons = 0.0, mx = 0.0, s, e
    with nogil:
        for i in range(n):
            for c in range(d):
                xb[c] = xb[c] + X_[i, c]
                tb[c] = tb[c] + T_[i, c]
        for c in range(d):
            xb[c] = xb[c] / n
            tb[c] = tb[c] / n
            gm = gm + tb[c] * tb[c]
        f = _objective_grad(A_, b_, mu, xb, g_)
        for c in range(d):
            ga = ga + g_[c] * g_[c]
        for i in range(n):
            s = 0.0
            for c in range(d):
                e = X_[i, c] - xb[c]
                cons = cons + e * e
                s = s + X_[i, c] * X_[i, c]
            if s > mx:
                mx = s
    return f, gm, ga, cons / n, mx
