"""Numpy implementation of the per-round kernels.

This is the fallback used when the compiled ``_ckernels`` module is not
available. Every function here has a twin with the same signature in
``_ckernels.pyx``; the test-suite checks that both agree.

Array conventions: ``W`` is ``(n, n)``, agent-stacked iterates are ``(n, d)``,
``A`` is ``(n, m, d)`` and ``b`` is ``(n, m)``. Mixing uses the receiver
convention ``out[i] = sum_j W[j, i] * V[j]``.
"""
import numpy as np


def local_gradients(A, b, mu, X):
    resid = np.einsum("imd,id->im", A, X) - b
    reg = mu * 2.0 * X / (1.0 + X * X) ** 2
    return reg + 2.0 * np.einsum("imd,im->id", A, resid)


def mix(W, V):
    return W.T @ V


def gt_round(W, X, G, F_prev, A, b, mu, alpha, noise=None):
    """One tracking round. Returns ``(X_new, G_new, F_new, T_new)``.

    ``F_new`` is the sampled gradient at ``X_new`` and ``T_new`` the true one.
    """
    X_new = W.T @ (X - alpha * G)
    T_new = local_gradients(A, b, mu, X_new)
    F_new = T_new if noise is None else T_new + noise
    # difference first: consecutive samples nearly agree, so it is exact near convergence
    G_new = W.T @ G + (F_new - F_prev)
    return X_new, G_new, F_new, T_new


def dgd_round(W, X, F, A, b, mu, alpha, noise=None):
    """One adapt-then-combine DGD round. Returns ``(X_new, F_new, T_new)``."""
    X_new = W.T @ (X - alpha * F)
    T_new = local_gradients(A, b, mu, X_new)
    F_new = T_new if noise is None else T_new + noise
    return X_new, F_new, T_new


def objective_and_gradient(A, b, mu, x):
    """Network-average objective and gradient evaluated at one point ``x``."""
    n = A.shape[0]
    resid = A @ x - b
    u = 1.0 + x * x
    f = float(np.sum(resid * resid)) / n + mu * float(np.sum(x * x / u))
    grad = 2.0 * np.einsum("imd,im->d", A, resid) / n + mu * 2.0 * x / (u * u)
    return f, grad


def metrics_row(A, b, mu, X, T):
    """Return ``(objective, grad_mean_sq, grad_at_mean_sq, consensus_err, max_norm_sq)``.

    ``T`` holds the true local gradients at the rows of ``X``.
    """
    xbar = X.mean(axis=0)
    f, g = objective_and_gradient(A, b, mu, xbar)
    tbar = T.mean(axis=0)
    dev = X - xbar
    row_sq = np.einsum("id,id->i", X, X)
    return (
        f,
        float(tbar @ tbar),
        float(g @ g),
        float(np.sum(dev * dev)) / X.shape[0],
        float(row_sq.max()),
    )
