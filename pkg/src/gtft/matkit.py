"""Dense matrix helpers for building and checking mixing matrices.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. Indices are
0-based throughout.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from functools import reduce
from pathlib import Path

import numpy as np

from .errors import ConvergenceError, DimensionError, SizeLimitError

MAX_SIZE = 4096
"""Largest row/column count any constructor here will produce."""


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def _check_size(*dims: int) -> None:
    for k in dims:
        if k > MAX_SIZE:
            raise SizeLimitError(f"dimension {k} exceeds MAX_SIZE={MAX_SIZE}")


def averaging_matrix(n: int) -> np.ndarray:
    """The exact-averaging matrix ``J_n = (1/n) 1 1^T``."""
    _check_size(n)
    return np.full((n, n), 1.0 / n)


def kron(a, b) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` of the result is ``a[i, j] * b``."""
    a, b = _as_matrix(a), _as_matrix(b)
    _check_size(a.shape[0] * b.shape[0], a.shape[1] * b.shape[1])
    return np.kron(a, b)


def kron_all(factors) -> np.ndarray:
    """Left-to-right Kronecker product ``F[0] (x) F[1] (x) ...``."""
    return reduce(kron, factors)


def matmul(a, b) -> np.ndarray:
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


@dataclass(frozen=True)
class PermutationMap:
    """Bijection on ``{0..size-1}``; ``map[i]`` is where source index ``i`` goes.

    As a matrix ``P`` this is ``P[map[i], i] = 1`` so that ``P @ e_i = e_map[i]``.
    """

    map: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.map, dtype=np.int64)
        if m.ndim != 1 or not np.array_equal(np.sort(m), np.arange(m.size)):
            raise ValueError("map is not a permutation of 0..size-1")
        object.__setattr__(self, "map", m)

    @property
    def size(self) -> int:
        return int(self.map.size)

    def as_matrix(self) -> np.ndarray:
        P = np.zeros((self.size, self.size))
        P[self.map, np.arange(self.size)] = 1.0
        return P

    def inverse(self) -> PermutationMap:
        inv = np.empty_like(self.map)
        inv[self.map] = np.arange(self.size)
        return PermutationMap(inv)

    def compose(self, other: PermutationMap) -> PermutationMap:
        """``self`` after ``other`` (matrix product ``P_self @ P_other``)."""
        return PermutationMap(self.map[other.map])

    def power(self, k: int) -> PermutationMap:
        if k < 0:
            return self.inverse().power(-k)
        out = PermutationMap(np.arange(self.size))
        for _ in range(k):
            out = self.compose(out)
        return out

    def apply(self, v) -> np.ndarray:
        """Permute a vector (or the rows of a matrix): ``P @ v``."""
        v = np.asarray(v)
        out = np.empty_like(v)
        out[self.map] = v
        return out

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.map, np.arange(self.size)))


def perfect_shuffle(p: int, tau: int) -> PermutationMap:
    """Perfect shuffle ``P_s`` on ``p**tau`` points.

    ``P_s (a_{tau-1} (x) ... (x) a_0) = a_0 (x) a_{tau-1} (x) ... (x) a_1``: the
    lowest base-``p`` digit of an index becomes the highest one.
    """
    if p < 2 or tau < 1:
        raise ValueError("perfect_shuffle needs p >= 2 and tau >= 1")
    n = p**tau
    _check_size(n)
    i = np.arange(n)
    return PermutationMap((i % p) * p ** (tau - 1) + i // p)


def doubly_stochastic_residual(w) -> tuple[float, float, float]:
    """Return ``(row_residual, col_residual, negativity)`` of a square matrix."""
    w = _as_matrix(w)
    if w.shape[0] != w.shape[1]:
        raise DimensionError(f"expected a square matrix, got {w.shape}")
    row = float(np.max(np.abs(w.sum(axis=1) - 1.0)))
    col = float(np.max(np.abs(w.sum(axis=0) - 1.0)))
    neg = max(0.0, -float(w.min()))
    return row, col, neg


def ordered_product(seq) -> np.ndarray:
    """``seq[-1] @ ... @ seq[1] @ seq[0]``: the first matrix is applied first."""
    mats = [_as_matrix(w) for w in seq]
    if not mats:
        raise ValueError("empty matrix sequence")
    n = mats[0].shape[0]
    for w in mats:
        if w.shape != (n, n):
            raise DimensionError(f"sequence mixes shapes {mats[0].shape} and {w.shape}")
    out = mats[0]
    for w in mats[1:]:
        out = w @ out
    return out


def consensus_product_residual(seq) -> float:
    """Max-norm distance of the ordered product from ``J_n``."""
    prod = ordered_product(seq)
    return float(np.max(np.abs(prod - averaging_matrix(prod.shape[0]))))


def residual_form_norm(seq) -> float:
    """Max-norm of ``(W_last - J) ... (W_0 - J)``; zero iff the product is ``J``
    (for doubly stochastic factors)."""
    mats = [_as_matrix(w) for w in seq]
    J = averaging_matrix(mats[0].shape[0])
    return float(np.max(np.abs(ordered_product([w - J for w in mats]))))


def _power_seed(n: int) -> np.ndarray:
    # Alternating signs alone are an exact eigenvector of every circulant and
    # can stall; the irrational ramp breaks that symmetry deterministically.
    i = np.arange(n)
    return np.where(i % 2 == 0, 1.0, -1.0) * (1.0 + np.modf(i * 0.6180339887498949)[0])


def power_iteration_sym(M, tol: float = 1e-12, max_iters: int = 10_000, deflate=None) -> float:
    """Largest eigenvalue of a symmetric positive semidefinite matrix.

    ``deflate`` optionally names a unit vector to project out each step.
    Stops when the Rayleigh quotient changes by at most ``tol`` relative.
    """
    M = _as_matrix(M)
    n = M.shape[0]
    v = _power_seed(n)
    if deflate is not None:
        v = v - deflate * (deflate @ v)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    lam = float(v @ M @ v)
    for _ in range(max_iters):
        u = M @ v
        if deflate is not None:
            u = u - deflate * (deflate @ u)
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = u / nu
        new = float(v @ M @ v)
        if abs(new - lam) <= tol * max(abs(new), np.finfo(float).tiny):
            return new
        lam = new
    raise ConvergenceError(f"power iteration did not converge in {max_iters} iterations")


def spectral_deviation(w, tol: float = 1e-12, max_iters: int = 10_000) -> float:
    """``rho = ||W - J_n||_2`` by power iteration on ``(W - J)^T (W - J)``."""
    w = _as_matrix(w)
    n = w.shape[0]
    if w.shape[1] != n:
        raise DimensionError(f"expected a square matrix, got {w.shape}")
    what = w - averaging_matrix(n)
    if not np.any(np.abs(what) > 1e-15):
        return 0.0
    ones = np.full(n, 1.0 / np.sqrt(n))
    lam = power_iteration_sym(what.T @ what, tol=tol, max_iters=max_iters, deflate=ones)
    return float(np.sqrt(max(lam, 0.0)))


def format_matrix_csv(w) -> str:
    w = np.atleast_2d(np.asarray(w, dtype=np.float64))
    return "".join(",".join(f"{x:.17g}" for x in row) + "\n" for row in w)


def write_matrix_csv(w, path) -> None:
    """One row per line, 17 significant digits, comma-separated, no header."""
    Path(path).write_text(format_matrix_csv(w))


def read_matrix_csv(source) -> np.ndarray:
    text = Path(source).read_text() if not isinstance(source, io.StringIO) else source.getvalue()
    rows = [line for line in text.splitlines() if line.strip() and not line.startswith("#")]
    return np.array([[float(x) for x in line.split(",")] for line in rows])
