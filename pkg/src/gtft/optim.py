"""Regularized least-squares benchmark and its gradient oracles.

Agent ``i`` holds ``f_i(x) = ||A_i x - b_i||^2 + mu * sum_j x_j^2 / (1 + x_j^2)``,
so the network average ``f = (1/n) sum_i f_i`` is the benchmark objective.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels, matkit
from .errors import DimensionError

DEFAULT_MU = 0.1

# Purpose tags kept in the top counter word so streams never overlap.
STREAM_GRADIENT_NOISE = 0
STREAM_INIT = 1
STREAM_CONSENSUS_INIT = 2


def philox_generator(root: int, purpose: int, index: int = 0) -> np.random.Generator:
    """Counter-based generator addressed by ``(root, purpose, index)``.

    Draws advance the low counter words only, so distinct ``index`` values give
    disjoint streams and the result does not depend on evaluation order.
    """
    bitgen = np.random.Philox(key=int(root) % 2**128, counter=[0, 0, int(index), int(purpose)])
    return np.random.Generator(bitgen)


@dataclass(frozen=True)
class Problem:
    A: np.ndarray  # (n, m, d)
    b: np.ndarray  # (n, m)
    mu: float = DEFAULT_MU
    delta: float = 0.0
    seed: int | None = None

    def __post_init__(self):
        A = np.ascontiguousarray(self.A, dtype=np.float64)
        b = np.ascontiguousarray(self.b, dtype=np.float64)
        if A.ndim != 3 or b.shape != A.shape[:2]:
            raise DimensionError(f"inconsistent shapes A{A.shape} b{b.shape}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("problem data must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    @property
    def d(self) -> int:
        return self.A.shape[2]


def generate_problem(n: int, m: int, d: int, delta: float, mu: float = DEFAULT_MU, seed: int = 0) -> Problem:
    """Gaussian instance: ``b_i = A_i x~_i + delta z_i`` with all entries N(0, 1)."""
    if min(n, m, d) < 1:
        raise ValueError("n, m and d must be positive")
    if delta < 0 or mu < 0:
        raise ValueError("delta and mu must be nonnegative")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, m, d))
    x_tilde = rng.standard_normal((n, d))
    z = rng.standard_normal((n, m))
    b = np.einsum("imd,id->im", A, x_tilde) + delta * z
    return Problem(A, b, mu=mu, delta=delta, seed=seed)


def _check_x(problem: Problem, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (problem.d,):
        raise DimensionError(f"expected a vector of length {problem.d}, got shape {x.shape}")
    return x


def regularizer(x) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x * x / (1.0 + x * x)))


def local_objective(problem: Problem, agent: int, x) -> float:
    x = _check_x(problem, x)
    r = problem.A[agent] @ x - problem.b[agent]
    return float(r @ r) + problem.mu * regularizer(x)


def local_gradient(problem: Problem, agent: int, x) -> np.ndarray:
    x = _check_x(problem, x)
    A, b = problem.A[agent], problem.b[agent]
    u = 1.0 + x * x
    return 2.0 * A.T @ (A @ x - b) + problem.mu * 2.0 * x / (u * u)


def global_objective(problem: Problem, x) -> float:
    return float(np.mean([local_objective(problem, i, x) for i in range(problem.n)]))


def global_gradient(problem: Problem, x) -> np.ndarray:
    return np.mean([local_gradient(problem, i, x) for i in range(problem.n)], axis=0)


def local_gradients(problem: Problem, X) -> np.ndarray:
    """All agents at once: row ``i`` is the gradient of ``f_i`` at ``X[i]``."""
    X = np.asarray(X, dtype=np.float64)
    if X.shape != (problem.n, problem.d):
        raise DimensionError(f"expected shape {(problem.n, problem.d)}, got {X.shape}")
    return kernels.local_gradients(problem.A, problem.b, problem.mu, X)


@dataclass(frozen=True)
class NoiseModel:
    """Additive Gaussian gradient noise ``N(0, sigma2 I)``."""

    sigma2: float = 0.0
    stream: int = 0

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")

    def block(self, round_k: int, n: int, d: int) -> np.ndarray | None:
        """Noise for every agent at one round; ``None`` when noiseless.

        Row ``i`` is agent ``i``'s draw, a pure function of
        ``(stream, round_k, i)``.
        """
        if self.sigma2 == 0.0:
            return None
        rng = philox_generator(self.stream, STREAM_GRADIENT_NOISE, round_k)
        return np.sqrt(self.sigma2) * rng.standard_normal((n, d))


@dataclass(frozen=True)
class GradientSample:
    agent: int
    iterate: np.ndarray
    value: np.ndarray


def stochastic_gradient(problem: Problem, agent: int, x, noise: NoiseModel, round_k: int) -> GradientSample:
    g = local_gradient(problem, agent, x)
    s = noise.block(round_k, problem.n, problem.d)
    if s is not None:
        g = g + s[agent]
    return GradientSample(agent, np.array(x, dtype=np.float64), g)


def consensus_error(states, reference) -> float:
    """``(1/n) sum_i ||x_i - reference||^2``."""
    X = np.atleast_2d(np.asarray(states, dtype=np.float64))
    ref = np.asarray(reference, dtype=np.float64)
    if X.shape[1] != ref.shape[-1]:
        raise DimensionError("states and reference have different lengths")
    dev = X - ref
    # exactly rounded outer sum, so agent order cannot change the result
    return math.fsum(np.einsum("ij,ij->i", dev, dev)) / X.shape[0]


def estimate_smoothness(problem: Problem, tol: float = 1e-10, max_iters: int = 100_000) -> float:
    """Gradient Lipschitz constant ``2 max_i lambda_max(A_i^T A_i) + 2 mu``.

    The regularizer's second derivative is bounded by 2 in absolute value
    (attained at 0).
    """
    lam = max(
        matkit.power_iteration_sym(problem.A[i].T @ problem.A[i], tol=tol, max_iters=max_iters)
        for i in range(problem.n)
    )
    return 2.0 * lam + 2.0 * problem.mu


def dump_problem(problem: Problem, path) -> None:
    """Header ``n,m,d,mu,delta,seed`` and values, then per agent ``A_i`` rows and
    ``b_i`` as a single row, each block introduced by ``# agent i``."""
    lines = ["n,m,d,mu,delta,seed\n",
             f"{problem.n},{problem.m},{problem.d},{problem.mu:.17g},{problem.delta:.17g},{problem.seed}\n"]
    for i in range(problem.n):
        lines.append(f"# agent {i}\n")
        lines.append(matkit.format_matrix_csv(problem.A[i]))
        lines.append(matkit.format_matrix_csv(problem.b[i][None, :]))
    Path(path).write_text("".join(lines))


def load_problem(path) -> Problem:
    text = Path(path).read_text().splitlines()
    n, m, d = (int(v) for v in text[1].split(",")[:3])
    mu, delta = (float(v) for v in text[1].split(",")[3:5])
    seed_txt = text[1].split(",")[5]
    rows = [ln for ln in text[2:] if ln and not ln.startswith("#")]
    A = np.empty((n, m, d))
    b = np.empty((n, m))
    per = m + 1
    for i in range(n):
        block = rows[i * per:(i + 1) * per]
        A[i] = [[float(v) for v in ln.split(",")] for ln in block[:m]]
        b[i] = [float(v) for v in block[m].split(",")]
    return Problem(A, b, mu=mu, delta=delta, seed=None if seed_txt == "None" else int(seed_txt))
