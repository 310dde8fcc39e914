"""Synchronous-round gradient tracking (GT-FT / static GT) and DGD.

Stacked iterates are ``(n, d)`` arrays with one row per agent. A mixing
matrix ``W`` is applied on the receiver side, ``x_i <- sum_j W[j, i] x_j``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels, matkit
from .errors import DimensionError, DivergenceError
from .metrics import OPTIMIZE_COLUMNS, MetricsTrace
from .optim import STREAM_INIT, NoiseModel, Problem, philox_generator
from .topology import MixingMatrix, TopologySequence, static_sequence


class Algorithm(str, enum.Enum):
    GT_FT = "gt-ft"
    GT_STATIC = "gt-static"
    DGD = "dgd"


X0_MODES = ("zero", "gaussian", "shared-gaussian")


@dataclass
class AgentStates:
    x: np.ndarray  # x_i^(k)
    g: np.ndarray  # g_i^(k); unused by DGD
    last_sample: np.ndarray  # grad F_i(x_i^(k); xi_i^(k)), consumed by round k
    last_true: np.ndarray  # grad f_i(x_i^(k)), for metrics only
    round: int = 0


@dataclass
class RunConfig:
    algorithm: Algorithm | str
    topology: TopologySequence
    alpha: float
    iters: int
    sigma2: float = 0.0
    warmup: bool = False
    seed: int = 0
    x0_mode: str = "zero"
    stop_grad_sq: float | None = None
    track_identities: bool = False
    divergence_limit: float = 1e12

    def __post_init__(self):
        self.algorithm = Algorithm(self.algorithm)
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.iters < 1:
            raise ValueError("iters must be at least 1")
        if self.x0_mode not in X0_MODES:
            raise ValueError(f"x0_mode must be one of {X0_MODES}")

    @property
    def noise(self) -> NoiseModel:
        return NoiseModel(self.sigma2, self.seed)

    def effective_topology(self) -> TopologySequence:
        # static GT is the same stepper driven by a length-1 sequence
        if self.algorithm is Algorithm.GT_STATIC and self.topology.tau > 1:
            return static_sequence(self.topology)
        return self.topology


@dataclass(frozen=True)
class StepsizeTuning:
    L: float
    tau: int
    n: int
    T: int
    sigma2: float
    variant: str = "cor6"
    c0: float = field(init=False)
    c1: float = field(init=False)
    c2: float = field(init=False)

    def __post_init__(self):
        if self.variant not in ("cor5", "cor6"):
            raise ValueError("variant must be 'cor5' or 'cor6'")
        if min(self.L, self.tau, self.n, self.T) <= 0 or self.sigma2 < 0:
            raise ValueError("L, tau, n, T must be positive and sigma2 nonnegative")
        object.__setattr__(self, "c0", self.L**2 if self.variant == "cor5" else 1.0)
        object.__setattr__(self, "c1", self.L * self.sigma2 / self.n)
        object.__setattr__(self, "c2", self.tau**3 * self.L**2 * self.sigma2)


def tuned_stepsize(t: StepsizeTuning) -> float:
    """``min{(c0/(c1 T))^(1/2), (c0/(c2 T))^(1/3), 1/(2L), 1/(4 sqrt(3) tau^2 L)}``."""
    cands = [1.0 / (2.0 * t.L), 1.0 / (4.0 * math.sqrt(3.0) * t.tau**2 * t.L)]
    if t.c1 > 0:
        cands.append(math.sqrt(t.c0 / (t.c1 * t.T)))
    if t.c2 > 0:
        cands.append((t.c0 / (t.c2 * t.T)) ** (1.0 / 3.0))
    return min(cands)


def _weights(w) -> np.ndarray:
    return w.weights if isinstance(w, MixingMatrix) else np.asarray(w, dtype=np.float64)


def _initial_x(problem: Problem, config: RunConfig) -> np.ndarray:
    n, d = problem.n, problem.d
    if config.x0_mode == "zero":
        return np.zeros((n, d))
    rng = philox_generator(config.seed, STREAM_INIT)
    if config.x0_mode == "gaussian":
        return rng.standard_normal((n, d))
    return np.repeat(rng.standard_normal((1, d)), n, axis=0)


def _states_at(problem: Problem, config: RunConfig, X: np.ndarray, round_k: int, g=None) -> AgentStates:
    T = kernels.local_gradients(problem.A, problem.b, problem.mu, X)
    s = config.noise.block(round_k, problem.n, problem.d)
    F = T if s is None else T + s
    return AgentStates(X, F.copy() if g is None else g, F, T, round_k)


def init_states(problem: Problem, config: RunConfig) -> AgentStates:
    """Round-0 state: ``g_i`` set to (and cached as) the round-0 stochastic gradient."""
    return _states_at(problem, config, _initial_x(problem, config), 0)


def _check_w(W: np.ndarray, states: AgentStates) -> None:
    n = states.x.shape[0]
    if W.shape != (n, n):
        raise DimensionError(f"mixing matrix {W.shape} does not match {n} agents")


def gt_step(states: AgentStates, w, problem: Problem, config: RunConfig) -> AgentStates:
    W = _weights(w)
    _check_w(W, states)
    k1 = states.round + 1
    noise = config.noise.block(k1, problem.n, problem.d)
    X, G, F, T = kernels.gt_round(W, states.x, states.g, states.last_sample,
                                  problem.A, problem.b, problem.mu, config.alpha, noise)
    return AgentStates(X, G, F, T, k1)


def dgd_step(states: AgentStates, w, problem: Problem, config: RunConfig) -> AgentStates:
    W = _weights(w)
    _check_w(W, states)
    k1 = states.round + 1
    noise = config.noise.block(k1, problem.n, problem.d)
    X, F, T = kernels.dgd_round(W, states.x, states.last_sample,
                                problem.A, problem.b, problem.mu, config.alpha, noise)
    return AgentStates(X, states.g, F, T, k1)


def _share_initial(states: AgentStates, problem: Problem, config: RunConfig) -> AgentStates:
    if np.all(states.x == states.x[0]):
        return states
    xbar = states.x.mean(axis=0)
    return _states_at(problem, config, np.repeat(xbar[None, :], problem.n, axis=0), 0)


def _mixing_for_round(topology: TopologySequence, k: int, warmup: bool) -> np.ndarray:
    if warmup and k < topology.tau:
        return matkit.averaging_matrix(topology.n)
    return topology.at_round(k)


def allreduce_warmup(states: AgentStates, problem: Problem, config: RunConfig) -> AgentStates:
    """Share ``x^(0)`` across agents, then run the first period with ``J_n`` mixing.

    Returns the state at round ``tau``; every iterate up to it is in consensus.
    """
    if states.round != 0:
        raise ValueError("warm-up starts from round 0")
    topo = config.effective_topology()
    step = dgd_step if config.algorithm is Algorithm.DGD else gt_step
    states = _share_initial(states, problem, config)
    for k in range(topo.tau):
        states = step(states, _mixing_for_round(topo, k, True), problem, config)
    return states


def single_line_iterate(mixing, x0, samples, alpha: float) -> np.ndarray:
    """Closed-form tracking iterate after ``k = len(samples)`` rounds.

    ``mixing[j]`` is the matrix used at round ``j`` and ``samples[j]`` the
    stochastic gradient stack at round ``j``. Computes
    ``M(k-1..0) x0 - alpha * sum_j (k - j) M(k-1..j) (F_j - F_{j-1})`` with
    ``F_{-1} = 0`` and ``M(t..j)`` the receiver-side product of rounds ``j..t``.
    """
    k = len(samples)
    ops = [np.asarray(_weights(w)).T for w in mixing[:k]]

    def prod(j):
        out = np.eye(ops[0].shape[0])
        for i in range(j, k):
            out = ops[i] @ out
        return out

    x = prod(0) @ x0
    prev = np.zeros_like(samples[0])
    for j in range(k):
        x = x - alpha * (k - j) * (prod(j) @ (samples[j] - prev))
        prev = samples[j]
    return x


def run(problem: Problem, config: RunConfig) -> MetricsTrace:
    """Initialise, optionally warm up, and iterate ``config.iters`` rounds.

    Row ``k`` of the trace describes the state at round ``k`` (rows ``0..iters``).
    Warm-up rounds count toward ``iters``.
    """
    topo = config.effective_topology()
    if topo.n != problem.n:
        raise DimensionError(f"topology has {topo.n} agents, problem has {problem.n}")
    step = dgd_step if config.algorithm is Algorithm.DGD else gt_step
    tracking = config.track_identities and config.algorithm is not Algorithm.DGD

    states = init_states(problem, config)
    if config.warmup:
        states = _share_initial(states, problem, config)

    rows = np.empty((config.iters + 1, len(OPTIMIZE_COLUMNS)))
    track_dev, centroid_dev = [], []
    limit_sq = config.divergence_limit**2
    stopped_at = None
    A, b, mu = problem.A, problem.b, problem.mu

    k = 0
    while True:
        f, gm, ga, cons, mx = kernels.metrics_row(A, b, mu, states.x, states.last_true)
        if not (mx <= limit_sq and math.isfinite(f)):
            raise DivergenceError(
                f"iterate norm exceeded {config.divergence_limit:g} at round {k} "
                f"(alpha={config.alpha:g}); reduce the stepsize"
            )
        rows[k] = (k, f, gm, ga, cons)
        if tracking:
            track_dev.append(float(np.max(np.abs(states.g.mean(axis=0) - states.last_sample.mean(axis=0)))))
        if config.stop_grad_sq is not None and ga <= config.stop_grad_sq:
            stopped_at = k
            break
        if k == config.iters:
            break
        W = _mixing_for_round(topo, k, config.warmup)
        new = step(states, W, problem, config)
        if tracking:
            pred = states.x.mean(axis=0) - config.alpha * states.g.mean(axis=0)
            centroid_dev.append(float(np.max(np.abs(new.x.mean(axis=0) - pred))))
        states = new
        k += 1

    trace = MetricsTrace(OPTIMIZE_COLUMNS, rows[: k + 1])
    trace.extras.update(
        algorithm=config.algorithm.value,
        family=topo.family.value,
        n=topo.n,
        tau=topo.tau,
        alpha=config.alpha,
        sigma2=config.sigma2,
        stopped_at=stopped_at,
        final_states=states,
    )
    if tracking:
        trace.extras["tracking_dev"] = np.array(track_dev)
        trace.extras["centroid_dev"] = np.array(centroid_dev)
    return trace


def replace_config(config: RunConfig, **changes) -> RunConfig:
    return replace(config, **changes)
