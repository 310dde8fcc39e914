"""Graph sequences with the finite-time consensus property.

Four dynamic families are built here (one-peer exponential, one-peer
hyper-cube, p-peer hyper-cuboid, de Bruijn), along with their static
counterparts and the fully connected graph. Matrices are row-indexed by the
sender: ``w[i, j]`` weights what agent ``j`` receives from agent ``i``.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import matkit
from .errors import TopologyError


class GraphFamily(str, enum.Enum):
    ONE_PEER_EXPONENTIAL = "one-peer-exp"
    ONE_PEER_HYPERCUBE = "one-peer-hypercube"
    P_PEER_HYPERCUBOID = "p-peer-hypercuboid"
    DE_BRUIJN = "de-bruijn"
    STATIC_EXPONENTIAL = "static-exp"
    STATIC_HYPERCUBOID = "static-hypercuboid"
    FULLY_CONNECTED = "fully-connected"

    @classmethod
    def parse(cls, name: str | GraphFamily) -> GraphFamily:
        try:
            return cls(name)
        except ValueError:
            valid = ", ".join(f.value for f in cls)
            raise TopologyError(f"unknown family {name!r} (expected one of: {valid})") from None

    @property
    def is_dynamic(self) -> bool:
        return self in _DYNAMIC


_DYNAMIC = {
    GraphFamily.ONE_PEER_EXPONENTIAL,
    GraphFamily.ONE_PEER_HYPERCUBE,
    GraphFamily.P_PEER_HYPERCUBOID,
}

# n = 2**tau hyper-cubes are hyper-cuboids, so they share the static family.
STATIC_COUNTERPART = {
    GraphFamily.ONE_PEER_EXPONENTIAL: GraphFamily.STATIC_EXPONENTIAL,
    GraphFamily.ONE_PEER_HYPERCUBE: GraphFamily.STATIC_HYPERCUBOID,
    GraphFamily.P_PEER_HYPERCUBOID: GraphFamily.STATIC_HYPERCUBOID,
}


@dataclass(frozen=True)
class MixingMatrix:
    weights: np.ndarray
    index_l: int = 0
    family: GraphFamily | None = None

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def max_degree(self) -> int:
        """Largest number of non-self out-neighbors over all nodes."""
        off = self.weights != 0.0
        np.fill_diagonal(off, False)
        return int(off.sum(axis=1).max())


@dataclass(frozen=True)
class TopologySequence:
    n: int
    tau: int
    matrices: tuple[MixingMatrix, ...]
    family: GraphFamily
    ftc_claimed: bool
    base: int | None = None  # de Bruijn only

    def __post_init__(self):
        if len(self.matrices) != self.tau:
            raise ValueError("number of matrices must equal tau")

    def weights(self) -> list[np.ndarray]:
        return [m.weights for m in self.matrices]

    def at_round(self, k: int) -> np.ndarray:
        return self.matrices[k % self.tau].weights

    @property
    def max_degree(self) -> int:
        return max(m.max_degree for m in self.matrices)


@dataclass(frozen=True)
class MultiBaseCode:
    """Mixed-radix digits; ``bases`` and ``digits`` run from ``p_{tau-1}`` down to ``p_0``."""

    bases: tuple[int, ...]
    digits: tuple[int, ...] = field(default=())

    def __str__(self):
        return " x ".join(f"{{{d}}}_{p}" for d, p in zip(self.digits, self.bases))


# ---------------------------------------------------------------- integers


def prime_factorize(n: int) -> list[int]:
    """Prime factors of ``n`` with multiplicity, ascending."""
    if n < 2:
        raise ValueError("prime_factorize needs n >= 2")
    out, q = [], 2
    while q * q <= n:
        while n % q == 0:
            out.append(q)
            n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


def cuboid_bases(n: int) -> tuple[int, ...]:
    """Bases ``(p_{tau-1}, ..., p_0)``: ascending, so the largest prime is ``p_0``."""
    return tuple(prime_factorize(n))


def multibase_encode(i: int, bases) -> MultiBaseCode:
    bases = tuple(int(p) for p in bases)
    if not 0 <= i < math.prod(bases):
        raise ValueError(f"{i} is out of range for bases {bases}")
    digits = []
    for p in reversed(bases):
        digits.append(i % p)
        i //= p
    return MultiBaseCode(bases, tuple(reversed(digits)))


def multibase_decode(code: MultiBaseCode) -> int:
    i = 0
    for d, p in zip(code.digits, code.bases):
        if not 0 <= d < p:
            raise ValueError(f"digit {d} invalid for base {p}")
        i = i * p + d
    return i


def _digit_table(n: int, bases) -> np.ndarray:
    """``(n, tau)`` table; column ``r`` holds the ``p_r`` digit of each index."""
    idx = np.arange(n)
    cols = []
    for p in reversed(bases):
        cols.append(idx % p)
        idx = idx // p
    return np.stack(cols, axis=1)


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def _ceil_log2(n: int) -> int:
    return (n - 1).bit_length()


def debruijn_base(n: int) -> tuple[int, int]:
    """Smallest ``p >= 2`` with ``n == p**tau``; returns ``(p, tau)``."""
    if n < 2:
        raise TopologyError("de Bruijn graphs need n >= 2")
    for p in range(2, n + 1):
        tau, m = 0, n
        while m % p == 0:
            m //= p
            tau += 1
        if m == 1:
            return p, tau
    raise AssertionError("unreachable")


def _check_n(n: int) -> None:
    if n < 2:
        raise TopologyError("at least two agents are required")
    matkit._check_size(n)


# ---------------------------------------------------------------- families


def one_peer_exponential(n: int, l: int) -> MixingMatrix:
    """One-peer exponential graph: self weight 1/2, and 1/2 on ``i -> i + 2**(l mod tau)``."""
    _check_n(n)
    tau = _ceil_log2(n)
    hop = 2 ** (l % tau)
    W = np.zeros((n, n))
    i = np.arange(n)
    W[i, i] = 0.5
    W[i, (i + hop) % n] += 0.5
    return MixingMatrix(W, l, GraphFamily.ONE_PEER_EXPONENTIAL)


def one_peer_hypercube(n: int, l: int) -> MixingMatrix:
    _check_n(n)
    if not _is_power_of_two(n):
        raise TopologyError(f"one-peer hyper-cube needs n a power of 2, got {n}")
    tau = _ceil_log2(n)
    i = np.arange(n)
    W = np.zeros((n, n))
    W[i, i] = 0.5
    W[i, i ^ (1 << (l % tau))] = 0.5
    return MixingMatrix(W, l, GraphFamily.ONE_PEER_HYPERCUBE)


def _cuboid_factor(p: int, active: bool) -> np.ndarray:
    return np.full((p, p), 1.0 / p) if active else np.eye(p)


def p_peer_hypercuboid(n: int, l: int) -> MixingMatrix:
    """Hyper-cuboid matrix via ``W(p_{tau-1}) (x) ... (x) W(p_0)``.

    The factor for ``p_r`` is ``J_{p_r}`` when ``r == l mod tau`` and the identity
    otherwise.
    """
    _check_n(n)
    bases = cuboid_bases(n)
    tau = len(bases)
    r = l % tau
    # bases[0] is p_{tau-1}, so position k in the tuple is r == tau-1-k
    factors = [_cuboid_factor(p, tau - 1 - k == r) for k, p in enumerate(bases)]
    return MixingMatrix(matkit.kron_all(factors), l, GraphFamily.P_PEER_HYPERCUBOID)


def p_peer_hypercuboid_elementwise(n: int, l: int) -> MixingMatrix:
    """Same matrix as :func:`p_peer_hypercuboid`, built entry by entry from the
    multi-base digit comparison. Kept as an independent cross-check."""
    _check_n(n)
    bases = cuboid_bases(n)
    tau = len(bases)
    r = l % tau
    digits = _digit_table(n, bases)
    others = [c for c in range(tau) if c != r]
    same = np.ones((n, n), dtype=bool)
    for c in others:
        same &= digits[:, c][:, None] == digits[:, c][None, :]
    W = np.where(same, 1.0 / bases[tau - 1 - r], 0.0)
    return MixingMatrix(W, l, GraphFamily.P_PEER_HYPERCUBOID)


def de_bruijn(p: int, tau: int) -> MixingMatrix:
    """De Bruijn matrix on ``p**tau`` nodes: ``w[i, j] = 1/p`` iff the low
    ``tau-1`` digits of ``i`` equal the high ``tau-1`` digits of ``j``."""
    if p < 2 or tau < 1:
        raise TopologyError("de Bruijn graphs need p >= 2 and tau >= 1")
    n = p**tau
    _check_n(n)
    i = np.arange(n)
    low = i % p ** (tau - 1)
    high = i // p
    W = np.where(low[:, None] == high[None, :], 1.0 / p, 0.0)
    return MixingMatrix(W, 0, GraphFamily.DE_BRUIJN)


def de_bruijn_kronecker(p: int, tau: int) -> np.ndarray:
    """De Bruijn matrix from its product form ``(J_p (x) I ... (x) I) P_s``."""
    n = p**tau
    JI = matkit.kron(np.full((p, p), 1.0 / p), np.eye(p ** (tau - 1)))
    return matkit.matmul(JI, matkit.perfect_shuffle(p, tau).as_matrix())


_GENERATORS = {
    GraphFamily.ONE_PEER_EXPONENTIAL: one_peer_exponential,
    GraphFamily.ONE_PEER_HYPERCUBE: one_peer_hypercube,
    GraphFamily.P_PEER_HYPERCUBOID: p_peer_hypercuboid,
}


def period_length(family: GraphFamily, n: int) -> int:
    family = GraphFamily.parse(family)
    if family in (GraphFamily.ONE_PEER_EXPONENTIAL, GraphFamily.ONE_PEER_HYPERCUBE):
        return _ceil_log2(n)
    if family is GraphFamily.P_PEER_HYPERCUBOID:
        return len(prime_factorize(n))
    if family is GraphFamily.DE_BRUIJN:
        return debruijn_base(n)[1]
    return 1


def static_variant(family: GraphFamily, n: int, weighting: str = "uniform") -> MixingMatrix:
    """Single matrix supported on the union of one period's edge sets plus self-loops.

    ``weighting="uniform"`` puts weight ``1/(deg + 1)`` on every edge and
    self-loop; the union graphs of all dynamic families are regular, so this is
    doubly stochastic. ``weighting="mean"`` averages the period instead.
    """
    family = GraphFamily.parse(family)
    if family not in _GENERATORS:
        raise TopologyError(f"{family.value} has no static variant (not a dynamic family)")
    gen = _GENERATORS[family]
    tau = period_length(family, n)
    mats = [gen(n, l).weights for l in range(tau)]
    if weighting == "mean":
        W = sum(mats) / tau
    elif weighting == "uniform":
        support = np.zeros((n, n), dtype=bool)
        for w in mats:
            support |= w != 0.0
        np.fill_diagonal(support, True)
        deg = support.sum(axis=1)
        if np.any(deg != deg[0]) or np.any(support.sum(axis=0) != deg[0]):
            raise TopologyError("edge union is not regular; use weighting='mean'")
        W = support / float(deg[0])
    else:
        raise ValueError(f"unknown weighting {weighting!r}")
    return MixingMatrix(_settle_diagonal(W), 0, STATIC_COUNTERPART[family])


def _settle_diagonal(W: np.ndarray) -> np.ndarray:
    """Reset each self weight to ``1 - sum(off-diagonal row)``.

    Weights like 1/5 are inexact, so rows of a rounded matrix can sum to
    ``1 +- ulp``; that bias shifts the network mean every round. The union
    graphs here are regular and symmetric in degree, so fixing rows fixes
    columns too.
    """
    W = W.copy()
    off = W.copy()
    np.fill_diagonal(off, 0.0)
    np.fill_diagonal(W, [1.0 - math.fsum(row) for row in off])
    return W


def _static_source(family: GraphFamily) -> GraphFamily:
    if family is GraphFamily.STATIC_EXPONENTIAL:
        return GraphFamily.ONE_PEER_EXPONENTIAL
    return GraphFamily.P_PEER_HYPERCUBOID


def build_sequence(family, n: int, p: int | None = None, static_weighting: str = "uniform") -> TopologySequence:
    """Build one period of the named family for ``n`` agents.

    ``p`` selects the de Bruijn base (default: the smallest base with
    ``n == p**tau``).
    """
    family = GraphFamily.parse(family)
    _check_n(n)
    if family in (GraphFamily.ONE_PEER_EXPONENTIAL, GraphFamily.ONE_PEER_HYPERCUBE, GraphFamily.P_PEER_HYPERCUBOID):
        tau = period_length(family, n)
        gen = _GENERATORS[family]
        mats = tuple(gen(n, l) for l in range(tau))
        claimed = family is GraphFamily.P_PEER_HYPERCUBOID or _is_power_of_two(n)
        return TopologySequence(n, tau, mats, family, claimed)
    if family is GraphFamily.DE_BRUIJN:
        if p is None:
            p, tau = debruijn_base(n)
        else:
            tau = round(math.log(n, p))
            if p < 2 or p**tau != n:
                raise TopologyError(f"n={n} is not a power of p={p}")
        W = de_bruijn(p, tau)
        mats = tuple(MixingMatrix(W.weights, l, family) for l in range(tau))
        return TopologySequence(n, tau, mats, family, True, base=p)
    if family is GraphFamily.FULLY_CONNECTED:
        return TopologySequence(n, 1, (MixingMatrix(matkit.averaging_matrix(n), 0, family),), family, True)
    W = static_variant(_static_source(family), n, weighting=static_weighting)
    return TopologySequence(n, 1, (W,), family, False)


def static_sequence(seq: TopologySequence, weighting: str = "uniform") -> TopologySequence:
    """Length-1 sequence holding the static counterpart of ``seq``.

    Sequences that already repeat a single matrix (static families, de Bruijn)
    keep that matrix.
    """
    if seq.family.is_dynamic:
        W = static_variant(seq.family, seq.n, weighting=weighting)
        return TopologySequence(seq.n, 1, (W,), W.family, False)
    if seq.tau == 1:
        return seq
    m = seq.matrices[0]
    return TopologySequence(seq.n, 1, (MixingMatrix(m.weights, 0, seq.family),), seq.family, False, base=seq.base)


# ---------------------------------------------------------------- checks


@dataclass
class FTCReport:
    family: GraphFamily
    n: int
    tau: int
    ftc_claimed: bool
    stochastic_residuals: list[tuple[float, float, float]]
    product_residual: float
    residual_form: float
    tol: float

    @property
    def passed(self) -> bool:
        worst = max(max(r) for r in self.stochastic_residuals)
        return worst <= self.tol and self.product_residual <= self.tol

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = max(max(r) for r in self.stochastic_residuals)
        return (
            f"family={self.family.value} n={self.n} tau={self.tau} "
            f"ftc_claimed={str(self.ftc_claimed).lower()} "
            f"stochastic_residual={worst:.3e} product_residual={self.product_residual:.3e} "
            f"residual_form={self.residual_form:.3e} ftc={status}"
        )


def verify_ftc(seq: TopologySequence, tol: float = 1e-12) -> FTCReport:
    """Recompute the period product; ``ftc_claimed`` is reported but not trusted."""
    ws = seq.weights()
    return FTCReport(
        family=seq.family,
        n=seq.n,
        tau=seq.tau,
        ftc_claimed=seq.ftc_claimed,
        stochastic_residuals=[matkit.doubly_stochastic_residual(w) for w in ws],
        product_residual=matkit.consensus_product_residual(ws),
        residual_form=matkit.residual_form_norm(ws),
        tol=tol,
    )


def period_orderings(tau: int, limit: int = 20, seed: int = 0):
    """All ``tau!`` orders for ``tau <= 4``, else ``limit`` random ones."""
    if tau <= 4:
        yield from itertools.permutations(range(tau))
        return
    rng = np.random.default_rng(seed)
    for _ in range(limit):
        yield tuple(int(k) for k in rng.permutation(tau))


@dataclass
class PermutationEquivalence:
    P: matkit.PermutationMap
    Q: matkit.PermutationMap
    hypercuboid_index: int
    error: float


def debruijn_cuboid_permutation(p: int, tau: int, l: int) -> PermutationEquivalence:
    """Relabel the de Bruijn matrix into a hyper-cuboid matrix.

    With ``P = (P_s^T)^(l+1)`` and ``Q = (P_s^T)^l``, ``P W_db Q^T`` equals the
    hyper-cuboid matrix of index ``l mod tau``. ``error`` is the max-norm of the
    difference and is exactly zero.
    """
    Ps = matkit.perfect_shuffle(p, tau)
    PsT = Ps.inverse()
    P = PsT.power(l + 1)
    Q = PsT.power(l)
    W = de_bruijn(p, tau).weights
    # P W Q^T as pure row/column relabelling
    rel = np.empty_like(W)
    rel[np.ix_(P.map, Q.map)] = W
    target = l % tau
    hc = p_peer_hypercuboid(p**tau, target).weights
    return PermutationEquivalence(P, Q, target, float(np.max(np.abs(hc - rel))))
