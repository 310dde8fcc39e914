"""Experiment presets: consensus curves and GT-FT / DGD comparisons."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .. import kernels
from ..algorithms import RunConfig, run
from ..metrics import CONSENSUS_COLUMNS, MetricsTrace, write_metrics_csv
from ..optim import STREAM_CONSENSUS_INIT, generate_problem, philox_generator
from ..topology import GraphFamily, build_sequence, static_sequence

SCALES = ("paper", "desk")


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    family: GraphFamily | None  # dynamic family for optimize presets
    n: dict  # scale -> number of agents
    m: dict
    d: dict
    iters: dict
    delta: float = 10.0
    mu: float = 0.1
    alpha: float = 1e-4
    sigma2: float = 1e-4


_OPT_SIZES = dict(m={"paper": 500, "desk": 50}, d={"paper": 20, "desk": 10}, iters={"paper": 10_000, "desk": 5_000})

PRESETS = {
    "consensus": ExperimentPreset(
        "consensus", None, n={}, m={}, d={"paper": 10, "desk": 10}, iters={"paper": 40, "desk": 20}
    ),
    "optimize-exp": ExperimentPreset(
        "optimize-exp", GraphFamily.ONE_PEER_EXPONENTIAL, n={"paper": 64, "desk": 8}, **_OPT_SIZES
    ),
    "optimize-cuboid": ExperimentPreset(
        "optimize-cuboid", GraphFamily.P_PEER_HYPERCUBOID, n={"paper": 72, "desk": 12}, **_OPT_SIZES
    ),
    "optimize-debruijn": ExperimentPreset(
        "optimize-debruijn", GraphFamily.DE_BRUIJN, n={"paper": 64, "desk": 8}, **_OPT_SIZES
    ),
}

# Families and sizes plotted in the consensus experiment.
CONSENSUS_RUNS = {
    "paper": [
        (GraphFamily.ONE_PEER_EXPONENTIAL, 64),
        (GraphFamily.ONE_PEER_HYPERCUBE, 64),
        (GraphFamily.DE_BRUIJN, 64),
        (GraphFamily.P_PEER_HYPERCUBOID, 72),
        (GraphFamily.ONE_PEER_EXPONENTIAL, 72),
        (GraphFamily.STATIC_EXPONENTIAL, 64),
        (GraphFamily.STATIC_HYPERCUBOID, 64),
        (GraphFamily.STATIC_HYPERCUBOID, 72),
    ],
    "desk": [
        (GraphFamily.ONE_PEER_EXPONENTIAL, 8),
        (GraphFamily.ONE_PEER_HYPERCUBE, 8),
        (GraphFamily.DE_BRUIJN, 8),
        (GraphFamily.P_PEER_HYPERCUBOID, 12),
        (GraphFamily.ONE_PEER_EXPONENTIAL, 12),
        (GraphFamily.STATIC_EXPONENTIAL, 8),
        (GraphFamily.STATIC_HYPERCUBOID, 8),
        (GraphFamily.STATIC_HYPERCUBOID, 12),
    ],
}


def get_preset(name: str) -> ExperimentPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r} (expected one of: {', '.join(PRESETS)})") from None


def _check_scale(scale: str) -> None:
    if scale not in SCALES:
        raise ValueError(f"scale must be one of {SCALES}")


def run_consensus_preset(family, n: int, iters: int, seed: int, d: int = 10) -> MetricsTrace:
    """Pure mixing ``x <- W^(k) x`` from Gaussian starts; records ``Xi^(k)``
    measured against the initial average."""
    if iters < 0:
        raise ValueError("iters must be nonnegative")
    seq = build_sequence(family, n)
    X = philox_generator(seed, STREAM_CONSENSUS_INIT).standard_normal((n, d))
    xbar0 = X.mean(axis=0)
    rows = np.empty((iters + 1, 2))
    for k in range(iters + 1):
        dev = X - xbar0
        rows[k] = (k, np.sum(dev * dev) / n)
        if k < iters:
            X = kernels.mix(seq.at_round(k), X)
    trace = MetricsTrace(CONSENSUS_COLUMNS, rows)
    trace.extras.update(family=seq.family.value, n=n, tau=seq.tau)
    return trace


def optimize_arms(preset: ExperimentPreset, n: int):
    """``(arm name, algorithm, topology)`` triples for one preset."""
    dyn = build_sequence(preset.family, n)
    arms = [("gt-ft-dynamic", "gt-ft", dyn), ("dgd-dynamic", "dgd", dyn)]
    if preset.family is not GraphFamily.DE_BRUIJN:
        # de Bruijn repeats one static matrix, so it has no separate static arm
        st = static_sequence(dyn)
        arms += [("gt-static", "gt-static", st), ("dgd-static", "dgd", st)]
    return arms


def run_optimize_preset(preset, scale: str, seed: int, iters: int | None = None) -> dict[str, MetricsTrace]:
    """Every arm in deterministic and stochastic mode, keyed ``"<arm>_<mode>"``."""
    preset = get_preset(preset) if isinstance(preset, str) else preset
    _check_scale(scale)
    n = preset.n[scale]
    problem = generate_problem(n, preset.m[scale], preset.d[scale], preset.delta, mu=preset.mu, seed=seed)
    iters = preset.iters[scale] if iters is None else iters
    out = {}
    for mode, sigma2 in (("determ", 0.0), ("stoch", preset.sigma2)):
        for arm, algo, topo in optimize_arms(preset, n):
            cfg = RunConfig(algo, topo, preset.alpha, iters, sigma2=sigma2, seed=seed)
            out[f"{arm}_{mode}"] = run(problem, cfg)
    return out


def write_preset(name: str, scale: str, seed: int, out_dir) -> list[Path]:
    """Run a named preset and write one CSV per trace into ``out_dir``."""
    preset = get_preset(name)
    _check_scale(scale)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if preset.name == "consensus":
        for family, n in CONSENSUS_RUNS[scale]:
            trace = run_consensus_preset(family, n, preset.iters[scale], seed, d=preset.d[scale])
            path = out_dir / f"consensus_{family.value}_n{n}.csv"
            write_metrics_csv(trace, path)
            written.append(path)
        return written
    for key, trace in run_optimize_preset(preset, scale, seed).items():
        path = out_dir / f"{preset.name}_{key}.csv"
        write_metrics_csv(trace, path)
        written.append(path)
    return written
