"""``gtft`` command-line entry point.

Exit codes: 0 success, 1 invalid input or usage, 2 runtime failure
(divergence, I/O, non-convergence).
"""
from __future__ import annotations

import argparse
import sys

from .. import matkit
from ..algorithms import RunConfig, StepsizeTuning, X0_MODES, run, tuned_stepsize
from ..errors import ConvergenceError, DivergenceError, GTFTError
from ..metrics import write_metrics_csv
from ..optim import DEFAULT_MU, dump_problem, estimate_smoothness, generate_problem
from ..topology import GraphFamily, build_sequence, static_sequence, verify_ftc
from .config import ConfigError, merge, read_config
from .presets import PRESETS, SCALES, run_consensus_preset, write_preset

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

FAMILIES = [f.value for f in GraphFamily]

OPTIMIZE_SCHEMA = {
    "algo": str, "family": str, "n": int, "alpha": float, "sigma2": float, "iters": int,
    "seed": int, "warmup": bool, "tuned_stepsize": str, "m": int, "d": int, "delta": float,
    "mu": float, "x0": str, "p": int, "out": str,
}
OPTIMIZE_DEFAULTS = {
    "sigma2": 0.0, "seed": 0, "warmup": False, "tuned_stepsize": None, "m": 500, "d": 20,
    "delta": 10.0, "mu": DEFAULT_MU, "x0": "zero", "p": None,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _family_arg(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--family", required=required, choices=FAMILIES, metavar="F",
                   help="one of: " + ", ".join(FAMILIES))
    p.add_argument("--n", type=int, required=required, help="number of agents")
    p.add_argument("--p", type=int, default=None, help="de Bruijn base (default: smallest)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gtft", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-topology", help="write one mixing matrix as CSV")
    _family_arg(p)
    p.add_argument("--index", type=int, required=True, help="round index l within the period")
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="check the finite-time consensus property")
    _family_arg(p)
    p.add_argument("--tol", type=float, default=1e-12)

    p = sub.add_parser("spectral", help="rho = ||W - J||_2 for each matrix of a period")
    _family_arg(p)
    p.add_argument("--static", action="store_true", help="use the static counterpart")

    p = sub.add_parser("consensus", help="pure-mixing consensus run")
    _family_arg(p)
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--d", type=int, default=10)
    p.add_argument("--out", required=True)

    p = sub.add_parser("optimize", help="run GT-FT, static GT or DGD on a generated problem")
    p.add_argument("--config", default=None, help="flat key=value file; flags override it")
    p.add_argument("--algo", choices=["gt-ft", "gt-static", "dgd"], default=None)
    p.add_argument("--family", choices=FAMILIES, default=None, metavar="F")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--sigma2", type=float, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--warmup", action="store_true", default=None)
    p.add_argument("--tuned-stepsize", choices=["cor5", "cor6"], default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--x0", choices=X0_MODES, default=None)
    p.add_argument("--dump-problem", default=None, metavar="PATH")
    p.add_argument("--out", default=None)

    p = sub.add_parser("preset", help="run a named experiment and write its CSVs")
    p.add_argument("--name", required=True, choices=list(PRESETS))
    p.add_argument("--scale", required=True, choices=SCALES)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out-dir", required=True)
    return parser


def _sequence(args):
    return build_sequence(args.family, args.n, p=args.p)


def cmd_gen_topology(args) -> int:
    seq = _sequence(args)
    if args.index < 0:
        raise ValueError("--index must be nonnegative")
    W = seq.at_round(args.index)
    matkit.write_matrix_csv(W, args.out)
    print(f"wrote {seq.n}x{seq.n} {seq.family.value} l={args.index % seq.tau} to {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    report = verify_ftc(_sequence(args), tol=args.tol)
    print(report.summary())
    return EXIT_OK


def cmd_spectral(args) -> int:
    seq = _sequence(args)
    if args.static:
        seq = static_sequence(seq)
    for l, W in enumerate(seq.weights()):
        print(f"family={seq.family.value} n={seq.n} l={l} rho={matkit.spectral_deviation(W):.15g}")
    return EXIT_OK


def cmd_consensus(args) -> int:
    trace = run_consensus_preset(args.family, args.n, args.iters, args.seed, d=args.d)
    write_metrics_csv(trace, args.out)
    print(f"tau={trace.extras['tau']} final_consensus_error={trace.final('consensus_error'):.6e}")
    return EXIT_OK


def cmd_optimize(args) -> int:
    file_values = read_config(args.config) if args.config else {}
    cli = {k: v for k, v in vars(args).items() if k not in ("command", "config", "dump_problem")}
    cfg = merge(cli, file_values, OPTIMIZE_SCHEMA, OPTIMIZE_DEFAULTS)
    required = ["algo", "family", "n", "iters", "out"]
    if cfg.get("tuned_stepsize") is None:
        required.append("alpha")
    missing = [k for k in required if cfg.get(k) is None]
    if missing:
        raise UsageError("optimize: missing " + ", ".join("--" + k.replace("_", "-") for k in missing))
    if cfg["algo"] not in ("gt-ft", "gt-static", "dgd"):
        raise ValueError(f"unknown algorithm {cfg['algo']!r}")
    if cfg["x0"] not in X0_MODES:
        raise ValueError(f"x0 must be one of {X0_MODES}")

    problem = generate_problem(cfg["n"], cfg["m"], cfg["d"], cfg["delta"], mu=cfg["mu"], seed=cfg["seed"])
    if args.dump_problem:
        dump_problem(problem, args.dump_problem)
    seq = build_sequence(cfg["family"], cfg["n"], p=cfg["p"])
    alpha = cfg.get("alpha")
    if cfg["tuned_stepsize"] is not None:
        tau = 1 if cfg["algo"] == "gt-static" else seq.tau
        L = estimate_smoothness(problem)
        alpha = tuned_stepsize(StepsizeTuning(L, tau, cfg["n"], cfg["iters"], cfg["sigma2"], cfg["tuned_stepsize"]))
    config = RunConfig(cfg["algo"], seq, alpha, cfg["iters"], sigma2=cfg["sigma2"], warmup=cfg["warmup"],
                       seed=cfg["seed"], x0_mode=cfg["x0"])
    trace = run(problem, config)
    write_metrics_csv(trace, cfg["out"])
    print(f"algo={cfg['algo']} family={trace.extras['family']} alpha={alpha:.6g} iters={cfg['iters']} "
          f"final_grad_at_mean_sq={trace.final('grad_at_mean_sq'):.6e}")
    return EXIT_OK


def cmd_preset(args) -> int:
    for path in write_preset(args.name, args.scale, args.seed, args.out_dir):
        print(path)
    return EXIT_OK


COMMANDS = {
    "gen-topology": cmd_gen_topology,
    "verify": cmd_verify,
    "spectral": cmd_spectral,
    "consensus": cmd_consensus,
    "optimize": cmd_optimize,
    "preset": cmd_preset,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_INVALID
    except (DivergenceError, ConvergenceError, OSError) as exc:
        print(f"gtft: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ConfigError, GTFTError, ValueError) as exc:
        print(f"gtft: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
