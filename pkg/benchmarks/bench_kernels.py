"""Time the compiled and numpy kernels on one tracking round.

    python benchmarks/bench_kernels.py [--n 64] [--m 500] [--d 20] [--repeat 200]
"""
import argparse
import timeit

import numpy as np

from gtft import kernels, topology


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--m", type=int, default=500)
    ap.add_argument("--d", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    n, m, d = args.n, args.m, args.d
    A = rng.standard_normal((n, m, d))
    b = rng.standard_normal((n, m))
    X, G, F = rng.standard_normal((3, n, d))
    W = topology.one_peer_exponential(n, 0).weights
    Ws = topology.static_variant("one-peer-exp", n).weights

    print(f"n={n} m={m} d={d}, {args.repeat} calls each, ms per call")
    print(f"{'kernel':<28}" + "".join(f"{name:>12}" for name in kernels.available_backends()))
    cases = {
        "local_gradients": lambda k: k.local_gradients(A, b, 0.1, X),
        "mix (one-peer)": lambda k: k.mix(W, X),
        "mix (static)": lambda k: k.mix(Ws, X),
        "gt_round (one-peer)": lambda k: k.gt_round(W, X, G, F, A, b, 0.1, 1e-4),
        "metrics_row": lambda k: k.metrics_row(A, b, 0.1, X, G),
    }
    for label, fn in cases.items():
        row = f"{label:<28}"
        for mod in kernels.available_backends().values():
            t = min(timeit.repeat(lambda: fn(mod), number=args.repeat, repeat=3)) / args.repeat
            row += f"{t * 1e3:>12.4f}"
        print(row)


if __name__ == "__main__":
    main()
