"""Plot metric CSVs written by ``gtft`` (needs matplotlib).

    python docs/plot_metrics.py out/optimize-exp_*_determ.csv --column grad_at_mean_sq -o fig.png
"""
import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("csv", nargs="+")
    ap.add_argument("--column", default="grad_at_mean_sq")
    ap.add_argument("-o", "--out", default="metrics.png")
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(6, 4))
    for path in args.csv:
        data = np.genfromtxt(path, delimiter=",", names=True)
        ax.semilogy(data["iter"], data[args.column], label=Path(path).stem)
    ax.set_xlabel("iteration")
    ax.set_ylabel(args.column)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
