#!/usr/bin/env python3
"""Plot the tables of one `hybridosc run` output directory.

Usage: python scripts/plot_run.py OUTPUT_DIR [--save PATH]
"""

import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", type=Path)
    parser.add_argument("--save", type=Path, default=None)
    args = parser.parse_args()

    with open(args.out_dir / "trajectory.csv") as fh:
        rows = list(csv.DictReader(fh))
    t = [float(r["t"]) for r in rows]

    fig, axes = plt.subplots(2, 1, figsize=(7, 8), sharex=True)
    for key, style in (("ER", "-"), ("EI", "--"), ("V", ":")):
        axes[0].plot(t, [float(r[key]) for r in rows], style, label=key)
    axes[0].set_ylabel("energy (hbar omega)")
    axes[0].legend()
    for key, style in (("ZRR", "-"), ("Zrr", "--"), ("ZRr", ":")):
        axes[1].plot(t, [float(r[key]) for r in rows], style, label=key)
    axes[1].set_xlabel("t (omega = 1 units)")
    axes[1].set_ylabel("covariance (x0^2)")
    axes[1].legend()
    fig.tight_layout()

    target = args.save or (args.out_dir / "summary.png")
    fig.savefig(target, dpi=150)
    print(f"wrote {target}")


if __name__ == "__main__":
    main()
