#!/usr/bin/env python3
"""Run every built-in scenario and render summary figures.

Writes one output directory per scenario under --out (default ./figures)
with the standard tables, plus a PNG per scenario when matplotlib is
available.  The hybrid/quantum overlays mirror the standard presentation:
error ellipses at quarter-period marks, CM/relative covariances, and the
energy-exchange curves.
"""

import argparse
from pathlib import Path

import numpy as np

from hybridosc import error_ellipse, position_covariance
from hybridosc.cli import run_scenario_to_dir
from hybridosc.scenarios import builtin_scenarios


def plot_scenario(name, traj, out_dir):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    recs = traj.records()
    t = np.array([r["t"] for r in recs])
    period = traj.params.period

    fig, axes = plt.subplots(1, 3, figsize=(15, 4.2))

    # error ellipses at quarter-period marks
    ax = axes[0]
    marks = np.arange(0.0, t[-1] + 1e-9, period / 4.0)
    theta = np.linspace(0.0, 2.0 * np.pi, 120)
    circle = np.vstack([np.cos(theta), np.sin(theta)])
    for mark in marks:
        s = traj.samples[int(np.argmin(np.abs(t - mark)))]
        spec = error_ellipse(position_covariance(s.K), center=s.alpha)
        c, sn = np.cos(spec.angle), np.sin(spec.angle)
        R = np.array([[c, -sn], [sn, c]])
        pts = R @ (np.diag(spec.semi_axes) @ circle)
        ax.plot(pts[0] + s.alpha[0], pts[1] + s.alpha[1], lw=0.9)
    ax.set_xlabel("q / x0")
    ax.set_ylabel("x / x0")
    ax.set_title("error ellipses at quarter periods")
    ax.set_aspect("equal")

    ax = axes[1]
    for key, style in (("ZRR", "-"), ("Zrr", "--"), ("ZRr", ":")):
        ax.plot(t, [r[key] for r in recs], style, label=key)
    ax.set_xlabel("t (omega = 1 units)")
    ax.set_title("CM/relative covariances")
    ax.legend()

    ax = axes[2]
    for key, style in (("ER", "-"), ("EI", "--"), ("V", ":")):
        ax.plot(t, [r[key] for r in recs], style, label=key)
    ax.set_xlabel("t (omega = 1 units)")
    ax.set_title(f"energies (E_total = {recs[0]['Etot']:.4g})")
    ax.legend()

    fig.suptitle(name)
    fig.tight_layout()
    fig.savefig(out_dir / f"{name}.png", dpi=150)
    plt.close(fig)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="figures", help="output root directory")
    parser.add_argument("--no-plots", action="store_true", help="tables only")
    args = parser.parse_args()

    root = Path(args.out)
    for name, sc in builtin_scenarios().items():
        out_dir = root / name
        run_scenario_to_dir(sc, out_dir)
        print(f"{name}: tables written to {out_dir}")
        if not args.no_plots:
            try:
                plot_scenario(name, sc.run(), root)
                print(f"{name}: figure written to {root / (name + '.png')}")
            except ImportError:
                print(f"{name}: matplotlib not installed, skipping figure")


if __name__ == "__main__":
    main()
