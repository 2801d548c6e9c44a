"""Command-line interface: run scenarios, sweep parameters, verify.

Exit codes: 0 success, 1 engine error, 2 config error, 3 verification
failure.  All output files are deterministic: floats are printed with 17
significant digits (override with the HYBRIDOSC_CSV_DIGITS environment
variable) and manifests carry no timestamps.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigParse, HybridOscError
from .observables import error_ellipse, position_covariance, sample_record
from .scenarios import Scenario, builtin_scenarios, get_scenario
from .verification import run_suite

TRAJECTORY_COLUMNS = [
    "t", "Zqq", "Zxx", "Zqx", "ZRR", "Zrr", "ZRr", "ER", "Er", "V", "EI",
    "Etot", "pR", "alpha_q", "alpha_x", "beta_q", "beta_x",
]
ENERGY_COLUMNS = ["t", "ER", "Er", "V", "EI", "Etot", "pR"]
ELLIPSE_COLUMNS = ["t", "center_q", "center_x", "semi_major", "semi_minor", "angle"]

PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Generic plots for a scenario output directory (pass it as argv[1]).\"\"\"
import csv
import sys
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent
rows = list(csv.DictReader(open(out / "trajectory.csv")))
t = [float(r["t"]) for r in rows]

fig, axes = plt.subplots(2, 1, figsize=(7, 8), sharex=True)
for key, style in (("ER", "-"), ("EI", "--"), ("V", ":")):
    axes[0].plot(t, [float(r[key]) for r in rows], style, label=key)
axes[0].set_ylabel("energy")
axes[0].legend()
for key, style in (("ZRR", "-"), ("Zrr", "--"), ("ZRr", ":")):
    axes[1].plot(t, [float(r[key]) for r in rows], style, label=key)
axes[1].set_xlabel("time")
axes[1].set_ylabel("covariance")
axes[1].legend()
fig.tight_layout()
fig.savefig(out / "summary.png", dpi=150)
print(f"wrote {out / 'summary.png'}")
"""


def _digits() -> int:
    return int(os.environ.get("HYBRIDOSC_CSV_DIGITS", "17"))


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value + 0.0:.{_digits()}g}"  # + 0.0 normalizes -0.0
    return str(value)


def _write_table(path: Path, columns, rows, fmt: str) -> None:
    if fmt == "csv":
        lines = [",".join(columns)]
        lines += [",".join(_fmt(row[c]) for c in columns) for row in rows]
        path.with_suffix(".csv").write_text("\n".join(lines) + "\n")
    else:
        payload = [{c: row[c] for c in columns} for row in rows]
        path.with_suffix(".json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _ellipse_rows(traj, quarter_marks) -> list[dict]:
    rows = []
    times = traj.times
    for mark in quarter_marks:
        i = int(np.argmin(np.abs(times - mark)))
        s = traj.samples[i]
        spec = error_ellipse(position_covariance(s.K), center=s.alpha)
        rows.append({
            "t": s.t,
            "center_q": float(spec.center[0]),
            "center_x": float(spec.center[1]),
            "semi_major": spec.semi_axes[0],
            "semi_minor": spec.semi_axes[1],
            "angle": spec.angle,
        })
    return rows


def run_scenario_to_dir(sc: Scenario, out_dir: Path, fmt: str = "csv",
                        emit_plot_script: bool = False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    traj = sc.run()
    params = traj.params
    records = [sample_record(s, params, sc.include_classical_motion) for s in traj.samples]

    _write_table(out_dir / "trajectory", TRAJECTORY_COLUMNS, records, fmt)
    _write_table(out_dir / "energies", ENERGY_COLUMNS, records, fmt)

    quarter = params.period / 4.0
    n_marks = int(round(traj.times[-1] / quarter)) + 1
    marks = [i * quarter for i in range(n_marks)]
    _write_table(out_dir / "ellipses", ELLIPSE_COLUMNS, _ellipse_rows(traj, marks), fmt)

    manifest = {
        "scenario": {k: v for k, v in sorted(sc.resolved_items().items())},
        "samples": len(traj.samples),
        "t_final": float(traj.times[-1]),
        "output_format": fmt,
        "float_digits": _digits(),
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")

    if emit_plot_script:
        (out_dir / "plot.py").write_text(PLOT_SCRIPT)


def _cmd_run(args) -> int:
    sc = get_scenario(args.scenario)
    run_scenario_to_dir(sc, Path(args.out), args.format, args.emit_plot_script)
    print(f"wrote {args.out}")
    return 0


def _parse_vary(spec: str):
    """key=start:stop:n or key=v1,v2,... -> (key, [values])."""
    if "=" not in spec:
        raise ConfigParse(f"--vary expects key=start:stop:n or key=v1,v2,..., got {spec!r}")
    key, _, rhs = spec.partition("=")
    key = key.strip()
    rhs = rhs.strip()
    if ":" in rhs:
        parts = rhs.split(":")
        if len(parts) != 3:
            raise ConfigParse(f"--vary range must be start:stop:n, got {rhs!r}", key=key)
        try:
            start, stop, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigParse(f"bad --vary range {rhs!r}", key=key)
        if n < 1:
            raise ConfigParse("--vary needs at least one point", key=key)
        values = [start] if n == 1 else list(np.linspace(start, stop, n))
    else:
        try:
            values = [float(v) for v in rhs.split(",") if v.strip()]
        except ValueError:
            raise ConfigParse(f"bad --vary list {rhs!r}", key=key)
        if not values:
            raise ConfigParse("--vary list is empty", key=key)
    return key, values


def _cmd_sweep(args) -> int:
    base = get_scenario(args.scenario)
    key, values = _parse_vary(args.vary)
    valid = {f.name for f in dataclasses.fields(Scenario)} - {"name", "sector"}
    if key not in valid:
        raise ConfigParse(f"--vary key must be a numeric scenario field, got {key!r}", key=key)

    out_root = Path(args.out)
    summary = []
    for i, value in enumerate(values):
        overrides = {key: value}
        if key == "mass_ratio":
            overrides.update(m_q=None, m_x=None)
        point = dataclasses.replace(base, name=f"{base.name}-{key}-{i}", **overrides)
        sub = out_root / f"{key}={_fmt(float(value))}"
        run_scenario_to_dir(point, sub, args.format)
        traj = point.run()
        recs = [sample_record(s, traj.params, point.include_classical_motion) for s in traj.samples]
        e_cm = np.array([r["ER"] for r in recs])
        summary.append({
            "index": i,
            key: float(value),
            "Etot": recs[0]["Etot"],
            "ER_max": float(e_cm.max()),
            "ER_min": float(e_cm.min()),
            "exchange": float(e_cm.max() - e_cm.min()),
            "exchange_fraction": float((e_cm.max() - e_cm.min()) / recs[0]["Etot"]),
        })
    out_root.mkdir(parents=True, exist_ok=True)
    _write_table(out_root / "summary", ["index", key, "Etot", "ER_max", "ER_min",
                                        "exchange", "exchange_fraction"], summary, args.format)
    print(f"wrote {out_root} ({len(values)} points)")
    return 0


def _cmd_verify(args) -> int:
    results = run_suite(args.suite)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 3 if failed else 0


def _cmd_scenarios(_args) -> int:
    for name, sc in builtin_scenarios().items():
        m_q, m_x = sc.resolved_masses()
        print(f"{name}: sector={sc.sector} m_q={m_q:g} m_x={m_x:g} "
              f"Kqq={sc.Kqq:g} Kxx={sc.Kxx:g} Lxx={sc.Lxx:g} "
              f"t_final={sc.t_final_periods:g} periods")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hybridosc",
        description="Coupled classical-quantum oscillator ensemble simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario and write its tables")
    p_run.add_argument("scenario", help="built-in name or scenario file path")
    p_run.add_argument("--out", required=True, help="output directory")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")
    p_run.add_argument("--emit-plot-script", action="store_true",
                       help="also write a standalone plot.py next to the tables")
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a scenario over a parameter grid")
    p_sweep.add_argument("scenario", help="built-in name or scenario file path")
    p_sweep.add_argument("--vary", required=True, help="key=start:stop:n or key=v1,v2,...")
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_verify = sub.add_parser("verify", help="run a verification suite")
    p_verify.add_argument("--suite", choices=("oracles", "pde", "conservation", "all"),
                          default="all")
    p_verify.set_defaults(func=_cmd_verify)

    p_list = sub.add_parser("scenarios", help="list built-in scenarios")
    p_list.set_defaults(func=_cmd_scenarios)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigParse as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HybridOscError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
