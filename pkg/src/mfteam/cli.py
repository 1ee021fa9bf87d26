"""Command-line front end.

Subcommands: solve, simulate, gap, sweep, reproduce-example1,
reproduce-example2.  Every run writes a run_manifest.json next to its CSV
outputs; re-running with the same inputs and seed reproduces the CSVs byte
for byte.

Exit codes: 0 success, 1 runtime/numerical failure, 2 usage/validation
failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib import metadata, resources
from pathlib import Path

import numpy as np

from . import analysis, riccati, simulate, svgplot
from .errors import ScenarioError, SimulationBlowupError, SynthesisError
from .model import load_scenario


def _version() -> str:
    try:
        return metadata.version("mfteam")
    except metadata.PackageNotFoundError:
        return "unknown"


def bundled_scenario(name: str) -> Path:
    """Path of a scenario file shipped with the package (example1, example2)."""
    return Path(resources.files("mfteam") / "scenarios" / f"{name}.json")


def _resolve_seed(args, cfg) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("MFT_SEED")
    if env is not None:
        return int(env)
    return cfg.seed


def _write_manifest(out_dir: Path, command: str, scenario, seed, t0) -> None:
    manifest = {
        "command": command,
        "scenario": str(scenario),
        "seed": seed,
        "out_dir": str(out_dir),
        "version": _version(),
        "duration_s": round(time.monotonic() - t0, 3),
    }
    with open(out_dir / "run_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    t0 = time.monotonic()
    cfg = load_scenario(args.scenario)
    out = _out_dir(args)
    aug, sol, gains = riccati.synthesize(cfg)
    riccati.write_riccati_csv(sol, out / "riccati.csv")
    riccati.write_gains_csv(gains, out / "gains.csv")
    _write_manifest(out, "solve", args.scenario, cfg.seed, t0)
    T = cfg.dims.T
    print(f"solved T = {T}, d_x = {cfg.dims.d_x}, leaderless = {cfg.dims.leaderless}")
    print(f"M_breve[1] max |entry| = {np.max(np.abs(sol.M_breve[0])):.6g}")
    print(f"L_breve[T] max |entry| = {np.max(np.abs(gains.L_breve[T - 1])):.6g} (should be 0)")
    return 0


def cmd_simulate(args) -> int:
    t0 = time.monotonic()
    cfg = load_scenario(args.scenario)
    seed = _resolve_seed(args, cfg)
    out = _out_dir(args)
    aug, sol, gains = riccati.synthesize(cfg)
    noise = simulate.draw_noise(cfg, seed=seed)
    run = simulate.run_proposed if args.strategy == "proposed" else simulate.run_oracle
    record = run(cfg, gains, noise)
    simulate.write_trajectory_csv(record, out / "trajectory.csv")

    n = cfg.dims.n
    idx = simulate.sample_follower_indices(n, args.sample, seed)
    ts = list(range(1, cfg.dims.T + 2))
    series = [
        (ts, record.follower_states[:, i, 0].tolist(), "#9ecae1", 1.0) for i in idx
    ]
    series.append((ts, record.leader_states[:, 0].tolist(), "#08306b", 3.0))
    svgplot.line_chart(
        series,
        out / "trajectory.svg",
        title=f"{args.strategy} strategy: leader and {len(idx)} sampled followers",
        xlabel="t",
        ylabel="state[0]",
    )
    _write_manifest(out, f"simulate --strategy {args.strategy}", args.scenario, seed, t0)
    print(f"simulated {args.strategy}: n = {n}, T = {cfg.dims.T}, seed = {seed}")
    print(f"realized cost = {record.realized_cost:.6g}")
    return 0


def cmd_gap(args) -> int:
    t0 = time.monotonic()
    cfg = load_scenario(args.scenario)
    if args.replications == 1:
        raise UsageError("--replications must be 0 (closed form only) or >= 2")
    seed = _resolve_seed(args, cfg)
    n = args.n if args.n is not None else cfg.dims.n
    out = _out_dir(args)
    aug, sol, gains = riccati.synthesize(cfg)
    if args.replications >= 2:
        report = analysis.delta_j_monte_carlo(cfg, gains, n, args.replications, seed)
    else:
        err = analysis.build_error_system(cfg, aug, gains)
        report = analysis.delta_j_closed_form(cfg, err, n)
    analysis.write_gap_csv(report, out / "gap.csv")
    _write_manifest(out, "gap", args.scenario, seed, t0)
    print(f"delta_j_closed = {report.delta_j_closed:.10g} (n = {n})")
    if report.delta_j_mc is not None:
        print(
            f"delta_j_mc     = {report.delta_j_mc:.10g} +/- {report.mc_stderr:.3g} "
            f"({report.replications} replications)"
        )
    return 0


def cmd_sweep(args) -> int:
    t0 = time.monotonic()
    cfg = load_scenario(args.scenario)
    n_values = sorted({int(v) for v in args.n.split(",") if v.strip()})
    if len(n_values) < 2:
        raise UsageError("sweep needs at least 2 distinct n values")
    out = _out_dir(args)
    rows = analysis.convergence_sweep(cfg, n_values)
    analysis.write_sweep_csv(rows, out / "sweep.csv")
    slope = analysis.fit_loglog_slope(rows)
    if all(r[1] > 0 for r in rows):
        svgplot.line_chart(
            [([r[0] for r in rows], [r[1] for r in rows], "#08306b", 2.0)],
            out / "sweep.svg",
            title="optimality gap vs population size",
            xlabel="n",
            ylabel="gap",
            log_log=True,
        )
    _write_manifest(out, "sweep", args.scenario, None, t0)
    for n, dj, ndj in rows:
        print(f"n = {n:>8d}  gap = {dj:.10g}  n*gap = {ndj:.10g}")
    print(f"log-log slope = {'undefined' if slope is None else f'{slope:.9f}'}")
    return 0


def _reproduce(args, name: str) -> int:
    args.scenario = bundled_scenario(name)
    args.strategy = "proposed"
    rc = cmd_simulate(args)
    return rc


class UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="mfteam",
        description="Near-optimal decentralized leader-follower LQ control: "
        "synthesis, simulation, and optimality-gap analysis.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("scenario", help="scenario JSON file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="RNG seed (fallback: MFT_SEED env, then scenario seed)")

    sp = sub.add_parser("solve", help="Riccati recursions and gain schedule")
    common(sp)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("simulate", help="forward simulation + trajectory CSV/SVG")
    common(sp)
    sp.add_argument("--strategy", choices=["proposed", "oracle"], default="proposed")
    sp.add_argument("--sample", type=int, default=100, help="followers shown in the SVG")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("gap", help="closed-form and Monte Carlo optimality gap")
    common(sp)
    sp.add_argument("--n", type=int, default=None, help="population size (default: scenario n)")
    sp.add_argument("--replications", type=int, default=0, help="0 = closed form only")
    sp.set_defaults(func=cmd_gap)

    sp = sub.add_parser("sweep", help="closed-form gap across population sizes")
    common(sp)
    sp.add_argument("--n", required=True, help="comma-separated n values, e.g. 10,100,1000")
    sp.set_defaults(func=cmd_sweep)

    for name in ("example1", "example2"):
        sp = sub.add_parser(
            f"reproduce-{name}", help=f"run the shipped {name} scenario (proposed strategy)"
        )
        common(sp, scenario=False)
        sp.add_argument("--sample", type=int, default=100)
        sp.set_defaults(func=lambda a, _n=name: _reproduce(a, _n))

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except (SynthesisError, SimulationBlowupError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
