"""Leaderless coordination walk-through.

The bundled leaderless scenario has 100 followers and no controlled leader;
the "leader" state is just an autonomous reference the followers are paid to
gather around.  The same synthesis pipeline applies with the leader input
channel removed (d_u0 = 0).

Usage: python3 demos/leaderless_demo.py [--out demos/output/leaderless]
"""

import argparse
from pathlib import Path

import numpy as np

from mfteam import draw_noise, run_proposed, synthesize
from mfteam.cli import bundled_scenario
from mfteam.model import load_scenario
from mfteam.simulate import sample_follower_indices, write_trajectory_csv
from mfteam.svgplot import line_chart


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="demos/output/leaderless")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    cfg = load_scenario(bundled_scenario("example2"))
    assert cfg.dims.leaderless
    print(f"leaderless scenario: {cfg.dims.n} followers, reference fixed at 3")

    aug, sol, gains = synthesize(cfg)
    print(f"joint gain has {gains.L11.shape[1]} leader rows (none)")

    record = run_proposed(cfg, gains, draw_noise(cfg))
    write_trajectory_csv(record, out / "trajectory.csv")

    T = cfg.dims.T
    for t in (1, 10, 20, 40):
        x = record.follower_states[t - 1, :, 0]
        print(f"t = {t:2d}: mean = {x.mean():+.3f}, std = {x.std(ddof=1):.3f}")
    print("the population contracts onto the reference without any communication")

    idx = sample_follower_indices(cfg.dims.n, 60, cfg.seed)
    ts = list(range(1, T + 2))
    series = [(ts, record.follower_states[:, i, 0].tolist(), "#a1d99b", 1.0) for i in idx]
    series.append((ts, record.leader_states[:, 0].tolist(), "#00441b", 3.0))
    line_chart(
        series,
        out / "leaderless.svg",
        title="followers contract onto the autonomous reference",
        xlabel="t",
        ylabel="state",
    )
    print(f"wrote {out / 'leaderless.svg'} and {out / 'trajectory.csv'}")


if __name__ == "__main__":
    main()
