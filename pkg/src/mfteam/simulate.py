"""Forward simulation of the leader-follower network and cost evaluation.

Two strategies are simulated:

* ``proposed`` -- each agent feeds back its own state, the leader state, and
  the deterministic mean-field estimate z_t, which every agent can compute
  locally from the leader trajectory.
* ``oracle`` -- the mean-field-sharing optimal strategy, which replaces z_t
  with the realized follower average.  It needs information the decentralized
  agents do not have and serves as the analysis baseline.

Both strategies can be run on the same NoiseRealization (common random
numbers), which makes their paired difference low-variance and makes the
follower deviations from the mean coincide exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import ScenarioShapeError, SimulationBlowupError
from .model import ScenarioConfig
from .riccati import GainSchedule

# Sub-stream tags, so the leader, each follower, and auxiliary consumers
# draw from independent deterministic streams of the same base seed.
_STREAM_LEADER = 0
_STREAM_FOLLOWER = 1
_STREAM_SAMPLE = 2
_STREAM_BATCH = 3


def cov_factor(cov: np.ndarray) -> np.ndarray:
    """Symmetric PSD square-root factor G with G G' = cov (eigh-based, handles
    singular covariances)."""
    w, v = np.linalg.eigh(0.5 * (cov + cov.T))
    return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True)
class NoiseRealization:
    leader_noise: np.ndarray  # (T, d_x)
    follower_noise: np.ndarray  # (T, n, d_x)
    follower_init: np.ndarray  # (n, d_x)
    seed: int
    n: int


def _draw_follower_init(rng, cfg: ScenarioConfig) -> np.ndarray:
    dist = cfg.init_dist
    if dist["type"] == "uniform-box":
        low = np.asarray(dist["low"])
        high = np.asarray(dist["high"])
        return low + rng.random(cfg.dims.d_x) * (high - low)
    g = cov_factor(cfg.init_cov)
    return cfg.init_mean + rng.standard_normal(cfg.dims.d_x) @ g.T


def draw_noise(cfg: ScenarioConfig, n_override: int | None = None, seed: int | None = None) -> NoiseRealization:
    """Draw all primitive randomness for one replication.

    Follower i's stream depends only on (seed, i), so increasing n keeps the
    draws of the existing followers unchanged.
    """
    n = cfg.dims.n if n_override is None else int(n_override)
    seed = cfg.seed if seed is None else int(seed)
    T, d_x = cfg.dims.T, cfg.dims.d_x

    rng0 = np.random.default_rng(np.random.SeedSequence(entropy=[seed, _STREAM_LEADER]))
    g0 = cov_factor(cfg.noise_cov_leader)
    leader_noise = rng0.standard_normal((T, d_x)) @ g0.T

    gw = cov_factor(cfg.noise_cov_follower)
    follower_init = np.empty((n, d_x))
    follower_noise = np.empty((T, n, d_x))
    for i in range(n):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=[seed, _STREAM_FOLLOWER, i])
        )
        follower_init[i] = _draw_follower_init(rng, cfg)
        follower_noise[:, i, :] = rng.standard_normal((T, d_x)) @ gw.T

    return NoiseRealization(
        leader_noise=leader_noise,
        follower_noise=follower_noise,
        follower_init=follower_init,
        seed=seed,
        n=n,
    )


@dataclass(frozen=True)
class SimulationRecord:
    strategy_tag: str  # "proposed" or "oracle"
    leader_states: np.ndarray  # (T+1, d_x)
    follower_states: np.ndarray  # (T+1, n, d_x)
    leader_actions: np.ndarray  # (T, d_u0)
    follower_actions: np.ndarray  # (T, n, d_u)
    mean_field: np.ndarray  # (T+1, d_x)
    z: np.ndarray | None  # (T+1, d_x); proposed runs only
    realized_cost: float


def _check_finite(x, t, what):
    if not np.all(np.isfinite(x)):
        raise SimulationBlowupError(f"non-finite {what} at t = {t}", t=t)


def _simulate(cfg: ScenarioConfig, gains: GainSchedule, noise: NoiseRealization, proposed: bool) -> SimulationRecord:
    dims = cfg.dims
    n = noise.n
    T, d_x = dims.T, dims.d_x
    if noise.follower_noise.shape != (T, n, d_x):
        raise ScenarioShapeError("noise realization does not match scenario dimensions")

    xs0 = np.empty((T + 1, d_x))
    xs = np.empty((T + 1, n, d_x))
    us0 = np.empty((T, dims.d_u0))
    us = np.empty((T, n, dims.d_u))
    xbar = np.empty((T + 1, d_x))
    zs = np.empty((T + 1, d_x)) if proposed else None

    xs0[0] = cfg.leader_init
    xs[0] = noise.follower_init
    xbar[0] = xs[0].mean(axis=0)
    if proposed:
        zs[0] = cfg.init_mean

    for t in range(1, T + 1):
        k = t - 1
        x0 = xs0[k]
        x = xs[k]
        ref = zs[k] if proposed else xbar[k]  # z_t or realized mean-field

        Lb = gains.L_breve[k]
        L21, L22 = gains.L21[k], gains.L22[k]
        if dims.d_u0 > 0:
            us0[k] = gains.L11[k] @ x0 + gains.L12[k] @ ref
        u = x @ Lb.T + (L21 @ x0 + (L22 - Lb) @ ref)
        us[k] = u

        xs0[t] = (
            cfg.A0.at(t) @ x0
            + (cfg.B0.at(t) @ us0[k] if dims.d_u0 > 0 else 0.0)
            + cfg.D0.at(t) @ xbar[k]
            + noise.leader_noise[k]
        )
        xs[t] = (
            x @ cfg.A.at(t).T
            + u @ cfg.B.at(t).T
            + (cfg.D.at(t) @ xbar[k] + cfg.E.at(t) @ x0)
            + noise.follower_noise[k]
        )
        xbar[t] = xs[t].mean(axis=0)
        if proposed:
            zs[t] = (cfg.A.at(t) + cfg.B.at(t) @ L22 + cfg.D.at(t)) @ zs[k] + (
                cfg.B.at(t) @ L21 + cfg.E.at(t)
            ) @ x0
        _check_finite(xs0[t], t, "leader state")
        _check_finite(xs[t], t, "follower state")

    record = SimulationRecord(
        strategy_tag="proposed" if proposed else "oracle",
        leader_states=xs0,
        follower_states=xs,
        leader_actions=us0,
        follower_actions=us,
        mean_field=xbar,
        z=zs,
        realized_cost=0.0,
    )
    return replace(record, realized_cost=evaluate_cost(cfg, record))


def run_proposed(cfg: ScenarioConfig, gains: GainSchedule, noise: NoiseRealization) -> SimulationRecord:
    """Simulate the decentralized strategy driven by the z-process."""
    return _simulate(cfg, gains, noise, proposed=True)


def run_oracle(cfg: ScenarioConfig, gains: GainSchedule, noise: NoiseRealization) -> SimulationRecord:
    """Simulate the mean-field-sharing optimal strategy on the same noise."""
    return _simulate(cfg, gains, noise, proposed=False)


def evaluate_cost(cfg: ScenarioConfig, record: SimulationRecord) -> float:
    """Realized (per-sample-path) cost over t = 1..T.

    The pairwise coupling term is computed in O(n) through the identity
    (1/2n^2) sum_ij (x_i - x_j)' H (x_i - x_j) = (1/n) sum_i (x_i - xbar)' H (x_i - xbar).
    """
    dims = cfg.dims
    T = dims.T
    n = record.follower_states.shape[1]
    if record.follower_states.shape[0] != T + 1 or record.follower_states.shape[2] != dims.d_x:
        raise ScenarioShapeError("record shapes do not match scenario dimensions")
    total = 0.0
    for t in range(1, T + 1):
        k = t - 1
        x0 = record.leader_states[k]
        x = record.follower_states[k]
        xb = x.mean(axis=0)
        term = x0 @ cfg.Q0.at(t) @ x0
        dbar = xb - x0
        term += dbar @ cfg.F.at(t) @ dbar
        if dims.d_u0 > 0:
            u0 = record.leader_actions[k]
            term += u0 @ cfg.R0.at(t) @ u0
        term += np.einsum("id,de,ie->", x, cfg.Q.at(t), x) / n
        dx0 = x - x0
        term += np.einsum("id,de,ie->", dx0, cfg.P.at(t), dx0) / n
        u = record.follower_actions[k]
        term += np.einsum("id,de,ie->", u, cfg.R.at(t), u) / n
        dev = x - xb
        term += np.einsum("id,de,ie->", dev, cfg.H.at(t), dev) / n
        total += term
    return float(total)


def sample_follower_indices(n: int, k: int, seed: int) -> np.ndarray:
    """First k indices of a seeded shuffle of 0..n-1 (for plotting subsets)."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[int(seed), _STREAM_SAMPLE]))
    return np.sort(rng.permutation(n)[: min(k, n)])


def write_trajectory_csv(record: SimulationRecord, path) -> None:
    """Trajectory export: one row per (t, agent); agent_id 0 is the leader.

    Action columns are blank for the leader when it has no input channel and
    for every agent at t = T+1 (no action is taken at the terminal snapshot).
    The zbar columns carry z_t for proposed runs and the realized mean-field
    for oracle runs.
    """
    Tp1, n, d_x = record.follower_states.shape
    d_u = record.follower_actions.shape[2]
    d_u0 = record.leader_actions.shape[1]
    d_act = max(d_u, d_u0)
    zref = record.z if record.z is not None else record.mean_field
    header = (
        ["t", "agent_id"]
        + [f"state[{j}]" for j in range(d_x)]
        + [f"action[{j}]" for j in range(d_act)]
        + [f"zbar[{j}]" for j in range(d_x)]
    )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(1, Tp1 + 1):
            k = t - 1
            zcols = [repr(float(v)) for v in zref[k]]
            act0 = record.leader_actions[k] if t <= Tp1 - 1 and d_u0 > 0 else []
            row = (
                [t, 0]
                + [repr(float(v)) for v in record.leader_states[k]]
                + [repr(float(v)) for v in act0]
                + [""] * (d_act - len(act0))
                + zcols
            )
            w.writerow(row)
            for i in range(n):
                act = record.follower_actions[k, i] if t <= Tp1 - 1 else []
                row = (
                    [t, i + 1]
                    + [repr(float(v)) for v in record.follower_states[k, i]]
                    + [repr(float(v)) for v in act]
                    + [""] * (d_act - len(act))
                    + zcols
                )
                w.writerow(row)
