"""Shared fixtures and generators for the test suite."""

import numpy as np
import pytest

from mfteam import scenario_from_dict
from mfteam.cli import bundled_scenario
from mfteam.model import load_scenario


@pytest.fixture(scope="session")
def example1_cfg():
    return load_scenario(bundled_scenario("example1"))


@pytest.fixture(scope="session")
def example2_cfg():
    return load_scenario(bundled_scenario("example2"))


@pytest.fixture(scope="session")
def scalar_cfg():
    return load_scenario(bundled_scenario("scalar_test"))


def _psd(rng, d, scale=1.0):
    x = rng.standard_normal((d, d))
    return scale * (x @ x.T) / d


def _pd(rng, d, scale=1.0):
    return _psd(rng, d, scale) + 0.5 * scale * np.eye(d)


def _stable(rng, d, radius=0.95):
    a = rng.uniform(-1.0, 1.0, (d, d))
    r = max(abs(np.linalg.eigvals(a)))
    return a * (radius / r) if r > radius else a


def make_random_scenario(
    rng,
    d_x=None,
    d_u=None,
    T=None,
    n=None,
    leaderless=False,
    time_varying=False,
    noise_scale=0.05,
    decoupled_leader=False,
):
    """Random instance satisfying the positive-definiteness assumptions.

    Weights are sampled PSD/PD, so the assembled joint cost block is PSD by
    construction.  Dynamics are scaled to spectral radius < 1 with mild
    coupling so short horizons stay well-conditioned.
    """
    d_x = int(rng.integers(1, 4)) if d_x is None else d_x
    d_u = int(rng.integers(1, 3)) if d_u is None else d_u
    d_u0 = 0 if leaderless else int(rng.integers(1, 3))
    T = int(rng.integers(2, 11)) if T is None else T
    n = int(rng.integers(2, 11)) if n is None else n

    def sched(m):
        if not time_varying:
            return m.tolist()
        reps = np.stack([m for _ in range(T)])
        reps += 0.05 * rng.standard_normal(reps.shape)
        return reps.tolist()

    def sym_sched(m):
        if not time_varying:
            return m.tolist()
        out = []
        for _ in range(T):
            p = m + 0.05 * _psd(rng, m.shape[0])
            out.append(p.tolist())
        return out

    data = {
        "dims": {"d_x": d_x, "d_u": d_u, "d_u0": d_u0, "T": T, "n": n},
        "A0": sched(_stable(rng, d_x)),
        "A": sched(_stable(rng, d_x)),
        "B": sched(rng.uniform(-1.0, 1.0, (d_x, d_u))),
        "D0": sched(0.1 * rng.uniform(-1.0, 1.0, (d_x, d_x)))
        if not (leaderless or decoupled_leader)
        else np.zeros((d_x, d_x)).tolist(),
        "D": sched(0.1 * rng.uniform(-1.0, 1.0, (d_x, d_x))),
        "E": sched(0.1 * rng.uniform(-1.0, 1.0, (d_x, d_x))),
        "Q0": sym_sched(_psd(rng, d_x))
        if not leaderless
        else np.zeros((d_x, d_x)).tolist(),
        "F": sym_sched(_psd(rng, d_x)),
        "Q": sym_sched(_psd(rng, d_x)),
        "P": sym_sched(_psd(rng, d_x)),
        "H": sym_sched(_psd(rng, d_x)),
        "R": sym_sched(_pd(rng, d_u)),
        "init_dist": {"type": "gaussian"},
        "init_mean": rng.uniform(-1.0, 1.0, d_x).tolist(),
        "init_cov": _psd(rng, d_x, 0.5).tolist(),
        "noise_cov_leader": _psd(rng, d_x, noise_scale).tolist(),
        "noise_cov_follower": _psd(rng, d_x, noise_scale).tolist(),
        "leader_init": rng.uniform(-1.0, 1.0, d_x).tolist(),
        "seed": int(rng.integers(0, 2**31)),
    }
    if not leaderless:
        data["B0"] = sched(rng.uniform(-1.0, 1.0, (d_x, d_u0)))
        data["R0"] = sym_sched(_pd(rng, d_u0))
    return scenario_from_dict(data)


def lq_first_gain(A, B, Q, R, N):
    """Independent deterministic finite-horizon LQ oracle.

    For x_{k+1} = A x_k + B u_k with cost sum_{k=1}^{N} x_k'Qx_k + u_k'Ru_k,
    solves the stacked quadratic program over (u_1, ..., u_{N-1}) in closed
    form and returns the map x_1 -> optimal u_1.  No Riccati recursion is
    involved, so it cross-checks the recursion-based gains.
    """
    d_x, d_u = B.shape
    if N == 1:
        return np.zeros((d_u, d_x))
    m = N - 1  # u_N never helps; states x_2..x_N depend on u_1..u_{N-1}
    # x_{1+j} = A^j x_1 + sum_{k<j} A^{j-1-k} B u_{1+k}
    phi = np.zeros((m * d_x, d_x))
    gam = np.zeros((m * d_x, m * d_u))
    Ap = np.eye(d_x)
    for j in range(1, m + 1):
        Ap = A @ Ap
        phi[(j - 1) * d_x : j * d_x] = Ap
        blk = B
        for k in range(j - 1, -1, -1):
            gam[(j - 1) * d_x : j * d_x, k * d_u : (k + 1) * d_u] = blk
            blk = A @ blk
    Qb = np.kron(np.eye(m), Q)
    Rb = np.kron(np.eye(m), R)
    # minimize (phi x1 + gam u)' Qb (.) + u' Rb u
    hess = gam.T @ Qb @ gam + Rb
    lin = gam.T @ Qb @ phi
    gain_all = -np.linalg.solve(hess, lin)
    return gain_all[:d_u]


def lq_min_cost(A, B, Q, R, N, x1):
    """Minimal deterministic cost of the same stacked program (includes the
    fixed x_1 stage cost)."""
    d_x, d_u = B.shape
    base = float(x1 @ Q @ x1)
    if N == 1:
        return base
    m = N - 1
    phi = np.zeros((m * d_x, d_x))
    gam = np.zeros((m * d_x, m * d_u))
    Ap = np.eye(d_x)
    for j in range(1, m + 1):
        Ap = A @ Ap
        phi[(j - 1) * d_x : j * d_x] = Ap
        blk = B
        for k in range(j - 1, -1, -1):
            gam[(j - 1) * d_x : j * d_x, k * d_u : (k + 1) * d_u] = blk
            blk = A @ blk
    Qb = np.kron(np.eye(m), Q)
    Rb = np.kron(np.eye(m), R)
    hess = gam.T @ Qb @ gam + Rb
    lin = gam.T @ Qb @ (phi @ x1)
    u = -np.linalg.solve(hess, lin)
    x = phi @ x1 + gam @ u
    return base + float(x @ Qb @ x + u @ Rb @ u)
