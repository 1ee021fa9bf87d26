"""Optimality-gap machinery.

The gap between the decentralized strategy and the mean-field-sharing optimum
is the expected quadratic cost of an uncontrolled linear error system driven
by the averaged follower noise.  That gives a closed-form trace/Lyapunov
expression for the gap which is exactly linear in Sigma_x / n and
Sigma_w / n, hence an exact 1/n law.  A paired Monte Carlo estimator and a
small-instance stacked centralized LQR serve as independent checks.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import ScenarioShapeError
from .model import AugmentedSystem, ScenarioConfig, build_augmented
from .riccati import GainSchedule, compute_gains, solve_riccati
from .simulate import _STREAM_BATCH, cov_factor


@dataclass(frozen=True)
class ErrorSystem:
    """Relative-error dynamics and the backward Lyapunov solution.

    The 3*d_x error state stacks (leader-state error, mean-field error of the
    oracle run, mean-field estimate error of the proposed run).  M_tilde
    satisfies M[T] = Q[T] and M[t] = A[t]' M[t+1] A[t] + Q[t]; all arrays are
    indexed [t-1] for t = 1..T.
    """

    A_tilde: np.ndarray  # (T, 3d_x, 3d_x)
    Q_tilde: np.ndarray  # (T, 3d_x, 3d_x)
    M_tilde: np.ndarray  # (T, 3d_x, 3d_x)


@dataclass(frozen=True)
class GapReport:
    n: int
    delta_j_closed: float
    init_term: float
    noise_terms: np.ndarray  # (T-1,) contributions of t = 1..T-1
    delta_j_mc: float | None = None
    mc_stderr: float | None = None
    replications: int = 0


def build_error_system(cfg: ScenarioConfig, aug: AugmentedSystem, gains: GainSchedule) -> ErrorSystem:
    dims = cfg.dims
    T, d_x = dims.T, dims.d_x
    z3 = np.zeros((d_x, d_x))
    A_tilde = np.empty((T, 3 * d_x, 3 * d_x))
    Q_tilde = np.empty((T, 3 * d_x, 3 * d_x))
    for t in range(1, T + 1):
        k = t - 1
        B0, D0 = cfg.B0.at(t), cfg.D0.at(t)
        A0, A, B, D, E = cfg.A0.at(t), cfg.A.at(t), cfg.B.at(t), cfg.D.at(t), cfg.E.at(t)
        A_tilde[k] = np.block(
            [
                [A0 + B0 @ gains.L11[k], B0 @ gains.L12[k] + D0, -D0],
                [B @ gains.L21[k] + E, A + B @ gains.L22[k] + D, z3],
                [z3, z3, A + B @ gains.L_breve[k] + D],
            ]
        )
        Lbar = gains.L_bar[k]
        upper = -(aug.Qbar.at(t) + Lbar.T @ aug.Rbar.at(t) @ Lbar)
        lower = (
            cfg.Q.at(t)
            + cfg.P.at(t)
            + cfg.F.at(t)
            + gains.L_breve[k].T @ cfg.R.at(t) @ gains.L_breve[k]
        )
        qt = np.zeros((3 * d_x, 3 * d_x))
        qt[: 2 * d_x, : 2 * d_x] = upper
        qt[2 * d_x :, 2 * d_x :] = lower
        Q_tilde[k] = 0.5 * (qt + qt.T)
    M_tilde = np.empty_like(Q_tilde)
    M_tilde[T - 1] = Q_tilde[T - 1]
    for t in range(T - 1, 0, -1):
        m = A_tilde[t - 1].T @ M_tilde[t] @ A_tilde[t - 1] + Q_tilde[t - 1]
        M_tilde[t - 1] = 0.5 * (m + m.T)
    return ErrorSystem(A_tilde=A_tilde, Q_tilde=Q_tilde, M_tilde=M_tilde)


def _error_cov_block(var: np.ndarray) -> np.ndarray:
    """3x3 block covariance with the (e, zeta) blocks all equal to var."""
    d = var.shape[0]
    c = np.zeros((3 * d, 3 * d))
    c[d : 2 * d, d : 2 * d] = var
    c[d : 2 * d, 2 * d :] = var
    c[2 * d :, d : 2 * d] = var
    c[2 * d :, 2 * d :] = var
    return c


def delta_j_closed_form(cfg: ScenarioConfig, err: ErrorSystem, n: int) -> GapReport:
    """Trace formula for the gap at population size n.

    Only the covariances of the averaged initial states and noises enter, so
    the initial term uses Sigma_x / n regardless of the distribution family.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    T = err.M_tilde.shape[0]
    init_term = float(np.trace(_error_cov_block(cfg.init_cov / n) @ err.M_tilde[0]))
    cw = _error_cov_block(cfg.noise_cov_follower / n)
    noise_terms = np.array(
        [float(np.trace(cw @ err.M_tilde[t])) for t in range(1, T)]
    )
    total = init_term + math.fsum(noise_terms)
    return GapReport(n=n, delta_j_closed=total, init_term=init_term, noise_terms=noise_terms)


def gap_closed_form(cfg: ScenarioConfig, n: int | None = None) -> GapReport:
    """Convenience pipeline: synthesis + error system + trace formula."""
    aug = build_augmented(cfg)
    sol = solve_riccati(cfg, aug)
    gains = compute_gains(cfg, aug, sol)
    err = build_error_system(cfg, aug, gains)
    return delta_j_closed_form(cfg, err, cfg.dims.n if n is None else n)


def paired_costs(
    cfg: ScenarioConfig,
    gains: GainSchedule,
    n: int,
    replications: int,
    seed: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Realized costs of (proposed, oracle) on shared noise, one pair per
    replication.

    All replications are simulated in one vectorized sweep over t; both
    strategies consume the identical noise arrays, so the pairing is bitwise.
    """
    dims = cfg.dims
    T, d_x, d_u = dims.T, dims.d_x, dims.d_u
    reps = int(replications)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=[int(seed), _STREAM_BATCH]))

    if cfg.init_dist["type"] == "uniform-box":
        low = np.asarray(cfg.init_dist["low"])
        high = np.asarray(cfg.init_dist["high"])
        x_init = low + rng.random((reps, n, d_x)) * (high - low)
    else:
        gx = cov_factor(cfg.init_cov)
        x_init = cfg.init_mean + rng.standard_normal((reps, n, d_x)) @ gx.T
    g0 = cov_factor(cfg.noise_cov_leader)
    w0 = rng.standard_normal((T, reps, d_x)) @ g0.T
    gw = cov_factor(cfg.noise_cov_follower)
    w = rng.standard_normal((T, reps, n, d_x)) @ gw.T

    def _cost_step(t, x0, x, u0, u, acc):
        k = t - 1
        xb = x.mean(axis=1)
        acc += np.einsum("rd,de,re->r", x0, cfg.Q0.at(t), x0)
        db = xb - x0
        acc += np.einsum("rd,de,re->r", db, cfg.F.at(t), db)
        if dims.d_u0 > 0:
            acc += np.einsum("rd,de,re->r", u0, cfg.R0.at(t), u0)
        acc += np.einsum("rnd,de,rne->r", x, cfg.Q.at(t), x) / n
        dx0 = x - x0[:, None, :]
        acc += np.einsum("rnd,de,rne->r", dx0, cfg.P.at(t), dx0) / n
        acc += np.einsum("rnd,de,rne->r", u, cfg.R.at(t), u) / n
        dev = x - xb[:, None, :]
        acc += np.einsum("rnd,de,rne->r", dev, cfg.H.at(t), dev) / n
        return acc

    def _run(use_z: bool) -> np.ndarray:
        x0 = np.broadcast_to(cfg.leader_init, (reps, d_x)).copy()
        x = x_init.copy()
        z = np.broadcast_to(cfg.init_mean, (reps, d_x)).copy() if use_z else None
        acc = np.zeros(reps)
        for t in range(1, T + 1):
            k = t - 1
            xb = x.mean(axis=1)
            ref = z if use_z else xb
            Lb = gains.L_breve[k]
            L21, L22 = gains.L21[k], gains.L22[k]
            if dims.d_u0 > 0:
                u0 = x0 @ gains.L11[k].T + ref @ gains.L12[k].T
            else:
                u0 = np.zeros((reps, 0))
            u = x @ Lb.T + (x0 @ L21.T + ref @ (L22 - Lb).T)[:, None, :]
            acc = _cost_step(t, x0, x, u0, u, acc)
            x0_next = x0 @ cfg.A0.at(t).T + xb @ cfg.D0.at(t).T + w0[k]
            if dims.d_u0 > 0:
                x0_next = x0_next + u0 @ cfg.B0.at(t).T
            x = (
                x @ cfg.A.at(t).T
                + u @ cfg.B.at(t).T
                + (xb @ cfg.D.at(t).T + x0 @ cfg.E.at(t).T)[:, None, :]
                + w[k]
            )
            if use_z:
                z = z @ (cfg.A.at(t) + cfg.B.at(t) @ L22 + cfg.D.at(t)).T + x0 @ (
                    cfg.B.at(t) @ L21 + cfg.E.at(t)
                ).T
            x0 = x0_next
        return acc

    return _run(True), _run(False)


def delta_j_monte_carlo(
    cfg: ScenarioConfig,
    gains: GainSchedule,
    n: int,
    replications: int,
    seed: int,
) -> GapReport:
    """Paired Monte Carlo estimate of the gap, plus the closed form for the
    same n."""
    if replications < 2:
        raise ValueError("need at least 2 replications for a standard error")
    cost_p, cost_o = paired_costs(cfg, gains, n, replications, seed)
    diffs = cost_p - cost_o
    est = math.fsum(diffs) / replications
    var = math.fsum((diffs - est) ** 2) / (replications - 1)
    stderr = math.sqrt(var / replications)
    aug = build_augmented(cfg)
    err = build_error_system(cfg, aug, gains)
    closed = delta_j_closed_form(cfg, err, n)
    return GapReport(
        n=n,
        delta_j_closed=closed.delta_j_closed,
        init_term=closed.init_term,
        noise_terms=closed.noise_terms,
        delta_j_mc=est,
        mc_stderr=stderr,
        replications=replications,
    )


def convergence_sweep(cfg: ScenarioConfig, n_values) -> list[tuple[int, float, float]]:
    """Closed-form gap at each n; n * gap must be constant (exact 1/n law)."""
    n_values = [int(n) for n in n_values]
    if not n_values or any(n < 1 for n in n_values):
        raise ValueError("n_values must be non-empty positive integers")
    aug = build_augmented(cfg)
    sol = solve_riccati(cfg, aug)
    gains = compute_gains(cfg, aug, sol)
    err = build_error_system(cfg, aug, gains)
    rows = []
    for n in n_values:
        rep = delta_j_closed_form(cfg, err, n)
        rows.append((n, rep.delta_j_closed, n * rep.delta_j_closed))
    products = [r[2] for r in rows]
    scale = max(abs(p) for p in products)
    if scale > 0 and max(products) - min(products) > 1e-9 * scale:
        raise RuntimeError("n * gap is not constant across n; 1/n law violated")
    return rows


def fit_loglog_slope(rows) -> float | None:
    """Least-squares slope of log(gap) vs log(n); None if any gap is <= 0."""
    ns = np.array([r[0] for r in rows], dtype=float)
    gaps = np.array([r[1] for r in rows], dtype=float)
    if np.any(gaps <= 0) or len(rows) < 2:
        return None
    slope, _ = np.polyfit(np.log(ns), np.log(gaps), 1)
    return float(slope)


def centralized_oracle(cfg: ScenarioConfig, n: int) -> float:
    """Exact expected optimal cost of the stacked (n+1)-agent centralized LQR.

    Builds the full joint system of leader plus n followers, with the network
    cost written as one quadratic form (pairwise term via the explicit double
    sum), and runs the standard finite-horizon Riccati recursion on it.  The
    expected cost depends on the initial distribution only through its mean
    and covariance.  Kept to small n: the stacked state has (n+1)*d_x
    dimensions.
    """
    if n > 8:
        raise ValueError("centralized oracle supports n <= 8 only")
    dims = cfg.dims
    T, d_x, d_u, d_u0 = dims.T, dims.d_x, dims.d_u, dims.d_u0
    N = (n + 1) * d_x
    Nu = d_u0 + n * d_u

    # Selector of agent a's state block (a = 0 is the leader).
    def sel(a):
        s = np.zeros((d_x, N))
        s[:, a * d_x : (a + 1) * d_x] = np.eye(d_x)
        return s

    S = [sel(a) for a in range(n + 1)]
    Sbar = sum(S[1:]) / n

    A_s = np.empty((T, N, N))
    B_s = np.empty((T, N, Nu))
    Q_s = np.empty((T, N, N))
    R_s = np.empty((T, Nu, Nu))
    for t in range(1, T + 1):
        a = np.zeros((N, N))
        a[:d_x, :d_x] = cfg.A0.at(t)
        a[:d_x, d_x:] = np.tile(cfg.D0.at(t) / n, n)
        for i in range(1, n + 1):
            r0, r1 = i * d_x, (i + 1) * d_x
            a[r0:r1, :d_x] = cfg.E.at(t)
            a[r0:r1, d_x:] += np.tile(cfg.D.at(t) / n, n)
            a[r0:r1, r0:r1] += cfg.A.at(t)
        A_s[t - 1] = a

        b = np.zeros((N, Nu))
        b[:d_x, :d_u0] = cfg.B0.at(t)
        for i in range(1, n + 1):
            b[i * d_x : (i + 1) * d_x, d_u0 + (i - 1) * d_u : d_u0 + i * d_u] = cfg.B.at(t)
        B_s[t - 1] = b

        q = S[0].T @ cfg.Q0.at(t) @ S[0]
        df = Sbar - S[0]
        q += df.T @ cfg.F.at(t) @ df
        for i in range(1, n + 1):
            q += S[i].T @ cfg.Q.at(t) @ S[i] / n
            dp = S[i] - S[0]
            q += dp.T @ cfg.P.at(t) @ dp / n
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                dij = S[i] - S[j]
                q += dij.T @ cfg.H.at(t) @ dij / (2 * n * n)
        Q_s[t - 1] = 0.5 * (q + q.T)

        r = np.zeros((Nu, Nu))
        r[:d_u0, :d_u0] = cfg.R0.at(t)
        for i in range(n):
            r[d_u0 + i * d_u : d_u0 + (i + 1) * d_u, d_u0 + i * d_u : d_u0 + (i + 1) * d_u] = (
                cfg.R.at(t) / n
            )
        R_s[t - 1] = r

    M = np.zeros((T + 1, N, N))
    for t in range(T, 0, -1):
        At, Bt, Mn = A_s[t - 1], B_s[t - 1], M[t]
        inner = Bt.T @ Mn @ Bt + R_s[t - 1]
        gain_term = At.T @ Mn @ Bt @ np.linalg.solve(inner, Bt.T @ Mn @ At)
        m = At.T @ Mn @ At - gain_term + Q_s[t - 1]
        M[t - 1] = 0.5 * (m + m.T)

    mu1 = np.concatenate([cfg.leader_init] + [cfg.init_mean] * n)
    sigma1 = np.zeros((N, N))
    W = np.zeros((N, N))
    sigma1[:d_x, :d_x] = 0.0
    W[:d_x, :d_x] = cfg.noise_cov_leader
    for i in range(1, n + 1):
        r0, r1 = i * d_x, (i + 1) * d_x
        sigma1[r0:r1, r0:r1] = cfg.init_cov
        W[r0:r1, r0:r1] = cfg.noise_cov_follower

    cost = float(mu1 @ M[0] @ mu1 + np.trace(sigma1 @ M[0]))
    cost += math.fsum(float(np.trace(W @ M[t])) for t in range(1, T))
    return cost


def oracle_cost_monte_carlo(
    cfg: ScenarioConfig, gains: GainSchedule, n: int, replications: int, seed: int
) -> tuple[float, float, float, float]:
    """Monte Carlo mean and stderr of the oracle and proposed realized costs.

    Returns (oracle_mean, oracle_stderr, proposed_mean, proposed_stderr).
    """
    cost_p, cost_o = paired_costs(cfg, gains, n, replications, seed)

    def _mean_se(c):
        m = math.fsum(c) / len(c)
        v = math.fsum((c - m) ** 2) / (len(c) - 1)
        return m, math.sqrt(v / len(c))

    om, ose = _mean_se(cost_o)
    pm, pse = _mean_se(cost_p)
    return om, ose, pm, pse


def write_gap_csv(report: GapReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "delta_j_closed", "delta_j_mc", "mc_stderr", "replications"])
        w.writerow(
            [
                report.n,
                repr(report.delta_j_closed),
                "" if report.delta_j_mc is None else repr(report.delta_j_mc),
                "" if report.mc_stderr is None else repr(report.mc_stderr),
                report.replications,
            ]
        )


def write_sweep_csv(rows, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "delta_j", "n_times_delta_j"])
        for n, dj, ndj in rows:
            w.writerow([n, repr(dj), repr(ndj)])
