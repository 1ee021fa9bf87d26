"""Backward Riccati recursions and feedback-gain assembly.

Each agent can run this synthesis offline: one d_x-dimensional recursion for
the deviation-from-mean part of the control and one 2*d_x-dimensional
recursion for the joint (leader, mean-field) part.  Terminal value matrices
are zero, so the terminal gains are exactly zero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError

from .errors import SynthesisError
from .model import AugmentedSystem, MatrixSchedule, ScenarioConfig


@dataclass(frozen=True)
class RiccatiSolution:
    """Value matrices for t = 1..T+1; index [t-1], terminal slot all-zero."""

    M_breve: np.ndarray  # (T+1, d_x, d_x)
    M_bar: np.ndarray  # (T+1, 2d_x, 2d_x)


@dataclass(frozen=True)
class GainSchedule:
    """Feedback gains for t = 1..T; index [t-1].

    L_bar is the joint gain on (leader state, mean-field estimate); its four
    blocks are split at row d_u0 and column d_x.  In leaderless mode the
    leader rows (L11, L12) are empty.
    """

    L_breve: np.ndarray  # (T, d_u, d_x)
    L_bar: np.ndarray  # (T, d_u0 + d_u, 2d_x)
    d_u0: int
    d_x: int

    @property
    def L11(self) -> np.ndarray:
        return self.L_bar[:, : self.d_u0, : self.d_x]

    @property
    def L12(self) -> np.ndarray:
        return self.L_bar[:, : self.d_u0, self.d_x :]

    @property
    def L21(self) -> np.ndarray:
        return self.L_bar[:, self.d_u0 :, : self.d_x]

    @property
    def L22(self) -> np.ndarray:
        return self.L_bar[:, self.d_u0 :, self.d_x :]


def _riccati_backward(A, B, Qadd, R, T, label):
    """Shared backward step for both recursions.

    A, B, Qadd, R are (T, ., .) arrays; returns M of length T+1 with
    M[T] = 0.  The inner matrix B'MB + R is solved via a Cholesky
    factorization rather than an explicit inverse.
    """
    d = A.shape[1]
    M = np.zeros((T + 1, d, d))
    for t in range(T, 0, -1):
        At, Bt = A[t - 1], B[t - 1]
        Mn = M[t]
        BtM = Bt.T @ Mn
        inner = BtM @ Bt + R[t - 1]
        cross = BtM @ At  # B' M A
        if inner.size:
            try:
                c = cho_factor(0.5 * (inner + inner.T), lower=True)
                gain_term = At.T @ Mn @ Bt @ cho_solve(c, cross)
            except LinAlgError:
                raise SynthesisError(
                    f"{label}: inner matrix B'MB + R singular at t = {t}", t=t
                ) from None
        else:
            gain_term = np.zeros((d, d))
        Mt = At.T @ Mn @ At - gain_term + Qadd[t - 1]
        M[t - 1] = 0.5 * (Mt + Mt.T)
    return M


def solve_riccati_breve(cfg: ScenarioConfig) -> np.ndarray:
    """Value matrices of the deviation recursion, additive weight Q + P + H."""
    Qadd = cfg.Q.values + cfg.P.values + cfg.H.values
    return _riccati_backward(
        cfg.A.values, cfg.B.values, Qadd, cfg.R.values, cfg.dims.T, "breve"
    )


def solve_riccati_bar(aug: AugmentedSystem) -> np.ndarray:
    """Value matrices of the joint (leader, mean-field) recursion."""
    return _riccati_backward(
        aug.Abar.values, aug.Bbar.values, aug.Qbar.values, aug.Rbar.values,
        aug.Abar.T, "bar",
    )


def solve_riccati(cfg: ScenarioConfig, aug: AugmentedSystem) -> RiccatiSolution:
    return RiccatiSolution(M_breve=solve_riccati_breve(cfg), M_bar=solve_riccati_bar(aug))


def _gain_at(A, B, R, Mn, label, t):
    BtM = B.T @ Mn
    inner = BtM @ B + R
    if inner.size == 0:
        return np.zeros((0, A.shape[1]))
    try:
        c = cho_factor(0.5 * (inner + inner.T), lower=True)
    except LinAlgError:
        raise SynthesisError(
            f"{label}: inner matrix B'MB + R singular at t = {t}", t=t
        ) from None
    return -cho_solve(c, BtM @ A) + 0.0  # + 0.0 normalizes -0.0 entries


def compute_gains(
    cfg: ScenarioConfig, aug: AugmentedSystem, sol: RiccatiSolution
) -> GainSchedule:
    """Feedback gains for t = 1..T from the Riccati solutions."""
    dims = cfg.dims
    T = dims.T
    L_breve = np.empty((T, dims.d_u, dims.d_x))
    L_bar = np.empty((T, dims.d_u0 + dims.d_u, 2 * dims.d_x))
    for t in range(1, T + 1):
        L_breve[t - 1] = _gain_at(
            cfg.A.at(t), cfg.B.at(t), cfg.R.at(t), sol.M_breve[t], "breve", t
        )
        L_bar[t - 1] = _gain_at(
            aug.Abar.at(t), aug.Bbar.at(t), aug.Rbar.at(t), sol.M_bar[t], "bar", t
        )
    return GainSchedule(L_breve=L_breve, L_bar=L_bar, d_u0=dims.d_u0, d_x=dims.d_x)


def synthesize(cfg: ScenarioConfig):
    """Full pipeline: augmented system, both Riccati solutions, gains."""
    from .model import build_augmented

    aug = build_augmented(cfg)
    sol = solve_riccati(cfg, aug)
    gains = compute_gains(cfg, aug, sol)
    return aug, sol, gains


def riccati_residuals(cfg: ScenarioConfig, aug: AugmentedSystem, sol: RiccatiSolution):
    """Max absolute residual of each recursion when M_t, M_{t+1} are substituted back.

    Returns (res_breve, res_bar), each a length-T array.
    """

    def _res(A, B, Qadd, R, M, T):
        out = np.empty(T)
        for t in range(1, T + 1):
            At, Bt, Mn = A[t - 1], B[t - 1], M[t]
            inner = Bt.T @ Mn @ Bt + R[t - 1]
            if inner.size:
                gain_term = At.T @ Mn @ Bt @ np.linalg.solve(inner, Bt.T @ Mn @ At)
            else:
                gain_term = 0.0
            rhs = At.T @ Mn @ At - gain_term + Qadd[t - 1]
            out[t - 1] = np.max(np.abs(M[t - 1] - 0.5 * (rhs + rhs.T)))
        return out

    res_breve = _res(
        cfg.A.values, cfg.B.values,
        cfg.Q.values + cfg.P.values + cfg.H.values,
        cfg.R.values, sol.M_breve, cfg.dims.T,
    )
    res_bar = _res(
        aug.Abar.values, aug.Bbar.values, aug.Qbar.values, aug.Rbar.values,
        sol.M_bar, cfg.dims.T,
    )
    return res_breve, res_bar


def _flat_headers(prefix, rows, cols):
    return [f"{prefix}[{i}][{j}]" for i in range(rows) for j in range(cols)]


def write_riccati_csv(sol: RiccatiSolution, path) -> None:
    """One row per t = 1..T+1, matrices flattened row-major."""
    Tp1, d, _ = sol.M_breve.shape
    d2 = sol.M_bar.shape[1]
    header = ["t"] + _flat_headers("M_breve", d, d) + _flat_headers("M_bar", d2, d2)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(1, Tp1 + 1):
            row = [t]
            row += [repr(float(v)) for v in sol.M_breve[t - 1].ravel()]
            row += [repr(float(v)) for v in sol.M_bar[t - 1].ravel()]
            w.writerow(row)


def write_gains_csv(gains: GainSchedule, path) -> None:
    """One row per t = 1..T; leaderless schedules omit the L11/L12 columns."""
    T, d_u, d_x = gains.L_breve.shape
    d_u0 = gains.d_u0
    header = ["t"] + _flat_headers("L_breve", d_u, d_x)
    if d_u0 > 0:
        header += _flat_headers("L11", d_u0, d_x) + _flat_headers("L12", d_u0, d_x)
    header += _flat_headers("L21", d_u, d_x) + _flat_headers("L22", d_u, d_x)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for t in range(T):
            row = [t + 1]
            row += [repr(float(v)) for v in gains.L_breve[t].ravel()]
            if d_u0 > 0:
                row += [repr(float(v)) for v in gains.L11[t].ravel()]
                row += [repr(float(v)) for v in gains.L12[t].ravel()]
            row += [repr(float(v)) for v in gains.L21[t].ravel()]
            row += [repr(float(v)) for v in gains.L22[t].ravel()]
            w.writerow(row)
