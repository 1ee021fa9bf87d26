"""Problem instances: dimensions, matrix schedules, validation, (de)serialization.

A scenario describes one leader and ``n`` homogeneous followers with linear
dynamics coupled through the population mean of the follower states, plus the
quadratic cost weights.  Time is 1-based in files and documentation; arrays
are stored 0-based internally, so ``schedule.values[t - 1]`` is the matrix at
time ``t``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AssumptionError, ScenarioParseError, ScenarioShapeError

# Tolerances for finite-precision inputs read from text files.
PSD_TOL = 1e-9
PD_TOL = 1e-12

_SEED_MASK = (1 << 64) - 1


def _inf_norm(m: np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(m), axis=1)))


def min_eig(m: np.ndarray) -> float:
    if m.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(0.5 * (m + m.T)).min())


def is_psd(m: np.ndarray) -> bool:
    return min_eig(m) >= -PSD_TOL * (1.0 + _inf_norm(m))


def is_pd(m: np.ndarray) -> bool:
    return min_eig(m) > PD_TOL * (1.0 + _inf_norm(m))


@dataclass(frozen=True)
class Dimensions:
    d_x: int
    d_u: int
    d_u0: int
    T: int
    n: int

    def __post_init__(self):
        if self.d_x < 1 or self.d_u < 1:
            raise ScenarioShapeError("state and follower input dimensions must be >= 1")
        if self.d_u0 < 0:
            raise ScenarioShapeError("leader input dimension must be >= 0")
        if self.T < 1:
            raise ScenarioShapeError("horizon T must be >= 1")
        if self.n < 1:
            raise ScenarioShapeError("number of followers n must be >= 1")

    @property
    def leaderless(self) -> bool:
        return self.d_u0 == 0


@dataclass(frozen=True)
class MatrixSchedule:
    """T matrices of a fixed shape, one per time step t = 1..T."""

    values: np.ndarray  # (T, rows, cols)
    constant: bool = False  # broadcast from a single matrix

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.values.ndim != 3:
            raise ScenarioShapeError("schedule values must be a (T, rows, cols) array")
        if not np.all(np.isfinite(self.values)):
            raise ScenarioShapeError("schedule contains non-finite entries")
        self.values.setflags(write=False)

    def at(self, t: int) -> np.ndarray:
        """Matrix at 1-based time t."""
        return self.values[t - 1]

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape[1:]


# Names and shapes of the matrix-valued scenario fields, keyed by the
# (rows, cols) expressed in terms of the Dimensions attributes.
_SCHEDULE_SHAPES = {
    "A0": ("d_x", "d_x"),
    "B0": ("d_x", "d_u0"),
    "D0": ("d_x", "d_x"),
    "A": ("d_x", "d_x"),
    "B": ("d_x", "d_u"),
    "D": ("d_x", "d_x"),
    "E": ("d_x", "d_x"),
    "Q0": ("d_x", "d_x"),
    "R0": ("d_u0", "d_u0"),
    "F": ("d_x", "d_x"),
    "Q": ("d_x", "d_x"),
    "P": ("d_x", "d_x"),
    "R": ("d_u", "d_u"),
    "H": ("d_x", "d_x"),
}

_SYMMETRIC_WEIGHTS = ("Q0", "R0", "F", "Q", "P", "R", "H")


@dataclass(frozen=True)
class ScenarioConfig:
    dims: Dimensions
    A0: MatrixSchedule
    B0: MatrixSchedule
    D0: MatrixSchedule
    A: MatrixSchedule
    B: MatrixSchedule
    D: MatrixSchedule
    E: MatrixSchedule
    Q0: MatrixSchedule
    R0: MatrixSchedule
    F: MatrixSchedule
    Q: MatrixSchedule
    P: MatrixSchedule
    R: MatrixSchedule
    H: MatrixSchedule
    init_mean: np.ndarray
    init_cov: np.ndarray
    init_dist: dict
    noise_cov_leader: np.ndarray
    noise_cov_follower: np.ndarray
    leader_init: np.ndarray
    seed: int

    def with_n(self, n: int) -> "ScenarioConfig":
        """Same scenario with a different follower population size."""
        return replace(self, dims=replace(self.dims, n=n))


@dataclass(frozen=True)
class AugmentedSystem:
    """Joint (leader, mean-field) system used by the second Riccati recursion."""

    Abar: MatrixSchedule  # (T, 2d_x, 2d_x)
    Bbar: MatrixSchedule  # (T, 2d_x, d_u0 + d_u)
    Qbar: MatrixSchedule  # (T, 2d_x, 2d_x)
    Rbar: MatrixSchedule  # (T, d_u0 + d_u, d_u0 + d_u)


def _coerce_schedule(name: str, raw, T: int, rows: int, cols: int) -> MatrixSchedule:
    """Accept a scalar (1x1), a matrix (constant in t), or a list of T matrices."""
    if rows == 0 or cols == 0:
        if raw not in (None, 0, 0.0, []):
            arr = np.asarray(raw, dtype=float)
            if arr.size != 0:
                raise ScenarioShapeError(
                    f"{name}: expected empty ({rows}x{cols}) matrix in leaderless mode"
                )
        return MatrixSchedule(np.zeros((T, rows, cols)), constant=True)
    if raw is None:
        raise ScenarioParseError(f"missing required matrix field '{name}'")
    if np.isscalar(raw):
        if (rows, cols) != (1, 1):
            raise ScenarioShapeError(f"{name}: scalar given but shape is {rows}x{cols}")
        return MatrixSchedule(np.full((T, 1, 1), float(raw)), constant=True)
    try:
        arr = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ScenarioParseError(f"{name}: not numeric: {exc}") from None
    if arr.ndim == 2:
        if arr.shape != (rows, cols):
            raise ScenarioShapeError(f"{name}: shape {arr.shape} != ({rows}, {cols})")
        return MatrixSchedule(np.broadcast_to(arr, (T, rows, cols)).copy(), constant=True)
    if arr.ndim == 3:
        if arr.shape[0] != T:
            raise ScenarioShapeError(f"{name}: schedule length {arr.shape[0]} != T = {T}")
        if arr.shape[1:] != (rows, cols):
            raise ScenarioShapeError(f"{name}: shape {arr.shape[1:]} != ({rows}, {cols})")
        return MatrixSchedule(arr.copy(), constant=False)
    raise ScenarioShapeError(f"{name}: expected scalar, matrix, or list of T matrices")


def _coerce_vector(name: str, raw, d: int) -> np.ndarray:
    if raw is None:
        raise ScenarioParseError(f"missing required vector field '{name}'")
    arr = np.atleast_1d(np.asarray(raw, dtype=float))
    if arr.shape != (d,):
        raise ScenarioShapeError(f"{name}: shape {arr.shape} != ({d},)")
    if not np.all(np.isfinite(arr)):
        raise ScenarioShapeError(f"{name}: non-finite entries")
    return arr


def _coerce_cov(name: str, raw, d: int) -> np.ndarray:
    if raw is None:
        raise ScenarioParseError(f"missing required covariance field '{name}'")
    if np.isscalar(raw):
        if d != 1:
            raise ScenarioShapeError(f"{name}: scalar given but dimension is {d}")
        arr = np.array([[float(raw)]])
    else:
        arr = np.asarray(raw, dtype=float)
    if arr.shape != (d, d):
        raise ScenarioShapeError(f"{name}: shape {arr.shape} != ({d}, {d})")
    arr = 0.5 * (arr + arr.T)
    if not is_psd(arr):
        raise AssumptionError(f"{name} is not positive semi-definite (min eig {min_eig(arr):.3e})")
    return arr


def _parse_init_dist(raw, d_x: int):
    """Returns (init_dist dict, implied_mean or None, implied_cov or None)."""
    if raw is None:
        return {"type": "gaussian"}, None, None
    if not isinstance(raw, dict) or "type" not in raw:
        raise ScenarioParseError("init_dist must be an object with a 'type' field")
    kind = raw["type"]
    if kind == "gaussian":
        return {"type": "gaussian"}, None, None
    if kind == "uniform-box":
        low = _coerce_vector("init_dist.low", raw.get("low"), d_x)
        high = _coerce_vector("init_dist.high", raw.get("high"), d_x)
        if np.any(high < low):
            raise ScenarioParseError("init_dist: high < low in some coordinate")
        mean = 0.5 * (low + high)
        cov = np.diag((high - low) ** 2 / 12.0)
        dist = {"type": "uniform-box", "low": low.tolist(), "high": high.tolist()}
        return dist, mean, cov
    raise ScenarioParseError(f"unknown init_dist type '{kind}'")


def scenario_from_dict(data: dict) -> ScenarioConfig:
    """Build and fully validate a scenario from a parsed JSON-style dict."""
    if not isinstance(data, dict):
        raise ScenarioParseError("scenario must be a JSON object")
    dims_raw = data.get("dims")
    if not isinstance(dims_raw, dict):
        raise ScenarioParseError("missing or malformed 'dims' object")
    try:
        dims = Dimensions(
            d_x=int(dims_raw["d_x"]),
            d_u=int(dims_raw["d_u"]),
            d_u0=int(dims_raw.get("d_u0", dims_raw["d_u"])),
            T=int(dims_raw["T"]),
            n=int(dims_raw["n"]),
        )
    except KeyError as exc:
        raise ScenarioParseError(f"dims is missing field {exc}") from None

    sizes = {"d_x": dims.d_x, "d_u": dims.d_u, "d_u0": dims.d_u0}
    sched = {}
    for name, (r, c) in _SCHEDULE_SHAPES.items():
        sched[name] = _coerce_schedule(name, data.get(name), dims.T, sizes[r], sizes[c])

    # Symmetrize weights on load; dynamics matrices are left as given.
    for name in _SYMMETRIC_WEIGHTS:
        s = sched[name]
        sched[name] = MatrixSchedule(
            0.5 * (s.values + np.transpose(s.values, (0, 2, 1))), constant=s.constant
        )

    init_dist, implied_mean, implied_cov = _parse_init_dist(data.get("init_dist"), dims.d_x)
    if implied_mean is not None:
        init_mean, init_cov = implied_mean, implied_cov
    else:
        init_mean = _coerce_vector("init_mean", data.get("init_mean"), dims.d_x)
        init_cov = _coerce_cov("init_cov", data.get("init_cov"), dims.d_x)

    cfg = ScenarioConfig(
        dims=dims,
        **sched,
        init_mean=init_mean,
        init_cov=init_cov,
        init_dist=init_dist,
        noise_cov_leader=_coerce_cov("noise_cov_leader", data.get("noise_cov_leader"), dims.d_x),
        noise_cov_follower=_coerce_cov(
            "noise_cov_follower", data.get("noise_cov_follower"), dims.d_x
        ),
        leader_init=_coerce_vector("leader_init", data.get("leader_init"), dims.d_x),
        seed=int(data.get("seed", 0)) & _SEED_MASK,
    )
    validate_scenario(cfg)
    return cfg


def validate_scenario(cfg: ScenarioConfig) -> None:
    """Check the standing positive-definiteness assumptions at every t."""
    dims = cfg.dims
    if dims.leaderless:
        for name in ("D0", "Q0"):
            sched = getattr(cfg, name)
            if np.any(sched.values != 0.0):
                raise ScenarioShapeError(
                    f"{name} must be all-zero in leaderless mode (d_u0 = 0)"
                )
    for t in range(1, dims.T + 1):
        qph = cfg.Q.at(t) + cfg.P.at(t) + cfg.H.at(t)
        if not is_psd(qph):
            raise AssumptionError(
                f"Q + P + H not PSD at t = {t} (min eig {min_eig(qph):.3e})"
            )
        if not is_pd(cfg.R.at(t)):
            raise AssumptionError(
                f"R not positive definite at t = {t} (min eig {min_eig(cfg.R.at(t)):.3e})"
            )
        if not dims.leaderless and not is_pd(cfg.R0.at(t)):
            raise AssumptionError(
                f"R0 not positive definite at t = {t} (min eig {min_eig(cfg.R0.at(t)):.3e})"
            )
        qbar = _qbar_at(cfg, t)
        if not is_psd(qbar):
            raise AssumptionError(
                f"Qbar not PSD at t = {t} (min eig {min_eig(qbar):.3e})"
            )


def _qbar_at(cfg: ScenarioConfig, t: int) -> np.ndarray:
    pf = cfg.P.at(t) + cfg.F.at(t)
    return np.block([[cfg.Q0.at(t) + pf, -pf], [-pf, cfg.Q.at(t) + pf]])


def build_augmented(cfg: ScenarioConfig) -> AugmentedSystem:
    """Assemble the joint (leader, mean-field) block system for each t.

    In leaderless mode the leader input channel is absent, so Bbar has only
    the follower column block and Rbar is just R.
    """
    dims = cfg.dims
    T, d_x = dims.T, dims.d_x
    du_all = dims.d_u0 + dims.d_u
    Abar = np.empty((T, 2 * d_x, 2 * d_x))
    Bbar = np.empty((T, 2 * d_x, du_all))
    Qbar = np.empty((T, 2 * d_x, 2 * d_x))
    Rbar = np.empty((T, du_all, du_all))
    for t in range(1, T + 1):
        Abar[t - 1] = np.block(
            [[cfg.A0.at(t), cfg.D0.at(t)], [cfg.E.at(t), cfg.A.at(t) + cfg.D.at(t)]]
        )
        bb = np.zeros((2 * d_x, du_all))
        bb[:d_x, : dims.d_u0] = cfg.B0.at(t)
        bb[d_x:, dims.d_u0 :] = cfg.B.at(t)
        Bbar[t - 1] = bb
        Qbar[t - 1] = _qbar_at(cfg, t)
        rb = np.zeros((du_all, du_all))
        rb[: dims.d_u0, : dims.d_u0] = cfg.R0.at(t)
        rb[dims.d_u0 :, dims.d_u0 :] = cfg.R.at(t)
        Rbar[t - 1] = rb
    const = all(
        getattr(cfg, nm).constant
        for nm in ("A0", "D0", "E", "A", "D", "B0", "B", "Q0", "P", "F", "Q", "R0", "R")
    )
    return AugmentedSystem(
        Abar=MatrixSchedule(Abar, constant=const),
        Bbar=MatrixSchedule(Bbar, constant=const),
        Qbar=MatrixSchedule(Qbar, constant=const),
        Rbar=MatrixSchedule(Rbar, constant=const),
    )


def load_scenario(path) -> ScenarioConfig:
    """Load and validate a scenario from a JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"malformed scenario file {path}: {exc}") from None
    return scenario_from_dict(data)


def _schedule_to_json(sched: MatrixSchedule):
    if sched.shape[0] == 0 or sched.shape[1] == 0:
        return None
    if sched.constant:
        m = sched.values[0]
        if m.shape == (1, 1):
            return m[0, 0]
        return m.tolist()
    return sched.values.tolist()


def scenario_to_dict(cfg: ScenarioConfig) -> dict:
    dims = cfg.dims
    data = {
        "dims": {"d_x": dims.d_x, "d_u": dims.d_u, "d_u0": dims.d_u0, "T": dims.T, "n": dims.n}
    }
    for name in _SCHEDULE_SHAPES:
        val = _schedule_to_json(getattr(cfg, name))
        if val is not None:
            data[name] = val
    data["init_dist"] = cfg.init_dist
    if cfg.init_dist["type"] == "gaussian":
        data["init_mean"] = cfg.init_mean.tolist()
        data["init_cov"] = cfg.init_cov.tolist()
    data["noise_cov_leader"] = cfg.noise_cov_leader.tolist()
    data["noise_cov_follower"] = cfg.noise_cov_follower.tolist()
    data["leader_init"] = cfg.leader_init.tolist()
    data["seed"] = cfg.seed
    return data


def save_scenario(cfg: ScenarioConfig, path) -> None:
    """Write a scenario back to JSON; numbers round-trip bitwise."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_dict(cfg), fh, indent=2)
        fh.write("\n")
