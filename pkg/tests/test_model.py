import json

import numpy as np
import pytest

from mfteam import (
    AssumptionError,
    ScenarioParseError,
    ScenarioShapeError,
    build_augmented,
    load_scenario,
    save_scenario,
    scenario_from_dict,
)
from mfteam.cli import bundled_scenario
from mfteam.model import is_pd, is_psd, min_eig

from conftest import make_random_scenario


def test_example1_loads_with_broadcast(example1_cfg):
    cfg = example1_cfg
    assert cfg.dims.T == 40 and cfg.dims.n == 1000
    assert cfg.A0.values.shape == (40, 1, 1)
    assert cfg.A0.constant
    assert cfg.B0.at(17) == pytest.approx(0.8)
    assert cfg.R0.at(1) == pytest.approx(200.0)
    # uniform [0, 4] implies mean 2 and variance 16/12
    assert cfg.init_mean == pytest.approx([2.0])
    assert cfg.init_cov[0, 0] == pytest.approx(16.0 / 12.0)
    assert cfg.leader_init == pytest.approx([6.0])


def test_example2_loads_leaderless(example2_cfg):
    cfg = example2_cfg
    assert cfg.dims.leaderless
    assert cfg.B0.values.shape == (40, 1, 0)
    assert cfg.R0.values.shape == (40, 0, 0)
    assert np.all(cfg.D0.values == 0.0)
    assert np.all(cfg.Q0.values == 0.0)
    assert cfg.B.at(1) == pytest.approx(0.5)


def test_r_zero_rejected(example1_cfg):
    data = json.load(open(bundled_scenario("example1")))
    data["R"] = 0.0
    with pytest.raises(AssumptionError, match="R not positive definite"):
        scenario_from_dict(data)


def test_shape_error_names_matrix():
    data = json.load(open(bundled_scenario("example1")))
    data["B"] = [[1.0, 2.0]]  # 1x2, should be 1x1
    with pytest.raises(ScenarioShapeError, match="B:"):
        scenario_from_dict(data)


def test_parse_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(ScenarioParseError):
        load_scenario(p)
    with pytest.raises(ScenarioParseError):
        load_scenario(tmp_path / "missing.json")
    data = json.load(open(bundled_scenario("example1")))
    del data["A"]
    with pytest.raises(ScenarioParseError, match="'A'"):
        scenario_from_dict(data)


def test_assumption_violation_names_time():
    data = json.load(open(bundled_scenario("example1")))
    T = data["dims"]["T"]
    # PD everywhere except t = 7
    sched = [[[100.0]] for _ in range(T)]
    sched[6] = [[-1.0]]
    data["R"] = sched
    with pytest.raises(AssumptionError, match="t = 7"):
        scenario_from_dict(data)


def test_build_augmented_example1_blocks(example1_cfg):
    aug = build_augmented(example1_cfg)
    np.testing.assert_allclose(aug.Abar.at(3), [[1.0, 0.1], [0.15, 1.05]])
    np.testing.assert_allclose(aug.Bbar.at(3), np.diag([0.8, 0.9]))
    np.testing.assert_allclose(aug.Qbar.at(3), [[26.0, -25.0], [-25.0, 27.0]])
    np.testing.assert_allclose(aug.Rbar.at(3), np.diag([200.0, 100.0]))


def test_build_augmented_decoupled():
    data = json.load(open(bundled_scenario("example1")))
    data["D0"] = data["D"] = data["E"] = 0.0
    data["P"] = data["F"] = 0.0
    cfg = scenario_from_dict(data)
    aug = build_augmented(cfg)
    assert aug.Abar.at(1)[0, 1] == 0.0 and aug.Abar.at(1)[1, 0] == 0.0
    assert aug.Qbar.at(1)[0, 1] == 0.0 and aug.Qbar.at(1)[1, 0] == 0.0


def test_build_augmented_leaderless(example2_cfg):
    aug = build_augmented(example2_cfg)
    np.testing.assert_allclose(aug.Abar.at(1), [[1.0, 0.0], [0.0, 1.05]])
    np.testing.assert_allclose(aug.Bbar.at(1), [[0.0], [0.5]])
    np.testing.assert_allclose(aug.Rbar.at(1), [[100.0]])
    assert is_psd(aug.Qbar.at(1))


def test_symmetrization_invariance():
    data = json.load(open(bundled_scenario("example1")))
    data["dims"]["d_x"] = 2
    data["dims"]["d_u"] = 2
    data["dims"]["d_u0"] = 2
    for k in ("A0", "B0", "D0", "A", "B", "D", "E"):
        data[k] = (np.eye(2) * data[k]).tolist()
    for k in ("Q0", "R0", "F", "Q", "P", "R", "H"):
        w = float(data[k])
        data[k] = [[w, 0.3], [-0.3, w]]  # asymmetric; symmetrizes to diag
    data["init_mean"] = [2.0, 2.0]
    data["init_dist"] = {"type": "gaussian"}
    data["init_cov"] = np.eye(2).tolist()
    data["noise_cov_leader"] = (0.02 * np.eye(2)).tolist()
    data["noise_cov_follower"] = (0.05 * np.eye(2)).tolist()
    data["leader_init"] = [6.0, 6.0]
    cfg = scenario_from_dict(data)
    # weights were symmetrized on load
    np.testing.assert_allclose(cfg.Q.at(1), np.diag([2.0, 2.0]))
    aug = build_augmented(cfg)
    data_sym = dict(data)
    for k in ("Q0", "R0", "F", "Q", "P", "R", "H"):
        m = np.asarray(data[k])
        data_sym[k] = (0.5 * (m + m.T)).tolist()
    aug_sym = build_augmented(scenario_from_dict(data_sym))
    np.testing.assert_array_equal(aug.Qbar.values, aug_sym.Qbar.values)
    np.testing.assert_array_equal(aug.Rbar.values, aug_sym.Rbar.values)


@pytest.mark.parametrize("name", ["example1", "example2", "scalar_test"])
def test_shipped_scenarios_eigen_floors(name):
    cfg = load_scenario(bundled_scenario(name))
    aug = build_augmented(cfg)
    for t in range(1, cfg.dims.T + 1):
        assert min_eig(aug.Qbar.at(t)) >= -1e-9
        assert min_eig(aug.Rbar.at(t)) > 1e-8
        assert is_pd(aug.Rbar.at(t))


@pytest.mark.parametrize("name", ["example1", "example2", "scalar_test"])
def test_round_trip_bitwise(name, tmp_path):
    cfg = load_scenario(bundled_scenario(name))
    p = tmp_path / "round.json"
    save_scenario(cfg, p)
    cfg2 = load_scenario(p)
    assert cfg.dims == cfg2.dims
    for field in ("A0", "B0", "D0", "A", "B", "D", "E", "Q0", "R0", "F", "Q", "P", "R", "H"):
        np.testing.assert_array_equal(
            getattr(cfg, field).values, getattr(cfg2, field).values
        )
    np.testing.assert_array_equal(cfg.init_mean, cfg2.init_mean)
    np.testing.assert_array_equal(cfg.init_cov, cfg2.init_cov)
    np.testing.assert_array_equal(cfg.noise_cov_follower, cfg2.noise_cov_follower)
    assert cfg.init_dist == cfg2.init_dist
    assert cfg.seed == cfg2.seed


def test_random_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(5)
    for i in range(5):
        cfg = make_random_scenario(rng, time_varying=bool(i % 2))
        p = tmp_path / f"r{i}.json"
        save_scenario(cfg, p)
        cfg2 = load_scenario(p)
        for field in ("A0", "B0", "A", "B", "Q", "R", "H"):
            np.testing.assert_array_equal(
                getattr(cfg, field).values, getattr(cfg2, field).values
            )


def test_dims_validation():
    with pytest.raises(ScenarioShapeError):
        scenario_from_dict({"dims": {"d_x": 0, "d_u": 1, "d_u0": 1, "T": 5, "n": 1}})
    with pytest.raises(ScenarioShapeError):
        scenario_from_dict({"dims": {"d_x": 1, "d_u": 1, "d_u0": -1, "T": 5, "n": 1}})
