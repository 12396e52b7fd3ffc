import json
import math

import numpy as np
import pytest
import yaml

from socialdp.cli import main
from socialdp.errors import ConfigError
from socialdp.graph import generate_random_regular, write_edge_list
from socialdp.runner import (
    ExperimentConfig,
    GraphSpec,
    check_conditions,
    config_from_dict,
    load_config,
    run_experiment,
    run_sweep,
    simulate,
)

SMALL = {
    "graph": {"generator": "random_regular", "n": 32, "d": 4},
    "options": {"etas": [0.9, 0.5, 0.2]},
    "protocol": {"epsilon": 1.0, "beta": 0.6, "mu": 0.01},
    "dissemination": {"h_override": 1, "g_choice": 8},
    "run": {"rounds": 15, "seeds": [0, 1]},
}


@pytest.fixture
def small_cfg():
    return config_from_dict(SMALL)


@pytest.fixture
def small_yaml(tmp_path):
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(SMALL))
    return path


def test_config_parsing(small_cfg):
    assert small_cfg.n == 32 and small_cfg.m == 3
    assert small_cfg.h == 1.0 and small_cfg.g_value() == 8.0
    cfg = config_from_dict({"protocol": {"epsilon": "infinity"}, "options": {"m": 4}})
    assert math.isinf(cfg.epsilon)
    assert cfg.etas == pytest.approx((0.9, 0.7666666666666667, 0.6333333333333333, 0.5))
    assert cfg.to_dict()["epsilon"] == "infinity"
    assert config_from_dict({}).g_value(256) == pytest.approx(math.log(256) ** 2)


@pytest.mark.parametrize(
    "raw",
    [
        {"extra": {}},
        {"graph": {"colour": "red"}},
        {"protocol": {"epsilon": "lots"}},
        {"dissemination": {"g_choice": "cube"}},
        {"graph": {"generator": "erdos_renyi", "n": 10}},
        {"graph": {"generator": "lattice"}},
        {"options": {"etas": [0.9, 0.5], "m": 3}},
        {"run": {"rounds": -1}},
    ],
)
def test_config_rejects(raw):
    with pytest.raises(ConfigError):
        config_from_dict(raw)


def test_protocol_range_errors_surface():
    with pytest.raises(ValueError):
        config_from_dict({"protocol": {"beta": 0.3}})


def test_edge_list_config(tmp_path):
    write_edge_list(generate_random_regular(20, 4, seed=1), tmp_path / "g.txt")
    (tmp_path / "c.yaml").write_text("graph:\n  generator: edge_list\n  path: g.txt\nrun:\n  rounds: 3\n")
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.n == 20
    assert len(simulate(cfg, 0).rounds) == 3


def test_conditions_report():
    report = check_conditions(ExperimentConfig())
    assert report["conditions"]["theoretical_h"]
    # 6 * 0.001 <= ln(0.52 / 0.48)^2 = 0.0064
    assert report["conditions"]["six_mu_le_delta_sq"]
    assert report["h"] == pytest.approx(16 * 15 / 0.48)
    bad = check_conditions(ExperimentConfig(sigma=5, h_override=1))
    assert not bad["all_hold"]
    assert any("sigma" in w for w in bad["warnings"])
    assert any("outside theoretical constants" in w for w in bad["warnings"])


def test_simulate_basic_invariants(small_cfg):
    trace = simulate(small_cfg, seed=3)
    assert len(trace.rounds) == 15
    assert trace.q0 == pytest.approx([11 / 32, 11 / 32, 10 / 32])
    for rm in trace.rounds:
        assert rm.d_total == rm.d_j.sum() <= 32
        assert rm.s_j.sum() == 32
        assert rm.q.sum() == pytest.approx(1.0) or rm.empty
        assert not rm.truncated
    assert trace.total_privacy_loss == 15.0


def test_simulate_is_deterministic(small_cfg):
    a, b = simulate(small_cfg, 4), simulate(small_cfg, 4)
    assert np.array_equal(a.running_regret, b.running_regret)
    assert not np.array_equal(a.running_regret, simulate(small_cfg, 5).running_regret)


def test_zero_rounds(small_cfg, tmp_path):
    res = run_experiment(small_cfg.replace(rounds=0), seeds=[0], out=tmp_path)
    assert res.traces[0].rounds == []
    assert res.manifest["total_privacy_loss"] == 0.0
    assert (tmp_path / "trace_seed0.csv").read_text().startswith("round,q_1,q_2,q_3")


def test_greedy_locks_on():
    cfg = ExperimentConfig(
        graph=GraphSpec("random_regular", 32, d=4), etas=(1.0, 0.0), epsilon=math.inf, beta=1.0, mu=0.0,
        h_override=1, g_choice=8, rounds=10,
    )
    trace = simulate(cfg, seed=0)
    assert trace.rounds[0].q.tolist() == [1.0, 0.0]
    assert all(rm.d_total > 0 for rm in trace.rounds)
    assert trace.round_regret[1:] == pytest.approx(np.zeros(9))


def test_slot_cap_flags_rounds(small_cfg, tmp_path):
    res = run_experiment(small_cfg.replace(slot_cap=1), seeds=[0], out=tmp_path)
    assert res.manifest["runs"][0]["truncated_rounds"] == list(range(1, 16))


def test_run_experiment_outputs(small_cfg, tmp_path):
    res = run_experiment(small_cfg, out=tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["complete"] and manifest["seeds"] == [0, 1]
    assert manifest["outside_theoretical_constants"]
    assert manifest["total_privacy_loss"] == 15.0
    assert len(manifest["config_hash"]) == 64
    assert {r["file"] for r in manifest["runs"]} == {"trace_seed0.csv", "trace_seed1.csv"}
    assert (tmp_path / "aggregate.csv").exists()
    assert res.mean_running_regret.shape == (15,)


def test_outputs_byte_identical(small_cfg, tmp_path):
    run_experiment(small_cfg, out=tmp_path / "a")
    run_experiment(small_cfg, out=tmp_path / "b")
    for name in ("trace_seed0.csv", "trace_seed1.csv", "aggregate.csv", "manifest.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_sweep(small_cfg, tmp_path):
    results = run_sweep(small_cfg.replace(rounds=4, seeds=(0,)), "epsilon", ["0.5", "infinity"], out=tmp_path)
    assert set(results) == {"0.5", "infinity"}
    lines = (tmp_path / "comparison.csv").read_text().splitlines()
    assert lines[0] == "value,round,running_regret_mean,running_regret_std"
    assert len(lines) == 1 + 2 * 4
    assert (tmp_path / "epsilon=infinity" / "manifest.json").exists()
    with pytest.raises(ConfigError):
        run_sweep(small_cfg, "beta", [0.6])


def test_cli_run_and_validate(small_yaml, tmp_path, capsys):
    assert main(["run", "--config", str(small_yaml), "--seeds", "2", "--out", str(tmp_path / "o")]) == 0
    assert (tmp_path / "o" / "trace_seed2.csv").exists()
    assert main(["validate", "--config", str(small_yaml)]) == 1
    report = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert report["all_hold"] is False


def test_cli_graph(tmp_path, capsys):
    path = tmp_path / "g.txt"
    assert main(["graph", "gen", "random_regular", "--n", "24", "--d", "4", "--seed", "3", "--out", str(path)]) == 0
    capsys.readouterr()
    assert main(["graph", "check", str(path)]) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["n"] == 24 and info["edges"] == 48 and info["walk_length"] >= 1


def test_cli_reports_errors(tmp_path, capsys):
    path = tmp_path / "bad.yaml"
    path.write_text("protocol:\n  epsilon: lots\n")
    assert main(["validate", "--config", str(path)]) == 2
    assert "error" in capsys.readouterr().err
