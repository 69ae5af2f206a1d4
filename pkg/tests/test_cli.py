import json
import subprocess
import sys

import numpy as np
import pytest

from qzsg import game
from qzsg.cli import main
from qzsg.config import config_hash, parse_run_config


def write(path, obj):
    path.write_text(json.dumps(obj))
    return path


@pytest.fixture
def mp_file(tmp_path):
    assert main(["gen-game", "matching-pennies", "--out", str(tmp_path / "mp.json")]) == 0
    return tmp_path / "mp.json"


def run_config(tmp_path, cfg, name="cfg.json", *extra, command="run"):
    path = write(tmp_path / name, cfg)
    return main([command, "--config", str(path), *extra])


def load(path):
    return json.loads(path.read_text())


def test_gen_game_matching_pennies(tmp_path, capsys):
    assert main(["gen-game", "matching-pennies", "--out", str(tmp_path / "g.json")]) == 0
    spec = game.GameSpec.from_dict(load(tmp_path / "g.json"))
    assert np.array_equal(spec.r, np.diag([1.0, -1, -1, 1]))
    assert "eigenvalue -1.000000000  x2" in capsys.readouterr().out


def test_gen_game_unitary_reports_payoff_entries(tmp_path, capsys):
    write(tmp_path / "p.json", [[1, -1], [-1, 1]])
    out = tmp_path / "u.json"
    assert main(["gen-game", "unitary", "--payoff", str(tmp_path / "p.json"), "--seed", "7", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert "-1.000000000  x2" in text and " 1.000000000  x2" in text
    g = game.GameSpec.from_dict(load(out)).observable()
    assert np.abs(g.spectrum - [-1, -1, 1, 1]).max() < 1e-10


def test_gen_game_multi_qubit(tmp_path, capsys):
    out = tmp_path / "q.json"
    assert main(["gen-game", "multi-qubit", "--qubits", "2", "--seed", "3", "--out", str(out)]) == 0
    g = game.GameSpec.from_dict(load(out)).observable()
    assert g.r.shape == (16, 16)
    assert game.exploitability(g, np.eye(4) / 4, np.eye(4) / 4) <= 1e-8


def test_gen_game_diagonal_from_csv(tmp_path):
    (tmp_path / "p.csv").write_text("1,2,3\n4,5,6\n")
    out = tmp_path / "d.json"
    assert main(["gen-game", "diagonal", "--payoff", str(tmp_path / "p.csv"), "--out", str(out)]) == 0
    spec = game.GameSpec.from_dict(load(out))
    assert (spec.dim_a, spec.dim_b) == (2, 3)
    assert np.array_equal(np.diag(spec.r).real, [1, 2, 3, 4, 5, 6])


def test_gen_game_rejects_bad_input(tmp_path, capsys):
    (tmp_path / "p.csv").write_text("1,2,3\n4,5,6\n")
    args = ["gen-game", "unitary", "--payoff", str(tmp_path / "p.csv"), "--seed", "1", "--out", str(tmp_path / "x.json")]
    assert main(args) == 2
    assert "square" in capsys.readouterr().err
    assert main(["gen-game", "diagonal", "--out", str(tmp_path / "x.json")]) == 2
    assert main(["gen-game", "diagonal", "--payoff", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "x.json")]) == 2
    assert main(["gen-game", "multi-qubit", "--qubits", "5", "--seed", "0", "--out", str(tmp_path / "x.json")]) == 2


def test_run_mmwu(tmp_path, mp_file):
    cfg = {"game": "mp.json", "mode": "mmwu", "mmwu": {"epsilon": 0.1, "init": "random", "record_every": 50},
           "reference": {"analytic": "uniform"}, "output_dir": "out"}
    assert run_config(tmp_path, cfg) == 0
    out = tmp_path / "out"
    summary = load(out / "summary.json")
    assert summary["exploitability"] <= 0.1
    assert summary["certificate"]["iterations"] == 8873
    manifest = load(out / "manifest.json")
    assert set(manifest) == {"tool_version", "config_hash", "seeds", "wall_time_s", "artifact_paths"}
    assert manifest["config_hash"] == config_hash(cfg)
    assert (out / "trajectory.csv").exists()


def test_run_replicator_zero_horizon(tmp_path, mp_file):
    cfg = {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 0},
           "reference": {"analytic": "uniform"}, "output_dir": "out"}
    assert run_config(tmp_path, cfg) == 0
    summary = load(tmp_path / "out" / "summary.json")
    assert summary["n_samples"] == 1
    assert summary["conservation"]["max_drift"] == 0.0
    assert len((tmp_path / "out" / "trajectory.csv").read_text().splitlines()) == 2


def test_run_replicator_with_states_and_figures(tmp_path, mp_file):
    cfg = {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 5, "step_h": 0.01, "record_every": 10},
           "reference": {"analytic": "uniform"}, "output_dir": "out", "dump_states": True}
    assert run_config(tmp_path, cfg, "cfg.json", "--figures") == 0
    out = tmp_path / "out"
    for name in ("trajectory.csv", "states.jsonl", "entropy.png", "bloch.png", "frob_return.png"):
        assert (out / name).stat().st_size > 0
    assert load(out / "summary.json")["conservation"]["max_drift"] < 1e-9
    assert str(out / "bloch.png") in load(out / "manifest.json")["artifact_paths"]


def test_reference_from_find_nash_output(tmp_path):
    g = game.diagonal_game([[2.0, -1.0], [-1.0, 1.0]])
    write(tmp_path / "g.json", g.to_dict())
    assert run_config(tmp_path, {"game": "g.json", "mode": "find-nash", "find-nash": {"epsilon": 0.05}, "output_dir": "nash"}) == 0
    assert load(tmp_path / "nash" / "summary.json")["converged"]
    cfg = {"game": "g.json", "mode": "replicator", "replicator": {"t_end": 2, "step_h": 0.01},
           "reference": {"analytic": "nash/nash.json"}, "output_dir": "rep"}
    assert run_config(tmp_path, cfg, "rep.json") == 0
    summary = load(tmp_path / "rep" / "summary.json")
    assert 0 < summary["reference_exploitability"] <= 0.05


def test_mmwu_reference(tmp_path, mp_file):
    cfg = {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 1, "step_h": 0.01},
           "reference": {"mmwu": {"epsilon": 1e-3}}, "output_dir": "out"}
    assert run_config(tmp_path, cfg) == 0
    assert load(tmp_path / "out" / "summary.json")["reference_exploitability"] == 0.0


def test_malformed_game_exits_2(tmp_path, capsys):
    bad = game.matching_pennies().to_dict()
    bad["r"][0][1] = [0.3, 0.0]
    write(tmp_path / "bad.json", bad)
    cfg = {"game": "bad.json", "mode": "replicator", "replicator": {"t_end": 1}, "output_dir": "out"}
    assert run_config(tmp_path, cfg) == 2
    assert "Hermitian" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg",
    [
        {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 1}, "mmwu": {}, "output_dir": "o"},
        {"game": "mp.json", "mode": "replicator", "output_dir": "o"},
        {"game": "mp.json", "mode": "teleport", "teleport": {}, "output_dir": "o"},
        {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 1}},
        {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 1, "warp": 9}, "output_dir": "o"},
        {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 1, "step_h": 2}, "output_dir": "o"},
        {"game": "missing.json", "mode": "replicator", "replicator": {"t_end": 1}, "output_dir": "o"},
        {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 1}, "reference": {"oracle": 1}, "output_dir": "o"},
        {"game": "mp.json", "mode": "mmwu", "mmwu": {"schedule": {"kind": "cosine"}}, "output_dir": "o"},
    ],
)
def test_invalid_configs_exit_2(tmp_path, mp_file, cfg):
    assert run_config(tmp_path, cfg) == 2


def test_non_interior_reference_exits_2(tmp_path, mp_file):
    ref = {"rho": [[1, 0], [0, 0]], "sigma": [[0.5, 0], [0, 0.5]]}
    cfg = {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 1, "step_h": 0.1},
           "reference": {"analytic": ref}, "output_dir": "o"}
    assert run_config(tmp_path, cfg) == 2


def test_unparseable_config_exits_2(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    assert main(["run", "--config", str(tmp_path / "c.json")]) == 2
    assert main(["run", "--config", str(tmp_path / "absent.json")]) == 2


def test_numerical_failure_exits_3(tmp_path, capsys):
    write(tmp_path / "g.json", game.diagonal_game([[1e300, -1e300], [-1e300, 1e300]]).to_dict())
    cfg = {"game": "g.json", "mode": "mmwu", "output_dir": "o",
           "mmwu": {"epsilon": 0.5, "max_iters": 5, "init": "random", "schedule": {"kind": "constant", "mu": 1e10}}}
    with np.errstate(all="ignore"):
        assert run_config(tmp_path, cfg) == 3
    assert "numerical" in capsys.readouterr().err


def sweep_cfg(**kw):
    block = {"t_end": 40, "step_h": 0.01, "seeds": [0, 1, 2]}
    block.update(kw)
    return {"game": "mp.json", "mode": "recurrence-sweep", "recurrence-sweep": block, "output_dir": "sweep"}


def test_sweep_rows_and_summary(tmp_path, mp_file):
    assert run_config(tmp_path, sweep_cfg(seeds=[2, 0, 1]), command="sweep") == 0
    lines = (tmp_path / "sweep" / "sweep.csv").read_text().splitlines()
    assert lines[0] == "seed,t_return,max_excursion"
    assert [row.split(",")[0] for row in lines[1:]] == ["0", "1", "2"]
    summary = load(tmp_path / "sweep" / "summary.json")
    assert summary["recurrence_fraction"] == 1.0
    assert load(tmp_path / "sweep" / "manifest.json")["seeds"] == [0, 1, 2, 3, 4, 5]


def test_sweep_is_byte_identical_across_runs_and_pool_sizes(tmp_path, mp_file, monkeypatch):
    texts = []
    for threads in ("1", "3", "1"):
        monkeypatch.setenv("QZSG_THREADS", threads)
        assert run_config(tmp_path, sweep_cfg(), command="sweep") == 0
        texts.append((tmp_path / "sweep" / "sweep.csv").read_bytes())
    assert texts[0] == texts[1] == texts[2]


def test_replicator_csv_is_byte_identical(tmp_path, mp_file):
    cfg = {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 2, "step_h": 0.01},
           "reference": {"analytic": "uniform"}, "output_dir": "out"}
    run_config(tmp_path, cfg)
    first = (tmp_path / "out" / "trajectory.csv").read_bytes()
    run_config(tmp_path, cfg)
    assert (tmp_path / "out" / "trajectory.csv").read_bytes() == first


def test_sweep_short_horizon_and_single_seed(tmp_path, mp_file):
    assert run_config(tmp_path, sweep_cfg(t_end=0.05, seeds=[4]), command="sweep") == 0
    lines = (tmp_path / "sweep" / "sweep.csv").read_text().splitlines()
    assert len(lines) == 2
    assert lines[1].split(",")[1] == ""
    assert load(tmp_path / "sweep" / "summary.json")["recurrence_fraction"] == 0.0


def test_sweep_figures_and_return_frac_flag(tmp_path, mp_file):
    assert run_config(tmp_path, sweep_cfg(), "cfg.json", "--figures", "--return-frac", "0.3", command="sweep") == 0
    assert (tmp_path / "sweep" / "sweep.png").exists()
    assert load(tmp_path / "sweep" / "summary.json")["return_frac"] == 0.3


def test_sweep_rejects_other_modes_and_bad_threads(tmp_path, mp_file, monkeypatch):
    cfg = {"game": "mp.json", "mode": "replicator", "replicator": {"t_end": 1}, "output_dir": "o"}
    assert run_config(tmp_path, cfg, command="sweep") == 2
    monkeypatch.setenv("QZSG_THREADS", "zero")
    assert run_config(tmp_path, sweep_cfg(), command="sweep") == 2


def test_probe_modes(tmp_path, mp_file):
    cfg = {"game": "mp.json", "mode": "probe-limit", "probe-limit": {"mus": [0.1, 0.01], "steps": 50, "seed": 0},
           "output_dir": "limit"}
    assert run_config(tmp_path, cfg) == 0
    assert load(tmp_path / "limit" / "summary.json")["strictly_decreasing"]
    cfg = {"game": "mp.json", "mode": "probe-divergence", "probe-divergence": {"n_states": 3}, "output_dir": "div"}
    assert run_config(tmp_path, cfg) == 0
    assert load(tmp_path / "div" / "summary.json")["max_abs_divergence"] <= 1e-6
    assert len((tmp_path / "div" / "divergence.csv").read_text().splitlines()) == 4


def test_gen_game_mode_in_run(tmp_path):
    cfg = {"mode": "gen-game", "gen-game": {"kind": "multi-qubit", "qubits": 1, "seed": 0}, "output_dir": "g"}
    assert run_config(tmp_path, cfg) == 0
    assert game.GameSpec.from_dict(load(tmp_path / "g" / "game.json")).r.shape == (4, 4)


def test_config_hash_ignores_key_order(tmp_path):
    a = {"mode": "replicator", "replicator": {"t_end": 1, "step_h": 0.1}, "output_dir": "o", "game": "mp.json"}
    b = {"game": "mp.json", "output_dir": "o", "replicator": {"step_h": 0.1, "t_end": 1}, "mode": "replicator"}
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash({**a, "output_dir": "p"})
    inline = {**a, "game": game.matching_pennies().to_dict()}
    assert parse_run_config(inline, tmp_path).game.name == "matching-pennies"


def test_console_script(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "qzsg.cli", "gen-game", "matching-pennies", "--out", str(tmp_path / "g.json")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0 and (tmp_path / "g.json").exists()
    proc = subprocess.run([sys.executable, "-m", "qzsg.cli", "run"], capture_output=True, text=True)
    assert proc.returncode == 2
