import json

import pytest

from hlgrowth.cli import main
from hlgrowth.records import read_record, write_record


def grow_args(out, *extra):
    return ["grow", "--c", "1e-3", "--alpha", "1", "--sigma", "0.2", "--particles", "80",
            "--seed", "4", "--out", str(out), *extra]


def test_grow_then_replay(tmp_path, capsys):
    d = tmp_path / "run"
    assert main(grow_args(d)) == 0
    assert "N=80" in capsys.readouterr().out
    rec = read_record(d)
    assert rec.seed == 4 and len(rec) == 80 and "wall_clock_s" in rec.metadata
    assert main(["replay", str(d)]) == 0


def test_replay_mismatch(tmp_path, capsys):
    d = tmp_path / "run"
    main(grow_args(d))
    rec = read_record(d)
    th = rec.thetas.copy()
    th[9] += 1e-9
    rec.thetas = th
    write_record(rec, d)
    assert main(["replay", str(d)]) == 1
    assert "particle 10" in capsys.readouterr().err


def test_grow_time_and_modes(tmp_path):
    assert main(["grow", "--c", "0.01", "--alpha", "0.5", "--sigma-mode", "starred",
                 "--time", "0.5", "--seed", "0", "--out", str(tmp_path / "s")]) == 0
    assert len(read_record(tmp_path / "s")) == 50


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["grow", "--c", "1e-3"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(grow_args(tmp_path / "x", "--time", "1"))  # --particles and --time together
    assert exc.value.code == 2
    assert main(["grow", "--c", "-1", "--alpha", "1", "--sigma", "0.2", "--particles", "3",
                 "--seed", "0", "--out", str(tmp_path / "y")]) == 2
    assert main(["replay", str(tmp_path / "nothing")]) == 2


def test_numerical_failure_exit(tmp_path, capsys):
    code = main(["grow", "--c", "0.5", "--alpha", "2000", "--sigma", "0.001", "--particles",
                 "50", "--seed", "1", "--out", str(tmp_path / "f")])
    assert code == 3
    assert "step" in capsys.readouterr().err


def test_render_commands(tmp_path):
    d = tmp_path / "run"
    main(grow_args(d))
    assert main(["render-cluster", str(d), "--out", str(tmp_path / "c.svg")]) == 0
    assert (tmp_path / "c.svg").read_text().count("<polyline") == 80
    assert main(["render-flow", str(d), "--out", str(tmp_path / "f.svg"), "--tracers", "8",
                 "--stride", "10"]) == 0
    assert (tmp_path / "f.svg").exists()


def test_render_zero_particles(tmp_path):
    d = tmp_path / "empty"
    assert main(["grow", "--c", "1e-3", "--alpha", "1", "--sigma-mode", "infinity",
                 "--particles", "0", "--seed", "0", "--out", str(d)]) == 0
    assert main(["render-cluster", str(d), "--out", str(tmp_path / "e.svg")]) == 0


def test_analyze_and_unknown_experiment(tmp_path, capsys):
    cfg = tmp_path / "rho.json"
    cfg.write_text(json.dumps({"experiment": "rho-limit", "seeds": [0],
                               "settings": {"c": [1e-3, 1e-4]},
                               "tolerances": {"deviation": {"value": 0.02,
                                                            "kind": "paper-anchored"}}}))
    out = tmp_path / "rep.json"
    assert main(["analyze", str(cfg), "--out", str(out)]) == 0
    assert json.loads(out.read_text())["passed"] is True
    assert out.with_suffix(".txt").read_text().startswith("experiment rho-limit: PASS")
    cfg.write_text(json.dumps({"experiment": "nope", "seeds": [0], "settings": {},
                               "tolerances": {}}))
    assert main(["analyze", str(cfg)]) == 2
    assert "unknown experiment" in capsys.readouterr().err
