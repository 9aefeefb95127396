import json
import subprocess
import sys

import pytest

from adaptive_eit.cli import build_parser, config_from_args, main


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"K": 3, "theta": 0.5}))
    args = build_parser().parse_args(["reconstruct", "--config", str(cfg), "--theta", "0.6",
                                      "--out", "x"])
    c = config_from_args(args)
    assert (c.K, c.theta, c.alpha) == (3, 0.6, 2e-2)


def test_forward_and_synth(tmp_path, capsys):
    assert main(["forward", "--n", "8", "--n-patterns", "3"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["dofs"] == 81 and len(out["voltages"]) == 3
    assert abs(sum(out["voltages"][0])) < 1e-12
    path = tmp_path / "data.json"
    assert main(["synth", "--seed", "4", "--fine-factor", "2", "--out", str(path)]) == 0
    d = json.loads(path.read_text())
    assert d["seed"] == 4 and d["config"]["seed"] == 4


def test_synth_requires_seed(capsys):
    with pytest.raises(SystemExit):
        main(["synth"])
    assert "--seed" in capsys.readouterr().err


def test_reconstruct_and_compare(tmp_path, capsys):
    data = tmp_path / "data.json"
    main(["synth", "--seed", "0", "--fine-factor", "2", "--out", str(data)])
    common = ["--data", str(data), "--fine-factor", "2", "--K", "2", "--no-write-fields"]
    assert main(["reconstruct", *common, "--out", str(tmp_path / "a")]) == 0
    assert main(["reconstruct", *common, "--mode", "uniform", "--out", str(tmp_path / "u")]) == 0
    capsys.readouterr()
    assert main(["compare", str(tmp_path / "a"), str(tmp_path / "u")]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["L1_ratio"] > 0


def test_reconstruct_rejects_mismatched_data(tmp_path, capsys):
    data = tmp_path / "data.json"
    main(["synth", "--seed", "0", "--fine-factor", "2", "--n-patterns", "4", "--out", str(data)])
    assert main(["reconstruct", "--data", str(data), "--out", str(tmp_path / "r")]) == 1
    assert "shape" in capsys.readouterr().err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "adaptive_eit.cli", "--help"],
                       capture_output=True, text=True)
    assert r.returncode == 0
    for cmd in ("forward", "synth", "reconstruct", "compare"):
        assert cmd in r.stdout
