import json

import pytest

from twistpara.cli import main


def test_sieve_then_density_and_find(tmp_path, capsys):
    out = tmp_path / "set.txt"
    assert main(["sieve", "-N", "3000", "--sieve-height", "200", "-o", str(out)]) == 0
    text = out.read_text()
    assert "# config" in text and "N=3000" in text
    config = json.loads(text.split("# config ", 1)[1].splitlines()[0])
    assert config["sieve_height"] == 200 and config["command"] == "sieve"

    assert main(["density", "--set", str(out), "-T", "300"]) == 0
    assert "smoothed_density=" in capsys.readouterr().out
    assert main(["find", "--set", str(out), "--n", "1"]) == 0
    assert "c=" in capsys.readouterr().out
    assert main(["diagnose", "--set", str(out), "--window", "2", "10"]) == 0
    assert "unconditional" in capsys.readouterr().out


def test_certify_and_verify(tmp_path, capsys):
    path = tmp_path / "cert.json"
    assert main(["certify", "--n", "1", "-N", "3000", "--sieve-height", "200", "-o", str(path)]) == 0
    doc = json.loads(path.read_text())
    assert doc["metadata"]["config"]["N"] == 3000
    assert main(["verify", str(path)]) == 0
    assert capsys.readouterr().out.startswith("valid")

    doc["c"] = str(int(doc["c"]) + 1)
    path.write_text(json.dumps(doc))
    assert main(["verify", str(path)]) == 1
    assert "invalid" in capsys.readouterr().out


def test_exhausted_search_exits_one(capsys):
    assert main(["find", "--guided", "--policy", "rigorous", "-N", "3000", "--sieve-height", "100"]) == 1
    assert "exhausted" in capsys.readouterr().err


def test_usage_errors_exit_two(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["find", "--curve", "0,0,0,0,0"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["bogus"])
    assert info.value.code == 2
    assert main(["sieve", "--curve", "0,0,0,-25,0", "--parity", "-N", "100"]) == 2
    assert main(["verify", str(tmp_path / "missing.json")]) == 1


def test_parity_run_on_x019(capsys):
    assert main(["sieve", "-N", "500", "--sieve-height", "50", "--parity", "--search-bound", "5"]) == 0
