import json
import subprocess
import sys
from pathlib import Path

import pytest

from rtflab.cli import EXIT_DATA, EXIT_FAIL, EXIT_OK, EXIT_SETUP, EXIT_USAGE, RunReport, main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def _run(capsys, *argv):
    code = main(list(argv) + ["--json"])
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_usage_errors(capsys):
    assert main([]) == EXIT_USAGE
    assert main(["pairs", "enumerate"]) == EXIT_USAGE
    assert main(["global", "verify"]) == EXIT_USAGE
    assert main(["arch", "schur", "--k", "x"]) == EXIT_USAGE


def test_pairs_enumerate(capsys):
    code, rep = _run(capsys, "pairs", "enumerate", "--q", "5", "--level", "0")
    assert code == EXIT_OK
    assert rep["outputs"]["count"] == 2 and rep["schema"] == "rtflab-report/1"
    code, rep = _run(capsys, "pairs", "enumerate", "--q", "7", "--level", "1/2")
    assert rep["outputs"]["count"] == 6


def test_global_verify_ex1(capsys):
    code, rep = _run(capsys, "global", "verify", "--config", str(CONFIGS / "ex1.json"))
    assert code == EXIT_OK
    assert rep["outputs"]["verdict"] == "equal"
    code, rep = _run(capsys, "global", "conductor", "--config", str(CONFIGS / "ex1.json"))
    assert code == EXIT_OK and rep["outputs"]["total"] == 853776


def test_subconvexity_range(capsys):
    assert _run(capsys, "global", "subconvexity", "--t", "1/10")[0] == EXIT_OK
    assert _run(capsys, "global", "subconvexity", "--t", "1/6")[0] == EXIT_SETUP


def test_setup_and_data_errors(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"N1": 5, "N2": 3, "N3": 1, "k": [2], "m": [0], "disc_E": -4}))
    code, rep = _run(capsys, "global", "verify", "--config", str(bad))
    assert code == EXIT_SETUP and "SplittingMismatch" in rep["outputs"]["error"]
    code, rep = _run(capsys, "global", "verify", "--config", str(tmp_path / "missing.json"))
    assert code == EXIT_DATA
    # m = 0 admits no Hecke character for this level
    code, rep = _run(capsys, "lfunc", "check-thm1", "--config", str(CONFIGS / "ex1.json"))
    assert code == EXIT_SETUP and "NoHeckeCharacter" in rep["outputs"]["error"]


def test_orbital_compare(capsys):
    code, rep = _run(capsys, "orbital", "compare", "--q", "3", "--cls", "other", "--splitting", "inert", "--xi", "-1")
    assert code == EXIT_OK
    assert all(rep["verdicts"].values())


def test_arch_and_L1eta(capsys):
    code, rep = _run(capsys, "arch", "schur", "--k", "3", "--m", "1")
    assert code == EXIT_OK
    code, rep = _run(capsys, "lfunc", "L1eta", "--disc", "-7")
    assert code == EXIT_OK


def test_report_roundtrip(capsys):
    _, rep = _run(capsys, "arch", "orbital", "--k", "2", "--m", "0", "--xi", "-1")
    back = RunReport.from_json(rep).to_json()
    assert back == rep


def test_deterministic_output(capsys):
    args = ("global", "enumerate", "--config", str(CONFIGS / "ex1.json"))
    _, a = _run(capsys, *args)
    _, b = _run(capsys, *args)
    a.pop("timing"), b.pop("timing")
    assert a == b


def test_failed_verdict_exit_code(capsys, monkeypatch):
    import rtflab.cli as cli

    def fake(args, rep):
        rep.verdicts["forced"] = False

    monkeypatch.setitem(cli.HANDLERS, "pairs", fake)
    assert main(["pairs", "enumerate", "--q", "3"]) == EXIT_FAIL


@pytest.mark.parametrize("argv", [["--version"], ["pairs", "enumerate", "--q", "3"]])
def test_module_entry_point(argv):
    r = subprocess.run([sys.executable, "-m", "rtflab.cli", *argv], capture_output=True, text=True, timeout=120)
    assert r.returncode == 0
