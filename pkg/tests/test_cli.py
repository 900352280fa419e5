import json

import pytest

from secretshare.cli import main


def run(tmp_path, name, *args):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def test_eval_example(tmp_path, capsys):
    code, out = run(tmp_path, "e", "eval", "--task", "det", "--family", "partial", "--v", "0.72", "--theta", "0.2356",
                    "--format", "json")
    assert code == 0
    rec = json.loads((out / "eval.json").read_text())
    assert rec["S"] == pytest.approx(0.7617, abs=5e-5)
    man = json.loads((out / "manifest.json").read_text())
    assert man["subcommand"] == "eval" and man["outputs"] == ["eval.json"]
    assert {"params", "seed", "version", "wall_time_s"} <= set(man)


def test_classical_and_threshold(tmp_path):
    code, out = run(tmp_path, "c", "classical", "--task", "stoch", "--format", "json")
    assert code == 0 and json.loads((out / "classical.json").read_text())["max_exact"] == "5/8"
    code, out = run(tmp_path, "t", "threshold", "--task", "stoch", "--family", "isotropic", "--format", "json")
    assert json.loads((out / "threshold.json").read_text())["threshold"] == pytest.approx(0.4, abs=1e-6)


def test_validation_exit_codes(tmp_path):
    assert run(tmp_path, "a", "eval", "--v", "1.5")[0] == 2
    assert run(tmp_path, "b", "eval", "--family", "partial", "--theta", "2")[0] == 2
    assert run(tmp_path, "c", "certify", "--state", str(tmp_path / "missing.json"))[0] == 2
    assert run(tmp_path, "d", "experiment", "--events", "0")[0] == 2
    with pytest.raises(SystemExit) as e:
        main(["eval", "--no-such-flag"])
    assert e.value.code == 2


def test_solver_failure_exit_code(tmp_path, monkeypatch):
    from secretshare import steering

    def boom(*a, **k):
        raise steering.SolverError("forced")

    monkeypatch.setattr(steering, "certify", boom)
    assert run(tmp_path, "s", "certify", "--v", "0.5", "--level", "0")[0] == 3


def test_certify_state_file(tmp_path):
    from secretshare.states import isotropic

    p = tmp_path / "rho.json"
    p.write_text(json.dumps(isotropic(0.3).to_json()))
    code, out = run(tmp_path, "cs", "certify", "--state", str(p), "--level", "1", "--format", "json")
    assert code == 0
    assert json.loads((out / "certify.json").read_text())["status"] == "CertifiedUnsteerable"


def test_reproduce_prints_deltas(tmp_path, capsys):
    code, out = run(tmp_path, "r", "reproduce", "--table", "IX")
    assert code == 0
    text = (out / "reproduce.csv").read_text().splitlines()
    assert text[0].startswith("table,parameter,published,computed,delta")
    assert len(text) == 6
    assert "delta=" in capsys.readouterr().out


def test_sweep_svg(tmp_path):
    pytest.importorskip("matplotlib")
    code, out = run(tmp_path, "sw", "sweep", "--points", "5", "--svg")
    assert code == 0 and (out / "sweep.svg").read_text().lstrip().startswith("<?xml")


def test_manifest_rerun_into_same_dir(tmp_path):
    code, out = run(tmp_path, "v", "verify-tables")
    before = (out / "verify_tables.csv").read_bytes()
    assert main(["--from-manifest", str(out / "manifest.json")]) == 0
    assert (out / "verify_tables.csv").read_bytes() == before
