import json
import subprocess
import sys

import pytest

from platoon_dss.cli import EXIT_DIVERGED, EXIT_FAIL, EXIT_INPUT, EXIT_OK, main

SHORT = ["--dt", "0.05", "--t-end", "5"]


@pytest.fixture(autouse=True)
def _no_env(monkeypatch):
    monkeypatch.delenv("PLATOON_DSS_OUT", raising=False)


def test_certify_reference_gains(tmp_path, capsys):
    assert main(["certify", "--out", str(tmp_path)]) == EXIT_OK
    assert "FEASIBLE" in capsys.readouterr().out
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert cert["feasible"] and cert["cbar_sq"] > 0


def test_certify_infeasible_gains(tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[gains]\n" + "\n".join(f"{k} = 0" for k in (
        "kp1", "kp2", "kv", "kp0", "kv0", "k_int", "gp1", "gp2", "gv", "gp0", "gv0")) + "\n")
    assert main(["certify", "--config", str(cfg)]) == EXIT_FAIL


def test_input_errors(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[gains]\nkp1 = x\n")
    assert main(["certify", "--config", str(cfg)]) == EXIT_INPUT
    assert "bad.ini:2: [gains] kp1" in capsys.readouterr().err
    assert main(["certify", "--config", str(tmp_path / "missing.ini")]) == EXIT_INPUT
    assert main(["simulate", "--dt", "-1", "--out", str(tmp_path)]) == EXIT_INPUT
    with pytest.raises(SystemExit):
        main(["simulate", "--variant", "c9"])


def test_simulate_writes_records_and_figures(tmp_path, capsys):
    code = main(["simulate", *SHORT, "--nominal-mass", "--figures", "--out", str(tmp_path)])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "holds" in out
    stem = "reference_n5_c2_seed1"
    for suffix in ("trajectory.csv", "metrics.csv", "bounds.csv", "norms.png", "gaps.png", "states.png"):
        assert (tmp_path / f"{stem}_{suffix}").stat().st_size > 0


def test_simulate_c1_skips_bound_check(tmp_path, capsys):
    assert main(["simulate", *SHORT, "--variant", "c1", "--seed", "4", "--out", str(tmp_path)]) == EXIT_OK
    assert "n/a" in capsys.readouterr().out
    assert (tmp_path / "reference_n5_c1_seed4_trajectory.csv").exists()


def test_env_var_overrides_out(tmp_path, monkeypatch):
    env_dir, flag_dir = tmp_path / "env", tmp_path / "flag"
    monkeypatch.setenv("PLATOON_DSS_OUT", str(env_dir))
    assert main(["simulate", *SHORT, "--out", str(flag_dir)]) == EXIT_OK
    assert (env_dir / "reference_n5_c2_seed1_metrics.csv").exists()
    assert not flag_dir.exists()


def test_report_renders_comparison_figures(tmp_path):
    assert main(["report", *SHORT, "--out", str(tmp_path)]) == EXIT_OK
    for name in ("norms", "gaps", "states"):
        assert (tmp_path / f"reference_n5_seed1_{name}.png").exists()
    assert (tmp_path / "reference_n5_c1_seed1_metrics.csv").exists()


def test_sweep(tmp_path):
    assert main(["sweep", *SHORT, "--n-list", "2,3", "--out", str(tmp_path)]) == EXIT_OK
    lines = (tmp_path / "reference_c2_sweep.csv").read_text().splitlines()
    assert lines[0] == "N,worst_sup_err,bound_envelope" and len(lines) == 3
    assert main(["sweep", *SHORT, "--n-list", "", "--out", str(tmp_path)]) == EXIT_OK


def test_divergence_exit_code(tmp_path):
    cfg = tmp_path / "unstable.ini"
    cfg.write_text("[gains]\nkp1 = 1\nkp2 = 1\nkv = 0\nkp0 = -50\nkv0 = -50\nk_int = 1\n"
                   "gp1 = 1\ngp2 = 1\ngv = 0\ngp0 = 0\ngv0 = 0\n"
                   "[run]\nt_end = 50\ndt = 0.05\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_DIVERGED


def test_synthesize_is_byte_identical(tmp_path):
    paths = []
    for d in ("a", "b"):
        assert main(["synthesize", "--seed", "5", "--out", str(tmp_path / d)]) == EXIT_OK
        paths.append(tmp_path / d / "reference_synthesized_gains.ini")
    assert paths[0].read_bytes() == paths[1].read_bytes()
    # the record is itself a valid config
    assert main(["certify", "--config", str(paths[0])]) == EXIT_OK


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "platoon_dss", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "synthesize" in res.stdout
