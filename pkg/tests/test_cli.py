import json

import pytest

from laserjump import experiments
from laserjump.cli import main
from laserjump.errors import ConfigError, EmptyTrace
from laserjump.experiments import ExperimentSpec, run_experiment, validate_config
from laserjump.fileio import read_trace

SMALL_FIG2 = ["--runs", "3", "--duration", "2", "--omega-max", "3"]


def test_fig2_defaults_are_valid():
    spec = ExperimentSpec.with_defaults("fig2")
    assert validate_config(spec) == []
    assert (spec.N, spec.alpha, spec.J, spec.runs, spec.duration) == (100, 20.0, 1000.0, 200, 20.0)


def test_infeasible_alpha_reported():
    diag = validate_config(ExperimentSpec.with_defaults("fig2", alpha=101.0))
    assert any("infeasible steady state" in d for d in diag)


def test_all_violations_listed():
    diag = validate_config(ExperimentSpec.with_defaults("fig2", runs=0, duration=-1.0, seed=-3, pump="loud"))
    assert len(diag) >= 4


def test_run_experiment_rejects_bad_config(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(ExperimentSpec.with_defaults("fig2", runs=0, output_dir=str(tmp_path)))


def test_spec_hash_ignores_placement():
    a = ExperimentSpec.with_defaults("fig2", output_dir="a", jobs=1)
    b = ExperimentSpec.with_defaults("fig2", output_dir="b", jobs=4)
    assert a.spec_hash == b.spec_hash
    assert a.spec_hash != ExperimentSpec.with_defaults("fig2", seed=1).spec_hash


def test_exit_code_config_error(capsys):
    assert main(["fig2", "--alpha", "101", "--check"]) == 2
    assert "infeasible" in capsys.readouterr().err
    assert main(["fig2", "--runs", "0"]) == 2


def test_check_ok(capsys):
    assert main(["fig2", "--check"]) == 0


def test_exit_code_runtime_error(tmp_path, monkeypatch):
    def boom(spec, out):
        raise ZeroDivisionError("nope")

    monkeypatch.setitem(experiments._RUNNERS, "entropy-table", boom)
    with pytest.raises(ZeroDivisionError):
        main(["entropy-table", "--out", str(tmp_path)])

    def empty(spec, out):
        raise EmptyTrace("no detections")

    monkeypatch.setitem(experiments._RUNNERS, "entropy-table", empty)
    assert main(["entropy-table", "--out", str(tmp_path)]) == 3


def test_partial_outputs_removed(tmp_path, monkeypatch):
    def half(spec, out):
        out.csv("partial.csv", ["x"], [(1,)])
        raise RuntimeError("interrupted")

    monkeypatch.setitem(experiments._RUNNERS, "entropy-table", half)
    with pytest.raises(RuntimeError):
        run_experiment(ExperimentSpec.with_defaults("entropy-table", output_dir=str(tmp_path)))
    assert not (tmp_path / "partial.csv").exists()


def test_entropy_table(tmp_path, capsys):
    assert main(["entropy-table", "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["s_system"] == pytest.approx(693.147, abs=0.001)
    assert report["s_matter_avg"] == pytest.approx(688.968, abs=0.001)
    assert report["s_field"] == pytest.approx(4.180, abs=0.001)
    lines = (tmp_path / "entropy_table.csv").read_text().splitlines()
    assert lines[0].startswith("# laserjump ") and "spec_sha256=" in lines[0]
    assert lines[1] == "N,U,s_system,s_matter_avg,s_field,identity_residual"
    assert lines[2].startswith("1000,1000,")


def test_equilibrium_report(tmp_path, capsys):
    assert main(["equilibrium", "--N", "20", "--runs", "3", "--duration", "20", "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["exact_mean"] == pytest.approx(10.0)
    assert report["exact_var"] == pytest.approx(5.0)
    assert abs(report["sim_mean"] - 10) < 1.0
    assert (tmp_path / "equilibrium.csv").exists()


def test_fig2_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["fig2", "--seed", "7", *SMALL_FIG2, "--out", str(a)]) == 0
    assert main(["fig2", "--seed", "7", *SMALL_FIG2, "--jobs", "2", "--out", str(b)]) == 0
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    assert {"fig2_simulated.csv", "fig2_simulated.json", "fig2_exact.csv", "fig2_closed_approx.csv", "fig2_manifest.json"} <= set(names)
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"params": {"n_atoms": 100, "loss_rate": 150.0}, "runs": 2}))
    assert main(["fig2", "--config", str(cfg), "--check"]) == 2
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["fig2", "--config", str(cfg), "--check"]) == 2
    cfg.write_text(json.dumps({"N": 50, "alpha": 10.0, "J": 200.0}))
    assert main(["fig2", "--config", str(cfg), "--check"]) == 0


def test_simulate_writes_trace(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["simulate", "--N", "10", "--duration", "1", "--seed", "3", "--out", str(out)]) == 0
    tr = read_trace(out)
    assert tr.params.n_atoms == 10 and tr.seed == 3
