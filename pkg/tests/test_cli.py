import pytest

from epibranch.cli import main


def test_unknown_key_exits_nonzero(capsys):
    assert main(["occupation", "reps=3"]) == 1
    assert "unknown key" in capsys.readouterr().err


def test_missing_config_file_exits_nonzero(capsys):
    assert main(["kernel", "--config", "/nonexistent/path.cfg"]) == 1
    assert "error:" in capsys.readouterr().err


def test_bad_value_exits_nonzero(capsys):
    assert main(["kernel", "n_max=soon"]) == 1
    assert "expected int" in capsys.readouterr().err


def test_kernel_report_is_byte_identical_across_runs(tmp_path, capsys):
    out1, out2 = tmp_path / "one", tmp_path / "two"
    assert main(["kernel", "n_max=30", "--out", str(out1)]) == 0
    assert main(["kernel", "n_max=30", "--out", str(out2)]) == 0
    assert "invariants=pass" in capsys.readouterr().out
    assert (out1 / "kernel_d2.csv").read_bytes() == (out2 / "kernel_d2.csv").read_bytes()
    assert (out1 / "kernel_d2.json").read_bytes() == (out2 / "kernel_d2.json").read_bytes()


def test_config_file_and_override_precedence(tmp_path, capsys):
    cfg = tmp_path / "occ.cfg"
    cfg.write_text("ks=4 8\nreps_per_k=40 20\n")
    assert main([
        "occupation", "--config", str(cfg), "--seed", "3",
        "--out", str(tmp_path), "reps_per_k=30 15",
    ]) == 0
    csv = (tmp_path / "occupation_d2.csv").read_text()
    assert "# ks=4 8" in csv
    assert "# reps_per_k=30 15" in csv
    rows = [line for line in csv.splitlines() if line and not line.startswith("#")]
    assert rows[0].startswith("k,")
    assert len(rows) == 3


def test_exact_subcommand_emits_anchor_value(tmp_path):
    assert main([
        "exact", "n=1", "h_max=1", "--out", str(tmp_path),
    ]) == 0
    rows = [
        line.split(",")
        for line in (tmp_path / "exact_d2.csv").read_text().splitlines()
        if line and not line.startswith("#")
    ]
    # order-1 coefficient after one step at the origin is P_1(0) = 1/5
    assert rows[-1][:3] == ["kappa_origin", "1", "1"]
    assert float(rows[-1][3]) == pytest.approx(0.2, abs=1e-15)


def test_exact_second_moment_mode(tmp_path):
    assert main([
        "exact", "mode=second_moment", "n=2", "x=0 0", "--out", str(tmp_path),
    ]) == 0
    rows = [
        line.split(",")
        for line in (tmp_path / "exact_d2.csv").read_text().splitlines()
        if line and not line.startswith("#")
    ]
    assert rows[0] == ["quantity", "steps", "value"]
    assert float(rows[1][2]) == pytest.approx(6 / 25, abs=1e-15)
    assert float(rows[2][2]) == pytest.approx(7 / 25, abs=1e-15)


def test_sir_subcommand_runs(capsys):
    assert main([
        "sir", "village_size=300", "reps=25", "probe_times=0.5", "--seed", "5",
    ]) == 0
    out = capsys.readouterr().out
    assert "threshold_d2" in out


def test_converge_subcommand_toy(tmp_path, capsys):
    assert main([
        "converge", "ks=4 8", "t_values=0.5 1.0", "reps=300",
        "variance_oracle=false", "--out", str(tmp_path),
    ]) == 0
    out = capsys.readouterr().out
    assert "mean_centered=pass" in out
    assert (tmp_path / "converge_d2.csv").exists()


def test_bounds_subcommand_single_inequality(tmp_path):
    assert main([
        "bounds", "n_max=70", "suite=kernel_vs_gauss", "--out", str(tmp_path),
    ]) == 0
    csv = (tmp_path / "bounds_d2.csv").read_text()
    rows = [line for line in csv.splitlines() if line and not line.startswith("#")]
    assert rows[1].startswith("kernel_vs_gauss,")
    assert rows[1].endswith(",true")


def test_lr_subcommand_toy(capsys):
    assert main([
        "lr", "village_sizes=5", "reps=400", "horizon=3", "mu_count=2",
    ]) == 0
    assert "battery_consistent" in capsys.readouterr().out
