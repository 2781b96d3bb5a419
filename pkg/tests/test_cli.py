import json

import pytest

from coldcavity import cli
from coldcavity.emit import read_csv
from coldcavity.errors import RootFindingError


def run(capsys, *argv):
    status = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return status, out, err


def test_pump_writes_fig5_curves(tmp_path, capsys):
    status, out, _ = run(capsys, "pump", "--intensities", "1,5,10,12,15,20,30,40,60",
                         "--delta", "40", "--samples", "400", "--out", tmp_path)
    assert status == 0
    files = sorted(tmp_path.glob("pump_I*.csv"))
    assert len(files) == 9
    header, data = read_csv(tmp_path / "pump_I60.csv")
    assert header == ["t", "N"] and data[0, 1] == pytest.approx(1 / 9)
    table = json.loads((tmp_path / "summary.json").read_text())["beta_table"]
    betas = [row["beta"] for row in table]
    assert betas == sorted(betas, reverse=True)


def test_steady_reports_three_root_region(tmp_path, capsys):
    status, out, _ = run(capsys, "steady", "--preset", "kerr_pure", "--out", tmp_path)
    assert status == 0
    assert "3-root region present" in out
    summary = json.loads((tmp_path / "summary.json").read_text())["kerr_pure"]
    assert summary["three_root_region"] and len(summary["turning_points"]) == 2
    assert (tmp_path / "kerr_pure_branches.csv").exists()


def test_scan_fig2_has_one_switch_each_way(tmp_path, capsys):
    status, out, _ = run(capsys, "scan", "--preset", "fig2", "--out", tmp_path)
    assert status == 0
    switches = json.loads((tmp_path / "summary.json").read_text())["fig2"]["switches"]
    assert [s["direction"] for s in switches] == ["up", "down"]
    header, _ = read_csv(tmp_path / "fig2_trace.csv")
    assert header == ["t", "P_out", "I", "p", "phi_cav"]


def test_scan_from_config(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# empty cavity, short static run\n"
                   "delta = 44\nphi0 = 0\ngamma_cav = 0.055\nkappa = 0.96\n"
                   "cooperativity = 0\nbeta = 0\ngamma_p = 0.001\ndrive = 1\n"
                   "kind = StaticPhase\nduration = 50\n")
    status, out, _ = run(capsys, "scan", "--config", cfg, "--out", tmp_path, "--format", "svg")
    assert status == 0 and (tmp_path / "config_trace.svg").exists()


def test_map_command(tmp_path, capsys):
    status, out, _ = run(capsys, "map", "--preset", "fig6_p2", "--phi0-range", "-1.4,-1.1,7",
                         "--drive-range", "1,4,3", "--out", tmp_path)
    assert status == 0
    lines = (tmp_path / "fig6_p2_map.csv").read_text().splitlines()
    assert lines[0] == "phi0,drive,n_roots,classes" and len(lines) == 22


def test_convert(tmp_path, capsys):
    cfg = tmp_path / "lab.cfg"
    cfg.write_text("atom_number = 1e8\ninput_power = 1e-4  # W\n")
    status, out, _ = run(capsys, "convert", "--config", cfg, "--out", tmp_path)
    assert status == 0
    params = json.loads((tmp_path / "params.json").read_text())
    assert 100 <= params["cooperativity"] <= 1000
    assert (tmp_path / "params.csv").exists()


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["scan", "--format", "xml", "--preset", "fig2"],
    ["scan", "--preset", "fig9"],
    ["scan"],
    ["pump", "--intensities", "1,-5"],
    ["convert"],
])
def test_usage_errors_exit_1(tmp_path, capsys, argv):
    status, _, err = run(capsys, *argv, "--out", tmp_path) if argv[0] != "frobnicate" else \
        run(capsys, *argv)
    assert status == 1
    assert "error" in err


def test_bad_config_exit_1(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("warp_factor = 9\n")
    status, _, err = run(capsys, "steady", "--config", cfg, "--out", tmp_path)
    assert status == 1 and "warp_factor" in err and "valid keys" in err
    cfg.write_text("delta = 44\nphi0 = 0\ngamma_cav = 0.055\nkappa = 0.96\ncooperativity = 0\n"
                   "beta = 0\ngamma_p = 0.001\ndrive = 1\nkind = LinearPhaseRamp\n")
    status, _, err = run(capsys, "scan", "--config", cfg, "--out", tmp_path)
    assert status == 1 and "ramp needs" in err
    cfg.write_text("variant = quantum\n")
    status, _, err = run(capsys, "steady", "--config", cfg, "--out", tmp_path)
    assert status == 1 and "variant" in err
    cfg.write_text("delta = 44\n")
    status, _, err = run(capsys, "steady", "--config", cfg, "--out", tmp_path)
    assert status == 1 and "lacks model parameters" in err


def test_numerical_failure_exit_2(tmp_path, capsys, monkeypatch):
    def broken(params):
        raise RootFindingError("companion eigenvalue solver failed")

    monkeypatch.setattr(cli, "find_fixed_points", broken)
    status, _, err = run(capsys, "steady", "--preset", "kerr_pure", "--out", tmp_path)
    assert status == 2 and "numerical failure" in err


def test_unwritable_output_exit_1(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    status, _, err = run(capsys, "steady", "--preset", "kerr_pure", "--out", blocker / "sub")
    assert status == 1
