import json

import pytest

from crninherit.cli import main
from crninherit.corpus import FIXTURES
from crninherit.parser import read_network, serialize_network


@pytest.fixture
def run(tmp_path, monkeypatch, capsys):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("CRNINHERIT_OUT", raising=False)

    def _run(*argv):
        code = main(list(argv))
        out = capsys.readouterr()
        return code, out.out, out.err

    return _run


def canonical(text: str) -> str:
    net, rates = read_network(text)
    return serialize_network(net, rates)


def test_info_counts(run):
    code, out, _ = run("info", "mapk_full")
    assert code == 0 and "24 species, 36 reactions, rank 17" in out
    code, out, _ = run("info", "R1")
    assert "3 species, 8 reactions, rank 3" in out
    code, out, _ = run("info", "R2", "--json")
    data = json.loads(out)
    assert data["rank"] == 5 and len(data["conservation_basis"]) == 1


def test_empty_network_exits_2(run, tmp_path):
    (tmp_path / "empty.net").write_text("# nothing\n")
    code, _, err = run("info", "empty.net")
    assert code == 2 and "no reactions" in err


def test_missing_file_exits_2(run):
    code, _, err = run("info", "does_not_exist.net")
    assert code == 2


def test_enlarge_reproduces_r2(run, tmp_path):
    code, out, _ = run("enlarge", "R1", "r1_to_r2.json", "-o", "r2.net")
    assert code == 0
    written = (tmp_path / "r2.net").read_text()
    assert canonical(written) == canonical((FIXTURES / "R2.net").read_text())
    prov = json.loads((tmp_path / "provenance.json").read_text())
    assert prov["rank"] == 5 and prov["steps"][0]["kind"] == "E6"


def test_invalid_beta_exits_3(run, tmp_path):
    script = [{"op": "E6", "new_species": ["U", "V"], "splits": [
        {"reaction": "k1", "intermediate_new": "U"}, {"reaction": "k4", "intermediate_new": "U"}]}]
    (tmp_path / "bad.json").write_text(json.dumps(script))
    code, _, err = run("enlarge", "R1", "bad.json")
    assert code == 3
    assert "1*col1 + -1*col2 = 0" in err and "step 0" in err


def test_enzymatic_step_in_output(run, tmp_path):
    steps = json.loads((FIXTURES / "scripts" / "mapk.json").read_text())["steps"][:3]
    (tmp_path / "abc.json").write_text(json.dumps(steps))
    code, out, _ = run("enlarge", "mapk_reduced", "abc.json")
    assert code == 0
    assert "Z-p + F1 -> F1--Z-p" in out and "F1--Z-p -> Z + F1" in out


def test_simulate_outputs_are_reproducible(run, tmp_path):
    args = ("simulate", "R1", "--k", "0.5,3.0,2.5,0.2,0.6,2.4,1.8,0.4", "--x0", "1,1,1", "--t", "40",
            "--plot", "X:Y")
    assert run(*args, "--outdir", "a")[0] == 0
    assert run(*args, "--outdir", "b")[0] == 0
    for name in ("trajectory.csv", "time_series.svg", "projection_X_Y.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "projection_X_Y.svg").read_text().lstrip().startswith("<?xml")


def test_outdir_from_environment(run, tmp_path, monkeypatch):
    monkeypatch.setenv("CRNINHERIT_OUT", str(tmp_path / "env"))
    assert run("simulate", "R3", "--x0", "1,1,1", "--t", "5", "--no-plot")[0] == 0
    assert (tmp_path / "env" / "trajectory.csv").is_file()


def test_usage_errors_exit_2(run):
    assert run("simulate", "R1", "--x0", "1,1")[0] == 2
    assert run("simulate", "R1", "--x0", "1,1,1", "--k", "1,2")[0] == 2
    assert run("simulate", "R2", "--x0", "1,1,1,1,1,1")[0] == 2  # eps not bound
    assert run("simulate", "R1", "--x0", "1,1,1", "--plot", "X:Q")[0] == 2


def test_integration_failure_exits_4_with_partial_csv(run, tmp_path):
    (tmp_path / "blow.net").write_text("2 X -> 3 X @ a k=1\n")
    code, _, err = run("simulate", "blow.net", "--x0", "1", "--t", "5", "--no-plot")
    assert code == 4 and "partial" in err
    lines = (tmp_path / "trajectory.csv").read_text().splitlines()
    assert lines[0] == "t,X" and len(lines) > 10


def test_orbit_without_orbit_exits_0(run, tmp_path):
    code, out, _ = run("orbit", "R3", "--x0", "1,1,1", "--t", "50", "--equilibrium")
    assert code == 0 and "no orbit detected" in out
    data = json.loads((tmp_path / "orbit.json").read_text())
    assert data["found"] is False and data["equilibrium"]["classification"] == "linearly stable"


def test_orbit_r1(run, tmp_path):
    code, out, _ = run("orbit", "R1", "--x0", "1,1,1", "--fd-check", "--plot", "X:Y")
    assert code == 0 and "periodic orbit" in out
    data = json.loads((tmp_path / "orbit.json").read_text())
    assert data["residual"] < 1e-9 and len(data["multipliers"]) == 2
    assert data["fd_monodromy_rel_error"] < 1e-4
    assert (tmp_path / "orbit_X_Y.svg").is_file()


def test_verify_writes_certificate(run, tmp_path):
    code, out, _ = run("verify", "r3_to_r4.json", "--outdir", "v")
    assert code == 0 and out.splitlines()[-1] == "verdict\tPASS"
    cert = json.loads((tmp_path / "v" / "certificate.json").read_text())
    assert cert["verdict"] == "PASS"
    assert (tmp_path / "v" / "sweep_0.svg").is_file()
    assert run("verify", "no_such_task.json")[0] == 2

