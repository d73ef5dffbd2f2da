import json

import pytest

from qbacktrack.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def cnf(tmp_path, capsys):
    path = tmp_path / "inst.cnf"
    assert run(capsys, "gen", "--n", "12", "--k", "3", "--m", "24", "--seed", "7", "--out", str(path))[0] == 0
    return path


def test_gen_solve_pipeline(cnf, capsys):
    code, out, _ = run(capsys, "solve", str(cnf), "--no-timestamp")
    assert code == 0
    data = json.loads(out)
    assert data["T"] >= 1 and isinstance(data["solutions"], list)
    assert data["config"]["seed"] == 0
    assert run(capsys, "solve", str(cnf), "--no-timestamp")[1] == out


def test_gen_is_deterministic(capsys):
    a = run(capsys, "gen", "--n", "9", "--k", "3", "--m", "20", "--seed", "4")[1]
    b = run(capsys, "gen", "--n", "9", "--k", "3", "--m", "20", "--seed", "4")[1]
    assert a == b and a.startswith("c seed 4")
    js = json.loads(run(capsys, "gen", "--n", "9", "--k", "3", "--m", "20", "--seed", "4", "--format", "json")[1])
    assert js["m"] == 20 and js["seed"] == 4


def test_expected_size(capsys):
    code, out, _ = run(capsys, "expected-size", "--n", "3", "--k", "3", "--m", "1", "--no-timestamp")
    assert code == 0 and json.loads(out)["E"] == 14.0


def test_detect_contradiction(tmp_path, capsys):
    path = tmp_path / "unsat.cnf"
    path.write_text("p cnf 1 2\n1 0\n-1 0\n")
    code, out, _ = run(capsys, "detect", str(path), "--no-timestamp")
    assert code == 0 and json.loads(out)["verdict"] == "no-marked"
    code, out, _ = run(capsys, "find", str(path), "--no-timestamp")
    assert json.loads(out)["verdict"] == "not-found"


@pytest.fixture
def small_cnf(tmp_path, capsys):
    path = tmp_path / "small.cnf"
    run(capsys, "gen", "--n", "7", "--k", "3", "--m", "25", "--seed", "2", "--out", str(path))
    return path


def test_find_family(small_cnf, capsys):
    for cmd in ("find", "find-all", "tree", "detect"):
        code, out, _ = run(capsys, cmd, str(small_cnf), "--no-timestamp", "--seed", "3")
        assert code == 0
        json.loads(out)


def test_tree_json_as_input(tmp_path, small_cnf, capsys):
    tree_path = tmp_path / "tree.json"
    run(capsys, "tree", str(small_cnf), "--out", str(tree_path))
    code, out, _ = run(capsys, "find", str(tree_path), "--no-timestamp")
    assert code == 0


def test_timestamp_flag(cnf, capsys):
    assert "timestamp" in json.loads(run(capsys, "solve", str(cnf))[1])
    assert "timestamp" not in json.loads(run(capsys, "solve", str(cnf), "--no-timestamp")[1])


def test_exit_codes(tmp_path, capsys):
    assert run(capsys, "solve", str(tmp_path / "missing.cnf"))[0] == 2
    bad = tmp_path / "bad.cnf"
    bad.write_text("p cnf 2 1\n1 1 0\n")
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 2 and "duplicate" in err
    many = tmp_path / "many.cnf"
    many.write_text("p cnf 2 1\n1 2 0\n")
    assert run(capsys, "unique-find", str(many), "--verify-unique")[0] == 4
    assert run(capsys, "solve", str(many), "--vertex-cap", "2")[0] == 0
    assert run(capsys, "find", str(many), "--vertex-cap", "2")[0] == 3
    with pytest.raises(SystemExit) as exc:
        main(["solve", "--bogus"])
    assert exc.value.code == 2


def test_config_file(tmp_path, monkeypatch, capsys):
    cfg = tmp_path / "qwb.cfg"
    cfg.write_text("# calibrated\nbeta=0.25\nseed=9\n")
    monkeypatch.setenv("QWB_CONFIG", str(cfg))
    data = json.loads(run(capsys, "expected-size", "--n", "4", "--k", "3", "--m", "2", "--no-timestamp")[1])
    assert data["config"]["beta"] == 0.25 and data["config"]["seed"] == 9
    data = json.loads(run(capsys, "expected-size", "--n", "4", "--k", "3", "--m", "2", "--seed", "1",
                          "--no-timestamp")[1])
    assert data["config"]["seed"] == 1
    cfg.write_text("nonsense=1\n")
    assert run(capsys, "expected-size", "--n", "4", "--k", "3", "--m", "2")[0] == 2


def test_calibrate_writes_config(tmp_path, capsys):
    out = tmp_path / "cal.cfg"
    code, text, _ = run(capsys, "calibrate", "--config-out", str(out), "--no-timestamp")
    assert code == 0
    assert "beta=0.5" in out.read_text()
    assert json.loads(text)["gamma"] == 32.0


def test_experiment_csv(capsys):
    code, out, _ = run(capsys, "experiment", "--n", "8", "--samples", "3", "--format", "csv")
    assert code == 0 and len(out.strip().splitlines()) == 4
