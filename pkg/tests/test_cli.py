import json

import pytest

from curvscape.cli import main
from curvscape.graph import dump_edge_list, named_graph


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def k3(tmp_path):
    path = tmp_path / "k3.edges"
    path.write_text(dump_edge_list(named_graph("k3")))
    return str(path)


@pytest.fixture
def graph_sets(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["generate", "community", "--n", "12", "--count", "3", "--seed", "1", "--out", str(a)]) == 0
    assert main(["generate", "community", "--n", "12", "--count", "3", "--seed", "2", "--out", str(b)]) == 0
    capsys.readouterr()
    return str(a), str(b)


def test_curvature_csv(capsys, k3):
    code, out, _ = run(capsys, "curvature", "--kind", "frc", "--format", "csv", k3)
    assert code == 0
    assert out.splitlines() == ["u,v,value", "0,1,3", "0,2,3", "1,2,3"]


def test_curvature_json_shrikhande(capsys, tmp_path):
    path = tmp_path / "s.edges"
    path.write_text(dump_edge_list(named_graph("shrikhande")))
    code, out, _ = run(capsys, "curvature", "--kind", "orc", "--measure", "rw", "--rw-steps", "2", str(path))
    assert code == 0
    obj = json.loads(out)
    assert len(obj["edges"]) == 48
    assert obj["config"]["measure"] == {"kind": "random_walk", "m": 2, "self_mass": 0.0}


def test_exit_codes(capsys, tmp_path, k3):
    code, _, err = run(capsys, "curvature", str(tmp_path / "missing.edges"))
    assert code == 2 and len(err.strip().splitlines()) == 1
    assert json.loads(err)["error"] == "input"

    bad = tmp_path / "bad.edges"
    bad.write_text("0 1\n1 1\n")
    code, _, err = run(capsys, "curvature", str(bad))
    assert code == 2 and "line 2" in err

    code, _, err = run(capsys, "frobnicate")
    assert code == 1 and json.loads(err)["exit"] == 1

    code, _, _ = run(capsys, "experiment", "nonsense")
    assert code == 1

    code, _, _ = run(capsys, "curvature", "--p", "3", k3)
    assert code == 1


def test_exhaustion_is_computation_error(capsys, tmp_path):
    # a complete graph has no non-edges left to add
    path = tmp_path / "k4.edges"
    path.write_text(dump_edge_list(named_graph("k4")))
    code, _, err = run(capsys, "experiment", "perturb", "--mode", "add", "--graphs", str(path),
                       "--fractions", "0,0.5", "--resolution", "50")
    assert code == 3
    assert json.loads(err)["error"] == "computation"


def test_empty_set_is_input_error(capsys, tmp_path):
    (tmp_path / "empty").mkdir()
    code, _, _ = run(capsys, "compare", str(tmp_path / "empty"), str(tmp_path / "empty"))
    assert code == 2


def test_diagram_and_landscape(capsys, k3):
    code, out, _ = run(capsys, "diagram", k3)
    assert json.loads(out)["diagram"]["dim1"] == [[0.5, "inf"]]
    code, out, _ = run(capsys, "diagram", "--format", "csv", k3)
    assert out.splitlines()[0] == "dim,birth,death"
    code, out, _ = run(capsys, "landscape", "--resolution", "11", k3)
    assert code == 0
    obj = json.loads(out)
    assert len(obj["landscape"][0]["functions"][0]) == 11


def test_compare_same_set(capsys, graph_sets):
    a, _ = graph_sets
    code, out, _ = run(capsys, "compare", a, a, "--permutations", "10", "--resolution", "100")
    obj = json.loads(out)
    assert obj["distance"] == 0.0
    assert obj["permutation_test"]["fraction_higher"] >= 0.5


def test_compare_without_permutations(capsys, graph_sets):
    a, b = graph_sets
    code, out, _ = run(capsys, "compare", a, b, "--resolution", "100")
    obj = json.loads(out)
    assert "permutation_test" not in obj and obj["distance"] > 0


def test_config_file_and_override(capsys, tmp_path, graph_sets):
    a, b = graph_sets
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"kind": "frc", "p": 2, "resolution": 50}))
    _, out, _ = run(capsys, "compare", a, b, "--config", str(cfg), "--p", "1")
    echoed = json.loads(out)["config"]
    assert (echoed["kind"], echoed["p"], echoed["resolution"]) == ("frc", 1.0, 50)
    cfg.write_text("{not json")
    code, _, _ = run(capsys, "compare", a, b, "--config", str(cfg))
    assert code == 2


def test_generate_single_and_named(capsys):
    code, out, _ = run(capsys, "generate", "er", "--n", "6", "--edge-p", "1.0", "--format", "csv")
    assert out.splitlines()[0] == "n 6" and len(out.splitlines()) == 16
    code, out, _ = run(capsys, "generate", "named", "--name", "rook4x4")
    assert json.loads(out)["n"] == 16


def test_experiment_distinguish(capsys):
    _, out, _ = run(capsys, "experiment", "distinguish", "--graphs", "rook4x4,shrikhande",
                    "--method", "raw_hist", "--kind", "orc")
    assert json.loads(out)["success_rate"] == 1.0
    _, out, _ = run(capsys, "experiment", "distinguish", "--graphs", "rook4x4,shrikhande",
                    "--method", "raw_hist", "--kind", "frc")
    assert json.loads(out)["success_rate"] == 0.0


def test_experiment_perturb_writes_reports(capsys, tmp_path):
    out_dir = tmp_path / "rep"
    code, out, _ = run(capsys, "experiment", "perturb", "--mode", "add", "--count", "3", "--n", "12",
                       "--fractions", "0,0.3,0.6", "--resolution", "100", "--out", str(out_dir))
    assert code == 0 and out.startswith("perturb add: pearson")
    obj = json.loads((out_dir / "perturb_add.json").read_text())
    assert "pearson" in obj and obj["mode"] == "add"
    assert (out_dir / "perturb_add.csv").exists()


def test_experiment_bounds(capsys):
    code, out, _ = run(capsys, "experiment", "bounds", "--trials", "6", "--n", "10", "--p", "0.4")
    obj = json.loads(out)
    assert code == 0
    assert [r["theorem"] for r in obj["reports"]] == ["forman", "orc", "rec"]
    assert obj["graph"]["edge_p"] == 0.4
    assert obj["reports"][0]["violations"] == 0


EXPERIMENTS = [
    ["experiment", "perturb", "--count", "3", "--n", "12", "--fractions", "0,0.3,0.6", "--resolution", "100"],
    ["experiment", "distinguish", "--graphs", "rook4x4,shrikhande,k4,c6", "--method", "bottleneck"],
    ["experiment", "graphon", "--count", "4", "--permutations", "10", "--resolution", "100"],
    ["experiment", "bounds", "--trials", "6", "--n", "10"],
]


@pytest.mark.parametrize("argv", EXPERIMENTS, ids=lambda a: a[1])
def test_experiments_deterministic(capsys, argv):
    outs = [run(capsys, *argv, "--seed", "3")[1] for _ in range(2)]
    assert outs[0] == outs[1]
    parallel = run(capsys, *argv, "--seed", "3", "--workers", "8")[1]
    assert parallel == outs[0]


def test_workers_env_fallback(capsys, monkeypatch, graph_sets):
    a, b = graph_sets
    base = run(capsys, "compare", a, b, "--resolution", "100")[1]
    monkeypatch.setenv("CURVSCAPE_WORKERS", "4")
    assert run(capsys, "compare", a, b, "--resolution", "100")[1] == base
