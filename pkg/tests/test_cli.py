import json
import sys

import numpy as np
import pytest

from pgmx import BayesianNetwork, DagStructure, generate_synthetic
from pgmx.bench import dataset_json
from pgmx.cli import build_parser, export_dot, main


@pytest.fixture(scope="module")
def dataset_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "syn1.json"
    path.write_text(dataset_json(generate_synthetic("syn1", seed=0)))
    return path


def run_cli(*argv):
    return main([str(a) for a in argv])


# -- export_dot -----------------------------------------------------------------


def net(variables, cards, parents, cpts):
    return BayesianNetwork(DagStructure(variables, cards, parents), cpts)


def test_dot_empty_network():
    bn = net(["a", "t"], [2, 2], {}, {"a": np.array([[0.5, 0.5]]), "t": np.array([[1.0, 0.0]])})
    dot = export_dot(bn, "t")
    assert dot.startswith("digraph")
    assert '"a" [shape=ellipse];' in dot
    assert '"t" [shape=doublecircle' in dot
    assert "->" not in dot


def test_dot_edge_once_and_deterministic():
    bn = net(
        ["a", "t"], [2, 2], {"t": ("a",)},
        {"a": np.array([[0.5, 0.5]]), "t": np.array([[1.0, 0.0], [0.0, 1.0]])},
    )
    dot = export_dot(bn, "t")
    assert dot.count('"a" -> "t";') == 1
    assert export_dot(bn, "t") == dot


# -- gen ---------------------------------------------------------------------------


def test_gen_writes_dataset(tmp_path, capsys):
    out = tmp_path / "syn4.json"
    assert run_cli("gen", "--dataset", "syn4", "--seed", "1", "--out", out) == 0
    doc = json.loads(out.read_text())
    labels = doc["labels"]
    # tree base: 511 nodes keep the base class
    assert labels.count(0) == 511
    assert doc["num_nodes"] == 871
    assert "871 nodes" in capsys.readouterr().out


def test_gen_unknown_dataset(tmp_path, capsys):
    assert run_cli("gen", "--dataset", "synX") == 2
    err = capsys.readouterr().err
    assert json.loads(err)["error"] == "config"


# -- explain -------------------------------------------------------------------------


def test_explain_end_to_end(tmp_path, dataset_file, capsys):
    ds = generate_synthetic("syn1", seed=0)
    target = ds.motifs[0][4]
    out = tmp_path / "expl"
    code = run_cli(
        "explain", "--graph", dataset_file, "--oracle", "motif-role",
        "--dataset", dataset_file, "--target", target, "--no-child",
        "--scheme", "zero", "--n", 300, "--hops", 2, "--M", 10, "--seed", 3,
        "--out", out,
    )
    assert code == 0
    doc = json.loads((tmp_path / "expl.json").read_text())
    assert doc["target"] == str(target)
    dot = (tmp_path / "expl.dot").read_text()
    # no-child: no edge leaves the target
    assert f'"{target}" ->' not in dot
    stdout = capsys.readouterr().out
    assert "baseline P(" in stdout
    assert "markov blanket" in stdout


def test_explain_determinism_bytes(tmp_path, dataset_file):
    ds = generate_synthetic("syn1", seed=0)
    target = ds.motifs[2][0]
    args = [
        "explain", "--graph", dataset_file, "--oracle", "motif-role",
        "--dataset", dataset_file, "--target", target,
        "--scheme", "zero", "--n", 200, "--hops", 2, "--M", 8, "--seed", 11,
    ]
    assert run_cli(*args, "--out", tmp_path / "one") == 0
    assert run_cli(*args, "--out", tmp_path / "two") == 0
    assert (tmp_path / "one.json").read_bytes() == (tmp_path / "two.json").read_bytes()
    assert (tmp_path / "one.dot").read_bytes() == (tmp_path / "two.dot").read_bytes()


def test_explain_gcn_oracle(tmp_path, capsys):
    rng = np.random.default_rng(0)
    graph_doc = {
        "num_nodes": 5,
        "edges": [[0, 1], [1, 2], [2, 3], [3, 4]],
        "features": rng.normal(size=(5, 2)).round(3).tolist(),
    }
    graph_path = tmp_path / "g.json"
    graph_path.write_text(json.dumps(graph_doc))
    bundle = {
        "layers": [
            {"w": rng.normal(size=(2, 4)).round(3).tolist(), "b": [0.0] * 4},
            {"w": rng.normal(size=(4, 2)).round(3).tolist(), "b": [0.0, 0.0]},
        ],
        "num_classes": 2,
    }
    weights_path = tmp_path / "w.json"
    weights_path.write_text(json.dumps(bundle))
    code = run_cli(
        "explain", "--graph", graph_path, "--oracle", "gcn", "--weights", weights_path,
        "--target", 2, "--n", 200, "--no-child", "--seed", 1, "--hops", 2,
        "--out", tmp_path / "g-expl",
    )
    assert code == 0
    doc = json.loads((tmp_path / "g-expl.json").read_text())
    assert doc["target"] == "2"
    assert (tmp_path / "g-expl.dot").exists()
    capsys.readouterr()


def test_explain_missing_weights_exit_2(tmp_path, dataset_file, capsys):
    code = run_cli(
        "explain", "--graph", dataset_file, "--target", 1,
        "--oracle", "gcn", "--weights", tmp_path / "missing.json",
    )
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "config"


def test_explain_task_oracle_mode_mismatch(tmp_path, dataset_file, capsys):
    code = run_cli(
        "explain", "--graph", dataset_file, "--oracle", "motif-role",
        "--dataset", dataset_file, "--task", "graph",
    )
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "config"


def test_explain_bad_p_exits_before_work(tmp_path, capsys):
    # range validation fires before any file or oracle access
    code = run_cli(
        "explain", "--graph", tmp_path / "nonexistent.json", "--target", 0,
        "--p", 1.5,
    )
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"] == "config"


def test_explain_oracle_crash_exit_3(tmp_path, dataset_file, capsys):
    crasher = tmp_path / "crash.py"
    crasher.write_text("import sys; sys.exit(1)\n")
    code = run_cli(
        "explain", "--graph", dataset_file, "--target", 1,
        "--oracle", "external", "--oracle-cmd", f"{sys.executable} {crasher}",
        "--classes", 4, "--n", 10,
    )
    assert code == 3
    assert json.loads(capsys.readouterr().err)["error"] == "oracle"


# -- bench ------------------------------------------------------------------------------


def test_bench_cli(tmp_path, dataset_file, capsys):
    out = tmp_path / "report.json"
    csv_out = tmp_path / "report.csv"
    code = run_cli(
        "bench", "--dataset", dataset_file, "--oracle", "motif-role",
        "--targets", 4, "--seed", 7, "--n", 200, "--hops", 2, "--M", 8,
        "--out", out, "--csv", csv_out,
    )
    assert code == 0
    doc = json.loads(out.read_text())
    assert "mean_accuracy" in doc["summary"]
    assert csv_out.exists()
    stdout = capsys.readouterr().out
    assert "mean_accuracy" in stdout


# -- query -----------------------------------------------------------------------------


def test_query_cli(tmp_path, dataset_file, capsys):
    ds = generate_synthetic("syn1", seed=0)
    target = ds.motifs[1][0]
    out = tmp_path / "q"
    assert run_cli(
        "explain", "--graph", dataset_file, "--oracle", "motif-role",
        "--dataset", dataset_file, "--target", target, "--no-child",
        "--scheme", "zero", "--n", 300, "--hops", 2, "--seed", 5, "--out", out,
    ) == 0
    capsys.readouterr()
    doc = json.loads((tmp_path / "q.json").read_text())
    blanket = doc["markov_blanket"]
    evidence = [f"{blanket[0]}=1"] if blanket else []
    assert run_cli("query", "--explanation", tmp_path / "q.json", "--evidence", *evidence) == 0
    reply = json.loads(capsys.readouterr().out)
    assert reply["target"] == str(target)
    assert sum(reply["posterior"]) == pytest.approx(1.0)


def test_query_bad_evidence(tmp_path, dataset_file, capsys):
    assert run_cli("query", "--explanation", tmp_path / "absent.json") == 2
    capsys.readouterr()


# -- help text ----------------------------------------------------------------------------


def test_jobs_env_fallback(monkeypatch):
    monkeypatch.setenv("PGMX_JOBS", "6")
    parser = build_parser()
    args = parser.parse_args(["explain", "--graph", "g.json", "--target", "0"])
    assert args.jobs == 6


def test_help_lists_flags_with_defaults():
    parser = build_parser()
    sub = None
    for action in parser._actions:
        if hasattr(action, "choices") and action.choices and "explain" in action.choices:
            sub = action.choices["explain"]
    text = sub.format_help()
    for flag in ("--n", "--p", "--M", "--alpha", "--delta", "--seed", "--jobs", "--hops"):
        assert flag in text
    assert "default: 800" in text
    assert "default: 0.5" in text
