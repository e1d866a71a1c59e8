import csv
import json
from pathlib import Path

import pytest

from twintree.cli import main


ARTIFACTS = ["digraph.json", "tree_es.json", "tree_os.json", "trees.json",
             "grid.csv", "omega.csv", "coefficients.csv", "analysis.json",
             "approx.csv", "metrics.csv", "smoothness.json", "config.json"]


def run_pipeline(out: Path, **overrides) -> None:
    argv = ["pipeline", "--out", str(out), "--kind", "toy25", "--seed", "1",
            "--levels", "2,6", "--trials", "5", "--baseline-trials", "40"]
    for key, val in overrides.items():
        argv += [f"--{key.replace('_', '-')}", str(val)]
    assert main(argv) == 0


def snapshot(ws: Path) -> dict[str, bytes]:
    return {name: (ws / name).read_bytes() for name in ARTIFACTS}


def read_csv(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("run")
    run_pipeline(ws)
    return ws


def test_pipeline_writes_every_artifact(workspace):
    for name in ARTIFACTS:
        assert (workspace / name).exists(), name
    rows = read_csv(workspace / "grid.csv")
    assert len(rows) == 25
    for row in rows:
        assert "/" in row["x0"]  # exact rational endpoints


def test_identical_runs_are_byte_identical(workspace, tmp_path):
    twin = tmp_path / "again"
    run_pipeline(twin)
    assert snapshot(twin) == snapshot(workspace)


def test_stages_are_reentrant(workspace):
    before = snapshot(workspace)
    assert main(["analyze", "--out", str(workspace)]) == 0
    assert main(["approx", "--out", str(workspace)]) == 0
    assert main(["report", "--out", str(workspace)]) == 0
    assert snapshot(workspace) == before


def test_omega_and_coefficient_schemas(workspace):
    omega = read_csv(workspace / "omega.csv")
    assert {r["status"] for r in omega} <= {"active", "dropped"}
    for r in omega:
        assert int(r["shell"]) >= 0
    active = [r for r in omega if r["status"] == "active"]
    assert len(active) == 25
    coeffs = read_csv(workspace / "coefficients.csv")
    assert len(coeffs) == len(active)
    summary = json.loads((workspace / "analysis.json").read_text())
    assert summary["grid_points"] == 25
    assert summary["orthogonality_defect"] <= 1e-10
    assert summary["reconstruction_residual"] <= 1e-10


def test_approx_ratios_bound_below_by_one(workspace):
    rows = read_csv(workspace / "approx.csv")
    assert rows, "no shells reported"
    for row in rows:
        if row["ratio"]:
            assert float(row["ratio"]) >= 1.0 - 1e-9
        assert row["label_agreement"] == ""
    assert float(rows[-1]["degree_error"]) <= 1e-10


def test_metrics_protocol_schema(workspace):
    rows = read_csv(workspace / "metrics.csv")
    assert rows
    for row in rows:
        assert row["metric"] in {"modularity", "modularity_random"}
        assert int(row["trials"]) in {5, 40}
    levels = {int(r["level"]) for r in rows}
    assert levels == {1, 2, 3}  # root's children down to the leaf level
    assert any(r["metric"] == "modularity_random" for r in rows)


def test_trees_summary_counts(workspace):
    summary = json.loads((workspace / "trees.json").read_text())
    for side in ("es", "os"):
        info = summary[side]
        sizes0 = info["levels"][0]["sizes"]
        assert sizes0 == [25]
        leaf_level = info["levels"][info["depth"]]
        assert sum(leaf_level["sizes"]) == 25


def test_labeled_training_protocol(tmp_path, capsys):
    ws = tmp_path / "labeled"
    assert main(["synth", "--out", str(ws), "--kind", "planted",
                 "--seed", "3", "--param", "sizes=[10, 10]",
                 "--param", "p_in=0.6", "--param", "p_out=0.02"]) == 0
    assert main(["cluster", "--out", str(ws), "--levels", "2,4",
                 "--algo", "mbo", "--labeled", "--seed", "5"]) == 0
    assert main(["metrics", "--out", str(ws), "--train-pct", "40",
                 "--trials", "3", "--baseline-trials", "20",
                 "--seed", "7"]) == 0
    rows = read_csv(ws / "metrics.csv")
    by_metric = {}
    for row in rows:
        by_metric.setdefault(row["metric"], []).append(row)
    assert {int(r["level"]) for r in by_metric["f_measure"]} == {1, 2}
    assert {int(r["level"]) for r in by_metric["modularity"]} == {1, 2}
    for row in by_metric["f_measure"]:
        assert 0.0 < float(row["mean"]) <= 1.0
        assert int(row["trials"]) == 3
    capsys.readouterr()


def test_label_signal_rounds_back_to_classes(tmp_path):
    ws = tmp_path / "labelsig"
    assert main(["synth", "--out", str(ws), "--kind", "planted",
                 "--seed", "3", "--param", "sizes=[8, 9]"]) == 0
    assert main(["cluster", "--out", str(ws), "--levels", "2,4",
                 "--seed", "5"]) == 0
    assert main(["grid", "--out", str(ws)]) == 0
    assert main(["analyze", "--out", str(ws), "--signal", "label"]) == 0
    assert main(["approx", "--out", str(ws)]) == 0
    rows = read_csv(ws / "approx.csv")
    agreements = [float(r["label_agreement"]) for r in rows]
    assert all(0.0 <= a <= 1.0 for a in agreements)
    assert agreements[-1] == 1.0


def test_ingest_reads_edges_and_labels(tmp_path, capsys):
    edges = tmp_path / "toy.edges"
    edges.write_text("# comment\na b 2.0\nb c 1.0\nc a 1.0\na c 0.5\n")
    labfile = tmp_path / "toy.labels"
    labfile.write_text("a red\nb red\nc blue\n")
    ws = tmp_path / "ingested"
    assert main(["ingest", "--out", str(ws), "--edges", str(edges),
                 "--labels", str(labfile)]) == 0
    out = capsys.readouterr().out
    assert "3 vertices" in out
    cfg = json.loads((ws / "config.json").read_text())
    assert cfg["ingest"]["edges"] == str(edges)
    from twintree.digraph import WeightedDigraph
    G = WeightedDigraph.load_json(ws / "digraph.json")
    assert G.n == 3 and G.labels[0] == ("red",)


def test_signal_from_file(tmp_path):
    ws = tmp_path / "filesig"
    assert main(["synth", "--out", str(ws), "--seed", "1"]) == 0
    assert main(["cluster", "--out", str(ws), "--seed", "9"]) == 0
    assert main(["grid", "--out", str(ws)]) == 0
    sig = tmp_path / "values.txt"
    sig.write_text("\n".join(str(v % 7) for v in range(25)))
    assert main(["analyze", "--out", str(ws),
                 "--signal", f"file:{sig}"]) == 0
    short = tmp_path / "short.txt"
    short.write_text("1 2 3")
    with pytest.raises(SystemExit, match="25 vertices"):
        main(["analyze", "--out", str(ws), "--signal", f"file:{short}"])
    with pytest.raises(SystemExit, match="unknown signal"):
        main(["analyze", "--out", str(ws), "--signal", "indeg"])


def test_label_signal_needs_labels(tmp_path):
    ws = tmp_path / "nolabels"
    assert main(["synth", "--out", str(ws), "--seed", "1"]) == 0
    assert main(["cluster", "--out", str(ws), "--seed", "9"]) == 0
    assert main(["grid", "--out", str(ws)]) == 0
    with pytest.raises(SystemExit, match="no labels"):
        main(["analyze", "--out", str(ws), "--signal", "label"])


def test_missing_artifacts_fail_loudly(tmp_path):
    ws = tmp_path / "empty"
    with pytest.raises(SystemExit, match="missing artifact"):
        main(["trees", "--out", str(ws)])
    with pytest.raises(SystemExit, match="missing artifact"):
        main(["cluster", "--out", str(ws)])


def test_metrics_validates_its_protocol(tmp_path):
    ws = tmp_path / "proto"
    assert main(["synth", "--out", str(ws), "--seed", "1"]) == 0
    with pytest.raises(SystemExit, match="cluster stage"):
        main(["metrics", "--out", str(ws)])
    assert main(["cluster", "--out", str(ws), "--seed", "9"]) == 0
    with pytest.raises(SystemExit, match="one trial"):
        main(["metrics", "--out", str(ws), "--trials", "0"])
    with pytest.raises(SystemExit, match=r"\[0, 100\)"):
        main(["metrics", "--out", str(ws), "--train-pct", "100"])
    with pytest.raises(SystemExit, match="labeled graph"):
        main(["metrics", "--out", str(ws), "--train-pct", "10",
              "--trials", "2"])


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert "twintree" in capsys.readouterr().out
