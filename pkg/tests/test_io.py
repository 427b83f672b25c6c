# vim: set expandtab shiftwidth=4 softtabstop=4:

import json

import numpy as np
import pytest
from sklearn.metrics import auc

from sbmts.core.errors import ConfigError, DataError
from sbmts.core.experiment import PowerRow, RocCurve
from sbmts.core.graph import Graph
from sbmts.core.io import (
    load_manifest,
    load_sample,
    read_csv_results,
    read_matrix,
    result_metadata,
    sidecar_path,
    write_results,
)

METADATA = {"seed": 7, "config_hash": "0123456789abcdef", "version": "0.1.0", "timestamp": "2026-01-01T00:00:00+00:00"}


def _write(path, text):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def test_directory_sample_is_read_in_filename_order(tmp_path):
    _write(tmp_path / "sample" / "b.txt", "0 1\n")
    _write(tmp_path / "sample" / "a.txt", "n=4\n0 1\n1 2\n")
    _write(tmp_path / "sample" / ".hidden", "garbage\n")
    graphs = load_sample(str(tmp_path / "sample"))
    assert [graph.n for graph in graphs] == [4, 2]
    assert graphs[0].num_edges == 2


def test_comments_and_duplicate_edges(tmp_path):
    path = _write(tmp_path / "g.txt", "# a comment\n0 1  # trailing\n1 0\n\n2 1\n")
    (graph,) = load_sample(str(path))
    assert graph == Graph.from_edges(3, [(0, 1), (1, 2)])


@pytest.mark.parametrize("text", ["0 1\n1 x\n", "0 1\n1 1\n", "0 1\n1 2 3\n"])
def test_malformed_lines_name_file_and_line(tmp_path, text):
    path = _write(tmp_path / "bad.txt", text)
    with pytest.raises(DataError, match="bad.txt:2"):
        load_sample(str(path))


def test_missing_paths(tmp_path):
    with pytest.raises(DataError, match="No such"):
        load_sample(str(tmp_path / "nowhere"))
    (tmp_path / "empty").mkdir()
    with pytest.raises(DataError, match="No edge-list files"):
        load_sample(str(tmp_path / "empty"))


def test_manifest_classes(tmp_path):
    _write(tmp_path / "healthy" / "g0.txt", "0 1\n")
    _write(tmp_path / "healthy" / "g1.txt", "0 1\n1 2\n")
    _write(tmp_path / "other" / "x.txt", "0 2\n")
    manifest = _write(
        tmp_path / "manifest.json",
        json.dumps({"classes": {"healthy": "healthy", "patient": ["other/x.txt"]}}),
    )
    classes = load_manifest(str(manifest))
    assert sorted(classes) == ["healthy", "patient"]
    assert [graph.num_edges for graph in classes["healthy"]] == [1, 2]

    assert len(load_sample(str(manifest), "patient")) == 1
    with pytest.raises(ConfigError, match="pick one"):
        load_sample(str(manifest))
    with pytest.raises(ConfigError, match="no class"):
        load_sample(str(manifest), "missing")


def test_malformed_manifests(tmp_path):
    with pytest.raises(DataError, match="classes"):
        load_manifest(str(_write(tmp_path / "a.json", json.dumps({"groups": {}}))))
    with pytest.raises(DataError, match="not a directory"):
        load_manifest(str(_write(tmp_path / "b.json", json.dumps({"classes": {"x": "missing"}}))))
    with pytest.raises(DataError, match="Cannot read"):
        load_manifest(str(_write(tmp_path / "c.json", json.dumps({"classes": {"x": ["missing.txt"]}}))))


def test_read_matrix(tmp_path):
    assert read_matrix(str(_write(tmp_path / "b.json", "[[0.5, 0.1], [0.1, 0.4]]"))).tolist() == [
        [0.5, 0.1],
        [0.1, 0.4],
    ]
    assert read_matrix(str(_write(tmp_path / "c.json", json.dumps({"B": [[0.2]]})))).shape == (1, 1)
    with pytest.raises(DataError, match="square"):
        read_matrix(str(_write(tmp_path / "d.json", "[[0.5, 0.1]]")))
    with pytest.raises(DataError, match="missing"):
        read_matrix(str(_write(tmp_path / "e.json", json.dumps({"A": [[0.2]]}))))


def test_result_metadata():
    metadata = result_metadata(3, "abc", version="9.9")
    assert metadata["seed"] == 3
    assert metadata["version"] == "9.9"
    assert metadata["timestamp"].endswith("+00:00")
    assert result_metadata(3, "abc")["version"] == "0.1.0"


def test_json_results_carry_metadata(tmp_path):
    path = tmp_path / "out" / "test.json"
    write_results({"k": np.int64(2), "aucs": np.array([0.5, 0.75])}, str(path), METADATA)
    written = json.loads(path.read_text())
    assert written["metadata"] == METADATA
    assert written["data"] == {"k": 2, "aucs": [0.5, 0.75]}


def test_roc_csv(tmp_path):
    curve = RocCurve.from_scores([0.1, 0.4, 0.35], [0.8, 0.3, 0.9])
    path = tmp_path / "roc.csv"
    write_results(curve, str(path), METADATA)
    metadata, rows = read_csv_results(str(path))
    assert metadata["seed"] == "7"
    assert (rows[0]["fpr"], rows[0]["tpr"]) == ("0.0", "0.0")
    assert (rows[-1]["fpr"], rows[-1]["tpr"]) == ("1.0", "1.0")
    fpr = [float(row["fpr"]) for row in rows]
    tpr = [float(row["tpr"]) for row in rows]
    assert float(metadata["auc"]) == pytest.approx(auc(fpr, tpr), abs=1e-9)


def test_power_csv(tmp_path):
    table = [PowerRow("sbmts", "n=100;alternative.eps=0.05", 0.8, 0.04), PowerRow("nclm", "default", 0.1, 0.03)]
    path = tmp_path / "power.csv"
    write_results(table, str(path), METADATA)
    metadata, rows = read_csv_results(str(path))
    assert metadata["config_hash"] == METADATA["config_hash"]
    assert len(rows) == 2
    assert rows[0] == {"method": "sbmts", "param": "n=100;alternative.eps=0.05", "power": "0.8", "se": "0.04"}


def test_csv_leaves_timestamp_to_sidecar(tmp_path):
    table = [PowerRow("sbmts", "default", 0.5, 0.1)]
    first, second = tmp_path / "a" / "power.csv", tmp_path / "b" / "power.csv"
    write_results(table, str(first), METADATA)
    write_results(table, str(second), dict(METADATA, timestamp="2027-06-01T12:00:00+00:00"))
    assert first.read_bytes() == second.read_bytes()
    assert "timestamp" not in read_csv_results(str(first))[0]
    assert sidecar_path(str(first)) == str(tmp_path / "a" / "power.meta.json")
    assert json.loads((tmp_path / "a" / "power.meta.json").read_text()) == METADATA


def test_dash_writes_to_stdout(capsys):
    write_results({"statistic": 1.5}, "-", METADATA)
    assert json.loads(capsys.readouterr().out)["data"] == {"statistic": 1.5}
