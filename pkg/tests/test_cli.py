"""
Tests for the dgl command line: exit codes, JSON output and written files.
"""
import csv
import json

import pytest

from deepgraphlog.cli import main
from observability.event_store import event_store

from .programs import BLOCKS, BLOCKS_GNN


@pytest.fixture
def blocks_file(tmp_path):
    path = tmp_path / "blocks.dgl"
    path.write_text(BLOCKS, encoding="utf-8")
    return path


def _json(capsys):
    return json.loads(capsys.readouterr().out)


class TestCheck:
    def test_valid_program(self, blocks_file):
        assert main(["check", str(blocks_file)]) == 0
        [event] = event_store.query(event_type="program.checked")
        assert event["source"] == str(blocks_file)
        assert event["statements"] > 0

    def test_syntax_error(self, tmp_path, capsys):
        path = tmp_path / "bad.dgl"
        path.write_text("on(a,b\n", encoding="utf-8")
        assert main(["check", str(path)]) == 1
        assert "bad.dgl:" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert main(["check", str(tmp_path / "missing.dgl")]) == 2


class TestQuery:
    def test_marginal(self, blocks_file, capsys):
        assert main(["query", str(blocks_file), "--query", "legal_move(a)"]) == 0
        result = _json(capsys)
        assert result["query"] == "legal_move(a)"
        assert result["probability"] == pytest.approx(0.41)
        assert result["relevant_fact_count"] == 3

    def test_conditional(self, blocks_file, capsys):
        assert main(["query", str(blocks_file), "--query", "legal_move(a)", "--evidence", "light(a)"]) == 0
        assert _json(capsys)["probability"] == pytest.approx(0.82)

    def test_negative_evidence(self, blocks_file, capsys):
        args = ["query", str(blocks_file), "--query", "light(a)", "--not-evidence", "legal_move(a)"]
        assert main(args) == 0
        result = _json(capsys)
        assert result["probability"] == pytest.approx(0.09 / 0.59)
        assert result["evidence"] == ["not legal_move(a)"]

    def test_cap_refusal(self, blocks_file, capsys):
        assert main(["query", str(blocks_file), "--query", "legal_move(a)", "--cap", "1"]) == 3
        assert capsys.readouterr().out == ""

    def test_program_directives(self, tmp_path, capsys):
        path = tmp_path / "directives.dgl"
        path.write_text(BLOCKS + "query(move(a)).\nquery(legal_move(a)).\n", encoding="utf-8")
        assert main(["query", str(path)]) == 0
        results = _json(capsys)
        assert [r["query"] for r in results] == ["move(a)", "legal_move(a)"]
        assert results[0]["probability"] == pytest.approx(0.82)

    def test_unknown_query_syntax(self, blocks_file):
        assert main(["query", str(blocks_file), "--query", "move(X"]) == 1


class TestTrain:
    def test_writes_parameters_and_log(self, tmp_path):
        program = tmp_path / "blocks.dgl"
        program.write_text(BLOCKS_GNN.replace("0.5::light(a)", "t(0.5)::light(a)"), encoding="utf-8")
        data = tmp_path / "train.csv"
        data.write_text("query,target\nlegal_move(a),1\nmove(a),0.2\n", encoding="utf-8")
        out = tmp_path / "out"

        code = main(["train", str(program), "--data", str(data), "--epochs", "2", "--lr", "0.05", "--out", str(out)])

        assert code == 0
        snapshot = json.loads((out / "params.json").read_text(encoding="utf-8"))
        assert "light(a)" in snapshot["facts"]
        assert "m_move" in snapshot["models"]
        with open(out / "log.csv", newline="") as handle:
            assert [r["epoch"] for r in csv.DictReader(handle)] == ["1", "2"]

    def test_trained_parameters_feed_queries(self, tmp_path, capsys):
        program = tmp_path / "coin.dgl"
        program.write_text("t(0.5)::heads.\n", encoding="utf-8")
        data = tmp_path / "train.csv"
        data.write_text("query,target\nheads,1\n", encoding="utf-8")
        out = tmp_path / "out"
        assert main(["train", str(program), "--data", str(data), "--epochs", "20", "--lr", "0.1", "--out", str(out)]) == 0
        capsys.readouterr()

        assert main(["query", str(program), "--query", "heads", "--params", str(out / "params.json")]) == 0
        assert _json(capsys)["probability"] > 0.5

    def test_bad_data(self, blocks_file, tmp_path):
        data = tmp_path / "train.csv"
        data.write_text("query,target\nmove(a),7\n", encoding="utf-8")
        assert main(["train", str(blocks_file), "--data", str(data), "--out", str(tmp_path)]) == 1


class TestExperiment:
    def test_unknown_experiment(self, tmp_path):
        assert main(["experiment", "e9", "--out", str(tmp_path)]) == 1

    @pytest.mark.parametrize("reps", ["0", "-2"])
    def test_non_positive_repetitions(self, tmp_path, capsys, reps):
        assert main(["experiment", "e1", "--reps", reps, "--out", str(tmp_path)]) == 1
        assert "repetitions must be at least 1" in capsys.readouterr().err
        assert not (tmp_path / "e1").exists()
