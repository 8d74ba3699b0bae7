import io
import json

import pytest

from texpl.cli import (
    EXIT_INSTANCE,
    EXIT_MODEL,
    EXIT_OK,
    EXIT_UNSUPPORTED,
    EXIT_USAGE,
    SCHEMA,
    build_parser,
    run,
)


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), out=out)
    return code, out.getvalue()


def test_predict_iris_rfwv():
    code, out = call("predict", "-m", "iris_rfwv", "-i", "5.1,2.75,1.4,0.8")
    assert code == EXIT_OK
    assert out.strip().splitlines()[-1] == "Versicolor"


def test_explain_axp_iris_bt():
    code, out = call("explain", "--axp", "-m", "iris_bt", "-i", "5.1,3.5,1.4,0.2")
    assert code == EXIT_OK
    assert "AXp: {petal.length}" in out


def test_robustness_delta_zero():
    code, out = call("verify", "robustness", "-m", "iris_rfmv", "-i", "6.0,3.5,1.4,0.2", "--delta", "0")
    assert code == EXIT_OK
    assert "robust" in out and "not robust" not in out


def test_jsonl_is_byte_identical_and_versioned():
    argv = ("enumerate", "-m", "iris_rfwv", "-i", "5.1,2.75,1.4,0.8", "-o", "jsonl")
    first, second = call(*argv)[1], call(*argv)[1]
    assert first == second
    header = json.loads(first.splitlines()[0])
    assert header["schema"] == SCHEMA and header["version"] == 1
    body = [json.loads(line) for line in first.splitlines()[1:]]
    assert {x["kind"] for x in body[0]["explanations"]} == {"AXp", "CXp"}


def test_error_exit_codes(tmp_path):
    assert call("predict", "-m", "missing-model", "-i", "1")[0] == EXIT_MODEL
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert call("predict", "-m", str(bad), "-i", "1")[0] == EXIT_MODEL
    assert call("predict", "-m", "iris_bt", "-i", "1,2")[0] == EXIT_INSTANCE
    assert call("verify", "fairness", "-m", "iris_bt", "-p", "sepal.width")[0] == EXIT_UNSUPPORTED
    assert call("explain", "-m", "iris_bt", "-i", "5.1,3.5,1.4,0.2", "--mode", "sat")[0] == EXIT_UNSUPPORTED
    assert call("predict", "-m", "iris_bt")[0] == EXIT_USAGE
    with pytest.raises(SystemExit) as err:
        call("explain", "--bogus")
    assert err.value.code == EXIT_USAGE


def test_time_limit_exit_code(monkeypatch):
    monkeypatch.setenv("TEXPL_TIME_LIMIT", "0")
    code, _ = call("explain", "-m", "iris_rfmv", "-i", "6.0,3.5,1.4,0.2")
    assert code == 6


def test_csv_rows_and_jobs(tmp_path):
    rows = tmp_path / "rows.csv"
    rows.write_text("label,sepal.length,sepal.width,petal.length,petal.width\nx,5.1,3.5,1.4,0.2\ny,6.3,2.8,5.1,1.5\n")
    code, out = call("explain", "-m", "iris_bt", "--csv", str(rows), "-o", "jsonl", "-j", "2")
    assert code == EXIT_OK
    recs = [json.loads(line) for line in out.splitlines()[1:]]
    assert [r["prediction"] for r in recs] == ["Setosa", "Versicolor"]
    code, out = call("predict", "-m", "iris_bt", "--csv", str(rows), "--row", "1", "-o", "jsonl")
    assert len(out.splitlines()) == 2


def test_encode_sat_and_maxsat_roundtrip(tmp_path, capsys):
    cnf, names = tmp_path / "f.cnf", tmp_path / "names.json"
    assert call("encode", "-m", "iris_rfmv", "-i", "6.0,3.5,1.4,0.2", "--dump", str(cnf), "--names", str(names))[0] == 0
    first = cnf.read_text().splitlines()[0]
    assumptions = ",".join(first.split()[2:])
    assert run(["sat", str(cnf), f"--assume={assumptions}"]) == 0
    assert "UNSATISFIABLE" in capsys.readouterr().out
    assert "sepal.length<5.55" in json.loads(names.read_text()).values()

    wcnf = tmp_path / "f.wcnf"
    assert call("encode", "-m", "iris_bt", "-i", "5.1,3.5,1.4,0.2", "--dump", str(wcnf))[0] == 0
    assumptions = ",".join(wcnf.read_text().splitlines()[0].split()[2:])
    assert run(["maxsat", str(wcnf), f"--assume={assumptions}"]) == 0
    assert "c objective -1.12639" in capsys.readouterr().out


def test_oracle_is_hidden_but_available():
    help_text = build_parser().format_help()
    assert "oracle" not in help_text
    code, out = call("oracle", "-m", "iris_bt", "-i", "5.1,3.5,1.4,0.2", "-o", "jsonl")
    assert json.loads(out.splitlines()[1])["axps"] == [["petal.length"]]


def test_help_documents_exit_codes():
    assert "time limit reached" in build_parser().format_help()
