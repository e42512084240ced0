import json
import shutil
import subprocess
import sys

import jsonschema
import pytest

from licscan import pipeline
from licscan.cli import EXIT_ERROR, EXIT_INCOMPATIBLE, EXIT_OK, main
from licscan.term_id import read_tsv, tag, write_tsv

from _support import FIXTURES, PROJECTS


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def schema():
    return pipeline.report_schema()


# ------------------------------------------------------------------ analyze

def test_redistribution_clash_exit_and_conflict(capsys, schema):
    code, out, _ = run(capsys, "analyze", PROJECTS / "redistribution_clash", "--offline")
    doc = json.loads(out)
    jsonschema.validate(doc, schema)
    assert code == EXIT_INCOMPATIBLE and doc["verdict"] is True
    assert [(c["term_name"], c["left"]["attitude"], c["right"]["attitude"], c["rule"]) for c in doc["conflicts"]] == [
        ("Distribute", "CAN", "CANNOT", "PLvsCL")
    ]


def test_credit_clash_conflict(capsys, schema):
    code, out, _ = run(capsys, "analyze", PROJECTS / "credit_clash", "--offline")
    doc = json.loads(out)
    jsonschema.validate(doc, schema)
    credit = [c for c in doc["conflicts"] if c["term_name"] == "Give Credit"]
    assert code == EXIT_INCOMPATIBLE
    assert [(c["left"]["attitude"], c["right"]["attitude"]) for c in credit] == [("CANNOT", "MUST")]


def test_compatible_project_exits_zero(capsys, schema):
    code, out, _ = run(capsys, "analyze", PROJECTS / "mit_only", "--offline")
    doc = json.loads(out)
    jsonschema.validate(doc, schema)
    assert code == EXIT_OK and doc["verdict"] is False and doc["conflicts"] == []


def test_canonical_json(capsys):
    _, out, _ = run(capsys, "analyze", PROJECTS / "redistribution_clash", "--offline")
    assert pipeline.dumps(json.loads(out)) == out


def test_analyze_is_byte_identical_across_runs(capsys):
    outs = [run(capsys, "analyze", PROJECTS / "credit_clash", "--offline")[1] for _ in range(3)]
    assert outs[0] == outs[1] == outs[2]


def test_text_format(capsys):
    code, out, _ = run(capsys, "analyze", PROJECTS / "redistribution_clash", "--offline", "--format", "text")
    assert code == EXIT_INCOMPATIBLE
    assert out.startswith("project ") and "INCOMPATIBLE" in out and "conflict on Distribute" in out


def test_permissive_default_reduces_conflicts(capsys):
    root = FIXTURES / "ablation" / "p01"
    strict = json.loads(run(capsys, "analyze", root, "--offline")[1])
    lenient = json.loads(run(capsys, "analyze", root, "--offline", "--default-absent-right", "can")[1])
    assert lenient["policy"]["absent_right"] == "CAN"
    assert len(lenient["conflicts"]) < len(strict["conflicts"])


def test_bad_policy_value_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["analyze", str(PROJECTS / "redistribution_clash"), "--default-absent-right", "must"])
    assert err.value.code == 2


# --------------------------------------------------------------------- scan

def test_scan_lists_licenses(capsys, schema):
    code, out, _ = run(capsys, "scan", PROJECTS / "redistribution_clash", "--offline")
    doc = json.loads(out)
    jsonschema.validate(doc, schema)
    assert code == EXIT_OK and doc["mode"] == "scan" and "verdict" not in doc
    assert [(lic["origin"], lic["role"]) for lic in doc["licenses"]] == [("LICENSE", "PL"), ("vendor/nodist/LICENSE", "CL")]


def test_scan_empty_directory(capsys, tmp_path):
    code, out, _ = run(capsys, "scan", tmp_path, "--offline")
    assert code == EXIT_OK and json.loads(out)["licenses"] == []


def test_undecodable_license_is_a_warning(capsys, tmp_path):
    shutil.copytree(PROJECTS / "mit_only", tmp_path / "proj")
    (tmp_path / "proj" / "sub").mkdir()
    (tmp_path / "proj" / "sub" / "LICENSE").write_bytes(b"\xff\xfe\x00bad\x80\x81")
    code, out, _ = run(capsys, "analyze", tmp_path / "proj", "--offline")
    doc = json.loads(out)
    assert code == EXIT_OK and any("sub/LICENSE" in w for w in doc["warnings"])


def test_snapshot_resolves_requirements_offline(capsys, tmp_path):
    (tmp_path / "LICENSE").write_text((PROJECTS / "mit_only" / "LICENSE").read_text())
    (tmp_path / "requirements.txt").write_text("flask\n")
    code, out, _ = run(capsys, "scan", tmp_path, "--offline", "--snapshot", FIXTURES / "snapshot.json")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert any(lic["spdx_id"] == "BSD-3-Clause" and lic["kind"] == "Referenced" for lic in doc["licenses"])


def test_scan_text_format(capsys):
    code, out, _ = run(capsys, "scan", PROJECTS / "redistribution_clash", "--offline", "--format", "text")
    assert code == EXIT_OK and "vendor/nodist/LICENSE" in out


# ------------------------------------------------------------------ explain

def test_explain_distribute(capsys):
    code, out, _ = run(capsys, "explain", PROJECTS / "redistribution_clash", "--offline", "--term", "Distribute")
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("term 0 Distribute")
    assert "Redistribute" in out and "powerful tokens:" in out and "conflict:" in out


def test_explain_by_id_matches_name(capsys):
    by_name = run(capsys, "explain", PROJECTS / "redistribution_clash", "--offline", "--term", "Distribute")[1]
    by_id = run(capsys, "explain", PROJECTS / "redistribution_clash", "--offline", "--term", "0")[1]
    assert by_name == by_id


def test_explain_unknown_term(capsys):
    code, _, err = run(capsys, "explain", PROJECTS / "redistribution_clash", "--offline", "--term", "Teleport")
    assert code == EXIT_ERROR and "unknown term" in err


# ---------------------------------------------------------------- errors

def test_missing_root(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", tmp_path / "nope", "--offline")
    assert code == EXIT_ERROR and "not found" in err


def test_missing_model(capsys, tmp_path):
    code, _, err = run(capsys, "analyze", PROJECTS / "redistribution_clash", "--offline", "--model", tmp_path / "m.json")
    assert code == EXIT_ERROR and "model not found" in err


def test_bad_config(capsys, tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    code, _, err = run(capsys, "scan", PROJECTS / "redistribution_clash", "--offline", "--config", tmp_path / "c.json")
    assert code == EXIT_ERROR and "bad scan config" in err


def test_malformed_training_file(capsys, tmp_path):
    (tmp_path / "bad.tsv").write_text("word\tXX\n")
    code, _, err = run(capsys, "train", tmp_path / "bad.tsv", "--out", tmp_path / "m.json")
    assert code == EXIT_ERROR and "bad.tsv:1:" in err


# ---------------------------------------------------------- train and eval

def test_train_is_byte_identical(capsys, tmp_path):
    small = FIXTURES / "train_small.tsv"
    for name in ("a.json", "b.json"):
        assert run(capsys, "train", small, "--seed", "7", "--out", tmp_path / name)[0] == EXIT_OK
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_eval_perfect_model(capsys, tmp_path, model):
    gold = [s for s in read_tsv(FIXTURES / "train_small.tsv")]
    predicted = [type(s)(s.sentence, tuple(tag(model, s.sentence))) for s in gold]
    write_tsv(predicted, tmp_path / "self.tsv")
    code, out, _ = run(capsys, "eval", pipeline.bundled_model_path(), tmp_path / "self.tsv")
    assert code == EXIT_OK and "F1        1.0000" in out


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "licscan.cli", "analyze", str(PROJECTS / "redistribution_clash"), "--offline"],
                          capture_output=True, text=True)
    assert proc.returncode == EXIT_INCOMPATIBLE and json.loads(proc.stdout)["verdict"] is True
