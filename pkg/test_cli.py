import json
import os

import pandas as pd
import pytest

import app
import config
import database as db
from services.reporting import CSV_COLUMNS, validate_report

SPECS = config.SPECS_DIR


@pytest.fixture(autouse=True)
def runs_db(tmp_path, monkeypatch):
    path = str(tmp_path / "runs.db")
    monkeypatch.setattr(config, "RUNS_DB_FILE", path)
    return path


def _write(tmp_path, name, doc):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc), encoding="utf-8")
    return str(path)


def _read_json(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


CONSTANT_TWO = {
    "kind": "function", "p": 2,
    "domain": {"lo": 0, "hi": 1, "lo_closed": True, "hi_closed": True},
    "pieces": [{"lo": 0, "hi": 1, "lo_closed": True, "hi_closed": True, "terms": [{"coeff": 2}]}],
}


# --- verdicts and exit codes ---

def test_check_alpha_with_synthesized_witness(capsys):
    code = app.main(["check-alpha", "--gallery", "E1", "--p", "2", "--horizon", "200", "--witness", "synth"])
    assert code == 0
    assert "ConvergesAtHorizon" in capsys.readouterr().out


def test_check_alpha_e2_complement_witness_fails():
    spec = os.path.join(SPECS, "e2-complement-witness.json")
    assert app.main(["check-alpha", "--spec", spec, "--horizon", "32"]) == 1


def test_check_in_measure_e1_csv(tmp_path):
    out = str(tmp_path / "e1.csv")
    code = app.main(["check-in-measure", "--gallery", "E1", "--delta", "0.5", "--horizon", "64",
                     "--out", out, "--format", "csv"])
    assert code == 0
    df = pd.read_csv(out)
    assert list(df.columns)[:4] == CSV_COLUMNS
    assert df["n"].tolist() == list(range(1, 65))
    assert df["value"].tolist() == pytest.approx([1.0 / n for n in range(1, 65)])


def test_check_in_measure_delta_grid(tmp_path):
    out = str(tmp_path / "grid.json")
    code = app.main(["check-in-measure", "--gallery", "E2", "--delta", "grid", "--horizon", "64", "--out", out])
    doc = _read_json(out)
    assert doc["report"]["kind"] == "in-measure-grid"
    assert len(doc["report"]["reports"]) == len(config.DEFAULT_DELTA_GRID)
    assert doc["exit_code"] == code


def test_oscillating_sequence_fails():
    spec = os.path.join(SPECS, "oscillating-indicator.json")
    assert app.main(["check-in-measure", "--spec", spec, "--delta", "0.5", "--horizon", "32"]) == 1


def test_synth_witness(capsys):
    assert app.main(["synth-witness", "--gallery", "E1", "--horizon", "64"]) == 0
    assert "synthesized" in capsys.readouterr().out


def test_check_cauchy_e1():
    assert app.main(["check-cauchy", "--gallery", "E1", "--delta", "0.5", "--horizon", "256"]) == 0


def test_weak_norm_json(tmp_path):
    out = str(tmp_path / "e2.json")
    code = app.main(["weak-norm", "--gallery", "E2", "--p", "2", "--n", "10", "--out", out])
    assert code == 0
    doc = _read_json(out)
    assert validate_report(doc) == (True, [])
    assert doc["verdict"] == "Finite"
    assert doc["report"]["quasinorm"]["value"] == pytest.approx(0.1, abs=1e-6)


def test_weak_norm_infinite_e3():
    assert app.main(["weak-norm", "--gallery", "E3", "--p", "1"]) == 1


def test_check_weak_conv():
    assert app.main(["check-weak-conv", "--gallery", "E2", "--horizon", "256"]) == 0
    assert app.main(["check-weak-conv", "--gallery", "E1", "--horizon", "64"]) == 1


def test_ap_member(capsys):
    assert app.main(["ap-member", "--gallery", "E4"]) == 1
    assert "divergent tail, exponent -1" in capsys.readouterr().out
    assert app.main(["ap-member", "--gallery", "E3"]) == 0


def test_embed(tmp_path):
    out = str(tmp_path / "embed.json")
    spec = os.path.join(SPECS, "inverse-sqrt.json")
    assert app.main(["embed", "--spec", spec, "--delta", "0.1", "--out", out]) == 0
    report = _read_json(out)["report"]
    assert report["K"] == 11
    assert report["holds"] is True


def test_oracle_constant_function(tmp_path):
    spec = _write(tmp_path, "two.json", CONSTANT_TWO)
    out = str(tmp_path / "oracle.json")
    assert app.main(["oracle", "--spec", spec, "--delta", "1", "--out", out]) == 0
    report = _read_json(out)["report"]
    assert report["measure"]["grid"] == pytest.approx(1.0)
    assert report["integral"]["mc"] == pytest.approx(4.0)


NEEDLE = {
    "kind": "function", "p": 1,
    "domain": {"lo": 0, "hi": 1, "lo_closed": True, "hi_closed": True},
    "pieces": [
        {"lo": 0, "hi": 1e-9, "lo_closed": True, "hi_closed": True, "terms": [{"coeff": 1e6}]},
        {"lo": 1e-9, "hi": 1, "lo_closed": False, "hi_closed": True, "terms": [{"coeff": 0}]},
    ],
}


def test_oracle_agreement_uses_report_tolerance(tmp_path):
    # ∫ f = 1e-3 sits on a set no uniform sample is expected to hit
    spec = _write(tmp_path, "needle.json", NEEDLE)
    out = str(tmp_path / "oracle.json")
    argv = ["oracle", "--spec", spec, "--delta", "2e6", "--out", out]

    assert app.main(argv) == config.EXIT_UNDECIDED
    report = _read_json(out)["report"]
    assert report["tolerance"] == config.REPORT_TOLERANCE
    assert report["integral"]["agrees"] is False

    cfg = _write(tmp_path, "loose.json", {"report_tolerance": 1e-2})
    assert app.main(argv + ["--config", cfg]) == config.EXIT_PASS
    doc = _read_json(out)
    assert doc["settings"]["report_tolerance"] == 1e-2
    assert doc["report"]["tolerance"] == 1e-2
    assert doc["report"]["integral"]["agrees"] is True


def test_gallery_listing_and_export(tmp_path, capsys):
    assert app.main(["gallery"]) == 0
    listing = capsys.readouterr().out
    assert all(item in listing for item in config.GALLERY_IDS)

    spec = str(tmp_path / "e2.json")
    assert app.main(["gallery", "--gallery", "E2", "--p", "2", "--out", spec]) == 0
    assert app.main(["check-weak-conv", "--spec", spec, "--horizon", "64"]) == 0


# --- usage errors ---

def test_unknown_flag():
    assert app.main(["weak-norm", "--gallery", "E2", "--frobnicate"]) == config.EXIT_USAGE


def test_unknown_command():
    assert app.main(["converge"]) == config.EXIT_USAGE


def test_bad_spec_reports_position(tmp_path, capsys):
    spec = _write(tmp_path, "bad.json", '{\n  "kind": "sequence",\n  oops\n}')
    assert app.main(["check-in-measure", "--spec", spec]) == config.EXIT_USAGE
    assert "line 3" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["check-in-measure", "--horizon", "64"],
    ["check-in-measure", "--gallery", "E1", "--spec", "x.json"],
    ["check-in-measure", "--gallery", "E1", "--horizon", "4"],
    ["check-in-measure", "--gallery", "E1", "--p", "0.5"],
    ["check-in-measure", "--gallery", "E1", "--delta", "-1"],
    ["weak-norm", "--gallery", "E1"],
    ["check-in-measure", "--gallery", "E3"],
    ["oracle", "--gallery", "E4"],
])
def test_usage_errors(argv):
    assert app.main(argv) == config.EXIT_USAGE


def test_unknown_settings_key(tmp_path):
    cfg = _write(tmp_path, "cfg.json", {"pass_threshold": 1e-3, "speed": "fast"})
    assert app.main(["check-in-measure", "--gallery", "E1", "--config", cfg]) == config.EXIT_USAGE


def test_template_config_matches_defaults():
    assert config.load_settings(os.path.join(SPECS, "template-config.json")) == config.OVERRIDABLE


def test_thresholds_from_the_command_line(tmp_path):
    out = str(tmp_path / "loose.json")
    app.main(["check-in-measure", "--gallery", "E1", "--delta", "0.5", "--horizon", "64",
              "--pass-th", "0.05", "--out", out])
    doc = _read_json(out)
    assert doc["settings"]["pass_threshold"] == 0.05
    assert doc["report"]["decision_rule"]["pass_threshold"] == 0.05


# --- run registry ---

def test_record_and_history(runs_db, capsys):
    assert app.main(["weak-norm", "--gallery", "E2", "--n", "4", "--record"]) == 0
    assert app.main(["weak-norm", "--gallery", "E2", "--n", "4", "--record"]) == 0

    runs = db.get_runs_list(db_file=runs_db)
    assert len(runs) == 2
    assert sorted(runs["version"].tolist()) == [1, 2]
    capsys.readouterr()

    assert app.main(["history"]) == 0
    assert "gallery:E2" in capsys.readouterr().out

    run_id = runs.iloc[0]["id"]
    assert app.main(["history", "--show", run_id]) == 0
    shown = json.loads(capsys.readouterr().out)
    assert shown["command"] == "weak-norm"
    assert shown["report"]["quasinorm"]["value"] == pytest.approx(0.25, abs=1e-6)

    assert app.main(["history", "--only", "weak-norm", "--versions", "gallery:E2"]) == 0
    listing = capsys.readouterr().out
    assert all(rid in listing for rid in runs["id"])
    assert app.main(["history", "--only", "embed", "--versions", "gallery:E2"]) == 0
    assert "No recorded 'embed' runs" in capsys.readouterr().out
    assert app.main(["history", "--versions", "gallery:E2"]) == config.EXIT_USAGE

    assert app.main(["history", "--show", "missing"]) == 1
