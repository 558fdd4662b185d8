import csv
import io
import json
import math

import pytest

from ippt.cli import main
from ippt.states import paper_target_state, reference_state, save_state


@pytest.fixture
def files(tmp_path):
    save_state(paper_target_state(), tmp_path / "target.json")
    save_state(reference_state(math.pi), tmp_path / "ref.json")
    return tmp_path


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_detect_exact_ppt(files, capsys):
    code, out, _ = run(["detect", "--state", files / "target.json", "--method", "exact-ppt",
                        "--split", "0/12"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["method"] == "exact_ppt"
    assert {"value", "detected"} <= set(doc)


def test_detect_all_methods(files, capsys):
    code, out, _ = run(["detect", "--state", files / "target.json", "--split", "1/02",
                        "--depth", "1", "--restarts", "2", "--iterations", "20"], capsys)
    doc = json.loads(out)
    assert code == 0
    assert [r["method"] for r in doc["reports"]] == ["exact_ppt", "ippt", "purity", "fidelity_ew"]


def test_sweep_to_file(files, capsys):
    out_path = files / "sweep.csv"
    code, _, _ = run(["sweep-theta", "--points", 64, "--shots", 100000, "--seed", 7,
                      "--out", out_path], capsys)
    assert code == 0
    lines = [l for l in out_path.read_text().splitlines() if not l.startswith("#")]
    rows = list(csv.DictReader(io.StringIO("\n".join(lines))))
    assert len(rows) == 64
    assert float(rows[-1]["ideal_value"]) == pytest.approx(-0.2)
    assert rows[0]["shot_mean"] != ""


def test_config_file_mirrors_flags(files, capsys):
    cfg = files / "cfg.json"
    cfg.write_text(json.dumps({"points": 3, "theta-max": 1.0}))
    code, out, _ = run(["sweep-theta", "--config", cfg], capsys)
    assert code == 0 and len(out.strip().splitlines()) == 5
    code, out, _ = run(["sweep-theta", "--config", cfg, "--points", 4], capsys)
    assert len(out.strip().splitlines()) == 6
    cfg.write_text(json.dumps({"state": str(files / "target.json"), "split": "0/12", "method": "purity"}))
    code, out, _ = run(["detect", "--config", cfg], capsys)
    assert code == 0 and json.loads(out)["method"] == "purity"
    cfg.write_text(json.dumps({"pointz": 3}))
    code, _, err = run(["sweep-theta", "--config", cfg], capsys)
    assert code == 2 and "pointz" in err


def test_estimate_and_reingest(files, capsys):
    shots = files / "shots.csv"
    code, out, _ = run(["estimate", "--state", files / "target.json", "--reference", files / "ref.json",
                        "--split", "1/02", "--shots", 20000, "--seed", 3, "--save-shots", shots], capsys)
    sampled = json.loads(out)
    assert code == 0 and sampled["detected"] and sampled["exact"] == pytest.approx(-0.2)
    code, out, _ = run(["estimate", "--shots-file", shots, "--split", "1/02"], capsys)
    again = json.loads(out)
    assert code == 0 and again["mean"] == sampled["mean"] and again["shots"] == 20000


def test_ensemble_small(capsys):
    code, out, _ = run(["ensemble", "--n", 3, "--k", "2", "--samples", 2, "--depths", "1",
                        "--fidelity-depth", 1, "--restarts", 1, "--iterations", 10], capsys)
    assert code == 0
    assert out.splitlines()[1].startswith("k,method,depth")


def test_ew_min(capsys):
    code, out, _ = run(["ew-min", "--restarts", 4], capsys)
    assert code == 0 and json.loads(out)["value"] == pytest.approx(0.05, abs=1e-3)


def test_input_errors(files, capsys):
    bad = files / "bad.json"
    bad.write_text(json.dumps({"n_qubits": 1, "kind": "density", "data": [[0.4, 0], [0, 0], [0, 0], [0.4, 0]]}))
    code, _, err = run(["detect", "--state", bad, "--split", "0/1", "--method", "purity"], capsys)
    assert code == 2 and "trace" in err
    code, _, err = run(["detect", "--state", files / "missing.json", "--split", "0/1"], capsys)
    assert code == 2 and "file" in err
    code, _, err = run(["detect", "--state", files / "target.json", "--split", "0/1"], capsys)
    assert code == 2 and "split" in err
    (files / "junk.csv").write_text("0,9\n")
    code, _, err = run(["estimate", "--shots-file", files / "junk.csv", "--split", "0/1"], capsys)
    assert code == 2 and "shots" in err
    code, _, _ = run(["sweep-theta", "--points", "many"], capsys)
    assert code == 2
    code, _, _ = run(["estimate", "--split", "0/1"], capsys)
    assert code == 2


def test_help_documents_columns(capsys):
    assert main(["sweep-theta", "--help"]) == 0
    assert "theta,ideal_value,noisy_value,shot_mean,shot_stderr" in capsys.readouterr().out
