import json
import subprocess
import sys
from pathlib import Path

import pytest

from metricmaps.cli import main

FIX = Path(__file__).resolve().parent.parent / "fixtures"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def report(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out), json.loads(err)


def test_validate(capsys):
    code, rep, manifest = report(capsys, "validate", FIX / "p1.json")
    assert code == 0 and rep["ok"]
    assert manifest["exitCode"] == 0 and manifest["seed"] == 0
    assert {"argv", "configSha256", "version", "backend", "jobs", "wallTime", "outputs"} <= set(manifest)
    code, rep, _ = report(capsys, "validate", FIX / "bad_triangle.json")
    assert code == 3 and not rep["ok"] and rep["violations"]


@pytest.mark.parametrize("name", ["malformed.json", "asymmetric.json", "nope.json"])
def test_validate_input_errors(capsys, name):
    code, out, err = run(capsys, "validate", FIX / name)
    assert code == 2 and out == "" and err.startswith("mc:")


def test_validate_csv_space(capsys):
    code, rep, _ = report(capsys, "validate", FIX / "line5.csv")
    assert code == 0 and rep["ok"] and rep["n"] == 5


def test_quality(capsys):
    code, rep, _ = report(capsys, "quality", FIX / "identity_p1.json")
    assert code == 0
    assert rep["accuracy"] == rep["resolution"] == rep["precision"] == 0
    code, rep, _ = report(capsys, "quality", FIX / "bijection_2v2.json")
    assert rep["accuracy"] == 2


@pytest.mark.parametrize("name,code", [("bad_pairs.json", 2), ("missing_pairs.json", 2), ("bad_metric_relation.json", 3)])
def test_quality_errors(capsys, name, code):
    assert run(capsys, "quality", FIX / name)[0] == code


def test_generalize(capsys):
    code, rep, _ = report(capsys, "generalize", FIX / "identity_p1.json", "--eps", 0.5, "--mu", 0.5)
    assert code == 0
    assert all(c["holds"] for c in rep["bounds"] if not c["witness_dependent"])


def test_gh(capsys):
    code, rep, _ = report(capsys, "gh", "--x", FIX / "one_point.json", "--y", FIX / "diam5.json")
    assert code == 0 and rep["value"] == 5 and rep["exact"]
    _, rep, _ = report(capsys, "gh", "--x", FIX / "two_d1.json", "--y", FIX / "two_d3.json", "--classical")
    assert rep["value"] == 1
    _, rep, _ = report(capsys, "gh", "--x", FIX / "equilateral.json", "--y", FIX / "equilateral.json")
    assert rep["value"] == 0


def test_axioms_with_config(capsys):
    code, rep, manifest = report(capsys, "axioms", "--config", FIX / "axioms_heis.toml", "--samples", 500)
    assert code == 0
    assert rep["structure"]["structure"] == "heis" and rep["samples"] == 500
    assert manifest["seed"] == 7 and len(manifest["configSha256"]) == 64
    assert rep["a1"] == 0 and rep["a2"] == 0


def test_bad_config(capsys):
    code, _, err = run(capsys, "axioms", "--config", FIX / "bad_config.toml")
    assert code == 2 and "colour" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["axioms"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_zoom_and_foveal(capsys, tmp_path):
    cfg = FIX / "zoom_logpe.json"
    code, rep, _ = report(capsys, "zoom", "--config", cfg, "--schedule", "3:6")
    assert code == 0 and rep["cascade"]["holds"]
    out = tmp_path / "fov.json"
    code, stdout, err = run(capsys, "foveal", "--config", cfg, "--schedule", "3:6", "--out", out)
    assert code == 0 and stdout == "" and err == ""
    assert json.loads(out.read_text())["bounds"]["holds"]
    manifest = json.loads(Path(str(out) + ".manifest.json").read_text())
    assert manifest["outputs"] == [str(out)]


def test_csv_output(capsys, tmp_path):
    code, out, _ = run(capsys, "pansu", "--structure", "euclid", "--map", "smooth", "--samples", 200, "--csv")
    lines = out.strip().splitlines()
    assert code == 0 and lines[0].split(",") == ["eps", "residual"] and len(lines) == 9
    target = tmp_path / "p.json"
    run(capsys, "pansu", "--structure", "euclid", "--map", "smooth", "--samples", 200, "--csv", "--out", target)
    assert (tmp_path / "p.csv").read_text() == out


def test_pansu_unavailable_map(capsys):
    assert run(capsys, "pansu", "--structure", "snowflake", "--map", "linear")[0] == 2


def test_jobs_do_not_change_output(tmp_path):
    outs = []
    for jobs in (1, 8):
        target = tmp_path / f"a{jobs}.json"
        subprocess.run([sys.executable, "-m", "metricmaps.cli", "axioms", "--structure", "logpe", "--samples", "2000",
                        "--jobs", str(jobs), "--out", str(target)], check=True, capture_output=True)
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
