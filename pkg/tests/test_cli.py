import json

import pytest

from aras.cli import demo_path, main


def run_cli(*argv):
    return main(list(argv))


def test_validate_demo(capsys):
    assert run_cli("validate", "demo:baseline") == 0
    assert capsys.readouterr().out.startswith("ok: baseline")


def test_validate_duplicate_id(tmp_path, capsys):
    d = json.loads(demo_path("baseline").read_text())
    d["nodes"][1]["id"] = d["nodes"][0]["id"]
    p = tmp_path / "dup.json"
    p.write_text(json.dumps(d))
    assert run_cli("validate", str(p)) == 1
    assert "nodes[1].id" in capsys.readouterr().err


def test_validate_missing_file(tmp_path):
    assert run_cli("validate", str(tmp_path / "nope.json")) == 1


def test_validate_unknown_demo():
    assert run_cli("validate", "demo:nope") == 1


def test_run_discover_only(tmp_path):
    assert run_cli("run", "--scenario", "demo:baseline", "--out", str(tmp_path),
                   "--phases", "discover", "--deterministic") == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert rep["scenario"]["phases"] == ["discover"]
    assert len(rep["inventory"]) == 4  # io1 does not answer pings
    assert rep["findings"] == [] and rep["threats"] == [] and rep["risk_register"] == []
    assert (tmp_path / "events.jsonl").exists() and (tmp_path / "metrics.csv").exists()


def test_run_bad_phase(tmp_path):
    assert run_cli("run", "--scenario", "demo:baseline", "--out", str(tmp_path),
                   "--phases", "bogus") == 2


def test_seed_override_is_reproducible(tmp_path):
    for sub in ("a", "b"):
        assert run_cli("run", "--scenario", "demo:sinkhole", "--seed", "1",
                       "--deterministic", "--out", str(tmp_path / sub)) == 0
    for name in ("events.jsonl", "metrics.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    rep = json.loads((tmp_path / "a" / "report.json").read_text())
    assert rep["scenario"]["master_seed"] == 1


def test_non_deterministic_run_stamps_time(tmp_path):
    assert run_cli("run", "--scenario", "demo:baseline", "--out", str(tmp_path),
                   "--phases", "discover") == 0
    assert "generated_at" in json.loads((tmp_path / "report.json").read_text())["scenario"]


def test_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("ARAS_OUT", str(tmp_path / "env"))
    assert run_cli("run", "--scenario", "demo:baseline", "--phases", "discover") == 0
    assert (tmp_path / "env" / "report.json").exists()


def test_compare(tmp_path, capsys):
    for name in ("baseline", "ip-dropping"):
        assert run_cli("run", "--scenario", f"demo:{name}", "--deterministic",
                       "--out", str(tmp_path / name)) == 0
    capsys.readouterr()
    assert run_cli("compare", str(tmp_path / "baseline" / "report.json"),
                   str(tmp_path / "ip-dropping" / "report.json")) == 0
    out = capsys.readouterr().out
    assert "flow 0 sensor1->scada1: PDR 1.0 -> 0.0 (delta -1.0000)" in out
    assert "availability degradation @ scada1" in out


def test_compare_schema_mismatch(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"scenario": {}}))
    assert run_cli("compare", str(p), str(p)) == 1
    assert "SchemaMismatch" in capsys.readouterr().err


def test_batch_with_jobs(tmp_path):
    assert run_cli("run", "--scenario", "demo:baseline", "--scenario", "demo:ip-dropping",
                   "--jobs", "2", "--deterministic", "--out", str(tmp_path)) == 0
    for name in ("baseline", "ip-dropping"):
        assert (tmp_path / name / "report.json").exists()


def test_batch_error_does_not_stop_others(tmp_path):
    code = run_cli("run", "--scenario", str(tmp_path / "missing.json"),
                   "--scenario", "demo:baseline", "--phases", "discover",
                   "--out", str(tmp_path))
    assert code == 1
    assert (tmp_path / "baseline" / "report.json").exists()


def test_demos_lists_all(capsys):
    assert run_cli("demos") == 0
    out = capsys.readouterr().out
    assert all(f"demo:{n}" in out for n in ("baseline", "ip-dropping", "sinkhole"))


def test_requires_command():
    with pytest.raises(SystemExit):
        run_cli()
