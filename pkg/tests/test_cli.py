import json

import pytest

from newsknn.cli import main
from newsknn.metrics import REPORT_HEADER

from .conftest import FIXTURES


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    params = out / "synth.params"
    params.write_text("n_sessions=500\ntimespan_days=15\nitems_per_topic=10\nn_topics=5\nseed=4\n")
    assert main(["synth", "--params", str(params), "--out", str(out)]) == 0
    return out


def _config(d, extra=""):
    p = d / "exp.cfg"
    p.write_text("events=events.csv\nembeddings=embeddings.tsv\ncatalog=catalog.tsv\n"
                 "methods=SKNN,VSTAN\nbudget=2\nseed=1\n" + extra)
    return p


def test_synth_writes_files(synth_dir, capsys):
    for name in ("events.csv", "embeddings.tsv", "catalog.tsv"):
        assert (synth_dir / name).stat().st_size > 0


def test_split(synth_dir, tmp_path, capsys):
    out = tmp_path / "plan.json"
    assert main(["split", "--events", str(synth_dir / "events.csv"), "--out", str(out)]) == 0
    plan = json.loads(out.read_text())
    assert len(plan["partitions"]) == 5
    assert "partition 0" in capsys.readouterr().out


def test_split_short_timespan_exit_code(tmp_path):
    out = tmp_path / "plan.json"
    assert main(["split", "--events", str(FIXTURES / "f1_events.csv"), "--out", str(out)]) == 3


def test_recommend_f1(capsys):
    rc = main(["recommend", "--events", str(FIXTURES / "f1_events.csv"),
               "--embeddings", str(FIXTURES / "f2_embeddings.tsv"), "--session", "a,b",
               "--method", "SKNN", "--variant", "base", "--k", "10"])
    assert rc == 0
    assert capsys.readouterr().out == "c\t0.500000\n"


def test_recommend_cold_session(capsys):
    rc = main(["recommend", "--events", str(FIXTURES / "f1_events.csv"), "--session", "zz"])
    assert rc == 0
    captured = capsys.readouterr()
    assert captured.out == "" and "cold-session" in captured.err


def test_missing_input_exit_code(tmp_path, capsys):
    assert main(["recommend", "--events", str(tmp_path / "none.csv"), "--session", "a"]) == 2


def test_malformed_events_exit_code(tmp_path, capsys):
    p = tmp_path / "ev.csv"
    p.write_text("session_id,item_id,timestamp\ns1,a,notanumber\n")
    assert main(["recommend", "--events", str(p), "--session", "a"]) == 2
    assert "line 2" in capsys.readouterr().err


def test_tune_prints_json(synth_dir, capsys):
    assert main(["tune", "--config", str(_config(synth_dir))]) == 0
    out = json.loads(capsys.readouterr().out)
    assert set(out) == {"SKNN", "VSTAN"}
    assert out["SKNN"]["selected"] in ("I", "D", "ID")


def test_evaluate(synth_dir, tmp_path, capsys):
    report = tmp_path / "eval.csv"
    cfg = _config(synth_dir, "variants=base\n")
    assert main(["evaluate", "--config", str(cfg), "--report", str(report)]) == 0
    lines = report.read_text().splitlines()
    assert lines[0] == ",".join(REPORT_HEADER)
    assert len(lines) == 3


def test_run_is_byte_identical(synth_dir, tmp_path, capsys):
    cfg = _config(synth_dir)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["run", "--config", str(cfg), "--report", str(a)]) == 0
    assert main(["run", "--config", str(cfg), "--report", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 1 + 2 * 5
    summary = json.loads((tmp_path / "a.csv.summary.json").read_text())
    assert summary["correlation_ILD_CT"]["n"] == 10
    assert (tmp_path / "a.csv.log").exists()


def test_run_single_row(synth_dir, tmp_path, capsys):
    cfg = synth_dir / "one.cfg"
    cfg.write_text("events=events.csv\nembeddings=embeddings.tsv\nmethods=SKNN\nvariants=base\nbudget=1\n")
    report = tmp_path / "one.csv"
    assert main(["run", "--config", str(cfg), "--report", str(report)]) == 0
    assert len(report.read_text().splitlines()) == 2


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("events=e.csv\n")
    assert main(["run", "--config", str(cfg)]) == 2


def test_missing_embedding_is_input_error(synth_dir, tmp_path, capsys):
    emb = tmp_path / "emb.tsv"
    emb.write_text("".join(l + "\n" for l in (synth_dir / "embeddings.tsv").read_text().splitlines()[:-3]))
    cfg = tmp_path / "exp.cfg"
    cfg.write_text(f"events={synth_dir / 'events.csv'}\nembeddings={emb}\nmethods=SKNN\nbudget=1\n")
    assert main(["run", "--config", str(cfg), "--report", str(tmp_path / "r.csv")]) == 2
    assert "ingest" in capsys.readouterr().err
