import hashlib
import json
import shutil
from pathlib import Path

import pytest
import yaml

from debatenet.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, load_config, main, UsageError

USERS = 1200
ITERATIONS = 400


def digests(root: Path) -> dict:
    """sha256 of every artifact under ``root`` except the manifests."""
    return {p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
            for p in sorted(root.rglob("*")) if p.is_file() and p.name != "manifest.json"}


def make_corpus(out: Path) -> Path:
    assert main(["synth", "--out", str(out), "--users", str(USERS), "--seed", "5"]) == EXIT_OK
    cfg = yaml.safe_load((out / "config.yaml").read_text())
    cfg["layout"]["iterations"] = ITERATIONS
    (out / "config.yaml").write_text(yaml.safe_dump(cfg))
    return out / "config.yaml"


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    config = make_corpus(root / "corpus")
    work = root / "work"
    assert main(["run", "--config", str(config), "--workspace", str(work)]) == EXIT_OK
    return config, work


def test_report_contents(pipeline):
    _, work = pipeline
    report = work / "report"
    for name in ("engagement.csv", "first_order.csv", "participation.csv", "tests.csv", "interaction_matrix.csv",
                 "histogram.csv", "layout_event.svg", "ccdf_size.svg", "ccdf_depth.svg", "assort_histogram.svg",
                 "report.txt"):
        assert (report / name).is_file(), name
    assert (report / "layout_event.svg").read_text().lstrip().startswith("<?xml")
    assert "[assort]" in (report / "report.txt").read_text()


def test_manifest_records_hashes(pipeline):
    _, work = pipeline
    m = json.loads((work / "assort" / "manifest.json").read_text())
    assert set(m) >= {"stage", "version", "timestamp", "parameters", "inputs", "outputs"}
    prof = hashlib.sha256((work / "assort" / "profile.csv").read_bytes()).hexdigest()
    assert m["outputs"]["profile.csv"] == prof
    assert any(k.startswith("classify/") for k in m["inputs"])


def test_rerun_is_byte_identical(pipeline, tmp_path):
    config, work = pipeline
    other = tmp_path / "again"
    assert main(["run", "--config", str(config), "--workspace", str(other), "--threads", "3"]) == EXIT_OK
    assert digests(other) == digests(work)


def test_stage_rerun_in_place(pipeline, tmp_path):
    config, work = pipeline
    copy = tmp_path / "w"
    shutil.copytree(work, copy)
    before = digests(copy)
    assert main(["assort", "--config", str(config), "--workspace", str(copy)]) == EXIT_OK
    assert digests(copy) == before


def test_missing_classification_names_stage(pipeline, tmp_path, capsys):
    config, work = pipeline
    copy = tmp_path / "w"
    shutil.copytree(work, copy)
    shutil.rmtree(copy / "classify")
    assert main(["assort", "--config", str(config), "--workspace", str(copy)]) == EXIT_USAGE
    assert "cmd_classify" in capsys.readouterr().err


def test_stale_input_refused_then_forced(pipeline, tmp_path, capsys):
    config, work = pipeline
    copy = tmp_path / "w"
    shutil.copytree(work, copy)
    event = copy / "ingest" / "event.jsonl"
    event.write_bytes(event.read_bytes() + b"{broken\n")
    assert main(["forest", "--config", str(config), "--workspace", str(copy)]) == EXIT_USAGE
    assert "stale" in capsys.readouterr().err
    assert main(["forest", "--config", str(config), "--workspace", str(copy), "--force"]) == EXIT_DATA


def test_strict_ingest_data_error(tmp_path, capsys):
    config = make_corpus(tmp_path / "c")
    archive = tmp_path / "c" / "corpus.jsonl"
    archive.write_bytes(archive.read_bytes() + b"not json\n")
    work = tmp_path / "w"
    assert main(["ingest", "--config", str(config), "--workspace", str(work), "--strict"]) == EXIT_DATA
    assert "line" in capsys.readouterr().err
    assert main(["ingest", "--config", str(config), "--workspace", str(work)]) == EXIT_OK
    assert (work / "ingest" / "parse_errors.tsv").read_text().splitlines()[-1].endswith("invalid JSON (Expecting value)")


def test_bad_config_field_diagnostics(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text(yaml.safe_dump({
        "paths": {"archive": "nope.jsonl", "seeds": "nope.tsv"},
        "layout": {"iterations": 0, "warp": 3},
        "assortativity": {"alpha": 1.5},
    }))
    assert main(["ingest", "--config", str(cfg)]) == EXIT_USAGE
    err = capsys.readouterr().err
    for field in ("paths.archive", "layout", "assortativity.alpha"):
        assert field in err


def test_config_required_and_missing_file(tmp_path):
    assert main(["ingest"]) == EXIT_USAGE
    assert main(["ingest", "--config", str(tmp_path / "none.yaml")]) == EXIT_USAGE


def test_workspace_from_environment(tmp_path, monkeypatch):
    config = make_corpus(tmp_path / "c")
    cfg = yaml.safe_load(config.read_text())
    del cfg["paths"]["output"]
    config.write_text(yaml.safe_dump(cfg))
    monkeypatch.setenv("DEBATENET_WORKSPACE", str(tmp_path / "envws"))
    assert load_config(config).output == (tmp_path / "envws").resolve()


def test_load_config_rejects_bad_number(tmp_path):
    config = make_corpus(tmp_path / "c")
    cfg = yaml.safe_load(config.read_text())
    cfg["assortativity"] = {"tol": "tiny"}
    config.write_text(yaml.safe_dump(cfg))
    with pytest.raises(UsageError, match="assortativity.tol"):
        load_config(config)
