import io
import json
from pathlib import Path

import pytest
from biasamp import RunRecord, load_examples, load_raw
from biasamp._cli import OUT_DIR_ENV, UsageError, main, measure, parse_args

from .conftest import FIXTURES, write_idx

TINY = {
    "name": "tiny",
    "trial": {
        "dataset": {
            "kind": "synthetic",
            "synth": {"dimension": 3, "train_size": 60, "test_size": 60},
        },
        "bias": {"epsilon": 0.3},
        "arch": {"depth": 1, "width": 4},
        "train": {"epochs": 1},
    },
}


def write_config(tmp_path, data: dict, name: str = "config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return str(path)


def with_sweep(**sweep) -> dict:
    return {**TINY, "sweep": {"axis": "epsilon", "values": [0.1, 0.3], "seeds": 2, **sweep}}


def test_version(capsys):
    assert main(["--version"]) == 0
    assert capsys.readouterr().out.strip() == "biasamp 0.1.0 (run-record schema 1)"


def test_unknown_flag_is_a_usage_error(tmp_path, capsys):
    config = write_config(tmp_path, TINY)
    assert main(["train", "--config", config, "--foo"]) == 2
    assert "--foo" in capsys.readouterr().err
    with pytest.raises(SystemExit) as e:
        parse_args(["train", "--config", config, "--foo"])
    assert e.value.code == 2


def test_missing_subcommand():
    assert main([]) == 2


def test_invalid_config_names_the_field(tmp_path, capsys):
    config = write_config(tmp_path, {"trial": {"bias": {"epsilon": 0.7}}})
    assert main(["train", "--config", config]) == 2
    err = capsys.readouterr().err
    assert "trial.bias.epsilon" in err
    assert "epsilon must lie in [0, 0.5], got 0.7" in err

    with pytest.raises(UsageError, match="trial.bias.epsilon"):
        parse_args(["train", "--config", config])


def test_unreadable_config(tmp_path):
    assert main(["train", "--config", str(tmp_path / "missing.json")]) == 2


def test_parse_args(tmp_path, monkeypatch):
    monkeypatch.delenv(OUT_DIR_ENV, raising=False)
    config = write_config(tmp_path, with_sweep())
    cfg = parse_args(["sweep", "--config", config, "-vv", "--concurrency", "3"])
    assert cfg.command == "sweep"
    assert cfg.verbosity == 2
    assert cfg.concurrency == 3
    assert cfg.progress
    assert cfg.experiment is not None and cfg.experiment.sweep is not None
    assert cfg.experiment.sweep.axis == "epsilon"
    assert cfg.run_dir == Path("results") / "tiny"

    monkeypatch.setenv(OUT_DIR_ENV, str(tmp_path / "elsewhere"))
    assert parse_args(["sweep", "--config", config]).out_dir == tmp_path / "elsewhere"
    assert parse_args(["sweep", "--config", config, "--out", "x"]).out_dir.name == "x"


def test_sweep_needs_a_sweep_section(tmp_path):
    config = write_config(tmp_path, TINY)
    with pytest.raises(UsageError, match="sweep"):
        parse_args(["sweep", "--config", config])
    with pytest.raises(UsageError, match="concurrency"):
        parse_args(["sweep", "--config", write_config(tmp_path, with_sweep(), "s.json"), "--concurrency", "0"])


def test_measure_matches_golden_output(capsys):
    golden = (FIXTURES / "measure_twenty.txt").read_text(encoding="utf-8")
    assert main(["measure", str(FIXTURES / "twenty.jsonl")]) == 0
    assert capsys.readouterr().out == golden

    buf = io.StringIO()
    measure(FIXTURES / "twenty.jsonl", out=buf)
    assert buf.getvalue() == golden


def test_measure_reports_malformed_lines(tmp_path, capsys):
    lines = (FIXTURES / "twenty.jsonl").read_text(encoding="utf-8").splitlines()
    lines[2] = '{"true_class": 1, "predicted_class": 1, "confidence": 0.9}'
    path = tmp_path / "bad.jsonl"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    assert main(["measure", str(path)]) == 1
    err = capsys.readouterr().err
    assert "line 3" in err
    assert "group" in err


def test_train_generate_and_probe(tmp_path, capsys):
    config = write_config(tmp_path, TINY)
    out = tmp_path / "results"

    assert main(["train", "--config", config, "--out", str(out)]) == 0
    run_dir = out / "tiny"
    record = RunRecord.model_validate_json((run_dir / "record.json").read_text(encoding="utf-8"))
    assert len(record.trajectory) == 1
    assert (run_dir / "model.ckpt").exists()
    assert main(["measure", str(run_dir / "predictions.jsonl")]) == 0
    assert "records: 60" in capsys.readouterr().out

    assert main(["generate", "--config", config, "--out", str(out)]) == 0
    assert len(load_examples(run_dir / "train.bin")) == 60
    assert len(load_examples(run_dir / "test.bin")) == 60

    assert main(["probe", "--config", config, "--out", str(out)]) == 0
    assert "probe_acc" in capsys.readouterr().out


def test_sweep_then_report(tmp_path):
    config = write_config(tmp_path, with_sweep())
    out = tmp_path / "results"
    assert main(["sweep", "--config", config, "--out", str(out), "--no-progress"]) == 0

    run_dir = out / "tiny"
    runs = (run_dir / "runs.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(runs) == 4
    assert (run_dir / "config.json").exists()
    summary = (run_dir / "summary.csv").read_bytes()

    assert main(["report", "--config", config, "--out", str(out)]) == 0
    assert (run_dir / "summary.csv").read_bytes() == summary

    # A second sweep resumes every trial
    assert main(["sweep", "--config", config, "--out", str(out), "--no-progress"]) == 0
    assert len((run_dir / "runs.jsonl").read_text(encoding="utf-8").splitlines()) == 4


def test_report_without_records(tmp_path):
    config = write_config(tmp_path, with_sweep())
    assert main(["report", "--config", config, "--out", str(tmp_path / "empty")]) == 1


def test_ingest(tmp_path):
    images = bytes(range(8))
    images_path = write_idx(tmp_path / "train-images-idx3-ubyte", 0x803, (2, 2, 2), images)
    labels_path = write_idx(tmp_path / "train-labels-idx1-ubyte", 0x801, (2,), bytes([0, 1]))
    cache = tmp_path / "cache" / "train.bin"

    assert main(["ingest", str(images_path), str(labels_path), "--format", "idx", "--output", str(cache)]) == 0
    raw = load_raw(cache)
    assert raw.images.tobytes() == images
    assert raw.num_classes == 2


def test_ingest_bad_file_fails(tmp_path, capsys):
    path = write_idx(tmp_path / "train-images-idx3-ubyte", 0x803, (2, 2, 2), bytes(3))
    assert main(["ingest", str(path), "--format", "idx", "--output", str(tmp_path / "c.bin")]) == 1
    assert "truncated" in capsys.readouterr().err
