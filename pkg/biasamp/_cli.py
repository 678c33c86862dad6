from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path
from typing import Literal, Optional, Sequence, TextIO

from pydantic import BaseModel, ConfigDict, ValidationError

from ._aggregate import aggregate
from ._config import ExperimentConfig
from ._errors import ConfigurationError
from ._experiment import build_datasets, probe_group_recognizability, run_trial
from ._ingest import ingest, ingest_many, save_examples, save_raw
from ._logging import configure_logging, logger
from ._metrics import bias_amp, disaggregated_accuracy, ece
from ._model import load_checkpoint
from ._report import emit_report
from ._store import RunStore
from ._sweep import sweep
from ._train import PredictionTable, load_predictions, predict
from ._utils import fmt6
from ._version import SCHEMA_VERSION, __version__

__all__ = ("CliConfig", "main", "measure", "parse_args")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

OUT_DIR_ENV = "BIASAMP_OUT_DIR"

Command = Literal["ingest", "generate", "train", "measure", "sweep", "report", "probe"]


class UsageError(ConfigurationError):
    """
    The command line or the experiment config is invalid.
    """


class CliConfig(BaseModel):
    """
    A parsed and validated command line.

    Parameters
    ----------
    command
        The subcommand.
    config_path
        The JSON experiment config, for subcommands that take one.
    experiment
        The validated experiment config.
    out_dir
        Root output directory; results go to `<out_dir>/<experiment name>/`.
    concurrency
        Overrides the config's concurrency limit.
    verbosity
        Number of `-v` flags.
    progress
        Show a progress bar during sweeps.
    inputs
        Input files (`ingest`: dataset files, `measure`: a predictions file).
    format
        `ingest` only: the dataset format.
    split
        `ingest` only: which split the files hold.
    output
        `ingest` only: the dataset-cache file to write.
    """

    model_config = ConfigDict(frozen=True)

    command: Command
    config_path: Optional[Path] = None
    experiment: Optional[ExperimentConfig] = None
    out_dir: Path = Path("results")
    concurrency: Optional[int] = None
    verbosity: int = 0
    progress: bool = True
    inputs: list[Path] = []
    format: Optional[Literal["idx", "cifar10", "cifar100"]] = None
    split: Literal["train", "test"] = "train"
    output: Optional[Path] = None

    @property
    def run_dir(self) -> Path:
        assert self.experiment is not None
        return self.out_dir / self.experiment.name


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="biasamp",
        description="Controlled bias-amplification experiments.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"biasamp {__version__} (run-record schema {SCHEMA_VERSION})",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Log progress (-v) or debug detail (-vv).",
    )

    def with_config(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="JSON experiment config.")
        p.add_argument(
            "--out",
            default=None,
            help=f"Output directory (default: ${OUT_DIR_ENV} or ./results).",
        )

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="Decode a dataset into a cache file.")
    p.add_argument("inputs", nargs="+", help="Dataset files (idx: images then labels).")
    p.add_argument("--format", required=True, choices=["idx", "cifar10", "cifar100"])
    p.add_argument("--split", default="train", choices=["train", "test"])
    p.add_argument("--output", required=True, help="Dataset-cache file to write.")

    p = sub.add_parser("generate", parents=[common], help="Build a trial's biased datasets.")
    with_config(p)

    p = sub.add_parser("train", parents=[common], help="Run the config's trial.")
    with_config(p)

    p = sub.add_parser("measure", parents=[common], help="Measure a predictions file.")
    p.add_argument("inputs", nargs=1, help="JSONL file of prediction records.")

    p = sub.add_parser("sweep", parents=[common], help="Run the config's sweep and report.")
    with_config(p)
    p.add_argument("--concurrency", type=int, default=None)
    p.add_argument("--no-progress", action="store_true", help="Hide the progress bar.")

    p = sub.add_parser("report", parents=[common], help="Re-emit a sweep's report.")
    with_config(p)

    p = sub.add_parser("probe", parents=[common], help="Measure group recognizability.")
    with_config(p)

    return parser


def _format_validation_error(path: str, e: ValidationError) -> str:
    lines = [f"invalid config '{path}':"]
    for err in e.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "(root)"
        lines.append(f"  {loc}: {err['msg']}")
    return "\n".join(lines)


def _load_experiment(path: str) -> ExperimentConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read config '{path}': {e.strerror or e}") from None
    try:
        return ExperimentConfig.model_validate_json(text)
    except ValidationError as e:
        raise UsageError(_format_validation_error(path, e)) from None


def parse_args(argv: Optional[Sequence[str]] = None) -> CliConfig:
    """
    Parse and validate a command line.

    The experiment config (if any) is read and validated here, before any
    work starts.

    Raises
    ------
    SystemExit
        With code 2 on an unknown flag or a missing argument (argparse prints
        the usage).
    UsageError
        If the config cannot be read or fails validation; the message names
        the offending field.
    """
    args = _parser().parse_args(argv)
    fields: dict = {"command": args.command, "verbosity": args.verbose}

    if getattr(args, "config", None) is not None:
        fields["config_path"] = Path(args.config)
        fields["experiment"] = _load_experiment(args.config)
    out = getattr(args, "out", None) or os.environ.get(OUT_DIR_ENV) or "results"
    fields["out_dir"] = Path(out)

    if args.command == "ingest":
        fields.update(
            inputs=[Path(p) for p in args.inputs],
            format=args.format,
            split=args.split,
            output=Path(args.output),
        )
    elif args.command == "measure":
        fields["inputs"] = [Path(args.inputs[0])]
    elif args.command == "sweep":
        if args.concurrency is not None and args.concurrency < 1:
            raise UsageError(f"--concurrency must be at least 1, got {args.concurrency}")
        fields.update(concurrency=args.concurrency, progress=not args.no_progress)
        if fields["experiment"].sweep is None:
            raise UsageError(f"config '{args.config}' has no `sweep` section")
    elif args.command == "report":
        if fields["experiment"].sweep is None:
            raise UsageError(f"config '{args.config}' has no `sweep` section")

    return CliConfig(**fields)


def format_measurement(table: PredictionTable) -> str:
    """
    Render the bias amplification breakdown, calibration table and
    disaggregated accuracy of a prediction table as plain text.
    """
    names = sorted(set(table.group.tolist()))
    if len(names) != 2:
        if set(names) <= {"a", "b"}:
            names = ["a", "b"]
        else:
            raise ValueError(f"expected exactly two groups, found {names}")
    groups = tuple(names)

    breakdown = bias_amp(table, groups)
    calibration = ece(table)
    cells = disaggregated_accuracy(table, groups)
    correct = sum(c.correct for c in cells.cells)

    def opt(x: Optional[float]) -> str:
        return "-" if x is None else fmt6(x)

    lines = [
        f"records: {len(table)}",
        f"groups: {', '.join(groups)}",
        "",
        f"bias_amp: {fmt6(breakdown.value)}",
        "cell dataset_rate prediction_rate delta direction flagged",
    ]
    for c in breakdown.cells:
        lines.append(
            f"{c.class_label:+d}/{c.group} {fmt6(c.dataset_rate)} "
            f"{fmt6(c.prediction_rate)} {fmt6(c.delta)} {c.direction} "
            f"{'yes' if c.flagged else 'no'}"
        )
    lines += [
        "",
        f"ece: {fmt6(calibration.ece)}",
        "bin lower upper count confidence accuracy",
    ]
    for k, b in enumerate(calibration.bins, start=1):
        lines.append(
            f"{k} {fmt6(b.lower)} {fmt6(b.upper)} {b.count} "
            f"{opt(b.mean_confidence)} {opt(b.accuracy)}"
        )
    lines += [
        "",
        f"accuracy: {fmt6(correct / len(table))}",
        "cell count correct accuracy",
    ]
    for c in cells.cells:
        lines.append(
            f"{c.class_label:+d}/{c.group} {c.count} {c.correct} {opt(c.accuracy)}"
        )
    return "\n".join(lines) + "\n"


def measure(predictions_file: Path, out: Optional[TextIO] = None) -> int:
    """
    Print the metric summary of a JSONL predictions file.

    Parameters
    ----------
    predictions_file
        One prediction record per line (`true_class`, `predicted_class`,
        `confidence`, `group`).
    out
        Where to print (default: standard output).
    """
    out = out or sys.stdout
    out.write(format_measurement(load_predictions(predictions_file)))
    return EXIT_OK


def _ingest(cfg: CliConfig) -> int:
    assert cfg.format is not None and cfg.output is not None
    if cfg.format == "idx" and len(cfg.inputs) == 1:
        raw = ingest(cfg.inputs[0], "idx", split=cfg.split)
    else:
        raw = ingest_many(cfg.inputs, cfg.format, split=cfg.split)
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    save_raw(raw, cfg.output)
    print(f"{raw!r} -> {cfg.output}")
    return EXIT_OK


def _generate(cfg: CliConfig) -> int:
    assert cfg.experiment is not None
    data = build_datasets(cfg.experiment.trial)
    cfg.run_dir.mkdir(parents=True, exist_ok=True)
    for split, examples in (("train", data.train), ("test", data.test)):
        path = cfg.run_dir / f"{split}.bin"
        save_examples(examples, path)
        print(f"{examples!r} -> {path}")
    for note in data.train.notes:
        logger.warning(note)
    return EXIT_OK


def _train(cfg: CliConfig) -> int:
    assert cfg.experiment is not None
    trial = cfg.experiment.trial
    cfg.run_dir.mkdir(parents=True, exist_ok=True)
    ckpt = cfg.run_dir / "model.ckpt"
    record = run_trial(trial, checkpoint_path=ckpt)
    (cfg.run_dir / "record.json").write_text(
        record.model_dump_json(indent=2) + "\n", encoding="utf-8"
    )
    data = build_datasets(trial)
    predict(load_checkpoint(ckpt), data.test).write_jsonl(
        cfg.run_dir / "predictions.jsonl"
    )
    print(
        f"bias_amp {fmt6(record.final.bias_amp)}  acc {fmt6(record.final.acc)}  "
        f"ece {fmt6(record.final.ece)}"
    )
    return EXIT_OK


def _sweep(cfg: CliConfig) -> int:
    exp = cfg.experiment
    assert exp is not None and exp.sweep is not None
    store = RunStore(cfg.run_dir)
    (cfg.run_dir / "config.json").write_text(
        exp.model_dump_json(indent=2) + "\n", encoding="utf-8"
    )
    result = sweep(
        exp.sweep,
        exp.trial,
        store=store,
        concurrency=cfg.concurrency or exp.concurrency,
        progress=cfg.progress,
    )
    if result.failures:
        logger.warning(
            f"{len(result.failures)} trial(s) failed; see {store.failures_path}."
        )
    if not result.records:
        print("every trial failed; no report written", file=sys.stderr)
        return EXIT_FAILURE
    emit_report(aggregate(result.records, exp.sweep.axis), cfg.run_dir)
    print(
        f"{len(result.records)} record(s) ({result.skipped} resumed), "
        f"{len(result.failures)} failure(s) -> {cfg.run_dir}"
    )
    return EXIT_OK


def _report(cfg: CliConfig) -> int:
    exp = cfg.experiment
    assert exp is not None and exp.sweep is not None
    records = RunStore(cfg.run_dir).records()
    if not records:
        print(f"no run records in {cfg.run_dir}", file=sys.stderr)
        return EXIT_FAILURE
    paths = emit_report(aggregate(records, exp.sweep.axis), cfg.run_dir)
    print(f"{len(paths)} file(s) -> {cfg.run_dir}")
    return EXIT_OK


def _probe(cfg: CliConfig) -> int:
    assert cfg.experiment is not None
    trial = cfg.experiment.trial
    data = build_datasets(trial)
    acc = probe_group_recognizability(
        (data.train, data.test), trial.arch, trial.train_recipe, trial.seed
    )
    print(f"probe_acc {fmt6(acc)}")
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Entry point of the `biasamp` command.

    Returns 0 on success, 1 when the work itself fails and 2 for usage or
    configuration errors.
    """
    try:
        cfg = parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    except UsageError as e:
        print(f"biasamp: error: {e}", file=sys.stderr)
        return EXIT_USAGE

    configure_logging(cfg.verbosity)
    handlers = {
        "ingest": _ingest,
        "generate": _generate,
        "train": _train,
        "measure": lambda c: measure(c.inputs[0]),
        "sweep": _sweep,
        "report": _report,
        "probe": _probe,
    }
    try:
        return handlers[cfg.command](cfg)
    except (ConfigurationError, ValidationError) as e:
        print(f"biasamp: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:
        logger.debug("command failed", exc_info=True)
        print(f"biasamp: error: {e}", file=sys.stderr)
        return EXIT_FAILURE
