"""`sfl` command line: train, eval, perturb, gradcheck, sensitivity, synth.

Exit codes: 0 success, 1 runtime failure (e.g. divergence), 2 configuration or data
error, 3 checkpoint/dataset incompatibility, 4 gradient-check failure.
"""

import sys
from collections.abc import Callable
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Any, Literal

import orjson
import polars as pl
import typed_argparse as tap
from loguru import logger

from syntax_fusion_lab.errors import (
    CheckpointError,
    CompatibilityError,
    ConfigError,
    DatasetError,
    DivergenceError,
    SyntaxFusionError,
    TreeError,
    VocabError,
)
from syntax_fusion_lab.harness import (
    DEFAULT_RATES,
    TASK_EPOCHS,
    SyntheticSpec,
    TrainConfig,
    TreeSource,
    apply_trees,
    dataset_task,
    dataset_vocab,
    evaluate,
    fits_frame,
    label_set,
    load_checkpoint,
    make_synthetic,
    parse_condition_table,
    points_frame,
    run_suite,
    save_checkpoint,
    sensitivity_experiment,
    split_dataset,
    stream,
    summary_json,
    to_sentences,
    train,
    tree_blind_bayes_accuracy,
    write_csv,
)
from syntax_fusion_lab.harness.sensitivity import FLOAT_PRECISION
from syntax_fusion_lab.model import (
    EncoderConfig,
    FusionModel,
    GnnConfig,
    JointMode,
    ModelConfig,
    Task,
    Variant,
)
from syntax_fusion_lab.treebank import (
    ConlluSentence,
    DatasetRecord,
    corrupt_tree,
    read_records,
    uas,
    write_conllu,
    write_records,
)

CHECKPOINT_FILE = "checkpoint.bin"
METRICS_FILE = "metrics.csv"
SENSITIVITY_FILE = "sensitivity.csv"
CONFIG_ECHO_FILE = "config.echo"


class ExitCode(IntEnum):
    """Process exit codes."""

    OK = 0
    RUNTIME = 1
    CONFIG = 2
    COMPATIBILITY = 3
    VERIFICATION = 4


# 1. Argument definitions
class TrainArgs(tap.TypedArgs):
    """Train a model and save its best-on-dev checkpoint."""

    task: Literal["tag", "srl", "re"] = tap.arg(help="Dataset payload / head kind")
    data: Path = tap.arg(help="Training data (JSON lines)")
    variant: Literal["baseline", "late", "joint"] = tap.arg(
        default="late", help="How syntax enters the model"
    )
    joint_mode: Literal["concat", "add"] = tap.arg(
        default="concat", help="Joint Fusion key/value combination"
    )
    dev_data: Path | None = tap.arg(
        default=None, help="Held-out data; split from --data when omitted"
    )
    dev_fraction: float = tap.arg(default=0.2, help="Share of --data held out")
    trees: str = tap.arg(
        default="gold", help="Training trees: gold, corrupted@RATE or file:PATH"
    )
    seed: int = tap.arg(default=0, help="Master seed")
    epochs: int | None = tap.arg(default=None, help="Epochs (task default when omitted)")
    batch_size: int = tap.arg(default=8, help="Sentences per update")
    lr: float = tap.arg(default=1e-3, help="Base learning rate (linear decay)")
    layers: int = tap.arg(default=4, help="Encoder layers")
    heads: int = tap.arg(default=4, help="Attention heads")
    d_model: int = tap.arg(default=64, help="Hidden width")
    d_ff: int = tap.arg(default=256, help="Feed-forward width")
    max_len: int = tap.arg(default=64, help="Longest wordpiece sequence")
    gnn_layers: int = tap.arg(default=4, help="Graph-encoder layers")
    dropout: float = tap.arg(default=0.1, help="Dropout probability")
    crf_constrained: bool = tap.arg(help="Forbid invalid BIO transitions in the CRF")
    out: Path = tap.arg(default=Path("out"), help="Output directory")


class EvalArgs(tap.TypedArgs):
    """Evaluate a checkpoint on a dataset."""

    checkpoint: Path = tap.arg(help="Checkpoint file")
    data: Path = tap.arg(help="Evaluation data (JSON lines)")
    trees: str = tap.arg(
        default="gold", help="Evaluation trees: gold, corrupted@RATE or file:PATH"
    )
    seed: int = tap.arg(default=0, help="Master seed")
    out: Path = tap.arg(default=Path("out"), help="Output directory")


class PerturbArgs(tap.TypedArgs):
    """Write a copy of a dataset with corrupted trees."""

    data: Path = tap.arg(help="Input data (JSON lines)")
    rate: float = tap.arg(help="Corruption rate in [0, 1]")
    format: Literal["jsonl", "conllu"] = tap.arg(default="jsonl", help="Output format")
    seed: int = tap.arg(default=0, help="Master seed")
    out: Path = tap.arg(default=Path("out"), help="Output directory")


class GradcheckArgs(tap.TypedArgs):
    """Run the finite-difference gradient suite."""

    seed: int = tap.arg(default=0, help="Master seed")
    seeds: int = tap.arg(default=10, help="Random instances per check")
    out: Path = tap.arg(default=Path("out"), help="Output directory")


class SensitivityArgs(tap.TypedArgs):
    """Relate per-sentence F1 loss to tree quality for two models."""

    gold_checkpoint: Path = tap.arg(help="Model trained on gold trees")
    noisy_checkpoint: Path = tap.arg(help="Model trained on corrupted trees")
    data: Path = tap.arg(help="Test data with gold trees (JSON lines)")
    rates: str = tap.arg(
        default=",".join(f"{r:g}" for r in DEFAULT_RATES),
        help="Comma-separated corruption rates",
    )
    seed: int = tap.arg(default=0, help="Master seed")
    out: Path = tap.arg(default=Path("out"), help="Output directory")


class SynthArgs(tap.TypedArgs):
    """Generate a synthetic head-copy tagging dataset."""

    count: int = tap.arg(default=2000, help="Sentences to generate")
    name: str = tap.arg(default="synthetic", help="Output file stem")
    vocab_size: int = tap.arg(default=40, help="Token types")
    classes: int = tap.arg(default=8, help="Token classes")
    min_len: int = tap.arg(default=5, help="Shortest sentence")
    max_len: int = tap.arg(default=12, help="Longest sentence")
    seed: int = tap.arg(default=0, help="Master seed")
    out: Path = tap.arg(default=Path("out"), help="Output directory")


# 2. Business logic
def _require_file(flag: str, path: Path) -> None:
    if not path.is_file():
        msg = f"--{flag}: {path} does not exist"
        raise ConfigError(msg)


def _echo(out: Path, args: tap.TypedArgs, extra: dict[str, Any] | None = None) -> None:
    flags = {
        key: str(value) if isinstance(value, Path) else value
        for key, value in sorted(vars(args).items())
    }
    body = {"flags": flags, **(extra or {})}
    (out / CONFIG_ECHO_FILE).write_bytes(
        orjson.dumps(body, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)
    )


def _out_dir(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _records(flag: str, path: Path) -> list[DatasetRecord]:
    _require_file(flag, path)
    records = read_records(path)
    if not records:
        msg = f"--{flag}: {path} holds no records"
        raise DatasetError(msg)
    return records


def cmd_train(args: TrainArgs) -> ExitCode:
    """Train and write checkpoint.bin, metrics.csv, config.echo (and dev.jsonl)."""
    out = _out_dir(args.out)
    records = _records("data", args.data)
    task = Task(args.task)
    if dataset_task(records) is not task:
        msg = f"--task {task.value} but --data holds {dataset_task(records).value} records"
        raise ConfigError(msg)
    if args.dev_data is not None:
        train_records, dev_records = records, _records("dev-data", args.dev_data)
    else:
        train_records, dev_records = split_dataset(
            records, args.dev_fraction, stream(args.seed, "split")
        )
        write_records(out / "dev.jsonl", dev_records)

    source = TreeSource.parse(args.trees)
    corruption = stream(args.seed, "corruption")
    train_records = apply_trees(train_records, source, corruption)
    dev_records = apply_trees(dev_records, source, corruption)

    vocab = dataset_vocab([*train_records, *dev_records])
    config = ModelConfig(
        task=task,
        labels=label_set([*train_records, *dev_records]),
        variant=Variant(args.variant),
        joint_mode=JointMode(args.joint_mode),
        crf_constrained=args.crf_constrained,
        encoder=EncoderConfig(
            vocab_size=len(vocab),
            layers=args.layers,
            heads=args.heads,
            d_model=args.d_model,
            d_ff=args.d_ff,
            max_len=args.max_len,
            dropout_p=args.dropout,
        ),
        gnn=GnnConfig(
            layers=args.gnn_layers,
            heads=args.heads,
            d_model=args.d_model,
            d_ff=args.d_ff,
            dropout_p=args.dropout,
        ),
    )
    train_set = to_sentences(train_records, vocab)
    dev_set = to_sentences(dev_records, vocab)
    longest = max(s.m for s in [*train_set, *dev_set])
    if longest > args.max_len:
        msg = f"--max-len {args.max_len} is shorter than the longest sentence ({longest} wordpieces)"
        raise ConfigError(msg)

    train_config = TrainConfig(
        seed=args.seed,
        epochs=TASK_EPOCHS[task] if args.epochs is None else args.epochs,
        batch_size=args.batch_size,
        base_lr=args.lr,
    )
    model = FusionModel.fresh(config, vocab, stream(args.seed, "init"))
    model.provenance = {"trees": str(source), "seed": str(args.seed)}
    result = train(model, train_set, dev_set, train_config)

    history = pl.DataFrame(
        [
            {
                "epoch": m.epoch,
                "train_loss": m.train_loss,
                "precision": m.precision,
                "recall": m.recall,
                "f1": m.f1,
                "token_accuracy": m.token_accuracy,
            }
            for m in result.history
        ],
        schema={
            "epoch": pl.Int64,
            "train_loss": pl.Float64,
            "precision": pl.Float64,
            "recall": pl.Float64,
            "f1": pl.Float64,
            "token_accuracy": pl.Float64,
        },
    )
    write_csv(history, out / METRICS_FILE)
    save_checkpoint(result.model, out / CHECKPOINT_FILE)
    _echo(
        out,
        args,
        {"model": config.to_json(), "best_epoch": result.best_epoch, "epochs": train_config.epochs},
    )

    # Score what was saved, so eval on the same dev data prints the same line.
    reloaded = load_checkpoint(out / CHECKPOINT_FILE)
    print(evaluate(reloaded, to_sentences(dev_records, reloaded.vocab)).summary_line())  # noqa: T201
    return ExitCode.OK


def cmd_eval(args: EvalArgs) -> ExitCode:
    """Score a checkpoint; writes metrics.csv and prints P/R/F1."""
    out = _out_dir(args.out)
    _require_file("checkpoint", args.checkpoint)
    model = load_checkpoint(args.checkpoint)
    records = _records("data", args.data)
    if dataset_task(records) is not model.config.task:
        msg = (
            f"Checkpoint head is {model.config.task.value}, "
            f"--data holds {dataset_task(records).value} records"
        )
        raise CompatibilityError(msg)
    source = TreeSource.parse(args.trees)
    records = apply_trees(records, source, stream(args.seed, "corruption"))
    report = evaluate(model, to_sentences(records, model.vocab))
    frame = pl.DataFrame(
        [
            {
                "trees": str(source),
                "precision": report.precision,
                "recall": report.recall,
                "f1": report.f1,
                "token_accuracy": report.token_accuracy,
                "correct": report.correct,
                "predicted": report.predicted,
                "gold": report.gold,
                "empty_support": report.empty_support,
            }
        ],
        schema={
            "trees": pl.String,
            "precision": pl.Float64,
            "recall": pl.Float64,
            "f1": pl.Float64,
            "token_accuracy": pl.Float64,
            "correct": pl.Int64,
            "predicted": pl.Int64,
            "gold": pl.Int64,
            "empty_support": pl.Boolean,
        },
    )
    write_csv(frame, out / METRICS_FILE)
    _echo(out, args)
    print(report.summary_line())  # noqa: T201
    return ExitCode.OK


def cmd_perturb(args: PerturbArgs) -> ExitCode:
    """Write perturbed.jsonl (or .conllu) and print the mean UAS against the input."""
    if not 0.0 <= args.rate <= 1.0:
        msg = f"--rate must lie in [0, 1], got {args.rate}"
        raise ConfigError(msg)
    out = _out_dir(args.out)
    records = _records("data", args.data)
    rng = stream(args.seed, "corruption")
    perturbed = [r.with_tree(corrupt_tree(r.tree, args.rate, rng).tree) for r in records]
    mean_uas = sum(uas(p.tree, r.tree) for p, r in zip(perturbed, records, strict=True)) / len(
        records
    )
    if args.format == "conllu":
        text = write_conllu(
            [ConlluSentence(tokens=p.tokens, tree=p.tree) for p in perturbed]
        )
        (out / "perturbed.conllu").write_text(text, encoding="utf-8", newline="\n")
    else:
        write_records(out / "perturbed.jsonl", perturbed)
    _echo(out, args, {"mean_uas": mean_uas})
    print(f"mean UAS {mean_uas:.{FLOAT_PRECISION}f}")  # noqa: T201
    return ExitCode.OK


def cmd_gradcheck(args: GradcheckArgs) -> ExitCode:
    """Run the gradient suite; exit 4 naming every failing check."""
    if args.seeds < 1:
        msg = f"--seeds must be at least 1, got {args.seeds}"
        raise ConfigError(msg)
    out = _out_dir(args.out)
    result = run_suite(args.seed, args.seeds)
    (out / "gradcheck.json").write_bytes(
        orjson.dumps(result.to_json(), option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)
    )
    for report in result.reports:
        status = "ok" if report.passed else "FAILED"
        print(f"{report.name} {report.max_rel_error:.3e} {status}")  # noqa: T201
    if not result.passed:
        logger.error(f"Gradient check failed for: {', '.join(result.failed)}")
        return ExitCode.VERIFICATION
    return ExitCode.OK


def _parse_rates(text: str) -> list[float]:
    try:
        rates = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        msg = f"--rates must be comma-separated numbers, got {text!r}"
        raise ConfigError(msg) from None
    if not rates or any(not 0.0 <= r <= 1.0 for r in rates):
        msg = f"--rates must be non-empty and within [0, 1], got {text!r}"
        raise ConfigError(msg)
    return rates


def cmd_sensitivity(args: SensitivityArgs) -> ExitCode:
    """Write metrics.csv, sensitivity.csv, parse_conditions.csv and the JSON summary."""
    rates = _parse_rates(args.rates)
    out = _out_dir(args.out)
    _require_file("gold-checkpoint", args.gold_checkpoint)
    _require_file("noisy-checkpoint", args.noisy_checkpoint)
    models = {
        "gold_trained": load_checkpoint(args.gold_checkpoint),
        "noisy_trained": load_checkpoint(args.noisy_checkpoint),
    }
    records = _records("data", args.data)
    task = dataset_task(records)
    for name, model in models.items():
        if model.config.task is not task:
            msg = f"{name} checkpoint head is {model.config.task.value}, data is {task.value}"
            raise CompatibilityError(msg)
    if models["gold_trained"].config.labels != models["noisy_trained"].config.labels:
        msg = "The two checkpoints were trained with different label sets"
        raise CompatibilityError(msg)

    reports = sensitivity_experiment(models, records, rates, args.seed)
    write_csv(points_frame(reports), out / METRICS_FILE)
    write_csv(fits_frame(reports), out / SENSITIVITY_FILE)
    write_csv(parse_condition_table(reports), out / "parse_conditions.csv")
    (out / "sensitivity_summary.json").write_bytes(summary_json(reports))
    _echo(out, args, {"rates": rates})
    for report in reports:
        print(f"{report.condition} slope={report.pooled.slope:.4f} ({report.pooled.flag})")  # noqa: T201
    return ExitCode.OK


def cmd_synth(args: SynthArgs) -> ExitCode:
    """Write <name>.jsonl and print the tree-blind accuracy bound."""
    out = _out_dir(args.out)
    spec = SyntheticSpec(
        vocab_size=args.vocab_size,
        classes=args.classes,
        min_len=args.min_len,
        max_len=args.max_len,
    )
    records = make_synthetic(spec, args.count, stream(args.seed, "synthetic"))
    write_records(out / f"{args.name}.jsonl", records)
    bound = tree_blind_bayes_accuracy(spec, stream(args.seed, "synthetic", 1))
    _echo(out, args, {"tree_blind_bayes_accuracy": bound})
    print(f"tree-blind Bayes accuracy {bound:.4f}")  # noqa: T201
    return ExitCode.OK


@dataclass(frozen=True)
class _ErrorRoute:
    kinds: tuple[type[BaseException], ...]
    code: ExitCode


_ROUTES = (
    _ErrorRoute((CompatibilityError, CheckpointError), ExitCode.COMPATIBILITY),
    _ErrorRoute((ConfigError, DatasetError, TreeError, VocabError), ExitCode.CONFIG),
    _ErrorRoute((DivergenceError, SyntaxFusionError), ExitCode.RUNTIME),
)


def run_command[A: tap.TypedArgs](command: Callable[[A], ExitCode], args: A) -> int:
    """Run `command`, turning package errors into exit codes."""
    try:
        return int(command(args))
    except SyntaxFusionError as e:
        for route in _ROUTES:
            if isinstance(e, route.kinds):
                logger.error(f"{type(e).__name__}: {e}")
                return int(route.code)
        raise


def run_train(args: TrainArgs) -> None:
    """Train sub-command."""
    sys.exit(run_command(cmd_train, args))


def run_eval(args: EvalArgs) -> None:
    """Eval sub-command."""
    sys.exit(run_command(cmd_eval, args))


def run_perturb(args: PerturbArgs) -> None:
    """Perturb sub-command."""
    sys.exit(run_command(cmd_perturb, args))


def run_gradcheck(args: GradcheckArgs) -> None:
    """Gradcheck sub-command."""
    sys.exit(run_command(cmd_gradcheck, args))


def run_sensitivity(args: SensitivityArgs) -> None:
    """Sensitivity sub-command."""
    sys.exit(run_command(cmd_sensitivity, args))


def run_synth(args: SynthArgs) -> None:
    """Synth sub-command."""
    sys.exit(run_command(cmd_synth, args))


# 3. Bind + run
def main_cli(argv: list[str] | None = None) -> None:
    """Run CLI entry point."""
    tap.Parser(
        tap.SubParserGroup(
            tap.SubParser("train", TrainArgs, help="Train a model"),
            tap.SubParser("eval", EvalArgs, help="Evaluate a checkpoint"),
            tap.SubParser("perturb", PerturbArgs, help="Corrupt a dataset's trees"),
            tap.SubParser("gradcheck", GradcheckArgs, help="Run the gradient suite"),
            tap.SubParser("sensitivity", SensitivityArgs, help="Tree-quality experiment"),
            tap.SubParser("synth", SynthArgs, help="Generate synthetic data"),
        ),
    ).bind(
        run_train,
        run_eval,
        run_perturb,
        run_gradcheck,
        run_sensitivity,
        run_synth,
    ).run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    main_cli()
