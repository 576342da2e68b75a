"""Minibatch training with best-on-dev selection, and corpus evaluation."""

from __future__ import annotations

import hashlib
import math
import os
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from loguru import logger
from tqdm import tqdm

from syntax_fusion_lab.errors import (
    ConfigError,
    DivergenceError,
    NumericalOverflowError,
)
from syntax_fusion_lab.harness.metrics import MetricsReport, relation_report, span_report
from syntax_fusion_lab.harness.optim import OptimState, adam_step
from syntax_fusion_lab.harness.rng import stream
from syntax_fusion_lab.model import (
    FusionModel,
    RunMode,
    Task,
    extract_spans,
    predict,
    sentence_loss,
)
from syntax_fusion_lab.tensor import Tape
from syntax_fusion_lab.treebank import ReInstance, Sentence, SrlFrame, TagSeq

DEFAULT_BASE_LR = 1e-3
# Epochs used at full scale per task; the desk default is the tagging value.
TASK_EPOCHS = {Task.TAG: 20, Task.SRL: 20, Task.RE: 10}


def worker_count() -> int:
    """Evaluation threads from SFL_THREADS (default 1)."""
    raw = os.environ.get("SFL_THREADS", "1")
    try:
        threads = int(raw)
    except ValueError:
        msg = f"SFL_THREADS must be an integer, got {raw!r}"
        raise ConfigError(msg) from None
    if threads < 1:
        msg = f"SFL_THREADS must be at least 1, got {threads}"
        raise ConfigError(msg)
    return threads


@dataclass(frozen=True, kw_only=True)
class TrainConfig:
    """Optimization settings."""

    seed: int = 0
    epochs: int = TASK_EPOCHS[Task.TAG]
    batch_size: int = 8
    base_lr: float = DEFAULT_BASE_LR

    def __post_init__(self) -> None:
        """Validate ranges."""
        if self.epochs < 0:
            msg = f"epochs must be non-negative, got {self.epochs}"
            raise ConfigError(msg)
        if self.batch_size < 1:
            msg = f"batch_size must be at least 1, got {self.batch_size}"
            raise ConfigError(msg)
        if self.base_lr <= 0:
            msg = f"base_lr must be positive, got {self.base_lr}"
            raise ConfigError(msg)


@dataclass(frozen=True, kw_only=True)
class EpochMetrics:
    """Mean training loss and dev scores after one epoch."""

    epoch: int
    train_loss: float
    precision: float
    recall: float
    f1: float
    token_accuracy: float | None


@dataclass(frozen=True, kw_only=True)
class TrainResult:
    """The best-on-dev model and every epoch's scores."""

    model: FusionModel
    history: tuple[EpochMetrics, ...]
    best_epoch: int | None


def _predict_all(
    model: FusionModel, sentences: Sequence[Sentence], threads: int | None
) -> list[list[str] | str]:
    for sentence in sentences[:1]:
        model.check_compatible(sentence)
    workers = threads or worker_count()
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(lambda s: predict(s, model), sentences))


def eval_spans(
    model: FusionModel, sentences: Sequence[Sentence], threads: int | None = None
) -> MetricsReport:
    """Micro span P/R/F1 and token accuracy of Viterbi-decoded tags."""
    predicted_tags = [list(p) for p in _predict_all(model, sentences, threads)]
    gold_tags = [
        list(s.payload.tags)
        for s in sentences
        if isinstance(s.payload, TagSeq | SrlFrame)
    ]
    return span_report(
        [extract_spans(t) for t in predicted_tags],
        [extract_spans(t) for t in gold_tags],
        predicted_tags,
        gold_tags,
    )


def eval_relations(
    model: FusionModel, sentences: Sequence[Sentence], threads: int | None = None
) -> MetricsReport:
    """Micro relation P/R/F1, `no_relation` excluded."""
    predicted = [str(p) for p in _predict_all(model, sentences, threads)]
    gold = [s.payload.relation for s in sentences if isinstance(s.payload, ReInstance)]
    return relation_report(predicted, gold)


def evaluate(
    model: FusionModel, sentences: Sequence[Sentence], threads: int | None = None
) -> MetricsReport:
    """Scores of `sentences` in order, by the model's head kind."""
    if model.config.task is Task.RE:
        return eval_relations(model, sentences, threads)
    return eval_spans(model, sentences, threads)


def _accumulate(model: FusionModel, sentence: Sentence, mode: RunMode) -> float:
    try:
        with Tape() as tape:
            loss = sentence_loss(sentence, model, mode)
    except NumericalOverflowError as e:
        msg = f"Forward pass diverged: {e}"
        raise DivergenceError(msg) from e
    value = loss.item()
    if not math.isfinite(value):
        msg = f"Loss is {value}"
        raise DivergenceError(msg)
    tape.backward(loss)
    return value


def train(
    model: FusionModel,
    train_set: Sequence[Sentence],
    dev_set: Sequence[Sentence],
    config: TrainConfig,
) -> TrainResult:
    """Adam over shuffled minibatches; keeps the parameters of the best dev-F1 epoch.

    Shuffling and dropout draw from streams derived from `config.seed` and the epoch
    number, so a seed fixes the whole trajectory.
    """
    if config.epochs == 0 or not train_set:
        logger.info("Nothing to train; returning the initial model")
        return TrainResult(model=model, history=(), best_epoch=None)
    for sentence in (*train_set[:1], *dev_set[:1]):
        model.check_compatible(sentence)

    batches_per_epoch = math.ceil(len(train_set) / config.batch_size)
    state = OptimState.for_params(
        model.params,
        base_lr=config.base_lr,
        total_steps=config.epochs * batches_per_epoch,
    )
    best_f1 = -math.inf
    best_epoch: int | None = None
    best = model.params.snapshot()
    history: list[EpochMetrics] = []

    for epoch in tqdm(range(config.epochs), desc="epochs"):
        order = stream(config.seed, "shuffle", epoch).permutation(len(train_set))
        mode = RunMode.train(stream(config.seed, "dropout", epoch))
        total_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start : start + config.batch_size]
            model.params.zero_grad()
            for index in batch:
                total_loss += _accumulate(model, train_set[int(index)], mode)
            for _, tensor in model.params.items():
                if tensor.grad is not None:
                    tensor.grad /= len(batch)
            adam_step(model.params, state)

        report = evaluate(model, dev_set) if dev_set else evaluate(model, train_set)
        metrics = EpochMetrics(
            epoch=epoch,
            train_loss=total_loss / len(train_set),
            precision=report.precision,
            recall=report.recall,
            f1=report.f1,
            token_accuracy=report.token_accuracy,
        )
        history.append(metrics)
        logger.debug(
            f"epoch {epoch}: loss {metrics.train_loss:.4f} dev {report.summary_line()}"
        )
        if report.f1 > best_f1:
            best_f1, best_epoch = report.f1, epoch
            best = model.params.snapshot()

    model.params.restore(best)
    model.params.zero_grad()
    logger.success(f"Best dev F1 {best_f1:.4f} at epoch {best_epoch}")
    return TrainResult(model=model, history=tuple(history), best_epoch=best_epoch)


def final_parameters_digest(model: FusionModel) -> str:
    """Hex digest of every parameter value, for determinism checks."""
    digest = hashlib.sha256()
    for name, tensor in model.params.items():
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(tensor.data).tobytes())
    return digest.hexdigest()
