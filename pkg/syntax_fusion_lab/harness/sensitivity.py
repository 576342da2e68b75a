"""How much does each model lose as its trees get worse?

For every corruption rate, the test trees are corrupted once (the same corrupted
trees for every model) and each model is scored per sentence on gold and corrupted
trees. A least-squares line of ΔF1 on UAS summarizes each condition: a steep slope
means the model leans hard on tree quality.
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import orjson
import polars as pl
from loguru import logger
from tqdm import tqdm

from syntax_fusion_lab.harness.metrics import LineFit, MetricsReport, fit_line
from syntax_fusion_lab.harness.rng import stream
from syntax_fusion_lab.harness.train import evaluate
from syntax_fusion_lab.model import FusionModel
from syntax_fusion_lab.treebank import DatasetRecord, corrupt_tree, uas

DEFAULT_RATES = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
POOLED = "pooled"
FLOAT_PRECISION = 6

ROW_COLUMNS = ("condition", "rate", "sentence_id", "uas", "f1_ref", "f1_noisy", "delta")
FIT_COLUMNS = ("condition", "rate", "slope", "intercept", "n", "flag")
PARSE_CONDITION_COLUMNS = (
    "condition",
    "train_trees",
    "test_trees",
    "rate",
    "precision",
    "recall",
    "f1",
)


@dataclass(frozen=True, kw_only=True)
class SentencePoint:
    """One sentence under one condition and rate."""

    condition: str
    rate: float
    sentence_id: int
    uas: float
    f1_ref: float
    f1_noisy: float

    @property
    def delta(self) -> float:
        """f1_noisy - f1_ref."""
        return self.f1_noisy - self.f1_ref


@dataclass(frozen=True, kw_only=True)
class SensitivityReport:
    """Per-sentence points and line fits of one condition.

    `fits` maps each rate, formatted with two decimals, and "pooled" (all rates
    above 0 together) to its fit.
    """

    condition: str
    train_trees: str
    points: tuple[SentencePoint, ...]
    fits: Mapping[str, LineFit]
    reference: MetricsReport
    corrupted: Mapping[float, MetricsReport]

    @property
    def pooled(self) -> LineFit:
        """Fit over every corrupted rate."""
        return self.fits[POOLED]


def _rate_key(rate: float) -> str:
    return f"{rate:.2f}"


def sensitivity_experiment(
    models: Mapping[str, FusionModel],
    records: Sequence[DatasetRecord],
    rates: Sequence[float],
    seed: int,
) -> list[SensitivityReport]:
    """Evaluate every model under every corruption rate; one report per model.

    `models` maps condition names (e.g. "gold_trained", "noisy_trained") to models.
    """
    corrupted_sets: dict[float, list[DatasetRecord]] = {}
    for index, rate in enumerate(rates):
        rng = stream(seed, "corruption", index)
        corrupted_sets[rate] = [
            r.with_tree(corrupt_tree(r.tree, rate, rng).tree) for r in records
        ]

    reports: list[SensitivityReport] = []
    for condition, model in models.items():
        reference = evaluate(model, [r.to_sentence(model.vocab) for r in records])
        points: list[SentencePoint] = []
        corrupted: dict[float, MetricsReport] = {}
        for rate in tqdm(rates, desc=condition, leave=False):
            noisy_records = corrupted_sets[rate]
            report = evaluate(model, [r.to_sentence(model.vocab) for r in noisy_records])
            corrupted[rate] = report
            points.extend(
                SentencePoint(
                    condition=condition,
                    rate=rate,
                    sentence_id=i,
                    uas=uas(noisy.tree, gold.tree),
                    f1_ref=ref_f1,
                    f1_noisy=noisy_f1,
                )
                for i, (gold, noisy, ref_f1, noisy_f1) in enumerate(
                    zip(
                        records,
                        noisy_records,
                        reference.per_sentence_f1,
                        report.per_sentence_f1,
                        strict=True,
                    )
                )
            )

        fits: dict[str, LineFit] = {}
        for rate in rates:
            subset = [p for p in points if p.rate == rate]
            fits[_rate_key(rate)] = fit_line([p.uas for p in subset], [p.delta for p in subset])
        pooled = [p for p in points if p.rate > 0]
        fits[POOLED] = fit_line([p.uas for p in pooled], [p.delta for p in pooled])
        logger.info(
            f"{condition}: pooled slope {fits[POOLED].slope:.4f} "
            f"over {fits[POOLED].n} points ({fits[POOLED].flag})"
        )
        reports.append(
            SensitivityReport(
                condition=condition,
                train_trees=model.provenance.get("trees", "gold"),
                points=tuple(points),
                fits=fits,
                reference=reference,
                corrupted=corrupted,
            )
        )
    return reports


def points_frame(reports: Sequence[SensitivityReport]) -> pl.DataFrame:
    """One row per sentence, condition and rate."""
    rows = [
        {
            "condition": p.condition,
            "rate": p.rate,
            "sentence_id": p.sentence_id,
            "uas": p.uas,
            "f1_ref": p.f1_ref,
            "f1_noisy": p.f1_noisy,
            "delta": p.delta,
        }
        for report in reports
        for p in report.points
    ]
    schema = {
        "condition": pl.String,
        "rate": pl.Float64,
        "sentence_id": pl.Int64,
        "uas": pl.Float64,
        "f1_ref": pl.Float64,
        "f1_noisy": pl.Float64,
        "delta": pl.Float64,
    }
    return pl.DataFrame(rows, schema=schema).select(ROW_COLUMNS)


def fits_frame(reports: Sequence[SensitivityReport]) -> pl.DataFrame:
    """One row per condition and rate, plus a "pooled" row per condition."""
    rows = [
        {
            "condition": report.condition,
            "rate": rate,
            "slope": fit.slope,
            "intercept": fit.intercept,
            "n": fit.n,
            "flag": fit.flag,
        }
        for report in reports
        for rate, fit in report.fits.items()
    ]
    schema = {
        "condition": pl.String,
        "rate": pl.String,
        "slope": pl.Float64,
        "intercept": pl.Float64,
        "n": pl.Int64,
        "flag": pl.String,
    }
    return pl.DataFrame(rows, schema=schema).select(FIT_COLUMNS)


def parse_condition_table(reports: Sequence[SensitivityReport]) -> pl.DataFrame:
    """Corpus scores of each model on gold test trees and on each corrupted set."""
    rows: list[dict[str, Any]] = []
    for report in reports:
        rows.append(
            {
                "condition": report.condition,
                "train_trees": report.train_trees,
                "test_trees": "gold",
                "rate": 0.0,
                "precision": report.reference.precision,
                "recall": report.reference.recall,
                "f1": report.reference.f1,
            }
        )
        rows.extend(
            {
                "condition": report.condition,
                "train_trees": report.train_trees,
                "test_trees": f"corrupted@{rate:g}",
                "rate": rate,
                "precision": metrics.precision,
                "recall": metrics.recall,
                "f1": metrics.f1,
            }
            for rate, metrics in report.corrupted.items()
            if rate > 0
        )
    schema = {
        "condition": pl.String,
        "train_trees": pl.String,
        "test_trees": pl.String,
        "rate": pl.Float64,
        "precision": pl.Float64,
        "recall": pl.Float64,
        "f1": pl.Float64,
    }
    return pl.DataFrame(rows, schema=schema).select(PARSE_CONDITION_COLUMNS)


def _nan_to_none(value: float) -> float | None:
    return None if math.isnan(value) else value


def summary_json(reports: Sequence[SensitivityReport]) -> bytes:
    """Pooled fits with Pearson r and p-value, as sorted-key JSON."""
    summary = {
        report.condition: {
            rate: {
                "slope": _nan_to_none(fit.slope),
                "intercept": _nan_to_none(fit.intercept),
                "n": fit.n,
                "flag": fit.flag,
                "pearson_r": _nan_to_none(fit.r),
                "p_value": _nan_to_none(fit.p_value),
            }
            for rate, fit in report.fits.items()
        }
        for report in reports
    }
    return orjson.dumps(summary, option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2)


def write_csv(frame: pl.DataFrame, path: Path) -> None:
    """Write with LF line endings and fixed float precision."""
    frame.write_csv(path, float_precision=FLOAT_PRECISION, line_terminator="\n")
    logger.success(f"Wrote {frame.height} rows to {path}")
