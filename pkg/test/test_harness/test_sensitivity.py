"""Tests for the tree-quality sensitivity experiment."""

from pathlib import Path

import orjson
import polars as pl
import pytest

from syntax_fusion_lab.harness import (
    fits_frame,
    parse_condition_table,
    points_frame,
    sensitivity_experiment,
    summary_json,
    write_csv,
)
from syntax_fusion_lab.harness.sensitivity import FIT_COLUMNS, ROW_COLUMNS
from syntax_fusion_lab.model import Variant
from syntax_fusion_lab.treebank import DatasetRecord
from test import factories


def _records() -> list[DatasetRecord]:
    record = factories.tag_record()
    return [record, record.with_tree(factories.chain_tree(6)), record]


def test_rate_zero_has_no_effect() -> None:
    reports = sensitivity_experiment(
        {"gold_trained": factories.model()}, _records(), [0.0], seed=0
    )
    (report,) = reports
    assert all(p.delta == 0.0 and p.uas == 1.0 for p in report.points)
    assert report.fits["0.00"].flag == "degenerate"
    assert report.pooled.flag == "too_few"


def test_baseline_ignores_trees() -> None:
    reports = sensitivity_experiment(
        {"baseline": factories.model(Variant.BASELINE)}, _records(), [0.0, 0.5, 1.0], seed=1
    )
    points = reports[0].points
    assert len(points) == 9
    assert all(p.delta == 0.0 for p in points)
    assert all(p.uas < 1.0 for p in points if p.rate == 1.0)


def test_same_corrupted_trees_for_every_model() -> None:
    models = {"gold_trained": factories.model(seed=0), "noisy_trained": factories.model(seed=1)}
    reports = sensitivity_experiment(models, _records(), [0.4], seed=2)
    uas_a = [p.uas for p in reports[0].points]
    uas_b = [p.uas for p in reports[1].points]
    assert uas_a == uas_b


def test_frames_and_files(tmp_path: Path) -> None:
    model = factories.model()
    model.provenance["trees"] = "gold"
    reports = sensitivity_experiment({"gold_trained": model}, _records(), [0.0, 0.5], seed=3)

    points = points_frame(reports)
    assert tuple(points.columns) == ROW_COLUMNS
    assert points.height == 6
    fits = fits_frame(reports)
    assert tuple(fits.columns) == FIT_COLUMNS
    assert fits["rate"].to_list() == ["0.00", "0.50", "pooled"]
    table = parse_condition_table(reports)
    assert table["test_trees"].to_list() == ["gold", "corrupted@0.5"]
    assert table["train_trees"].unique().to_list() == ["gold"]

    path = tmp_path / "metrics.csv"
    write_csv(points, path)
    text = path.read_bytes().decode()
    assert text.splitlines()[0] == ",".join(ROW_COLUMNS)
    assert "\r" not in text
    assert pl.read_csv(path).height == 6

    summary = orjson.loads(summary_json(reports))
    assert summary["gold_trained"]["0.00"]["slope"] is None
    assert summary["gold_trained"]["pooled"]["n"] == 3


@pytest.mark.parametrize("seed", [0, 5])
def test_experiment_is_deterministic(seed: int) -> None:
    a = sensitivity_experiment({"m": factories.model()}, _records(), [0.3], seed=seed)
    b = sensitivity_experiment({"m": factories.model()}, _records(), [0.3], seed=seed)
    assert a[0].points == b[0].points
