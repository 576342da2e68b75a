"""Summarize `sfl` run directories.

Reads the per-sentence table written by `sfl sensitivity` (metrics.csv) and the
per-epoch tables written by `sfl train`, and writes binned and per-run summaries next
to the input.
"""

from pathlib import Path

import fire  # pyright: ignore[reportMissingTypeStubs]
import polars as pl
from loguru import logger

from syntax_fusion_lab.harness.sensitivity import ROW_COLUMNS, write_csv


def bin_by_uas(points: pl.DataFrame, bin_width: float = 0.1) -> pl.DataFrame:
    """Mean and spread of ΔF1 per condition and UAS bin.

    A bin is labelled by its lower edge; UAS of exactly 1.0 lands in the top bin.
    """
    if not 0.0 < bin_width <= 1.0:
        msg = f"bin_width must lie in (0, 1], got {bin_width}"
        raise ValueError(msg)
    top = 1.0 - bin_width
    return (
        points.filter(pl.col("rate") > 0)
        .with_columns(
            uas_bin=(
                (pl.col("uas") / bin_width + 1e-9).floor() * bin_width
            ).clip(upper_bound=top).round(4),
        )
        .group_by(["condition", "uas_bin"])
        .agg(
            sentences=pl.len(),
            mean_delta=pl.col("delta").mean(),
            std_delta=pl.col("delta").std(),
            mean_f1_ref=pl.col("f1_ref").mean(),
            mean_f1_noisy=pl.col("f1_noisy").mean(),
        )
        .sort(["condition", "uas_bin"])
    )


def per_rate_summary(points: pl.DataFrame) -> pl.DataFrame:
    """Mean UAS and mean ΔF1 per condition and corruption rate."""
    return (
        points.group_by(["condition", "rate"])
        .agg(
            sentences=pl.len(),
            mean_uas=pl.col("uas").mean(),
            mean_delta=pl.col("delta").mean(),
        )
        .sort(["condition", "rate"])
    )


def best_epochs(run_dirs: list[Path]) -> pl.DataFrame:
    """Best dev F1 and its epoch for every training run directory."""
    rows: list[dict[str, object]] = []
    for run_dir in run_dirs:
        history = pl.read_csv(run_dir / "metrics.csv")
        if history.is_empty() or "epoch" not in history.columns:
            logger.warning(f"{run_dir} has no training history; skipped")
            continue
        best = history.sort(["f1", "epoch"], descending=[True, False]).row(0, named=True)
        rows.append(
            {
                "run": run_dir.name,
                "epochs": history.height,
                "best_epoch": best["epoch"],
                "best_f1": best["f1"],
                "final_train_loss": history["train_loss"][-1],
            }
        )
    schema = {
        "run": pl.String,
        "epochs": pl.Int64,
        "best_epoch": pl.Int64,
        "best_f1": pl.Float64,
        "final_train_loss": pl.Float64,
    }
    return pl.DataFrame(rows, schema=schema).sort("run")


def summarize(
    sensitivity_dir: Path | str,
    *train_dirs: Path | str,
    bin_width: float = 0.1,
) -> None:
    """Write UAS-binned, per-rate and per-run summaries under `<sensitivity_dir>_analysis`."""
    sensitivity_dir = Path(sensitivity_dir)
    points = pl.read_csv(sensitivity_dir / "metrics.csv").select(ROW_COLUMNS)
    logger.info(f"Read {points.height} sentence points from {sensitivity_dir}")

    out_dir = sensitivity_dir.with_name(sensitivity_dir.name + "_analysis")
    out_dir.mkdir(exist_ok=True, parents=True)

    df_bins = bin_by_uas(points, bin_width)
    write_csv(df_bins, out_dir / "delta_by_uas_bin.csv")
    df_bins.write_parquet(out_dir / "delta_by_uas_bin.pq")
    logger.info(f"ΔF1 by UAS bin: {df_bins}")

    df_rates = per_rate_summary(points)
    write_csv(df_rates, out_dir / "delta_by_rate.csv")
    logger.info(f"ΔF1 by rate: {df_rates}")

    if train_dirs:
        df_runs = best_epochs([Path(d) for d in train_dirs])
        write_csv(df_runs, out_dir / "runs.csv")
        logger.info(f"Runs: {df_runs}")


def main() -> None:
    """Summarize sfl run directories."""
    fire.Fire(summarize)  # pyright: ignore[reportUnknownMemberType]


if __name__ == "__main__":
    main()
