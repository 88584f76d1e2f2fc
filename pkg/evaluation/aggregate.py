"""
Summary tables over EvalReport rows. Every row is one meter, so group statistics are per-meter statistics
"""
from pathlib import Path

import pandas as pd

import logger
from common.helper import atomic_write, table_to_csv
from evaluation.evaluation_exceptions import EvaluationError, UnknownGroupKeyError
from evaluation.experiment import COLUMNS, EvalReport

METRICS = ("mse", "r2")
STATISTICS = ("mean", "median", "q1", "q3", "count")

BY_RATE = ("model", "kind", "rate")
BY_METER_TYPE = ("model", "meter_type", "kind")


def _statistics(values: pd.Series) -> dict:
    return {
        "mean": float(values.mean()),
        "median": float(values.median()),
        "q1": float(values.quantile(0.25)),
        "q3": float(values.quantile(0.75)),
        "count": int(values.count()),
    }


def aggregate(report, keys, metrics=METRICS) -> pd.DataFrame:
    """
    Mean, median and quartiles of every metric per group

    :param report: EvalReport or a DataFrame with its columns
    :param keys: column names to group by
    :return: one row per group, sorted by keys; columns keys + <metric>_<statistic>
    """
    frame = report.to_frame() if isinstance(report, EvalReport) else report
    keys = list(keys)
    for key in keys:
        if key not in COLUMNS:
            raise UnknownGroupKeyError(key, COLUMNS)
    if frame.empty:
        raise EvaluationError("Can't aggregate an empty report")
    records = []
    for group, rows in frame.groupby(keys, sort=True):
        group = group if isinstance(group, tuple) else (group,)
        record = dict(zip(keys, group))
        for metric in metrics:
            for statistic, value in _statistics(rows[metric]).items():
                record[f"{metric}_{statistic}"] = value
        records.append(record)
    return pd.DataFrame.from_records(records)


def r2_trend(report) -> pd.DataFrame:
    """
    Mean R² per model, kind and rate: how quickly quality drops with the missing rate
    """
    table = aggregate(report, BY_RATE, metrics=("r2",))
    return table[list(BY_RATE) + ["r2_mean", "r2_count"]]


def summary_tables(report) -> dict:
    """
    :return: table name -> DataFrame
    """
    return {
        "summary_by_rate": aggregate(report, BY_RATE),
        "summary_by_meter_type": aggregate(report, BY_METER_TYPE),
        "r2_trend": r2_trend(report),
    }


def write_summaries(report, out_dir) -> list:
    """
    Writes every summary table as <name>.csv into out_dir

    :return: written paths
    """
    paths = []
    for name, table in summary_tables(report).items():
        path = Path(out_dir) / f"{name}.csv"
        atomic_write(path, table_to_csv(table), mode="w")
        paths.append(path)
    logger.info(f"Wrote {len(paths)} summary tables to {out_dir}")
    return paths
