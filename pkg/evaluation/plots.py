"""
Plot data, not plots. Files written by emit_plots:

    boxplot_by_rate.csv          model,kind,rate,meter_id,metric,value (long form)
    boxplot_by_meter_type.csv    model,meter_type,kind,meter_id,metric,value
    overlay_<meter>_<kind>.csv   timestamp,hour,truth,mask,<model>... one row per hour of the year
    heatmap_<meter>_<kind>_<panel>.txt
                                 168 lines of 52 space-separated values; panel is input (holes as nan),
                                 truth or a model name
"""
from pathlib import Path

import numpy as np
import pandas as pd

import logger
from common.helper import atomic_write, format_float, safe_name
from dataset.image import flatten_image
from evaluation.aggregate import table_to_csv, BY_RATE, BY_METER_TYPE
from evaluation.evaluation_exceptions import EvaluationError
from evaluation.experiment import EvalReport, ExampleTrace


def boxplot_frame(report: EvalReport, keys) -> pd.DataFrame:
    frame = report.to_frame()
    long = frame.melt(id_vars=list(keys) + ["meter_id"], value_vars=["mse", "r2"], var_name="metric", value_name="value")
    return long.sort_values(list(keys) + ["meter_id", "metric"], kind="stable").reset_index(drop=True)


def overlay_frame(example: ExampleTrace) -> pd.DataFrame:
    image = example.image
    frame = pd.DataFrame({
        "timestamp": image.timestamps.strftime("%Y-%m-%dT%H:%M:%S"),
        "hour": np.arange(image.series.size),
        "truth": image.series,
        "mask": flatten_image(example.mask.grid).astype(int),
    })
    for architecture, imputation in sorted(example.imputations.items()):
        frame[architecture] = flatten_image(imputation.filled)
    return frame


def matrix_to_text(matrix) -> str:
    return "".join(" ".join(format_float(value) for value in row) + "\n" for row in np.asarray(matrix))


def heatmap_panels(example: ExampleTrace) -> dict:
    """
    panel name -> 168 x 52 matrix
    """
    panels = {
        "input": np.where(example.mask.holes, np.nan, example.image.matrix),
        "truth": example.image.matrix,
    }
    for architecture, imputation in sorted(example.imputations.items()):
        panels[architecture] = imputation.filled
    return panels


def _example_name(example: ExampleTrace) -> str:
    return safe_name(f"{example.image.meter_id}_{example.mask.kind.value}")


def emit_plots(report: EvalReport, out_dir) -> list:
    """
    Writes all plot data files of report into out_dir

    :return: written paths, in write order
    """
    if not report.rows:
        raise EvaluationError("Can't emit plot data for an empty report")
    out_dir = Path(out_dir)
    written = []

    def write(name, text):
        path = out_dir / name
        atomic_write(path, text, mode="w")
        written.append(path)

    write("boxplot_by_rate.csv", table_to_csv(boxplot_frame(report, BY_RATE)))
    write("boxplot_by_meter_type.csv", table_to_csv(boxplot_frame(report, BY_METER_TYPE)))
    for example in report.examples:
        name = _example_name(example)
        write(f"overlay_{name}.csv", table_to_csv(overlay_frame(example)))
        for panel, matrix in heatmap_panels(example).items():
            write(f"heatmap_{name}_{panel}.txt", matrix_to_text(matrix))
    logger.info(f"Wrote {len(written)} plot data files to {out_dir}")
    return written
