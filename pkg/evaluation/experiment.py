"""
The experiment matrix: every (model, mask kind, rate, fold, test meter) cell gets one seeded mask,
shared by all models so their scores are paired
"""
from dataclasses import dataclass, field, fields, astuple

import numpy as np
import pandas as pd

import curio_wrapper
import logger
from common import settings
from common.helper import derive_seed, format_float, table_to_csv
from dataset.folds import FoldAssignment, split_round
from evaluation.evaluation_exceptions import ConstantTruthError, EmptyMaskError, MissingModelError
from evaluation.metrics import mse_masked, r2_masked
from masks.generators import generate_mask
from masks.mask_grid import MaskKind, effective_mask
from models.bundle import PERSISTENCE, build_model, impute
from models.models_exceptions import PersistenceRowError


@dataclass(frozen=True)
class EvalRow(object):
    model: str
    meter_id: str
    site_id: str
    meter_type: str
    kind: str
    rate: float
    fold: int
    mse: float
    r2: float
    n_cells: int

    def sort_key(self):
        return self.model, self.kind, self.rate, self.fold, self.meter_id


COLUMNS = tuple(f.name for f in fields(EvalRow))


@dataclass
class ExampleTrace(object):
    """
    One meter under one mask with the imputation of every model, for overlay and heatmap output
    """
    image: object
    mask: object
    fold: int
    imputations: dict = field(default_factory=dict)


@dataclass
class EvalReport(object):
    rows: list = field(default_factory=list)
    excluded: list = field(default_factory=list)  # (model, meter_id, kind, rate, fold, reason)
    examples: list = field(default_factory=list)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([astuple(row) for row in self.rows], columns=list(COLUMNS))

    def to_csv(self) -> str:
        return table_to_csv(self.to_frame())


@dataclass(frozen=True)
class ExperimentMatrix(object):
    models: tuple
    kinds: tuple
    rates: tuple
    folds: tuple

    @classmethod
    def from_settings(cls, models, folds=None):
        evaluation = settings.Settings().Evaluation
        folds = tuple(range(settings.Settings().Dataset.FoldCount)) if folds is None else tuple(folds)
        return cls(models=tuple(models), kinds=tuple(evaluation.Kinds), rates=tuple(float(rate) for rate in evaluation.Rates), folds=folds)


def evaluation_mask(seed, meter_id, kind, rate, fold):
    return generate_mask(MaskKind(kind), rate, derive_seed(seed, "evaluate", meter_id, kind, format_float(rate), fold))


def _score(image, mask, imputation, denormalize):
    cells = effective_mask(mask, image.validity)
    pred, truth = imputation.filled, image.matrix
    if denormalize:
        pred, truth = image.norm.invert(pred), image.norm.invert(truth)
    mse = mse_masked(pred, truth, cells)
    return mse, r2_masked(pred, truth, cells), int(cells.sum())


def _resolve_models(matrix: ExperimentMatrix, models: dict) -> dict:
    resolved = {}
    for architecture in matrix.models:
        for fold in matrix.folds:
            if architecture == PERSISTENCE:
                resolved[architecture, fold] = build_model(PERSISTENCE)
            elif (architecture, fold) in models:
                resolved[architecture, fold] = models[architecture, fold]
            else:
                raise MissingModelError(architecture, fold)
    return resolved


def run_experiment(matrix: ExperimentMatrix, images, assignment: FoldAssignment, models: dict, seed,
                   denormalize=False, example_rate=None) -> EvalReport:
    """
    :param images: all EnergyImages of the store; each fold tests on the meters of its test sites
    :param models: (architecture, fold) -> trained ModelBundle; persistence needs no entry
    :param denormalize: score in kWh instead of normalized units
    :param example_rate: collect the first test meter of every meter type at this rate as example traces
    """
    resolved = _resolve_models(matrix, models)
    tasks = []
    for fold in matrix.folds:
        _, _, test = split_round(images, assignment, fold)
        logger.info(f"Evaluating fold {fold}: {len(test)} test meters")
        for image in test:
            for kind in matrix.kinds:
                for rate in matrix.rates:
                    tasks.append((fold, image, kind, rate))

    def run_task(task):
        fold, image, kind, rate = task
        mask = evaluation_mask(seed, image.meter_id, kind, rate, fold)
        rows, excluded, imputations = [], [], {}
        for architecture in matrix.models:
            try:
                imputation = impute(resolved[architecture, fold], image, mask)
                imputations[architecture] = imputation
                mse, r2, count = _score(image, mask, imputation, denormalize)
            except (ConstantTruthError, EmptyMaskError, PersistenceRowError) as e:
                excluded.append((architecture, image.meter_id, kind, rate, fold, str(e)))
                continue
            rows.append(EvalRow(model=architecture, meter_id=image.meter_id, site_id=image.site_id, meter_type=image.meter_type.value,
                                kind=kind, rate=rate, fold=fold, mse=mse, r2=r2, n_cells=count))
        if rate != example_rate:
            mask, imputations = None, None  # only example traces keep them
        return rows, excluded, mask, imputations

    results = curio_wrapper.parallel_map(run_task, tasks)

    report = EvalReport()
    examples_taken = set()
    for task, (rows, excluded, mask, imputations) in zip(tasks, results):
        report.rows.extend(rows)
        report.excluded.extend(excluded)
        fold, image, kind, rate = task
        if example_rate is not None and rate == example_rate and (image.meter_type, kind) not in examples_taken:
            examples_taken.add((image.meter_type, kind))
            report.examples.append(ExampleTrace(image=image, mask=mask, fold=fold, imputations=imputations))
    report.rows.sort(key=EvalRow.sort_key)
    report.excluded.sort(key=lambda entry: (entry[0], entry[2], entry[3], entry[4], entry[1]))
    if report.excluded:
        logger.warn(f"Excluded {len(report.excluded)} degenerate cells of the experiment matrix (constant truth or no valid hole)")
    logger.info(f"Experiment done: {len(report.rows)} rows")
    return report


def mean_by_model(report: EvalReport, metric="mse") -> dict:
    """
    Model -> mean of metric over all rows of that model
    """
    values = {}
    for row in report.rows:
        values.setdefault(row.model, []).append(getattr(row, metric))
    return {model: float(np.mean(metric_values)) for model, metric_values in sorted(values.items())}
