"""
Cleaning only ever flags cells invalid, values stay untouched:
  - negative or non-finite readings
  - constant streaks: at least StreakLengthNonZero equal nonzero readings in a row,
    or StreakLengthZero zero readings
  - spikes: |x - median| > SpikeIqrFactor * IQR over the remaining valid cells (skipped if IQR is 0)
"""
import dataclasses
from dataclasses import dataclass

import numpy as np
from numba import njit

import logger
from common import settings
from dataset.records import MeterRecord, modeling_year
from dataset.dataset_exceptions import SliceTooShortError


@dataclass(frozen=True)
class CleaningRules(object):
    streak_nonzero: int = 24
    streak_zero: int = 48
    spike_iqr_factor: float = 10.0

    @classmethod
    def from_settings(cls):
        cleaning = settings.Settings().Cleaning
        return cls(streak_nonzero=int(cleaning.StreakLengthNonZero), streak_zero=int(cleaning.StreakLengthZero), spike_iqr_factor=float(cleaning.SpikeIqrFactor))


@njit(cache=True)
def constant_streaks(values, valid, nonzero_length, zero_length):
    """
    Flags every cell of a run of equal consecutive valid values whose length reaches the limit
    for its value (zero_length for 0.0, nonzero_length otherwise). Invalid cells end a run
    """
    count = values.shape[0]
    flags = np.zeros(count, dtype=np.bool_)
    start = 0
    while start < count:
        if not valid[start]:
            start += 1
            continue
        end = start + 1
        while end < count and valid[end] and values[end] == values[start]:
            end += 1
        limit = zero_length if values[start] == 0.0 else nonzero_length
        if end - start >= limit:
            flags[start:end] = True
        start = end
    return flags


def spikes(values, valid, iqr_factor):
    """
    Flags valid cells further than iqr_factor interquartile ranges away from the median of the valid cells
    """
    flags = np.zeros(values.shape, dtype=bool)
    if not np.any(valid):
        return flags
    q1, median, q3 = np.percentile(values[valid], (25, 50, 75))
    iqr = q3 - q1
    if iqr <= 0.0:
        return flags
    flags[valid] = np.abs(values[valid] - median) > iqr_factor * iqr
    return flags


def clean(record: MeterRecord, rules: CleaningRules = None) -> MeterRecord:
    """
    :return: new record with the same values and the cleaning flags applied to valid
    """
    rules = CleaningRules.from_settings() if rules is None else rules
    values = record.values
    with np.errstate(invalid="ignore"):
        usable = record.valid & np.isfinite(values) & (values >= 0.0)
    bad_readings = record.valid & ~usable

    streaks = constant_streaks(np.where(usable, values, 0.0), usable, rules.streak_nonzero, rules.streak_zero)
    usable = usable & ~streaks
    spike_flags = spikes(values, usable, rules.spike_iqr_factor)
    valid = usable & ~spike_flags

    flagged = int(record.valid.sum() - valid.sum())
    if flagged:
        logger.debug(f"Cleaning {record.meter_id}: {int(bad_readings.sum())} bad readings, {int(streaks.sum())} streak cells, {int(spike_flags.sum())} spikes")
    return dataclasses.replace(record, values=values.copy(), valid=valid)


def missing_fraction(record: MeterRecord) -> float:
    """
    Fraction of invalid cells in the modeling year of given record
    """
    _, valid, _ = modeling_year(record)
    return float((~valid).mean())


def filter_low_missing(records, threshold=None) -> list:
    """
    Keeps records whose modeling year has an invalid fraction strictly below threshold.
    Records without a full modeling year are dropped too; every exclusion is logged
    """
    threshold = settings.Settings().Dataset.MissingThreshold if threshold is None else threshold
    kept = []
    for record in records:
        try:
            fraction = missing_fraction(record)
        except SliceTooShortError as e:
            logger.info(f"Excluding meter {record.meter_id}: {e}")
            continue
        if fraction < threshold:
            kept.append(record)
        else:
            logger.info(f"Excluding meter {record.meter_id}: missing fraction {fraction:.4f} not below {threshold}")
    logger.info(f"Kept {len(kept)} of {len(records)} meters with missing fraction below {threshold}")
    return kept
