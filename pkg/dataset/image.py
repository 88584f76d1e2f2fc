"""
Energy images: one modeling year as 168 (hour of week) x 52 (week) grid.
Hour t of the year lives at row t mod 168, column t div 168
"""
import dataclasses
import functools
from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from common import settings
from common.helper import rng_for, safe_name
from dataset.dataset_exceptions import AllInvalidError, SliceTooShortError
from dataset.records import MeterRecord, MeterType, modeling_year, HOURS_PER_WEEK, WEEKS_PER_YEAR, HOURS_PER_YEAR

IMAGE_SHAPE = (HOURS_PER_WEEK, WEEKS_PER_YEAR)


@dataclass(frozen=True)
class NormParams(object):
    x_min: float
    x_max: float

    def __post_init__(self):
        if not self.x_max >= self.x_min:
            raise ValueError(f"NormParams: x_max {self.x_max} below x_min {self.x_min}")

    @property
    def constant(self) -> bool:
        return self.x_max == self.x_min

    def apply(self, values):
        if self.constant:
            return np.zeros_like(np.asarray(values, dtype=np.float64))
        return (np.asarray(values, dtype=np.float64) - self.x_min) / (self.x_max - self.x_min)

    def invert(self, values):
        return np.asarray(values, dtype=np.float64) * (self.x_max - self.x_min) + self.x_min


def normalize(values, valid=None):
    """
    Min-max scaling over the valid cells. Invalid cells come out as 0.0,
    a constant series maps to all zeros

    :return: (normalized values, NormParams)
    """
    values = np.asarray(values, dtype=np.float64)
    valid = np.isfinite(values) if valid is None else np.asarray(valid, dtype=bool) & np.isfinite(values)
    if not np.any(valid):
        raise AllInvalidError("normalize")
    params = NormParams(x_min=float(values[valid].min()), x_max=float(values[valid].max()))
    normalized = np.zeros(values.shape)
    normalized[valid] = params.apply(values[valid])
    return normalized, params


def denormalize(values, params: NormParams):
    return params.invert(values)


def to_grid(series) -> np.ndarray:
    """
    8736 hourly cells -> 168 x 52 grid
    """
    series = np.asarray(series)
    if series.shape != (HOURS_PER_YEAR,):
        raise SliceTooShortError("to_grid", HOURS_PER_YEAR, series.size)
    return np.ascontiguousarray(series.reshape(WEEKS_PER_YEAR, HOURS_PER_WEEK).T)


def flatten_image(matrix) -> np.ndarray:
    """
    Exact inverse of to_grid
    """
    return np.ascontiguousarray(np.asarray(matrix).T.reshape(-1))


@dataclass(frozen=True)
class EnergyImage(object):
    meter_id: str
    site_id: str
    meter_type: MeterType
    matrix: np.ndarray
    validity: np.ndarray
    norm: NormParams
    week0_start: pd.Timestamp
    augmentation: str = "original"
    shift_hours: int = 0
    # matrix before the last flip; flipping again returns it
    unflipped: Optional[np.ndarray] = dataclasses.field(default=None, repr=False, compare=False)

    @property
    def key(self) -> str:
        if self.augmentation == "original":
            return safe_name(self.meter_id)
        return safe_name(f"{self.meter_id}~{self.augmentation}")

    @property
    def series(self) -> np.ndarray:
        return flatten_image(self.matrix)

    @property
    def timestamps(self) -> pd.DatetimeIndex:
        return pd.date_range(self.week0_start, periods=HOURS_PER_YEAR, freq="h")


def reshape_to_image(record: MeterRecord) -> EnergyImage:
    """
    Normalizes the modeling year of given record and lays it out as energy image
    """
    values, valid, week0_start = modeling_year(record)
    try:
        normalized, params = normalize(values, valid)
    except AllInvalidError:
        raise AllInvalidError(f"reshape_to_image {record.meter_id}") from None
    return EnergyImage(meter_id=record.meter_id, site_id=record.site_id, meter_type=record.meter_type,
                       matrix=to_grid(normalized), validity=to_grid(valid), norm=params, week0_start=week0_start)


@functools.lru_cache(maxsize=None)
def _interpolation_matrix(size_in, size_out):
    """
    (size_out, size_in) linear interpolation with corner-aligned sampling: output i samples input position i * (size_in - 1) / (size_out - 1)
    """
    matrix = np.zeros((size_out, size_in))
    if size_in == 1 or size_out == 1:
        matrix[:, 0] = 1.0
        return matrix
    positions = np.arange(size_out) * (size_in - 1) / (size_out - 1)
    lower = np.minimum(np.floor(positions).astype(int), size_in - 2)
    fraction = positions - lower
    rows = np.arange(size_out)
    matrix[rows, lower] += 1.0 - fraction
    matrix[rows, lower + 1] += fraction
    matrix.setflags(write=False)
    return matrix


def _resize_size(size):
    return int(settings.Settings().Dataset.ResizeTo) if size is None else int(size)


def resize_bilinear(matrix, size=None) -> np.ndarray:
    """
    168 x 52 -> size x size (default Dataset.ResizeTo, 192)
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    size = _resize_size(size)
    return _interpolation_matrix(matrix.shape[0], size) @ matrix @ _interpolation_matrix(matrix.shape[1], size).T


def sample_back_operators(size, shape=IMAGE_SHAPE):
    """
    (rows, cols) matrices with sample_back(grid) = rows @ grid @ cols.T
    """
    return _interpolation_matrix(size, shape[0]), _interpolation_matrix(size, shape[1])


def sample_back(grid, shape=IMAGE_SHAPE) -> np.ndarray:
    """
    Evaluates the bilinear surface given by a square grid at the cell coordinates of the original shape
    """
    grid = np.asarray(grid, dtype=np.float64)
    rows, cols = sample_back_operators(grid.shape[0], shape)
    return rows @ grid @ cols.T


def resize_mask_nearest(mask, size=None) -> np.ndarray:
    """
    Nearest-neighbour resize of a binary grid to size x size, stays binary
    """
    mask = np.asarray(mask)
    size = _resize_size(size)
    rows = np.rint(np.arange(size) * (mask.shape[0] - 1) / max(size - 1, 1)).astype(int)
    cols = np.rint(np.arange(size) * (mask.shape[1] - 1) / max(size - 1, 1)).astype(int)
    return np.ascontiguousarray(mask[rows][:, cols])


def shift_image(image: EnergyImage, hours: int) -> EnergyImage:
    """
    Circular shift of the flattened year by given hours; validity moves with the data
    """
    matrix = to_grid(np.roll(image.series, hours))
    validity = to_grid(np.roll(flatten_image(image.validity), hours))
    augmentation = "shifted" if image.augmentation == "original" else f"shifted+{image.augmentation}"
    return dataclasses.replace(image, matrix=matrix, validity=validity, augmentation=augmentation, shift_hours=image.shift_hours + hours, unflipped=None)


def flip_image(image: EnergyImage) -> EnergyImage:
    """
    Vertical flip x -> 1 - x on valid cells. Flipping a flipped image restores the original matrix exactly
    """
    matrix = np.where(image.validity, 1.0 - image.matrix, image.matrix)
    if image.unflipped is not None and np.allclose(matrix, image.unflipped, rtol=0.0, atol=1e-12):
        augmentation = image.augmentation.rpartition("+")[0] if "+" in image.augmentation else "original"
        return dataclasses.replace(image, matrix=image.unflipped, augmentation=augmentation, unflipped=None)
    augmentation = "flipped" if image.augmentation == "original" else f"{image.augmentation}+flipped"
    return dataclasses.replace(image, matrix=matrix, augmentation=augmentation, unflipped=image.matrix)


def augment(images, seed) -> list:
    """
    Fourfold expansion: original, shifted, flipped, shifted and flipped.
    The shift of every image is drawn uniformly from [1, 167] hours, keyed by seed and meter
    """
    augmented = []
    for image in images:
        hours = int(rng_for(seed, "augment", image.meter_id).integers(1, HOURS_PER_WEEK))
        shifted = shift_image(image, hours)
        augmented.extend((image, shifted, flip_image(image), flip_image(shifted)))
    return augmented
