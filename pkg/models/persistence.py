import numpy as np

from dataset.image import IMAGE_SHAPE
from models.models_exceptions import ModelsError, PersistenceRowError


def persistence_sources(observed) -> np.ndarray:
    """
    For every cell the week to copy from: the cell itself if observed, else the nearest earlier
    observed week at the same hour of the week, else the nearest later one

    :param observed: 168 x 52 boolean
    :return: 168 x 52 week indices
    """
    observed = np.asarray(observed, dtype=bool)
    weeks = np.arange(observed.shape[1])
    earlier = np.maximum.accumulate(np.where(observed, weeks, -1), axis=1)
    later = np.minimum.accumulate(np.where(observed, weeks, observed.shape[1])[:, ::-1], axis=1)[:, ::-1]
    empty_rows = np.flatnonzero(~observed.any(axis=1))
    if empty_rows.size:
        raise PersistenceRowError(int(empty_rows[0]))
    return np.where(earlier >= 0, earlier, later)


def persistence_fill(matrix, mask, validity=None) -> np.ndarray:
    """
    Weekly persistence: every hole takes the value of the same hour in the nearest observed week

    :param validity: raw validity of matrix; invalid cells are never used as a source
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape != IMAGE_SHAPE:
        raise ModelsError(f"Persistence: shape. Expected: {IMAGE_SHAPE}, actual {matrix.shape}")
    observed = np.asarray(mask) > 0
    if validity is not None:
        observed = observed & np.asarray(validity, dtype=bool)
        # rows without a hole need no source
        observed[~observed.any(axis=1) & np.all(np.asarray(mask) > 0, axis=1)] = True
    sources = persistence_sources(observed)
    return np.take_along_axis(matrix, sources, axis=1)
