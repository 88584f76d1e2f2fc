import enum
from dataclasses import dataclass

import numpy as np

from dataset.image import EnergyImage, IMAGE_SHAPE
from masks.masks_exceptions import MaskShapeError, MaskFormatError


class MaskKind(enum.Enum):
    RandomDays = "random_days"
    Continuous = "continuous"
    Irregular = "irregular"


@dataclass(frozen=True)
class MaskGrid(object):
    """
    grid: 168 x 52 float64, 1.0 = observed, 0.0 = synthetic hole
    target_rate: requested rate for day masks, realized hole fraction for irregular masks
    """
    grid: np.ndarray
    kind: MaskKind
    target_rate: float
    seed: int

    def __post_init__(self):
        if self.grid.shape != IMAGE_SHAPE:
            raise MaskShapeError(IMAGE_SHAPE, self.grid.shape)

    @property
    def holes(self) -> np.ndarray:
        return self.grid == 0.0

    @property
    def hole_fraction(self) -> float:
        return float(self.holes.mean())

    def to_text(self) -> str:
        lines = [f"kind: {self.kind.value}", f"rate: {self.target_rate!r}", f"seed: {int(self.seed)}"]
        lines.extend("".join("1" if cell else "0" for cell in row) for row in self.grid > 0.5)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = text.splitlines()
        if len(lines) != 3 + IMAGE_SHAPE[0]:
            raise MaskFormatError(f"Mask file: expected {3 + IMAGE_SHAPE[0]} lines, got {len(lines)}")
        header = {}
        for expected, line in zip(("kind", "rate", "seed"), lines[:3]):
            key, colon, value = line.partition(": ")
            if key != expected or not colon:
                raise MaskFormatError(f"Mask file: expected header {expected!r}, got {line!r}")
            header[key] = value
        rows = lines[3:]
        for row_index, row in enumerate(rows):
            if len(row) != IMAGE_SHAPE[1] or set(row) - {"0", "1"}:
                raise MaskFormatError(f"Mask file row {row_index}: expected {IMAGE_SHAPE[1]} characters of '0'/'1', got {row!r}")
        grid = np.array([[1.0 if cell == "1" else 0.0 for cell in row] for row in rows])
        try:
            return cls(grid=grid, kind=MaskKind(header["kind"]), target_rate=float(header["rate"]), seed=int(header["seed"]))
        except ValueError as e:
            raise MaskFormatError(f"Mask file header: {e}") from e


def _check_shape(grid):
    if grid.shape != IMAGE_SHAPE:
        raise MaskShapeError(IMAGE_SHAPE, grid.shape)


@dataclass(frozen=True)
class MaskedImage(object):
    """
    Model input: matrix with holes set to 0.0, next to the image it came from and the mask
    """
    image: EnergyImage
    mask: MaskGrid
    matrix: np.ndarray


def apply_mask(image: EnergyImage, mask: MaskGrid) -> MaskedImage:
    _check_shape(image.matrix)
    _check_shape(mask.grid)
    return MaskedImage(image=image, mask=mask, matrix=np.where(mask.holes, 0.0, image.matrix))


def effective_mask(mask: MaskGrid, validity) -> np.ndarray:
    """
    Cells to score: synthetic holes that were valid in the raw data
    """
    validity = np.asarray(validity, dtype=bool)
    _check_shape(validity)
    return mask.holes & validity


def observed_grid(mask: MaskGrid, validity) -> np.ndarray:
    """
    Model-side mask: 1.0 where the cell is outside the synthetic holes and valid in the raw data
    """
    validity = np.asarray(validity, dtype=bool)
    _check_shape(validity)
    return np.where(validity, mask.grid, 0.0)
