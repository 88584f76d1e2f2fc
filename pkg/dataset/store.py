"""
Processed store: a directory with one file per meter-year plus the fold file.

Image file = text header, a line "---", then two GFT1 tensors (matrix, validity as 0.0/1.0):

    gridfill-image 1
    meter_id: Panther_office_Hannah
    site_id: Panther
    meter_type: electricity
    week0_start: 2016-01-04T00:00:00
    x_min: 0.0
    x_max: 412.5
    augmentation: original
    shift_hours: 0
    ---
"""
from pathlib import Path

import numpy as np
import pandas as pd

import logger
from common.helper import atomic_write, format_float
from dataset.dataset_exceptions import StoreError
from dataset.folds import FoldAssignment
from dataset.image import EnergyImage, NormParams, IMAGE_SHAPE
from dataset.records import MeterType
from numeric import tensor
from numeric.numeric_exceptions import TensorFormatError

MAGIC_LINE = "gridfill-image 1"
SEPARATOR = b"\n---\n"
SUFFIX = ".gfi"


def image_to_bytes(image: EnergyImage) -> bytes:
    header = [
        MAGIC_LINE,
        f"meter_id: {image.meter_id}",
        f"site_id: {image.site_id}",
        f"meter_type: {image.meter_type.value}",
        f"week0_start: {image.week0_start.isoformat()}",
        f"x_min: {format_float(image.norm.x_min)}",
        f"x_max: {format_float(image.norm.x_max)}",
        f"augmentation: {image.augmentation}",
        f"shift_hours: {int(image.shift_hours)}",
    ]
    payload = tensor.save_tensors((image.matrix, image.validity.astype(np.float64)))
    return "\n".join(header).encode("utf-8") + SEPARATOR + payload


def image_from_bytes(data: bytes, name="image") -> EnergyImage:
    head, separator, payload = data.partition(SEPARATOR)
    if not separator:
        raise StoreError(f"{name}: missing header separator")
    lines = head.decode("utf-8").split("\n")
    if lines[0] != MAGIC_LINE:
        raise StoreError(f"{name}: expected {MAGIC_LINE!r}, got {lines[0]!r}")
    fields = {}
    for line in lines[1:]:
        key, colon, value = line.partition(": ")
        if not colon:
            raise StoreError(f"{name}: malformed header line {line!r}")
        fields[key] = value
    try:
        matrix, validity = tensor.load_tensors(payload)
        image = EnergyImage(meter_id=fields["meter_id"], site_id=fields["site_id"], meter_type=MeterType(fields["meter_type"]),
                            matrix=matrix, validity=validity > 0.5,
                            norm=NormParams(float(fields["x_min"]), float(fields["x_max"])),
                            week0_start=pd.Timestamp(fields["week0_start"]),
                            augmentation=fields["augmentation"], shift_hours=int(fields["shift_hours"]))
    except (KeyError, ValueError, TensorFormatError) as e:
        raise StoreError(f"{name}: {type(e).__name__}: {e}") from e
    if image.matrix.shape != IMAGE_SHAPE or image.validity.shape != IMAGE_SHAPE:
        raise StoreError(f"{name}: image shape. Expected: {IMAGE_SHAPE}, actual {image.matrix.shape}")
    return image


class ImageStore(object):
    """
    Directory layout: <root>/images/<key>.gfi and <root>/folds.csv
    """
    def __init__(self, root):
        self._root = Path(root)
        self._images = self._root / "images"

    @property
    def root(self) -> Path:
        return self._root

    @property
    def fold_path(self) -> Path:
        return self._root / "folds.csv"

    def exists(self) -> bool:
        return self._images.is_dir() and any(self._images.glob(f"*{SUFFIX}"))

    def keys(self) -> list:
        return sorted(path.name[:-len(SUFFIX)] for path in self._images.glob(f"*{SUFFIX}"))

    def save(self, image: EnergyImage):
        atomic_write(self._images / f"{image.key}{SUFFIX}", image_to_bytes(image))

    def load(self, key) -> EnergyImage:
        path = self._images / f"{key}{SUFFIX}"
        if not path.exists():
            raise StoreError(f"No image {key!r} in store {self._root}")
        return image_from_bytes(path.read_bytes(), name=str(path))

    def load_all(self) -> list:
        images = [self.load(key) for key in self.keys()]
        if not images:
            raise StoreError(f"Store {self._root} holds no images")
        logger.debug(f"Loaded {len(images)} images from {self._root}")
        return images

    def find(self, meter_id) -> EnergyImage:
        for image in self.load_all():
            if image.meter_id == meter_id:
                return image
        raise StoreError(f"Meter {meter_id!r} not in store {self._root}")

    def save_folds(self, assignment: FoldAssignment):
        atomic_write(self.fold_path, assignment.to_text(), mode="w")

    def load_folds(self) -> FoldAssignment:
        if not self.fold_path.exists():
            raise StoreError(f"No fold file in store {self._root}")
        return FoldAssignment.from_text(self.fold_path.read_text(encoding="utf-8"))

    def clear(self):
        for path in self._images.glob(f"*{SUFFIX}"):
            path.unlink()
        if self.fold_path.exists():
            self.fold_path.unlink()
