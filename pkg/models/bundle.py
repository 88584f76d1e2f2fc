"""
ModelBundle: architecture, layer descriptors, parameters and training provenance behind one impute call.

Checkpoint file:

    gridfill-model 1
    { JSON manifest, sorted keys: architecture, config, layers, parameters (name and shape, in payload order), provenance }
    ---
    one GFT1 tensor per parameter
"""
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import logger
from common.helper import atomic_write
from dataset.image import EnergyImage
from masks.mask_grid import MaskGrid, apply_mask, observed_grid
from models.models_exceptions import CheckpointError, UnknownArchitectureError, UntrainedModelError
from models.networks import NETWORKS, build_network
from models.persistence import persistence_fill
from numeric import tensor
from numeric.numeric_exceptions import TensorFormatError

PERSISTENCE = "persistence"
ARCHITECTURES = (PERSISTENCE,) + tuple(NETWORKS)
MAGIC_LINE = b"gridfill-model 1\n"
SEPARATOR = b"\n---\n"


@dataclass
class ModelBundle(object):
    architecture: str
    network: object = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.architecture not in ARCHITECTURES:
            raise UnknownArchitectureError(self.architecture)

    @property
    def trained(self) -> bool:
        return self.architecture == PERSISTENCE or bool(self.provenance.get("trained", False))

    @property
    def params(self) -> dict:
        return {} if self.network is None else self.network.parameters()

    @property
    def descriptors(self) -> list:
        return [] if self.network is None else self.network.describe()

    def manifest(self) -> dict:
        return {
            "architecture": self.architecture,
            "config": {} if self.network is None else self.network.config,
            "layers": self.descriptors,
            "parameters": [[name, list(value.shape)] for name, value in self.params.items()],
            "provenance": self.provenance,
        }

    def to_bytes(self) -> bytes:
        manifest = json.dumps(self.manifest(), sort_keys=True, indent=1).encode("utf-8")
        return MAGIC_LINE + manifest + SEPARATOR + tensor.save_tensors(self.params.values())

    @classmethod
    def from_bytes(cls, data: bytes, name="checkpoint"):
        if not data.startswith(MAGIC_LINE):
            raise CheckpointError(f"{name}: not a gridfill model checkpoint")
        manifest, separator, payload = data[len(MAGIC_LINE):].partition(SEPARATOR)
        if not separator:
            raise CheckpointError(f"{name}: missing manifest separator")
        try:
            manifest = json.loads(manifest.decode("utf-8"))
            architecture = manifest["architecture"]
            provenance = manifest["provenance"]
            names = [name_ for name_, _ in manifest["parameters"]]
            tensors = tensor.load_tensors(payload)
        except (ValueError, KeyError, TensorFormatError) as e:
            raise CheckpointError(f"{name}: {type(e).__name__}: {e}") from e
        if len(tensors) != len(names):
            raise CheckpointError(f"{name}: parameter count. Expected: {len(names)}, actual {len(tensors)}")
        network = None
        if architecture != PERSISTENCE:
            network = build_network(architecture, manifest["config"])
            network.set_parameters(dict(zip(names, tensors)))
        return cls(architecture=architecture, network=network, provenance=provenance)

    def save(self, path):
        atomic_write(path, self.to_bytes())
        logger.info(f"Saved {self.architecture} checkpoint to {path}")

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.exists():
            raise CheckpointError(f"Checkpoint {path} does not exist")
        return cls.from_bytes(path.read_bytes(), name=str(path))


def build_model(architecture, seed=0, config=None) -> ModelBundle:
    """
    Freshly initialized, untrained bundle of given architecture
    """
    if architecture == PERSISTENCE:
        return ModelBundle(PERSISTENCE, provenance={"trained": True})
    network = build_network(architecture, config, seed)
    return ModelBundle(architecture, network, provenance={"trained": False, "seed": seed})


def build_ae1d(seed=0, config=None) -> ModelBundle:
    return build_model("ae1d", seed, config)


def build_ae2d(seed=0, config=None) -> ModelBundle:
    return build_model("ae2d", seed, config)


def build_pconv_unet(seed=0, config=None) -> ModelBundle:
    return build_model("pconv", seed, config)


@dataclass(frozen=True)
class Imputation(object):
    """
    filled: 168 x 52 in the value space of the input; imputed flags exactly the hole cells
    """
    filled: np.ndarray
    mask: MaskGrid
    imputed: np.ndarray

    @property
    def provenance(self) -> np.ndarray:
        return np.where(self.imputed, "imputed", "observed")


def compose(matrix, prediction, mask: MaskGrid) -> Imputation:
    """
    Observed cells pass through verbatim, the prediction only fills the holes
    """
    holes = mask.holes
    return Imputation(filled=np.where(holes, prediction, matrix), mask=mask, imputed=holes.copy())


def persistence_impute(image: EnergyImage, mask: MaskGrid) -> Imputation:
    return compose(image.matrix, persistence_fill(image.matrix, mask.grid, image.validity), mask)


def impute(model: ModelBundle, image: EnergyImage, mask: MaskGrid, allow_untrained=False) -> Imputation:
    """
    Runs model on the masked image and composes the result
    """
    if model.architecture == PERSISTENCE:
        return persistence_impute(image, mask)
    if not model.trained and not allow_untrained:
        raise UntrainedModelError(model.architecture)
    masked = apply_mask(image, mask)
    prediction = model.network.predict(masked.matrix, observed_grid(mask, image.validity))
    return compose(image.matrix, prediction, mask)
