import time
from dataclasses import dataclass, field, fields, astuple

import numpy as np
import pandas as pd

import curio_wrapper
import logger
from common.helper import derive_seed, rng_for, fingerprint_arrays, format_float, table_to_csv
from masks.generators import generate_mask
from masks.mask_grid import MaskGrid, MaskKind, observed_grid
from models.bundle import ModelBundle, PERSISTENCE
from numeric.loss import weighted_mse_loss
from numeric.tensor import global_norm_clip
from training.config import TrainConfig
from training.optimizer import Adam
from training.training_exceptions import EmptyDatasetError, TrainingDivergedError, TrainConfigError


class TrainingLogger(logger.Logger):
    """
    Each training run gets its own log file holding the epoch lines only
    """
    def __init__(self, run_name):
        super().__init__(log_file_name=run_name + "_train.log", log_format="%(asctime)s %(message)s", print_stdout=False)


def loss_weights(mask: MaskGrid, validity, hole_weight) -> np.ndarray:
    """
    hole_weight on synthetic holes, 1 on observed cells, 0 wherever the raw data was invalid
    """
    validity = np.asarray(validity, dtype=bool)
    return np.where(validity, np.where(mask.holes, hole_weight, 1.0), 0.0)


def masked_loss(pred, target, mask: MaskGrid, validity, hole_weight):
    """
    :return: (loss, gradient with respect to pred)
    """
    return weighted_mse_loss(pred, target, loss_weights(mask, validity, hole_weight))


def sample_mask_policy(config: TrainConfig, seed, epoch, item, purpose="train"):
    """
    Kind uniform over config.mask_kinds, rate uniform in [rate_min, rate_max]; every draw is
    keyed by (seed, purpose, epoch, item) so it replays exactly

    :return: (MaskKind, rate)
    """
    if not config.mask_kinds:
        raise TrainConfigError("mask_kinds must not be empty")
    rng = rng_for(seed, purpose, epoch, item)
    kind = MaskKind(config.mask_kinds[int(rng.integers(len(config.mask_kinds)))])
    return kind, float(rng.uniform(config.rate_min, config.rate_max))


def sample_training_mask(config: TrainConfig, seed, epoch, item, purpose="train") -> MaskGrid:
    kind, rate = sample_mask_policy(config, seed, epoch, item, purpose)
    return generate_mask(kind, rate, derive_seed(seed, purpose, epoch, item, "grid"))


def validation_masks(config: TrainConfig, count) -> list:
    """
    Frozen for the whole run so epochs compare like with like
    """
    return [sample_training_mask(config, config.seed, 0, item, purpose="validation") for item in range(count)]


@dataclass
class EpochRecord(object):
    epoch: int
    train_loss: float
    val_loss: float
    seconds: float


@dataclass
class TrainLog(object):
    epochs: list = field(default_factory=list)
    best_epoch: int = 0
    stop_reason: str = ""
    initial_val_loss: float = float("nan")

    @property
    def best_val_loss(self) -> float:
        return min(record.val_loss for record in self.epochs)

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([astuple(record) for record in self.epochs], columns=[f.name for f in fields(EpochRecord)])
        frame["seconds"] = frame["seconds"].map("{:.3f}".format)
        return frame

    def to_csv(self) -> str:
        return table_to_csv(self.to_frame())


class EarlyStopping(object):
    """
    Remembers the best validation loss and a copy of the parameters of that epoch.
    Stops after patience consecutive epochs without strict improvement
    """
    def __init__(self, patience):
        self.patience = patience
        self.best_loss = np.inf
        self.best_epoch = 0
        self.best_params = None
        self.epochs_without_improvement = 0

    def update(self, epoch, loss, params: dict) -> bool:
        """
        :return: True if training should stop
        """
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.best_params = {name: value.copy() for name, value in params.items()}
            self.epochs_without_improvement = 0
        else:
            self.epochs_without_improvement += 1
        return self.epochs_without_improvement >= self.patience


def _item_loss_and_grads(network, image, mask: MaskGrid, hole_weight, with_grads=True):
    pred, cache = network.forward(image.matrix, observed_grid(mask, image.validity))
    loss, grad = masked_loss(pred, image.matrix, mask, image.validity, hole_weight)
    return loss, network.backward(grad, cache) if with_grads else None


def evaluate_loss(network, items, masks, config: TrainConfig) -> float:
    """
    Mean masked loss over items, each with its own mask
    """
    losses = curio_wrapper.parallel_map(lambda pair: _item_loss_and_grads(network, pair[0], pair[1], config.hole_weight, False)[0], list(zip(items, masks)))
    return float(np.mean(losses))


def _batch_step(network, optimizer, params, batch, config: TrainConfig, epoch, batch_index):
    results = curio_wrapper.parallel_map(lambda pair: _item_loss_and_grads(network, pair[0], pair[1], config.hole_weight), batch)
    grads = {name: np.zeros_like(value) for name, value in params.items()}
    for _, item_grads in results:  # fixed order reduction
        for name, grad in item_grads.items():
            grads[name] += grad
    for name in grads:
        grads[name] /= len(batch)
    loss = float(np.mean([item_loss for item_loss, _ in results]))
    if not np.isfinite(loss):
        raise TrainingDivergedError(epoch, batch_index, loss)
    global_norm_clip(grads, config.grad_clip)
    optimizer.step(grads)
    return loss


def train(model: ModelBundle, train_set, val_set, config: TrainConfig, run_name=None):
    """
    Minibatch Adam with fresh masks every epoch and early stopping on the validation loss.
    The returned bundle carries the parameters of the best epoch

    :param train_set: EnergyImages (augment beforehand)
    :param val_set: EnergyImages, masked with validation_masks
    :return: (ModelBundle, TrainLog)
    """
    if model.architecture == PERSISTENCE:
        raise TrainConfigError("Persistence has no parameters to train")
    if not train_set:
        raise EmptyDatasetError("training")
    if not val_set:
        raise EmptyDatasetError("validation")
    run_name = run_name or model.architecture
    run_logger = TrainingLogger(run_name)
    network = model.network
    params = network.parameters()
    optimizer = Adam(params, config)
    val_masks = validation_masks(config, len(val_set))

    log = TrainLog(initial_val_loss=evaluate_loss(network, val_set, val_masks, config))
    logger.info(f"{run_name}: {len(train_set)} training and {len(val_set)} validation images, initial validation loss {log.initial_val_loss:.6f}")
    run_logger.info(f"epoch 0 val_loss {format_float(log.initial_val_loss)}")
    early_stopping = EarlyStopping(config.patience)
    log.stop_reason = "max_epochs"

    for epoch in range(1, config.max_epochs + 1):
        started = time.perf_counter()
        order = rng_for(config.seed, "shuffle", epoch).permutation(len(train_set))
        batch_losses = []
        for batch_index, first in enumerate(range(0, len(order), config.batch_size)):
            indices = order[first:first + config.batch_size]
            batch = [(train_set[i], sample_training_mask(config, config.seed, epoch, int(i))) for i in indices]
            batch_losses.append(_batch_step(network, optimizer, params, batch, config, epoch, batch_index))
        val_loss = evaluate_loss(network, val_set, val_masks, config)
        if not np.isfinite(val_loss):
            raise TrainingDivergedError(epoch, "validation", val_loss)
        record = EpochRecord(epoch=epoch, train_loss=float(np.mean(batch_losses)), val_loss=val_loss, seconds=time.perf_counter() - started)
        log.epochs.append(record)
        run_logger.info(f"epoch {epoch} train_loss {format_float(record.train_loss)} val_loss {format_float(val_loss)} seconds {record.seconds:.3f}")
        if early_stopping.update(epoch, val_loss, params):
            log.stop_reason = "early_stop"
            logger.info(f"{run_name}: early stop after epoch {epoch}, no improvement for {config.patience} epochs")
            break

    network.set_parameters(early_stopping.best_params)
    log.best_epoch = early_stopping.best_epoch
    logger.info(f"{run_name}: best epoch {log.best_epoch} with validation loss {early_stopping.best_loss:.6f} ({log.stop_reason})")
    provenance = {
        "trained": True,
        "seed": config.seed,
        "epochs_run": len(log.epochs),
        "best_epoch": log.best_epoch,
        "best_val_loss": float(early_stopping.best_loss),
        "initial_val_loss": float(log.initial_val_loss),
        "stop_reason": log.stop_reason,
        "data_fingerprint": fingerprint_arrays([image.matrix for image in train_set] + [image.matrix for image in val_set]),
        "train_config": config.to_dict(),
    }
    return ModelBundle(model.architecture, network, provenance=provenance), log
