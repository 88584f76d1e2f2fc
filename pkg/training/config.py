"""
Training configuration. Defaults come from the Training section of config.json, a flat text file
overrides single fields:

    # comment
    learning_rate = 0.0005
    mask_kinds = random_days, continuous
    grad_clip = none
"""
import dataclasses
from dataclasses import dataclass
from pathlib import Path

from common import settings
from masks.mask_grid import MaskKind
from training.training_exceptions import TrainConfigError

MIN_RATE = 0.05
MAX_RATE = 0.5


@dataclass(frozen=True)
class TrainConfig(object):
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 16
    max_epochs: int = 50
    patience: int = 5
    hole_weight: float = 6.0
    seed: int = 0
    mask_kinds: tuple = ("random_days", "continuous", "irregular")
    rate_min: float = MIN_RATE
    rate_max: float = MAX_RATE
    grad_clip: float = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not self.learning_rate > 0:
            raise TrainConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise TrainConfigError(f"Adam betas must lie in [0, 1), got {self.beta1}, {self.beta2}")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise TrainConfigError(f"batch_size and max_epochs must be positive, got {self.batch_size}, {self.max_epochs}")
        if not 0 < self.patience < self.max_epochs:
            raise TrainConfigError(f"patience must lie in (0, max_epochs={self.max_epochs}), got {self.patience}")
        if not MIN_RATE <= self.rate_min <= self.rate_max <= MAX_RATE:
            raise TrainConfigError(f"Mask rates must satisfy {MIN_RATE} <= rate_min <= rate_max <= {MAX_RATE}, got {self.rate_min}, {self.rate_max}")
        if self.hole_weight < 0:
            raise TrainConfigError(f"hole_weight must not be negative, got {self.hole_weight}")
        if not self.mask_kinds:
            raise TrainConfigError("mask_kinds must not be empty")
        for kind in self.mask_kinds:
            try:
                MaskKind(kind)
            except ValueError:
                raise TrainConfigError(f"Unknown mask kind {kind!r}") from None
        if self.grad_clip is not None and not self.grad_clip > 0:
            raise TrainConfigError(f"grad_clip must be positive or none, got {self.grad_clip}")

    @classmethod
    def from_settings(cls, architecture=None, **overrides):
        """
        :param architecture: picks the gradient clipping of that architecture from Training.GradClip
        """
        training = settings.Settings().Training
        grad_clip = getattr(training.GradClip, architecture, None) if architecture else None
        values = dict(learning_rate=training.LearningRate, beta1=training.Beta1, beta2=training.Beta2, epsilon=training.Epsilon,
                      batch_size=training.BatchSize, max_epochs=training.MaxEpochs, patience=training.Patience,
                      hole_weight=training.HoleWeight, seed=training.Seed, mask_kinds=tuple(training.MaskKinds),
                      rate_min=training.RateMin, rate_max=training.RateMax, grad_clip=grad_clip)
        values.update(overrides)
        return cls(**values)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        values = dataclasses.asdict(self)
        values["mask_kinds"] = list(self.mask_kinds)
        return values


def _parse_value(key, text):
    field_type = {f.name: f.type for f in dataclasses.fields(TrainConfig)}[key]
    text = text.strip()
    try:
        if key == "mask_kinds":
            return tuple(kind.strip() for kind in text.split(",") if kind.strip())
        if key == "grad_clip":
            return None if text.lower() in ("none", "") else float(text)
        if field_type in (int, "int"):
            return int(text)
        return float(text)
    except ValueError:
        raise TrainConfigError(f"{key}: can't parse {text!r}") from None


def parse_overrides(text, name="config") -> dict:
    """
    Parses flat "key = value" lines, keys are TrainConfig field names
    """
    known = {f.name for f in dataclasses.fields(TrainConfig)}
    overrides = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, equals, value = line.partition("=")
        key = key.strip()
        if not equals:
            raise TrainConfigError(f"{name}:{line_number}: expected 'key = value', got {line!r}")
        if key not in known:
            raise TrainConfigError(f"{name}:{line_number}: unknown key {key!r}. Expected one of: {', '.join(sorted(known))}")
        overrides[key] = _parse_value(key, value)
    return overrides


def load_train_config(path=None, architecture=None, **overrides) -> TrainConfig:
    """
    Settings defaults, then the flat override file (if any), then keyword overrides
    """
    values = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise TrainConfigError(f"Config file {path} does not exist")
        values.update(parse_overrides(path.read_text(encoding="utf-8"), name=str(path)))
    values.update(overrides)
    return TrainConfig.from_settings(architecture, **values)
