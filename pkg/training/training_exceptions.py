from common.exceptions import GridFillError, ValidationError


class TrainingError(GridFillError):
    """
    Any Exception concerning training
    """


class TrainConfigError(TrainingError, ValidationError):
    """
    Invalid training configuration (file syntax, unknown key or value out of range)
    """


class EmptyDatasetError(TrainingError, ValidationError):
    def __init__(self, name):
        super().__init__(f"Training needs a nonempty {name} set")


class NonFiniteGradientError(TrainingError):
    def __init__(self, name):
        super().__init__(f"Gradient of {name} contains non-finite values")


class TrainingDivergedError(TrainingError):
    """
    Loss became NaN/Inf
    """
    def __init__(self, epoch, batch, loss):
        super().__init__(f"Training diverged in epoch {epoch}, batch {batch}: loss {loss}")
