from common.exceptions import GridFillError, ValidationError


class ModelsError(GridFillError):
    """
    Any Exception concerning imputation models
    """


class UnknownArchitectureError(ModelsError, ValidationError):
    def __init__(self, architecture):
        super().__init__(f"Unknown architecture {architecture!r}. Expected one of: persistence, ae1d, ae2d, pconv")


class UntrainedModelError(ModelsError):
    def __init__(self, architecture):
        super().__init__(f"Model {architecture} was never trained. Pass allow_untrained to impute anyway")


class PersistenceRowError(ModelsError):
    """
    An hour of the week has no observed week, persistence has nothing to copy from
    """
    def __init__(self, row):
        super().__init__(f"Persistence: row {row} (hour {row % 24} of weekday {row // 24}) has no observed week")
        self.row = row


class CheckpointError(ModelsError):
    """
    Errors reading or writing model checkpoints
    """
