from common.exceptions import GridFillError, ValidationError


class EvaluationError(GridFillError):
    """
    Any Exception concerning scoring and reports
    """


class EmptyMaskError(EvaluationError):
    def __init__(self, metric):
        super().__init__(f"{metric}: evaluation mask selects no cell")


class ConstantTruthError(EvaluationError):
    """
    R² is undefined when the truth is constant over the evaluated cells
    """
    def __init__(self, count):
        super().__init__(f"r2_masked: truth is constant over the {count} evaluated cells")


class MissingModelError(EvaluationError, ValidationError):
    def __init__(self, architecture, fold):
        super().__init__(f"No trained {architecture} model for fold {fold}")


class UnknownGroupKeyError(EvaluationError, ValidationError):
    def __init__(self, key, known):
        super().__init__(f"Unknown group key {key!r}. Expected some of: {', '.join(known)}")
