from common.exceptions import GridFillError, ValidationError


class SynthError(GridFillError):
    """
    Any Exception concerning synthetic fleets
    """


class SynthSpecError(SynthError, ValidationError):
    def __init__(self, field, expected, actual):
        super().__init__(f"Synthetic fleet {field}. Expected: {expected}, actual {actual}")
