from common.exceptions import GridFillError, ValidationError


class MasksError(GridFillError):
    """
    Any Exception concerning missing-data masks
    """


class RateOutOfRangeError(MasksError, ValidationError):
    def __init__(self, rate, low=0.0, high=0.5):
        super().__init__(f"Missing rate {rate} outside [{low}, {high}]")


class MaskShapeError(MasksError):
    def __init__(self, expected, actual):
        super().__init__(f"Mask shape mismatch. Expected: {tuple(expected)}, actual {tuple(actual)}")


class MaskFormatError(MasksError, ValidationError):
    """
    Errors when reading a mask text file
    """
