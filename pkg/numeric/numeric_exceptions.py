from common.exceptions import GridFillError


class NumericError(GridFillError):
    """
    Any Exception concerning the tensor engine
    """


class ShapeMismatchError(NumericError):
    """
    Shapes of operands don't fit together
    """
    def __init__(self, operation, expected, actual):
        super().__init__(f"{operation}: shape mismatch. Expected: {tuple(expected)}, actual {tuple(actual)}")


class NonFiniteError(NumericError):
    """
    NaN or Inf where only finite values are allowed
    """
    def __init__(self, operation, name="input"):
        super().__init__(f"{operation}: {name} contains non-finite values")


class NonBinaryMaskError(NumericError):
    """
    A mask holds values other than 0 and 1
    """
    def __init__(self, operation, values):
        super().__init__(f"{operation}: mask must only contain 0 and 1, found {sorted(values)[:5]}")


class ZeroWeightError(NumericError):
    """
    Weighted loss without a single positively weighted cell
    """


class TensorFormatError(NumericError):
    """
    Errors when decoding the binary tensor format
    """


class GradCheckFailedError(NumericError):
    def __init__(self, failed):
        super().__init__(f"Gradient check failed for: {', '.join(failed)}")
