from common.exceptions import GridFillError, ValidationError


class DatasetError(GridFillError):
    """
    Any Exception concerning meter data, images, folds or the processed store
    """


class CsvParseError(DatasetError, ValidationError):
    """
    A row of an input CSV could not be parsed
    """
    def __init__(self, path, line, reason):
        super().__init__(f"{path}:{line}: {reason}")
        self.line = line


class UnknownMeterTypeError(CsvParseError):
    def __init__(self, path, line, meter_type):
        super().__init__(path, line, f"Unknown meter type {meter_type!r}. Expected one of: electricity, chilledwater, steam, hotwater")


class AllInvalidError(DatasetError):
    """
    Operation needs at least one valid cell
    """
    def __init__(self, name):
        super().__init__(f"{name}: no valid cell")


class SliceTooShortError(DatasetError):
    """
    Record does not contain a full Monday-aligned modeling year
    """
    def __init__(self, name, expected, actual):
        super().__init__(f"{name}: slice too short. Expected: {expected} hours, actual {actual}")


class TooFewSitesError(DatasetError, ValidationError):
    def __init__(self, expected, actual):
        super().__init__(f"Splitting by site needs at least {expected} distinct sites, got {actual}")


class StoreError(DatasetError):
    """
    Errors reading or writing the processed store
    """


class StoreExistsError(StoreError, ValidationError):
    def __init__(self, root):
        super().__init__(f"Store {root} already holds images, pass --force to rebuild it")
