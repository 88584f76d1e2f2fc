class GridFillError(Exception):
    """
    Any Exception concerning gridfill
    """


class ValidationError(GridFillError):
    """
    Caller- or configuration-side mistakes (wrong arguments, invalid settings).
    The command line maps these to exit code 2, every other GridFillError to 1
    """
