class DataFormatError(ValueError):
    """
    Raised when an input file cannot be parsed into a valid value.

    Parameters:
    ----------
    message : str
        What is wrong with the input
    path : str, optional
        File being parsed
    line : int, optional
        1-based line number of the offending line
    """

    def __init__(self, message, path=None, line=None):
        self.message = message
        self.path = path
        self.line = line
        super().__init__(self._render())

    def _render(self):
        if self.path is not None and self.line is not None:
            return f"{self.path}:{self.line}: {self.message}"
        if self.path is not None:
            return f"{self.path}: {self.message}"
        if self.line is not None:
            return f"line {self.line}: {self.message}"
        return self.message


class ModelFormatError(DataFormatError):
    """Raised for model files with a wrong version, kind or block layout"""


class ScorerConfigError(ValueError):
    """Raised when a scorer configuration violates its invariants"""


class NumericalError(ArithmeticError):
    """
    Raised when a computation produces non-finite values or fails a
    definiteness check.
    """

    def __init__(self, message, epoch=None):
        self.epoch = epoch
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)
