from typing import Optional


class RethinkNetError(Exception):
    """Base class for every error raised by the toolkit."""


class DimensionError(RethinkNetError, ValueError):
    pass


class NonFiniteError(RethinkNetError, ValueError):
    pass


class ParseError(RethinkNetError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.line = line
        self.path = path
        location = ''
        if path is not None:
            location += f'{path}:'
        if line is not None:
            location += f'{line}:'
        if location:
            message = f'{location} {message}'
        super().__init__(message)


class SchemaError(RethinkNetError, ValueError):
    pass


class SizeError(RethinkNetError, ValueError):
    pass


class ParameterError(RethinkNetError, ValueError):
    pass


class ConfigurationError(RethinkNetError, ValueError):
    pass


class UsageError(RethinkNetError, ValueError):
    pass


class StateError(RethinkNetError, RuntimeError):
    pass


class DivergenceError(RethinkNetError, RuntimeError):
    def __init__(self, epoch: int, batch: int, loss: float):
        self.epoch = epoch
        self.batch = batch
        self.loss = loss
        super().__init__(
            f"non-finite training loss {loss} at epoch {epoch}, batch {batch}")
