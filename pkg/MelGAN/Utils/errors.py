class MelGANError(Exception):
    """Base class of every error raised by the package."""


class DimensionError(MelGANError, ValueError):
    def __init__(self, message, axis=None, expected=None, actual=None):
        self.axis = axis
        self.expected = expected
        self.actual = actual
        if axis is not None:
            message = message + ' [axis=' + str(axis) + ', expected=' + str(expected) + ', actual=' + str(actual) + ']'
        super().__init__(message)


class GraphError(MelGANError, ValueError):
    pass


class ConfigError(MelGANError, ValueError):
    def __init__(self, message, field=None):
        self.field = field
        if field is not None:
            message = field + ': ' + message
        super().__init__(message)


class WavFormatError(MelGANError, ValueError):
    def __init__(self, message, chunk=None):
        self.chunk = chunk
        if chunk is not None:
            message = 'chunk ' + repr(chunk) + ': ' + message
        super().__init__(message)


class CheckpointError(MelGANError, ValueError):
    def __init__(self, message, reason=None):
        self.reason = reason
        super().__init__(message)


class NonFiniteError(MelGANError, FloatingPointError):
    def __init__(self, message, tensor=None):
        self.tensor = tensor
        super().__init__(message)


class CapacityError(MelGANError, ValueError):
    def __init__(self, message, limit=None, requested=None):
        self.limit = limit
        self.requested = requested
        super().__init__(message)


class DataError(MelGANError, OSError):
    def __init__(self, message, path=None):
        self.path = path
        super().__init__(message)
